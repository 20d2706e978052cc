"""
Space-Time Solver Logger

Structured records for tool calls, setup phases, GMRES progress and
verification checks. The global instance is silent until the CLI's debug
mode installs an enabled one.
"""

import json
import sys
from dataclasses import asdict, dataclass
from datetime import datetime
from enum import Enum
from typing import Optional


class LogLevel(Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARN = "WARN"
    ERROR = "ERROR"


LEVEL_RANK = {LogLevel.DEBUG: 0, LogLevel.INFO: 1, LogLevel.WARN: 2, LogLevel.ERROR: 3}


class LogCategory(Enum):
    TOOL_CALL = "TOOL"
    SETUP = "SETUP"
    SOLVE = "SOLVE"
    CHECK = "CHECK"
    ERROR = "ERROR"


LEVEL_COLORS = {
    LogLevel.DEBUG: "\033[90m",
    LogLevel.INFO: "\033[36m",
    LogLevel.WARN: "\033[33m",
    LogLevel.ERROR: "\033[31m",
}
CATEGORY_COLORS = {
    LogCategory.TOOL_CALL: "\033[35m",
    LogCategory.SETUP: "\033[32m",
    LogCategory.SOLVE: "\033[34m",
    LogCategory.CHECK: "\033[36m",
    LogCategory.ERROR: "\033[31m",
}
RESET = "\033[0m"


@dataclass
class LogEntry:
    timestamp: str
    level: str
    category: str
    message: str
    data: Optional[dict] = None

    def to_dict(self) -> dict:
        entry = asdict(self)
        if not self.data:
            entry.pop("data")
        return entry


class SolverLogger:
    """Writes entries to stderr and keeps them for the debug dump."""

    def __init__(
        self,
        enabled: bool = True,
        min_level: LogLevel = LogLevel.INFO,
        show_data: bool = True,
        use_colors: bool = True,
    ):
        self.enabled = enabled
        self.min_level = min_level
        self.show_data = show_data
        self.use_colors = use_colors
        self.history: list[LogEntry] = []

    def _render(self, entry: LogEntry, level: LogLevel, category: LogCategory) -> str:
        if self.use_colors:
            line = (
                f"{LEVEL_COLORS[level]}[{entry.level}]{RESET} "
                f"{CATEGORY_COLORS[category]}[{entry.category}]{RESET} {entry.message}"
            )
        else:
            line = f"[{entry.level}] [{entry.category}] {entry.message}"
        if self.show_data and entry.data:
            line += "\n  └─ " + json.dumps(entry.data, indent=2, default=str)
        return line

    def _log(self, level: LogLevel, category: LogCategory, message: str,
             data: Optional[dict] = None) -> None:
        if not self.enabled or LEVEL_RANK[level] < LEVEL_RANK[self.min_level]:
            return
        entry = LogEntry(datetime.now().isoformat(), level.value, category.value, message, data)
        self.history.append(entry)
        print(self._render(entry, level, category), file=sys.stderr)

    # =========================================================================
    # Tools
    # =========================================================================

    def tool_call(self, tool_name: str, args: dict) -> None:
        self._log(LogLevel.INFO, LogCategory.TOOL_CALL, f"Calling {tool_name}", {"args": args})

    def tool_result(self, tool_name: str, result: dict) -> None:
        self._log(LogLevel.DEBUG, LogCategory.TOOL_CALL, f"{tool_name} returned", {"result": result})

    # =========================================================================
    # Solver phases
    # =========================================================================

    def setup(self, component: str, details: dict) -> None:
        """Assembly, hierarchy or preconditioner setup finished."""
        self._log(LogLevel.DEBUG, LogCategory.SETUP, f"{component} ready", details)

    def gmres_cycle(self, cycle: int, iterations: int, residual: float) -> None:
        self._log(LogLevel.DEBUG, LogCategory.SOLVE, f"GMRES cycle {cycle} finished",
                  {"iterations": iterations, "relative_residual": residual})

    def solve_done(self, converged: bool, iterations: int, residual: float) -> None:
        if converged:
            level, status = LogLevel.INFO, "converged"
        else:
            level, status = LogLevel.WARN, "stopped without convergence"
        self._log(level, LogCategory.SOLVE, f"GMRES {status} after {iterations} iterations",
                  {"relative_residual": residual})

    def check_result(self, name: str, status: str, details: Optional[dict] = None) -> None:
        """One verification check; failures surface at WARN."""
        level = LogLevel.WARN if status == "fail" else LogLevel.DEBUG
        self._log(level, LogCategory.CHECK, f"{name}: {status}", details)

    def info(self, message: str, data: Optional[dict] = None) -> None:
        self._log(LogLevel.INFO, LogCategory.SOLVE, message, data)

    def warn(self, message: str, data: Optional[dict] = None) -> None:
        self._log(LogLevel.WARN, LogCategory.SOLVE, message, data)

    def error(self, message: str, error: Optional[Exception] = None) -> None:
        self._log(LogLevel.ERROR, LogCategory.ERROR, message,
                  {"error": str(error)} if error else None)

    def get_history_json(self) -> str:
        return json.dumps([e.to_dict() for e in self.history], indent=2, default=str)


# Disabled until set_logger installs an enabled instance
logger = SolverLogger(enabled=False)


def get_logger() -> SolverLogger:
    return logger


def set_logger(new_logger: SolverLogger) -> None:
    global logger
    logger = new_logger
