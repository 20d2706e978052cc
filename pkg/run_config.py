"""
Run Configuration and Result Records

Serializable settings for one all-at-once solve and the one-row result
record it produces. Defaults reproduce the constant-coefficient heat
problem at desk scale.
"""

from dataclasses import dataclass, fields
from typing import Literal, Optional, Union
import csv
import json

from spacetime.errors import ConfigError
from spacetime.problems import EXAMPLES, SCHEME_ORDERS


Preconditioner = Literal["bec", "bc", "none"]
InnerSolverKind = Literal["auto", "fst", "multigrid", "dense"]

PRECONDITIONERS = ("bec", "bc", "none")
INNER_SOLVERS = ("auto", "fst", "multigrid", "dense")
DISCRETIZATIONS = ("auto", "q1", "fd")
TIME_PATHS = ("auto", "banded", "toeplitz")
DENSE_INNER_CAP = 4096


def _multigrid_ready(m: int, coarse_m: int = 7) -> bool:
    while m > coarse_m:
        if m < 3 or (m + 1) % 2:
            return False
        m = (m + 1) // 2 - 1
    return True


@dataclass
class RunConfig:
    """
    Settings for one solve.

    epsilon is either "auto" (min(0.5, 0.5 tau)) or a number in (0, 1].
    mg_cycles left as None takes the problem's own default.
    """

    # Problem
    problem: str = "heat-const"
    scheme: str = "bdf1"
    N: int = 64
    m: int = 63
    T: float = 1.0
    discretization: str = "auto"

    # Preconditioner
    preconditioner: Preconditioner = "bec"
    epsilon: Union[str, float] = "auto"
    inner_solver: InnerSolverKind = "auto"
    mg_cycles: Optional[int] = None
    mg_omega: float = 0.8
    reduction: bool = True
    workers: int = 1
    time_path: str = "auto"

    # GMRES
    tol: float = 1e-7
    restart: int = 50
    maxiter: int = 1000

    # Output
    output: Optional[str] = None
    field_dump: Optional[str] = None
    seed: int = 0

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def J(self) -> int:
        return self.m * self.m

    def resolved_inner(self) -> str:
        """Inner solver after resolving "auto" for this problem."""
        if self.inner_solver != "auto":
            return self.inner_solver
        if self.problem == "heat-const":
            return "fst"
        return "multigrid"

    def resolved_mg_cycles(self) -> int:
        """V-cycles per block solve; unset falls back to the problem default."""
        if self.mg_cycles is not None:
            return self.mg_cycles
        return EXAMPLES[self.problem].mg_cycles

    def validate(self) -> "RunConfig":
        """Raise ConfigError on the first invalid or incompatible setting."""
        if self.problem not in EXAMPLES:
            raise ConfigError(f"problem must be one of {sorted(EXAMPLES)}, got '{self.problem}'")
        if self.scheme not in SCHEME_ORDERS:
            raise ConfigError(f"scheme must be one of {sorted(SCHEME_ORDERS)}, got '{self.scheme}'")
        if self.N < 1:
            raise ConfigError(f"N must be positive, got {self.N}")
        if self.m < 1:
            raise ConfigError(f"m must be positive, got {self.m}")
        if self.T <= 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        if self.discretization not in DISCRETIZATIONS:
            raise ConfigError(f"discretization must be one of {DISCRETIZATIONS}, got '{self.discretization}'")
        if self.discretization != "auto" and self.discretization not in EXAMPLES[self.problem].discretizations:
            raise ConfigError(f"problem '{self.problem}' does not support discretization '{self.discretization}'")
        if self.preconditioner not in PRECONDITIONERS:
            raise ConfigError(f"preconditioner must be one of {PRECONDITIONERS}, got '{self.preconditioner}'")
        if self.preconditioner != "none" and self.N < SCHEME_ORDERS[self.scheme] + 1:
            raise ConfigError(f"N must exceed the scheme depth, got N={self.N} for {self.scheme}")
        if self.epsilon != "auto":
            try:
                eps = float(self.epsilon)
            except (TypeError, ValueError):
                raise ConfigError(f"epsilon must be 'auto' or a number, got {self.epsilon!r}")
            if not 0.0 < eps <= 1.0:
                raise ConfigError(f"epsilon must lie in (0, 1], got {eps}")
        if self.inner_solver not in INNER_SOLVERS:
            raise ConfigError(f"inner_solver must be one of {INNER_SOLVERS}, got '{self.inner_solver}'")
        inner = self.resolved_inner()
        if inner == "fst" and self.problem != "heat-const":
            raise ConfigError("the sine transform inner solver needs the constant-coefficient heat problem")
        if inner == "multigrid" and not _multigrid_ready(self.m):
            raise ConfigError(f"multigrid needs m+1 to be a power of two, got m={self.m}")
        if inner == "dense" and self.J > DENSE_INNER_CAP:
            raise ConfigError(f"dense inner solver limited to J <= {DENSE_INNER_CAP}, got {self.J}")
        if self.mg_cycles is not None and self.mg_cycles < 1:
            raise ConfigError(f"mg_cycles must be at least 1, got {self.mg_cycles}")
        if not 0.0 < self.mg_omega <= 1.0:
            raise ConfigError(f"mg_omega must lie in (0, 1], got {self.mg_omega}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers}")
        if self.time_path not in TIME_PATHS:
            raise ConfigError(f"time_path must be one of {TIME_PATHS}, got '{self.time_path}'")
        if not 0.0 < self.tol < 1.0:
            raise ConfigError(f"tol must lie in (0, 1), got {self.tol}")
        if self.restart < 1 or self.maxiter < 1:
            raise ConfigError("restart and maxiter must be at least 1")
        return self

    def to_dict(self) -> dict:
        """Flat JSON-serializable dictionary keyed by field name."""
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a config from a flat dict; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, json_str: str) -> "RunConfig":
        try:
            data = json.loads(json_str)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "RunConfig":
        """Copy with the given fields replaced (None values are ignored)."""
        data = self.to_dict()
        data.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig.from_dict(data)


def load_config(path: str) -> RunConfig:
    """Read a RunConfig from a JSON file."""
    try:
        with open(path) as fh:
            return RunConfig.from_json(fh.read())
    except OSError as e:
        raise ConfigError(f"cannot read config file '{path}': {e}") from e


# =============================================================================
# RESULT RECORDS
# =============================================================================

@dataclass
class ResultRecord:
    """One table row: sizes, iteration count, timing and accuracy."""
    problem: str
    scheme: str
    preconditioner: str
    inner_solver: str
    N: int
    J: int
    dof: int
    epsilon: Optional[float]
    iterations: int
    converged: bool
    cpu: float
    res: float
    error: Optional[float] = None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def to_row(self) -> dict:
        """CSV row; floats use repr so parsing them back is exact."""
        row = {}
        for key, value in self.to_dict().items():
            if value is None:
                row[key] = ""
            elif isinstance(value, float):
                row[key] = repr(value)
            else:
                row[key] = str(value)
        return row

    @classmethod
    def from_row(cls, row: dict) -> "ResultRecord":
        return cls(
            problem=row["problem"],
            scheme=row["scheme"],
            preconditioner=row["preconditioner"],
            inner_solver=row["inner_solver"],
            N=int(row["N"]),
            J=int(row["J"]),
            dof=int(row["dof"]),
            epsilon=float(row["epsilon"]) if row["epsilon"] else None,
            iterations=int(row["iterations"]),
            converged=row["converged"] == "True",
            cpu=float(row["cpu"]),
            res=float(row["res"]),
            error=float(row["error"]) if row.get("error") else None,
        )


RESULT_FIELDS = [f.name for f in fields(ResultRecord)]


def write_results_csv(records: list[ResultRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_FIELDS)
        writer.writeheader()
        for record in records:
            writer.writerow(record.to_row())


def read_results_csv(path: str) -> list[ResultRecord]:
    with open(path, newline="") as fh:
        return [ResultRecord.from_row(row) for row in csv.DictReader(fh)]
