"""
run_problem Tool

Assembles one built-in problem, solves it with preconditioned GMRES and
returns the result record. Solver and configuration failures come back as
structured output instead of exceptions.
"""

from typing import Literal, Optional, TypedDict
import csv
import sys
import os

# Add parent directory to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np

from logger import get_logger
from run_config import ResultRecord, RunConfig, write_results_csv
from spacetime.discretization import Grid2D
from spacetime.errors import ConfigError, SpaceTimeError
from spacetime.krylov import GmresConfig, solve_system
from spacetime.operators import as_blocks
from spacetime.preconditioner import choose_epsilon
from spacetime.problems import build_system, get_example


ErrorKind = Literal["config", "solver"]


class RunProblemOutput(TypedDict):
    """Structured output for run_problem tool."""
    ok: bool
    reason: str
    error_kind: Optional[ErrorKind]
    record: Optional[dict]
    history: list[float]


def _epsilon(config: RunConfig) -> Optional[float]:
    if config.preconditioner == "none":
        return None
    if config.preconditioner == "bc":
        return 1.0
    if config.epsilon == "auto":
        return choose_epsilon(config.tau)
    return float(config.epsilon)


def dump_final_field(config: RunConfig, u: np.ndarray, J: int, N: int, path: str) -> None:
    """Write the final time step as x, y, u rows on the interior grid."""
    grid = Grid2D(config.m, get_example(config.problem).bounds)
    x, y = grid.interior_nodes()
    final = as_blocks(u, J, N)[:, -1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "u"])
        for xi, yi, ui in zip(x, y, final):
            writer.writerow([repr(float(xi)), repr(float(yi)), repr(float(ui))])


def solve_config(config: RunConfig) -> tuple[ResultRecord, list[float], np.ndarray]:
    """Validate, assemble and solve; exceptions propagate."""
    config.validate()
    system, exact = build_system(config)
    eps = _epsilon(config)
    gmres_config = GmresConfig(tol=config.tol, restart=config.restart, maxiter=config.maxiter)
    u, report = solve_system(
        system,
        preconditioner=config.preconditioner,
        eps=eps,
        config=gmres_config,
        inner=config.resolved_inner(),
        mg_cycles=config.resolved_mg_cycles(),
        mg_omega=config.mg_omega,
        reduction=config.reduction,
        workers=config.workers,
        u_exact=exact,
    )
    record = ResultRecord(
        problem=config.problem,
        scheme=config.scheme,
        preconditioner=config.preconditioner,
        inner_solver=config.resolved_inner() if config.preconditioner != "none" else "none",
        N=config.N,
        J=system.J,
        dof=system.size,
        epsilon=eps,
        iterations=report.iterations,
        converged=report.converged,
        cpu=report.wall_time,
        res=report.res,
        error=report.error,
    )
    return record, report.history, u


def run_problem(config: RunConfig | dict) -> RunProblemOutput:
    """
    Solve one configured problem.

    Args:
        config: RunConfig object or its dict form.

    Returns:
        RunProblemOutput with ok, reason, error_kind, record and the
        preconditioned residual history.
    """
    log = get_logger()
    try:
        if isinstance(config, dict):
            config = RunConfig.from_dict(config)
        record, history, u = solve_config(config)
    except ConfigError as e:
        log.error("Invalid configuration", e)
        return RunProblemOutput(ok=False, reason=str(e), error_kind="config", record=None, history=[])
    except SpaceTimeError as e:
        log.error("Solve failed", e)
        return RunProblemOutput(ok=False, reason=str(e), error_kind="solver", record=None, history=[])

    if config.output:
        write_results_csv([record], config.output)
    if config.field_dump:
        dump_final_field(config, u, record.J, record.N, config.field_dump)

    reason = "Converged." if record.converged else "GMRES stopped at maxiter without converging."
    return RunProblemOutput(
        ok=record.converged,
        reason=reason,
        error_kind=None if record.converged else "solver",
        record=record.to_dict(),
        history=[float(h) for h in history],
    )
