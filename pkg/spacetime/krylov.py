"""
Restarted GMRES with left preconditioning.

Solves P^{-1} A x = P^{-1} b. Arnoldi runs with modified Gram-Schmidt and
the Hessenberg least-squares problem is kept triangular by Givens rotations,
so the preconditioned residual norm is available at every step without
forming the iterate.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import LinearOperator

from logger import get_logger

from .discretization import AllAtOnceSystem
from .errors import ConfigError, ContractViolation
from .preconditioner import BECPreconditioner, choose_epsilon

Action = Union[Callable[[np.ndarray], np.ndarray], LinearOperator]

BREAKDOWN_TOL = 1e-14


@dataclass
class GmresConfig:
    tol: float = 1e-7
    restart: int = 50
    maxiter: int = 1000
    x0: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 < self.tol < 1.0:
            raise ConfigError(f"GMRES tolerance must lie in (0, 1), got {self.tol}")
        if self.restart < 1:
            raise ConfigError(f"GMRES restart must be at least 1, got {self.restart}")
        if self.maxiter < 1:
            raise ConfigError(f"GMRES maxiter must be at least 1, got {self.maxiter}")


@dataclass
class SolveReport:
    """Outcome of one GMRES solve plus the unpreconditioned metrics."""
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list)
    cycles: int = 0
    res: Optional[float] = None
    error: Optional[float] = None
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "cycles": self.cycles,
            "res": self.res,
            "error": self.error,
            "wall_time": self.wall_time,
            "final_relative_residual": self.history[-1] if self.history else None,
        }


def _as_action(op: Optional[Action]) -> Callable[[np.ndarray], np.ndarray]:
    if op is None:
        return lambda v: v
    if isinstance(op, LinearOperator):
        return op.matvec
    if callable(op):
        return op
    raise ContractViolation(f"expected a callable or LinearOperator, got {type(op).__name__}")


def gmres_solve(
    apply_A: Action,
    apply_Pinv: Optional[Action],
    b: np.ndarray,
    config: Optional[GmresConfig] = None,
) -> tuple[np.ndarray, SolveReport]:
    """
    Left-preconditioned restarted GMRES.

    Convergence is declared when the preconditioned residual drops below
    tol times the initial preconditioned residual. If maxiter is reached
    first the last iterate is returned with converged=False.

    Args:
        apply_A: action of A
        apply_Pinv: action of P^{-1}, or None for no preconditioning
        b: right-hand side
        config: tolerance, restart length, iteration cap, initial guess

    Returns:
        (x, SolveReport) with history holding relative preconditioned residuals
    """
    config = config or GmresConfig()
    log = get_logger()
    A = _as_action(apply_A)
    Pinv = _as_action(apply_Pinv)
    b = np.asarray(b, dtype=float)
    if b.ndim != 1:
        raise ContractViolation(f"right-hand side must be a vector, got shape {b.shape}")
    n = b.shape[0]
    x = np.zeros(n) if config.x0 is None else np.array(config.x0, dtype=float)
    if x.shape != (n,):
        raise ContractViolation(f"initial guess must have shape ({n},), got {x.shape}")

    start = time.perf_counter()
    r = Pinv(b - A(x))
    beta0 = float(np.linalg.norm(r))
    report = SolveReport(iterations=0, converged=True, history=[1.0])
    if beta0 == 0.0:
        report.history = [0.0]
        report.wall_time = time.perf_counter() - start
        log.solve_done(True, 0, 0.0)
        return x, report

    m = min(config.restart, n)
    total = 0
    converged = False
    while total < config.maxiter and not converged:
        beta = float(np.linalg.norm(r))
        V = np.zeros((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta

        k = 0
        for j in range(m):
            w = Pinv(A(V[j]))
            for i in range(j + 1):
                H[i, j] = np.dot(V[i], w)
                w = w - H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            breakdown = H[j + 1, j] <= BREAKDOWN_TOL * beta
            if not breakdown:
                V[j + 1] = w / H[j + 1, j]

            for i in range(j):
                hi, hip = H[i, j], H[i + 1, j]
                H[i, j] = cs[i] * hi + sn[i] * hip
                H[i + 1, j] = -sn[i] * hi + cs[i] * hip
            denom = np.hypot(H[j, j], H[j + 1, j])
            cs[j], sn[j] = H[j, j] / denom, H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]

            k = j + 1
            total += 1
            rel = abs(g[j + 1]) / beta0
            report.history.append(rel)
            if rel <= config.tol or breakdown:
                converged = True
                break
            if total >= config.maxiter:
                break

        y = solve_triangular(H[:k, :k], g[:k])
        x = x + V[:k].T @ y
        report.cycles += 1
        log.gmres_cycle(report.cycles, k, report.history[-1])
        if not converged:
            r = Pinv(b - A(x))

    report.iterations = total
    report.converged = converged
    report.wall_time = time.perf_counter() - start
    log.solve_done(converged, total, report.history[-1])
    if not converged:
        log.warn("GMRES reached maxiter", {"maxiter": config.maxiter, "relative_residual": report.history[-1]})
    return x, report


def residual_metrics(
    system: AllAtOnceSystem,
    u_iter: np.ndarray,
    u_exact: Optional[np.ndarray] = None,
) -> tuple[float, Optional[float]]:
    """
    RES = ||f - L u||_2 / ||f||_2 (absolute residual when f = 0) and the
    max-norm error against u_exact when given.
    """
    u_iter = np.asarray(u_iter)
    if u_iter.shape != (system.size,):
        raise ContractViolation(f"iterate must have length {system.size}, got shape {u_iter.shape}")
    f = system.rhs
    residual = np.linalg.norm(f - system.apply(u_iter))
    f_norm = np.linalg.norm(f)
    res = float(residual / f_norm) if f_norm > 0 else float(residual)
    error = None
    if u_exact is not None:
        u_exact = np.asarray(u_exact)
        if u_exact.shape != u_iter.shape:
            raise ContractViolation(f"exact solution must have shape {u_iter.shape}, got {u_exact.shape}")
        error = float(np.max(np.abs(u_iter - u_exact)))
    return res, error


def solve_system(
    system: AllAtOnceSystem,
    preconditioner: str = "bec",
    eps: Union[None, str, float] = None,
    config: Optional[GmresConfig] = None,
    inner: str = "auto",
    mg_cycles: int = 1,
    mg_omega: float = 0.8,
    reduction: bool = True,
    workers: int = 1,
    u_exact: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, SolveReport]:
    """
    GMRES on L u = f with the block circulant (eps = 1), block eps-circulant
    or no preconditioner; fills RES and E into the report.
    """
    if preconditioner == "none":
        apply_Pinv = None
    elif preconditioner in ("bec", "bc"):
        if preconditioner == "bc":
            eps = 1.0
        elif eps is None or eps == "auto":
            eps = choose_epsilon(system.tau)
        pre = BECPreconditioner.setup(system, float(eps), inner=inner, mg_cycles=mg_cycles,
                                      mg_omega=mg_omega, reduction=reduction, workers=workers)
        apply_Pinv = pre.apply_inverse
    else:
        raise ConfigError(f"unknown preconditioner '{preconditioner}'")
    u, report = gmres_solve(system.apply, apply_Pinv, system.rhs, config)
    report.res, report.error = residual_metrics(system, u, u_exact)
    return u, report
