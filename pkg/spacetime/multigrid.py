"""
Geometric multigrid for the shifted blocks lambda*M + tau*K.

One hierarchy serves every Fourier block: coarse operators are built once
for M and K separately, and the shift lambda_k is applied on the fly. The
V-cycle is batched, i.e. it works on a J x nb block of right-hand sides
where column k carries its own lambda_k.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from logger import get_logger

from .discretization import Grid2D, SpatialPair
from .errors import ConfigError, ContractViolation, InnerSolverError

DIVERGENCE_FACTOR = 10.0


def interpolation_1d(m_fine: int) -> sp.csr_matrix:
    """Linear interpolation from (m_fine+1)/2 - 1 coarse to m_fine fine interior nodes."""
    m_coarse = (m_fine + 1) // 2 - 1
    ic = np.arange(m_coarse)
    rows = np.concatenate([2 * ic, 2 * ic + 1, 2 * ic + 2])
    cols = np.concatenate([ic, ic, ic])
    vals = np.concatenate([np.full(m_coarse, 0.5), np.ones(m_coarse), np.full(m_coarse, 0.5)])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m_fine, m_coarse))


@dataclass(frozen=True)
class Level:
    grid: Grid2D
    M: sp.csr_matrix
    K: sp.csr_matrix
    P: Optional[sp.csr_matrix] = None  # prolongation from the next coarser level

    @property
    def diag_M(self) -> np.ndarray:
        return self.M.diagonal()

    @property
    def diag_K(self) -> np.ndarray:
        return self.K.diagonal()


@dataclass(frozen=True)
class GridHierarchy:
    levels: tuple[Level, ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    @classmethod
    def build(cls, pair: SpatialPair, coarse_m: int = 7) -> "GridHierarchy":
        """
        Coarsen until m <= coarse_m. Coarse pairs come from the pair's rebuild
        hook when it has one, otherwise from the Galerkin product P^T A P.
        Restriction is P^T, so a rebuilt pair must sit on the Galerkin scale.
        """
        if pair.grid is None:
            raise ConfigError("multigrid needs a pair built on a Grid2D")
        grid = pair.grid
        M, K = pair.M, pair.K
        levels = []
        while grid.m > coarse_m:
            if not grid.can_coarsen:
                raise ConfigError(f"multigrid needs m+1 to be a power of two, got m={pair.grid.m}")
            coarse = grid.coarsen()
            P1 = interpolation_1d(grid.m)
            P = sp.kron(P1, P1, format="csr")
            levels.append(Level(grid=grid, M=M, K=K, P=P))
            if pair.rebuild is not None:
                coarse_pair = pair.rebuild(coarse)
                M, K = coarse_pair.M, coarse_pair.K
            else:
                M = (P.T @ M @ P).tocsr()
                K = (P.T @ K @ P).tocsr()
            grid = coarse
        levels.append(Level(grid=grid, M=M, K=K))
        get_logger().setup("GridHierarchy", {"levels": [lv.grid.m for lv in levels]})
        return cls(tuple(levels))


def _shifted_apply(level: Level, lams: np.ndarray, tau: float, X: np.ndarray) -> np.ndarray:
    return (level.M @ X) * lams[None, :] + tau * (level.K @ X)


def jacobi_sweep(level: Level, lams: np.ndarray, tau: float, X: np.ndarray, B: np.ndarray,
                 omega: float) -> np.ndarray:
    """One damped Jacobi sweep X <- X + omega D^{-1}(B - A X), column-wise shifts."""
    D = level.diag_M[:, None] * lams[None, :] + tau * level.diag_K[:, None]
    return X + omega * (B - _shifted_apply(level, lams, tau, X)) / D


class CoarseSolver:
    """Dense LU of every shifted coarsest-level block."""

    def __init__(self, level: Level, lams: np.ndarray, tau: float):
        M = level.M.toarray()
        K = level.K.toarray()
        self.factors = []
        for lam in lams:
            lu, piv = lu_factor((lam * M + tau * K).astype(complex))
            if np.any(np.abs(np.diag(lu)) == 0.0):
                raise InnerSolverError(f"singular coarse block for lambda={lam}")
            self.factors.append((lu, piv))

    def solve(self, B: np.ndarray) -> np.ndarray:
        """Column k is solved with the k-th shift; B may hold a leading subset."""
        X = np.empty(B.shape, dtype=complex)
        for k in range(B.shape[1]):
            X[:, k] = lu_solve(self.factors[k], B[:, k])
        return X


def _cycle(hierarchy: GridHierarchy, idx: int, lams, tau, B, omega, coarse: CoarseSolver):
    level = hierarchy.levels[idx]
    if idx == hierarchy.depth - 1:
        return coarse.solve(B)
    X = omega * B / (level.diag_M[:, None] * lams[None, :] + tau * level.diag_K[:, None])
    R = B - _shifted_apply(level, lams, tau, X)
    E = _cycle(hierarchy, idx + 1, lams, tau, level.P.T @ R, omega, coarse)
    X = X + level.P @ E
    return jacobi_sweep(level, lams, tau, X, B, omega)


def vcycle(
    hierarchy: GridHierarchy,
    lams: np.ndarray,
    tau: float,
    rhs_blocks: np.ndarray,
    omega: float = 0.8,
    cycles: int = 1,
    coarse: Optional[CoarseSolver] = None,
) -> np.ndarray:
    """
    Run `cycles` V-cycles on (lams[k] M + tau K) z_k = rhs_blocks[:, k] from a
    zero initial guess.

    Raises InnerSolverError if a residual becomes non-finite or grows by more
    than a factor 10 over the right-hand side.
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    B = np.asarray(rhs_blocks)
    squeeze = B.ndim == 1
    if squeeze:
        B = B[:, None]
    fine = hierarchy.levels[0]
    if B.shape != (fine.M.shape[0], lams.size):
        raise ContractViolation(
            f"vcycle expects a {fine.M.shape[0]} x {lams.size} block, got {B.shape}"
        )
    if cycles < 1:
        raise ContractViolation(f"cycles must be at least 1, got {cycles}")
    if coarse is None:
        coarse = CoarseSolver(hierarchy.levels[-1], lams, tau)

    B = B.astype(complex)
    b_norm = np.linalg.norm(B, axis=0)
    X = np.zeros_like(B)
    R = B
    for c in range(cycles):
        X = X + _cycle(hierarchy, 0, lams, tau, R, omega, coarse)
        R = B - _shifted_apply(fine, lams, tau, X)
        r_norm = np.linalg.norm(R, axis=0)
        if not np.all(np.isfinite(r_norm)) or np.any(r_norm > DIVERGENCE_FACTOR * b_norm):
            get_logger().error("multigrid diverged", None)
            raise InnerSolverError(
                f"V-cycle diverged in cycle {c + 1}: residual/rhs up to "
                f"{np.max(r_norm / np.where(b_norm > 0, b_norm, 1.0)):.3e}"
            )
    return X[:, 0] if squeeze else X
