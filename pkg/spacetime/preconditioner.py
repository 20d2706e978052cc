"""
Block epsilon-circulant (BEC) preconditioner

    P_eps = R_eps kron M + tau I_N kron K

where R_eps is the time-stepping matrix with its wrapped upper-right band
scaled by eps. R_eps = D^{-1} F^* Lambda F D with D = diag(eps^{n/N}), so

    P_eps^{-1} = [(D^{-1} F^*) kron I] blockdiag(B_k^{-1}) [(F D) kron I],
    B_k = lambda_k M + tau K.

Applying it takes one scaled FFT across time, independent spatial solves for
every Fourier block, and one inverse FFT. For real input only the first
N//2 + 1 blocks are solved; the rest are complex conjugates.
"""

from typing import Optional, Protocol

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.sparse.linalg import LinearOperator

from logger import get_logger

from .discretization import AllAtOnceSystem, SpatialPair, TimeStencil
from .errors import ConfigError, ConjugateSymmetryError, ContractViolation, DomainError, InnerSolverError
from .multigrid import CoarseSolver, GridHierarchy, vcycle
from .operators import OpCounter, as_blocks, from_blocks
from .transforms import FourierPlan, SinePlan, fourier_matrix

SCALING_RANGE_LIMIT = 1e12
IMAG_TOLERANCE = 1e-10
DENSE_CAP = 4096


# =============================================================================
# TIME SYMBOL
# =============================================================================

def choose_epsilon(tau: float) -> float:
    """eps = min(0.5, 0.5 tau)."""
    if tau <= 0:
        raise DomainError(f"time step must be positive, got {tau}")
    return min(0.5, 0.5 * tau)


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {eps}")
    return eps


def _scaled_coefficients(stencil: TimeStencil, eps: float, N: int) -> np.ndarray:
    if N <= stencil.p:
        raise ContractViolation(f"N={N} must exceed the stencil depth p={stencil.p}")
    c = np.zeros(N)
    j = np.arange(stencil.p + 1)
    c[: stencil.p + 1] = np.asarray(stencil.coefficients) * eps ** (j / N)
    return c


def bec_eigenvalues(stencil: TimeStencil, eps: float, N: int, route: str = "auto") -> np.ndarray:
    """
    lambda_k = sum_j r_j eps^{j/N} theta^{kj}, theta = exp(2 pi i / N).

    route="direct" sums the p+1 terms; route="fft" computes sqrt(N) F_N c for
    the zero-padded scaled coefficients. "auto" picks fft for long stencils.
    """
    eps = _check_eps(eps)
    c = _scaled_coefficients(stencil, eps, N)
    if route == "auto":
        route = "fft" if stencil.p > 8 else "direct"
    if route == "fft":
        return np.sqrt(N) * FourierPlan(N, "inverse").apply(c)
    if route != "direct":
        raise ContractViolation(f"unknown eigenvalue route '{route}'")
    k = np.arange(N)
    j = np.arange(stencil.p + 1)
    return np.exp(2j * np.pi * np.outer(k, j) / N) @ c[: stencil.p + 1]


def r_eps_pattern(stencil: TimeStencil, eps: float, N: int) -> np.ndarray:
    """Dense R_eps filled entry by entry: r_j below the diagonal, eps*r_j wrapped."""
    eps = _check_eps(eps)
    if N <= stencil.p:
        raise ContractViolation(f"N={N} must exceed the stencil depth p={stencil.p}")
    R = np.zeros((N, N))
    for j, r_j in enumerate(stencil.coefficients):
        for row in range(N):
            if row >= j:
                R[row, row - j] = r_j
            else:
                R[row, row - j + N] = eps * r_j
    return R


def reconstruct_R_eps(stencil: TimeStencil, eps: float, N: int) -> np.ndarray:
    """D^{-1} F^* Lambda F D assembled densely."""
    eps = _check_eps(eps)
    lams = bec_eigenvalues(stencil, eps, N)
    F = fourier_matrix(N)
    d = eps ** (np.arange(N) / N)
    R = (F.conj().T * lams[None, :]) @ F
    R = (R / d[:, None]) * d[None, :]
    return R.real


# =============================================================================
# INNER SOLVERS
# =============================================================================

class InnerSolver(Protocol):
    """Solves (lams[k] M + tau K) z_k = rhs[:, k] for a batch of blocks."""
    name: str
    block_work: float

    def prepare(self, lams: np.ndarray) -> None: ...

    def solve(self, rhs_blocks: np.ndarray) -> np.ndarray: ...


class FstDirectSolver:
    """Exact solve by the tensor sine transform."""
    name = "fst"

    def __init__(self, pair: SpatialPair, tau: float, workers: int = 1):
        if not pair.fst_diagonalizable:
            raise ConfigError(f"pair '{pair.label}' is not diagonalized by the sine transform")
        self.m = int(round(np.sqrt(pair.J)))
        self.tau = tau
        self.plan = SinePlan(self.m, workers)
        self.m_hat, self.k_hat = pair.fst.tensor_eigenvalues()
        # four sine passes over the m x m grid
        self.block_work = 4.0 * pair.J * np.log2(self.m + 1)
        self.lams: Optional[np.ndarray] = None

    def prepare(self, lams: np.ndarray) -> None:
        self.lams = np.asarray(lams, dtype=complex)
        denom = self.lams[:, None, None] * self.m_hat + self.tau * self.k_hat
        if np.any(denom == 0):
            raise InnerSolverError("zero eigenvalue in a sine-diagonalized block")
        self.denominators = denom

    def solve(self, rhs_blocks: np.ndarray) -> np.ndarray:
        m = self.m
        nb = rhs_blocks.shape[1]
        # columns are x-fastest grids: (nb, y, x)
        grids = rhs_blocks.T.reshape(nb, m, m)
        spectral = self.plan.apply(self.plan.apply(grids, axis=-1), axis=-2)
        spectral = spectral / self.denominators[:nb]
        out = self.plan.apply(self.plan.apply(spectral, axis=-1), axis=-2)
        return out.reshape(nb, m * m).T


class MultigridSolver:
    """Fixed number of batched V-cycles per application."""
    name = "multigrid"

    def __init__(self, pair: SpatialPair, tau: float, cycles: int = 1, omega: float = 0.8,
                 coarse_m: int = 7):
        if cycles < 1:
            raise ConfigError(f"mg_cycles must be at least 1, got {cycles}")
        if not 0.0 < omega <= 1.0:
            raise ConfigError(f"mg_omega must lie in (0, 1], got {omega}")
        self.hierarchy = GridHierarchy.build(pair, coarse_m)
        # smoothing, residual and pre-smoothing products on every level
        self.block_work = 3.0 * cycles * sum(lv.M.nnz + lv.K.nnz for lv in self.hierarchy.levels)
        self.tau = tau
        self.cycles = cycles
        self.omega = omega
        self.lams: Optional[np.ndarray] = None

    def prepare(self, lams: np.ndarray) -> None:
        self.lams = np.asarray(lams, dtype=complex)
        self.coarse = CoarseSolver(self.hierarchy.levels[-1], self.lams, self.tau)

    def solve(self, rhs_blocks: np.ndarray) -> np.ndarray:
        nb = rhs_blocks.shape[1]
        return vcycle(self.hierarchy, self.lams[:nb], self.tau, rhs_blocks,
                      self.omega, self.cycles, self.coarse)


class DenseDirectSolver:
    """Complex LU per block; small J only."""
    name = "dense"

    def __init__(self, pair: SpatialPair, tau: float, cap: int = DENSE_CAP):
        if pair.J > cap:
            raise ConfigError(f"dense inner solver limited to J <= {cap}, got J={pair.J}")
        self.M = pair.M.toarray()
        self.K = pair.K.toarray()
        self.block_work = float(pair.J) ** 2
        self.tau = tau
        self.factors: list = []

    def prepare(self, lams: np.ndarray) -> None:
        self.factors = []
        for lam in np.asarray(lams, dtype=complex):
            lu, piv = lu_factor(lam * self.M + self.tau * self.K)
            if np.any(np.abs(np.diag(lu)) == 0.0):
                raise InnerSolverError(f"singular block for lambda={lam}")
            self.factors.append((lu, piv))

    def solve(self, rhs_blocks: np.ndarray) -> np.ndarray:
        out = np.empty(rhs_blocks.shape, dtype=complex)
        for k in range(rhs_blocks.shape[1]):
            out[:, k] = lu_solve(self.factors[k], rhs_blocks[:, k])
        return out


def _single(solver, lam: complex, rhs: np.ndarray) -> np.ndarray:
    rhs = np.asarray(rhs)
    solver.prepare(np.array([lam], dtype=complex))
    return solver.solve(rhs.astype(complex)[:, None])[:, 0]


def inner_solve_fst(lam: complex, pair: SpatialPair, rhs: np.ndarray, tau: float = 1.0) -> np.ndarray:
    return _single(FstDirectSolver(pair, tau), lam, rhs)


def inner_solve_multigrid(lam: complex, pair: SpatialPair, rhs: np.ndarray, tau: float = 1.0,
                          cycles: int = 1, omega: float = 0.8) -> np.ndarray:
    return _single(MultigridSolver(pair, tau, cycles, omega), lam, rhs)


def inner_solve_dense(lam: complex, pair: SpatialPair, rhs: np.ndarray, tau: float = 1.0) -> np.ndarray:
    return _single(DenseDirectSolver(pair, tau), lam, rhs)


def make_inner_solver(kind: str, pair: SpatialPair, tau: float, mg_cycles: int = 1,
                      mg_omega: float = 0.8, dense_cap: int = DENSE_CAP, workers: int = 1):
    """Sine transform when the pair allows it, multigrid otherwise."""
    if kind == "auto":
        kind = "fst" if pair.fst_diagonalizable else "multigrid"
    if kind == "fst":
        return FstDirectSolver(pair, tau, workers)
    if kind == "multigrid":
        return MultigridSolver(pair, tau, mg_cycles, mg_omega)
    if kind == "dense":
        return DenseDirectSolver(pair, tau, dense_cap)
    raise ConfigError(f"unknown inner solver '{kind}'")


# =============================================================================
# PRECONDITIONER
# =============================================================================

class BECPreconditioner:
    """Immutable after setup; apply_inverse may be called any number of times."""

    def __init__(self, system: AllAtOnceSystem, eps: float, lams: np.ndarray, inner,
                 reduction: bool = True, workers: int = 1):
        self.system = system
        self.eps = eps
        self.lams = lams
        self.inner = inner
        self.reduction = reduction
        self.N = system.N
        self.J = system.J
        self.tau = system.tau
        powers = np.arange(self.N) / self.N
        self.scale = eps ** powers
        self.unscale = eps ** (-powers)
        self.plan = FourierPlan(self.N, "inverse", workers)
        # one batched length-N FFT plus the diagonal scaling
        self.fft_work = self.J * self.N * (max(np.log2(self.N), 1.0) + 1.0)
        self.stats = OpCounter()

    @classmethod
    def setup(
        cls,
        system: AllAtOnceSystem,
        eps: float,
        inner: str = "auto",
        mg_cycles: int = 1,
        mg_omega: float = 0.8,
        reduction: bool = True,
        dense_cap: int = DENSE_CAP,
        workers: int = 1,
    ) -> "BECPreconditioner":
        eps = _check_eps(eps)
        N = system.N
        if N > 1 and eps ** (-(N - 1) / N) >= SCALING_RANGE_LIMIT:
            raise DomainError(
                f"epsilon={eps} gives a time scaling range eps^(-(N-1)/N) beyond {SCALING_RANGE_LIMIT:.0e}"
            )
        lams = bec_eigenvalues(system.stencil, eps, N)
        solver = make_inner_solver(inner, system.pair, system.tau, mg_cycles, mg_omega,
                                   dense_cap, workers)
        solver.prepare(lams)
        get_logger().setup("BECPreconditioner", {
            "epsilon": eps, "N": N, "J": system.J, "inner": solver.name, "reduction": reduction,
        })
        return cls(system, eps, lams, solver, reduction, workers)

    @property
    def solved_blocks(self) -> int:
        """Block solves per application of a real vector."""
        return self.N // 2 + 1 if self.reduction else self.N

    def apply_inverse(self, y: np.ndarray) -> np.ndarray:
        """z = P_eps^{-1} y."""
        N, J = self.N, self.J
        y = np.asarray(y)
        Y = as_blocks(y, J, N)
        real_input = not np.iscomplexobj(y)
        self.stats.bump("applies")

        # Step 1: (F D) kron I
        Yt = self.plan.apply(Y * self.scale[None, :], axis=1)
        self.stats.bump("fft_passes")
        self.stats.bump("work", self.fft_work)

        # Step 2: block solves
        if real_input and self.reduction:
            half = N // 2 + 1
            Zt = np.empty((J, N), dtype=complex)
            Zt[:, :half] = self.inner.solve(Yt[:, :half])
            if N > half:
                Zt[:, half:] = np.conj(Zt[:, N - half:0:-1])
            self.stats.bump("block_solves", half)
            self.stats.bump("work", half * self.inner.block_work)
        else:
            Zt = self.inner.solve(Yt)
            self.stats.bump("block_solves", N)
            self.stats.bump("work", N * self.inner.block_work)

        # Step 3: (D^{-1} F^*) kron I
        Z = self.plan.inverted().apply(Zt, axis=1) * self.unscale[None, :]
        self.stats.bump("fft_passes")
        self.stats.bump("work", self.fft_work)

        if not real_input:
            return from_blocks(Z)
        z_norm = np.linalg.norm(Z)
        imag_norm = np.linalg.norm(Z.imag)
        if imag_norm > IMAG_TOLERANCE * max(z_norm, np.finfo(float).tiny):
            raise ConjugateSymmetryError(
                f"preconditioner output has relative imaginary part {imag_norm / z_norm:.2e}"
            )
        return from_blocks(Z.real)

    def as_operator(self) -> LinearOperator:
        n = self.N * self.J
        return LinearOperator((n, n), matvec=self.apply_inverse, dtype=float)

    def dense(self) -> np.ndarray:
        """P_eps = R_eps kron M + tau I kron K as a dense matrix."""
        R = r_eps_pattern(self.system.stencil, self.eps, self.N)
        M = self.system.pair.M.toarray()
        K = self.system.pair.K.toarray()
        return np.kron(R, M) + self.tau * np.kron(np.eye(self.N), K)
