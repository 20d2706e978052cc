"""
Spatial operator pairs, BDF time stencils and all-at-once assembly.

Unknowns are the interior nodes of a uniform (m+2) x (m+2) grid, ordered
lexicographically with x running fastest. Dirichlet values are eliminated:
operators are first assembled row-wise on the full grid and then split into
the interior block (M, K) and the interior-boundary coupling, which moves
boundary data to the right-hand side.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import ContractViolation, DomainError
from .operators import OpCounter, ToeplitzSpec, as_blocks, from_blocks, kron_matvec, time_matrix

Coefficient = Union[float, Callable[[np.ndarray, np.ndarray], np.ndarray]]
SpaceTimeFunction = Callable[[np.ndarray, np.ndarray, float], np.ndarray]
Wind = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


# =============================================================================
# GRID
# =============================================================================

@dataclass(frozen=True)
class Grid2D:
    """Uniform square-cell grid with m interior points per dimension."""
    m: int
    bounds: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 1.0), (0.0, 1.0))

    def __post_init__(self):
        if self.m < 1:
            raise ContractViolation(f"Grid2D needs m >= 1, got {self.m}")
        (x0, x1), (y0, y1) = self.bounds
        if x1 <= x0 or y1 <= y0:
            raise ContractViolation(f"Grid2D bounds must be increasing, got {self.bounds}")
        if not np.isclose(x1 - x0, y1 - y0):
            raise ContractViolation("Grid2D requires square cells (equal side lengths)")

    @property
    def h(self) -> float:
        (x0, x1), _ = self.bounds
        return (x1 - x0) / (self.m + 1)

    @property
    def J(self) -> int:
        return self.m * self.m

    def full_axis(self, dim: int) -> np.ndarray:
        lo, hi = self.bounds[dim]
        return np.linspace(lo, hi, self.m + 2)

    def axis(self, dim: int) -> np.ndarray:
        return self.full_axis(dim)[1:-1]

    def interior_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates (x, y), each of length J, x fastest."""
        X, Y = np.meshgrid(self.axis(0), self.axis(1))
        return X.ravel(), Y.ravel()

    def full_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        X, Y = np.meshgrid(self.full_axis(0), self.full_axis(1))
        return X.ravel(), Y.ravel()

    def interior_mask(self) -> np.ndarray:
        """Boolean mask over the full grid selecting interior nodes."""
        mask = np.zeros((self.m + 2, self.m + 2), dtype=bool)
        mask[1:-1, 1:-1] = True
        return mask.ravel()

    @property
    def can_coarsen(self) -> bool:
        return self.m >= 3 and (self.m + 1) % 2 == 0

    def coarsen(self) -> "Grid2D":
        if not self.can_coarsen:
            raise ContractViolation(f"grid with m={self.m} has no nested coarse grid")
        return Grid2D((self.m + 1) // 2 - 1, self.bounds)


# =============================================================================
# SPATIAL PAIR
# =============================================================================

@dataclass(frozen=True)
class FstFactors:
    """
    1D eigenvalue arrays under DST-I for tensor-structured pairs

        M = mass_scale  * (T kron T)
        K = stiff_scale * (L kron T + T kron L)

    with T, L symmetric tridiagonal Toeplitz (T = I for finite differences).
    """
    mass_1d: np.ndarray
    stiff_1d: np.ndarray
    mass_scale: float
    stiff_scale: float

    def tensor_eigenvalues(self) -> tuple[np.ndarray, np.ndarray]:
        """(m_hat, k_hat) as m x m arrays indexed [j_y, i_x]."""
        t, l = self.mass_1d, self.stiff_1d
        m_hat = self.mass_scale * np.outer(t, t)
        k_hat = self.stiff_scale * (np.outer(l, t) + np.outer(t, l))
        return m_hat, k_hat


@dataclass(frozen=True)
class BoundaryCoupling:
    """Interior-to-boundary blocks of M and K plus boundary node coordinates."""
    M_ib: sp.csr_matrix
    K_ib: sp.csr_matrix
    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True)
class SpatialPair:
    """Mass matrix M and stiffness (or advection-diffusion) matrix K."""
    M: sp.csr_matrix
    K: sp.csr_matrix
    symmetric_K: bool
    fst: Optional[FstFactors] = None
    grid: Optional[Grid2D] = None
    boundary: Optional[BoundaryCoupling] = None
    rebuild: Optional[Callable[[Grid2D], "SpatialPair"]] = field(default=None, compare=False)
    label: str = "custom"

    @property
    def fst_diagonalizable(self) -> bool:
        return self.fst is not None

    @property
    def J(self) -> int:
        return self.M.shape[0]

    def A0(self, tau: float, r0: float = 1.0) -> sp.csr_matrix:
        """Diagonal block r0*M + tau*K of the all-at-once matrix."""
        return (r0 * self.M + tau * self.K).tocsr()

    def scaled(self, factor: float) -> "SpatialPair":
        """Both matrices times factor; transform and boundary data are dropped."""
        return replace(
            self, M=(factor * self.M).tocsr(), K=(factor * self.K).tocsr(),
            fst=None, boundary=None, rebuild=None,
        )

    @classmethod
    def from_matrices(cls, M, K, symmetric_K: Optional[bool] = None) -> "SpatialPair":
        """Wrap arbitrary (dense or sparse) matrices; used by oracles and tests."""
        M = sp.csr_matrix(M)
        K = sp.csr_matrix(K)
        if M.shape != K.shape or M.shape[0] != M.shape[1]:
            raise ContractViolation(f"M and K must be square of equal size, got {M.shape} and {K.shape}")
        if symmetric_K is None:
            symmetric_K = abs(K - K.T).max() <= 1e-14 * max(abs(K).max(), 1.0)
        return cls(M=M, K=K, symmetric_K=bool(symmetric_K))


def _rows_1d(m: int, stencil: Sequence[float]) -> sp.csr_matrix:
    """m x (m+2) matrix applying a 3-point stencil at each interior node."""
    return sp.diags(
        [np.full(m, float(s)) for s in stencil], [0, 1, 2], shape=(m, m + 2), format="csr"
    )


def _split(rows: sp.spmatrix, grid: Grid2D) -> tuple[sp.csr_matrix, sp.csr_matrix]:
    rows = sp.csr_matrix(rows)
    mask = grid.interior_mask()
    return rows[:, mask].tocsr(), rows[:, ~mask].tocsr()


def _pair_from_rows(
    grid: Grid2D,
    M_rows: sp.spmatrix,
    K_rows: sp.spmatrix,
    symmetric_K: bool,
    label: str,
    fst: Optional[FstFactors] = None,
    rebuild=None,
) -> SpatialPair:
    M, M_ib = _split(M_rows, grid)
    K, K_ib = _split(K_rows, grid)
    mask = grid.interior_mask()
    xf, yf = grid.full_nodes()
    coupling = BoundaryCoupling(M_ib=M_ib, K_ib=K_ib, x=xf[~mask], y=yf[~mask])
    M.eliminate_zeros()
    K.eliminate_zeros()
    return SpatialPair(
        M=M, K=K, symmetric_K=symmetric_K, fst=fst, grid=grid,
        boundary=coupling, rebuild=rebuild, label=label,
    )


def _five_point_rows(grid: Grid2D, center, east, west, north, south) -> sp.csr_matrix:
    """Assemble J x (m+2)^2 rows from per-node 5-point coefficients."""
    m = grid.m
    n_full = m + 2
    iy, ix = np.divmod(np.arange(grid.J), m)
    full = (iy + 1) * n_full + (ix + 1)
    rows = np.tile(np.arange(grid.J), 5)
    cols = np.concatenate([full, full + 1, full - 1, full + n_full, full - n_full])
    vals = np.concatenate([center, east, west, north, south])
    return sp.csr_matrix((vals, (rows, cols)), shape=(grid.J, n_full * n_full))


def _second_difference_eigs(m: int) -> np.ndarray:
    """Eigenvalues 2 - 2cos(i*pi/(m+1)) of tridiag(-1, 2, -1)."""
    return 2.0 - 2.0 * np.cos(np.arange(1, m + 1) * np.pi / (m + 1))


# =============================================================================
# BUILDERS
# =============================================================================

def build_heat_fd(grid: Grid2D, a: Coefficient = 1.0) -> SpatialPair:
    """
    M = I and K the 5-point discretization of -div(a grad .) scaled by 1/h^2.

    A variable coefficient is evaluated at edge midpoints, which keeps K
    symmetric. The pair is FST-diagonalizable iff a is constant.
    """
    h = grid.h
    m = grid.m
    identity_rows = _rows_1d(m, (0.0, 1.0, 0.0))
    M_rows = sp.kron(identity_rows, identity_rows)

    if callable(a):
        x, y = grid.interior_nodes()
        faces = {
            "east": a(x + h / 2, y),
            "west": a(x - h / 2, y),
            "north": a(x, y + h / 2),
            "south": a(x, y - h / 2),
        }
        for name, values in faces.items():
            if np.any(np.asarray(values) <= 0):
                raise DomainError(f"diffusion coefficient must be positive (non-positive on {name} faces)")
        e, w, n, s = (np.asarray(faces[k], dtype=float) / h**2 for k in ("east", "west", "north", "south"))
        K_rows = _five_point_rows(grid, e + w + n + s, -e, -w, -n, -s)
        return _pair_from_rows(grid, M_rows, K_rows, True, "heat-fd-variable")

    a = float(a)
    if a <= 0:
        raise DomainError(f"diffusion coefficient must be positive, got {a}")
    second = _rows_1d(m, (-1.0, 2.0, -1.0))
    K_rows = (a / h**2) * (sp.kron(identity_rows, second) + sp.kron(second, identity_rows))
    fst = FstFactors(
        mass_1d=np.ones(m),
        stiff_1d=_second_difference_eigs(m),
        mass_scale=1.0,
        stiff_scale=a / h**2,
    )
    # M = I carries no h^2, so coarse copies are lifted to the Galerkin scale P^T A P
    return _pair_from_rows(
        grid, M_rows, K_rows, True, "heat-fd", fst=fst,
        rebuild=lambda coarse: build_heat_fd(coarse, a).scaled((coarse.h / h) ** 2),
    )


def build_heat_q1(grid: Grid2D, a: float = 1.0) -> SpatialPair:
    """
    Bilinear (Q1) finite elements on the uniform square mesh:

        M = (h/6)T kron (h/6)T,   K = a[(1/h)L kron (h/6)T + (h/6)T kron (1/h)L]

    with T = tridiag(1, 4, 1) and L = tridiag(-1, 2, -1).
    """
    a = float(a)
    if a <= 0:
        raise DomainError(f"diffusion coefficient must be positive, got {a}")
    h = grid.h
    m = grid.m
    mass = _rows_1d(m, (h / 6, 4 * h / 6, h / 6))
    stiff = _rows_1d(m, (-1 / h, 2 / h, -1 / h))
    M_rows = sp.kron(mass, mass)
    K_rows = a * (sp.kron(mass, stiff) + sp.kron(stiff, mass))
    theta = np.arange(1, m + 1) * np.pi / (m + 1)
    fst = FstFactors(
        mass_1d=4.0 + 2.0 * np.cos(theta),
        stiff_1d=2.0 - 2.0 * np.cos(theta),
        mass_scale=h * h / 36.0,
        stiff_scale=a / 6.0,
    )
    return _pair_from_rows(
        grid, M_rows, K_rows, True, "heat-q1", fst=fst,
        rebuild=lambda coarse: build_heat_q1(coarse, a),
    )


def build_convdiff(grid: Grid2D, nu: float, wind: Wind) -> SpatialPair:
    """
    M = I and K = nu * (5-point -Laplacian) + first-order upwind convection.

    Convection is discretized in flux form with the wind sampled at edge
    midpoints; for a solenoidal wind this is w.grad u. The central part of the
    flux is then exactly skew-symmetric and the upwind part symmetric positive
    semidefinite, so (K + K^T)/2 is positive semidefinite.
    """
    if nu <= 0:
        raise DomainError(f"diffusion constant must be positive, got {nu}")
    h = grid.h
    m = grid.m
    x, y = grid.interior_nodes()
    w_east = np.asarray(wind(x + h / 2, y)[0], dtype=float)
    w_west = np.asarray(wind(x - h / 2, y)[0], dtype=float)
    w_north = np.asarray(wind(x, y + h / 2)[1], dtype=float)
    w_south = np.asarray(wind(x, y - h / 2)[1], dtype=float)

    diff = nu / h**2
    center = 4 * diff + (
        np.maximum(w_east, 0) - np.minimum(w_west, 0)
        + np.maximum(w_north, 0) - np.minimum(w_south, 0)
    ) / h
    east = -diff + np.minimum(w_east, 0) / h
    west = -diff - np.maximum(w_west, 0) / h
    north = -diff + np.minimum(w_north, 0) / h
    south = -diff - np.maximum(w_south, 0) / h

    identity_rows = _rows_1d(m, (0.0, 1.0, 0.0))
    M_rows = sp.kron(identity_rows, identity_rows)
    K_rows = _five_point_rows(grid, center, east, west, north, south)
    return _pair_from_rows(grid, M_rows, K_rows, False, "convdiff-upwind")


# =============================================================================
# TIME STENCIL
# =============================================================================

@dataclass(frozen=True)
class TimeStencil:
    """Coefficients r_0..r_p of a p-step backward difference scheme."""
    coefficients: tuple[float, ...]

    def __post_init__(self):
        if len(self.coefficients) < 2:
            raise ContractViolation("a time stencil needs at least r_0 and r_1")
        if self.coefficients[0] <= 0:
            raise DomainError(f"r_0 must be positive, got {self.coefficients[0]}")

    @property
    def p(self) -> int:
        return len(self.coefficients) - 1

    @property
    def r0(self) -> float:
        return self.coefficients[0]


BDF_COEFFICIENTS = {
    1: (1.0, -1.0),
    2: (1.5, -2.0, 0.5),
}


def bdf_stencil(order: int) -> TimeStencil:
    """Backward differentiation formula of order 1 or 2."""
    if order not in BDF_COEFFICIENTS:
        raise DomainError(f"unsupported BDF order {order}; expected one of {sorted(BDF_COEFFICIENTS)}")
    return TimeStencil(BDF_COEFFICIENTS[order])


# =============================================================================
# ALL-AT-ONCE SYSTEM
# =============================================================================

@dataclass(frozen=True)
class AllAtOnceSystem:
    """L u = f with L = R kron M + tau I_N kron K."""
    pair: SpatialPair
    stencil: TimeStencil
    N: int
    T: float
    rhs: np.ndarray
    u0: np.ndarray
    time_path: str = "auto"
    stats: OpCounter = field(default_factory=OpCounter, compare=False, repr=False)

    @property
    def tau(self) -> float:
        return self.T / self.N

    @property
    def J(self) -> int:
        return self.pair.J

    @property
    def size(self) -> int:
        return self.N * self.J

    @property
    def times(self) -> np.ndarray:
        """t_1..t_N."""
        return self.tau * np.arange(1, self.N + 1)

    def uses_toeplitz(self) -> bool:
        if self.time_path == "auto":
            return self.stencil.p > 2
        return self.time_path == "toeplitz"

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply_L(self, v)


def _evaluate(fn, x, y, *args) -> np.ndarray:
    return np.broadcast_to(np.asarray(fn(x, y, *args), dtype=float), x.shape)


def assemble(
    grid: Optional[Grid2D],
    pair: SpatialPair,
    stencil: TimeStencil,
    T: float,
    N: int,
    source: Optional[SpaceTimeFunction] = None,
    boundary: Optional[SpaceTimeFunction] = None,
    initial: Union[None, np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
    time_path: str = "auto",
) -> AllAtOnceSystem:
    """
    Assemble the all-at-once system for a p-step scheme.

    Block n of the right-hand side is tau*f^n (source and boundary terms) plus
    the history that falls before t_1: -sum_{j>=n} r_j M u^{n-j} with
    u^{n-j} := u^0 for n - j < 0, and likewise for boundary data.
    """
    if N < 1:
        raise ContractViolation(f"N must be at least 1, got {N}")
    if T <= 0:
        raise DomainError(f"final time must be positive, got {T}")
    if time_path not in ("auto", "banded", "toeplitz"):
        raise ContractViolation(f"unknown time path '{time_path}'")
    J = pair.J
    if grid is not None and grid.J != J:
        raise ContractViolation(f"grid has {grid.J} unknowns, pair has {J}")
    if grid is None and (source is not None or boundary is not None or callable(initial)):
        raise ContractViolation("source, boundary and initial functions need a grid")
    if boundary is not None and pair.boundary is None:
        raise ContractViolation("boundary data given but the pair carries no boundary coupling")

    tau = T / N
    r = stencil.coefficients
    p = stencil.p

    if initial is None:
        u0 = np.zeros(J)
    elif callable(initial):
        u0 = _evaluate(initial, *grid.interior_nodes()).copy()
    else:
        u0 = np.asarray(initial, dtype=float)
        if u0.shape != (J,):
            raise ContractViolation(f"initial data must have length {J}, got shape {u0.shape}")

    blocks = np.zeros((J, N))
    if grid is not None:
        xi, yi = grid.interior_nodes()
    for n in range(1, N + 1):
        t_n = n * tau
        block = blocks[:, n - 1]
        if source is not None:
            block += tau * (pair.M @ _evaluate(source, xi, yi, t_n))
            if pair.boundary is not None:
                bc = pair.boundary
                block += tau * (bc.M_ib @ _evaluate(source, bc.x, bc.y, t_n))
        if boundary is not None:
            bc = pair.boundary
            block -= tau * (bc.K_ib @ _evaluate(boundary, bc.x, bc.y, t_n))
            for j, r_j in enumerate(r):
                t_hist = max(n - j, 0) * tau
                block -= r_j * (bc.M_ib @ _evaluate(boundary, bc.x, bc.y, t_hist))
        history = sum(r[j] for j in range(n, p + 1))
        if history:
            block -= history * (pair.M @ u0)

    return AllAtOnceSystem(
        pair=pair, stencil=stencil, N=N, T=float(T),
        rhs=from_blocks(blocks), u0=u0, time_path=time_path,
    )


def apply_L(system: AllAtOnceSystem, v: np.ndarray) -> np.ndarray:
    """(R kron M + tau I kron K) v in O(NJ) for short stencils."""
    N, J = system.N, system.J
    if np.shape(v) != (N * J,):
        raise ContractViolation(f"apply_L expects a vector of length {N * J}, got shape {np.shape(v)}")
    if system.uses_toeplitz():
        R = ToeplitzSpec.lower(system.stencil.coefficients, N).as_operator()
        time_work = 2 * J * N * max(np.log2(2 * N), 1.0)
    else:
        R = time_matrix(system.stencil.coefficients, N)
        time_work = J * R.nnz
    time_part = kron_matvec(R, system.pair.M, v)
    space_part = from_blocks(system.pair.K @ as_blocks(v, J, N))
    stats = system.stats
    stats.bump("applies")
    # M and K once per time block
    stats.bump("spmv", 2 * N)
    stats.bump("work", N * (system.pair.M.nnz + system.pair.K.nnz) + time_work)
    return time_part + system.tau * space_part


def dense_L(system: AllAtOnceSystem) -> np.ndarray:
    """R kron M + tau I kron K as a dense matrix (small instances only)."""
    R = time_matrix(system.stencil.coefficients, system.N).toarray()
    M = system.pair.M.toarray()
    K = system.pair.K.toarray()
    return np.kron(R, M) + system.tau * np.kron(np.eye(system.N), K)


def sequential_solve(system: AllAtOnceSystem) -> np.ndarray:
    """Solve L u = f by block forward substitution (classical time stepping)."""
    N, J = system.N, system.J
    r = system.stencil.coefficients
    M = system.pair.M
    lu = splu(system.pair.A0(system.tau, r[0]).tocsc())
    f = as_blocks(system.rhs, J, N)
    u = np.zeros((J, N))
    for n in range(N):
        b = f[:, n].copy()
        for j in range(1, min(system.stencil.p, n) + 1):
            b -= r[j] * (M @ u[:, n - j])
        u[:, n] = lu.solve(b)
    return from_blocks(u)
