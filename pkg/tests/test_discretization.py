import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from spacetime.discretization import (
    AllAtOnceSystem,
    Grid2D,
    SpatialPair,
    TimeStencil,
    apply_L,
    assemble,
    bdf_stencil,
    build_convdiff,
    build_heat_fd,
    build_heat_q1,
    dense_L,
    sequential_solve,
)
from spacetime.errors import ContractViolation, DomainError
from spacetime.operators import as_blocks
from spacetime.problems import circulating_wind
from spacetime.transforms import sine_matrix


def tridiag(m, lower, diag, upper):
    return np.diag(np.full(m, diag)) + np.diag(np.full(m - 1, lower), -1) + np.diag(np.full(m - 1, upper), 1)


class TestGrid:
    def test_spacing_and_nodes(self):
        grid = Grid2D(3)
        assert grid.h == pytest.approx(0.25)
        assert grid.J == 9
        x, y = grid.interior_nodes()
        assert_allclose(x[:3], [0.25, 0.5, 0.75])
        assert_allclose(y[:3], [0.25, 0.25, 0.25])

    def test_coarsening(self):
        grid = Grid2D(15)
        assert grid.can_coarsen
        assert grid.coarsen().m == 7
        assert not Grid2D(6).can_coarsen
        with pytest.raises(ContractViolation):
            Grid2D(6).coarsen()

    def test_rejects_bad_grids(self):
        with pytest.raises(ContractViolation):
            Grid2D(0)
        with pytest.raises(ContractViolation):
            Grid2D(4, ((0.0, 1.0), (0.0, 2.0)))


class TestBuilders:
    def test_q1_matches_kron_formula(self):
        m = 4
        grid = Grid2D(m)
        h = grid.h
        pair = build_heat_q1(grid, a=2.0)
        T = tridiag(m, 1.0, 4.0, 1.0) * h / 6
        L = tridiag(m, -1.0, 2.0, -1.0) / h
        assert_allclose(pair.M.toarray(), np.kron(T, T), atol=1e-14)
        assert_allclose(pair.K.toarray(), 2.0 * (np.kron(T, L) + np.kron(L, T)), atol=1e-12)
        assert pair.symmetric_K
        assert pair.fst_diagonalizable

    @pytest.mark.parametrize("m", [7, 15, 31])
    def test_q1_mass_condition_number_is_bounded(self, m):
        eigs = np.linalg.eigvalsh(build_heat_q1(Grid2D(m)).M.toarray())
        # 1D factor tridiag(1, 4, 1) has spectrum inside (2, 6)
        assert eigs.max() / eigs.min() < 9.0

    @pytest.mark.parametrize("builder", [build_heat_q1, build_heat_fd])
    def test_fst_factors_diagonalize_pair(self, builder):
        m = 5
        pair = builder(Grid2D(m), 1.5)
        S = sine_matrix(m)
        S2 = np.kron(S, S)
        m_hat, k_hat = pair.fst.tensor_eigenvalues()
        assert_allclose(S2 @ pair.M.toarray() @ S2, np.diag(m_hat.ravel()), atol=1e-12)
        assert_allclose(S2 @ pair.K.toarray() @ S2, np.diag(k_hat.ravel()), atol=1e-9)

    def test_fd_matches_kron_formula(self):
        m = 3
        grid = Grid2D(m)
        pair = build_heat_fd(grid)
        L = tridiag(m, -1.0, 2.0, -1.0)
        I = np.eye(m)
        assert_allclose(pair.M.toarray(), np.eye(m * m))
        assert_allclose(pair.K.toarray(), (np.kron(I, L) + np.kron(L, I)) / grid.h**2, atol=1e-10)

    def test_variable_fd_is_symmetric_without_fst(self):
        pair = build_heat_fd(Grid2D(6), lambda x, y: 1.0 + x * y)
        K = pair.K.toarray()
        assert_allclose(K, K.T, atol=1e-12)
        assert not pair.fst_diagonalizable
        assert np.all(np.linalg.eigvalsh(K) > 0)

    def test_constant_callable_matches_scalar(self):
        grid = Grid2D(4)
        scalar = build_heat_fd(grid, 0.7)
        func = build_heat_fd(grid, lambda x, y: np.full_like(x, 0.7))
        assert_allclose(func.K.toarray(), scalar.K.toarray(), atol=1e-12)

    def test_nonpositive_diffusion_is_rejected(self):
        with pytest.raises(DomainError):
            build_heat_fd(Grid2D(3), -1.0)
        with pytest.raises(DomainError):
            build_heat_q1(Grid2D(3), 0.0)
        with pytest.raises(DomainError):
            build_heat_fd(Grid2D(3), lambda x, y: x - 0.5)

    def test_convdiff_symmetric_part_is_psd(self):
        grid = Grid2D(7, ((-1.0, 1.0), (-1.0, 1.0)))
        pair = build_convdiff(grid, 1.0 / 200.0, circulating_wind)
        K = pair.K.toarray()
        assert not pair.symmetric_K
        assert not np.allclose(K, K.T)
        assert np.linalg.eigvalsh(0.5 * (K + K.T)).min() >= -1e-10

    def test_convdiff_zero_wind_reduces_to_diffusion(self):
        grid = Grid2D(4)
        pair = build_convdiff(grid, 0.3, lambda x, y: (np.zeros_like(x), np.zeros_like(y)))
        assert_allclose(pair.K.toarray(), build_heat_fd(grid, 0.3).K.toarray(), atol=1e-10)

    def test_from_matrices_detects_symmetry(self):
        assert SpatialPair.from_matrices(np.eye(2), [[2.0, -1.0], [-1.0, 2.0]]).symmetric_K
        assert not SpatialPair.from_matrices(np.eye(2), [[2.0, -1.0], [0.0, 2.0]]).symmetric_K
        with pytest.raises(ContractViolation):
            SpatialPair.from_matrices(np.eye(2), np.eye(3))


class TestStencil:
    def test_bdf_coefficients(self):
        assert bdf_stencil(1).coefficients == (1.0, -1.0)
        assert bdf_stencil(2).coefficients == (1.5, -2.0, 0.5)
        assert bdf_stencil(2).p == 2

    def test_invalid_stencils(self):
        with pytest.raises(DomainError):
            bdf_stencil(3)
        with pytest.raises(DomainError):
            TimeStencil((0.0, 1.0))
        with pytest.raises(ContractViolation):
            TimeStencil((1.0,))


def small_pair(J=3):
    K = tridiag(J, -1.0, 2.0, -1.0)
    return SpatialPair.from_matrices(np.eye(J), K)


class TestAssembly:
    @pytest.mark.parametrize("order", [1, 2])
    def test_apply_matches_dense(self, order, rng):
        system = assemble(None, small_pair(), bdf_stencil(order), T=1.0, N=5)
        v = rng.standard_normal(system.size)
        assert_allclose(apply_L(system, v), dense_L(system) @ v, atol=1e-12)

    def test_toeplitz_path_matches_banded(self, rng):
        banded = assemble(None, small_pair(), bdf_stencil(2), T=1.0, N=6, time_path="banded")
        toeplitz = assemble(None, small_pair(), bdf_stencil(2), T=1.0, N=6, time_path="toeplitz")
        v = rng.standard_normal(banded.size)
        assert toeplitz.uses_toeplitz()
        assert_allclose(toeplitz.apply(v), banded.apply(v), atol=1e-12)

    def test_history_terms_for_bdf2(self):
        u0 = np.array([1.0, 2.0, 3.0])
        system = assemble(None, small_pair(), bdf_stencil(2), T=1.0, N=4, initial=u0)
        blocks = as_blocks(system.rhs, 3, 4)
        # f^1 = -(r1 + r2) M u0, f^2 = -r2 M u0
        assert_allclose(blocks[:, 0], 1.5 * u0)
        assert_allclose(blocks[:, 1], -0.5 * u0)
        assert_allclose(blocks[:, 2:], 0.0)

    @pytest.mark.parametrize("order", [1, 2])
    def test_sequential_solve_matches_dense(self, order, rng):
        system = assemble(None, small_pair(4), bdf_stencil(order), T=2.0, N=6, initial=rng.standard_normal(4))
        u = sequential_solve(system)
        assert_allclose(u, np.linalg.solve(dense_L(system), system.rhs), atol=1e-12)

    def test_steady_state_is_preserved(self):
        grid = Grid2D(5)
        pair = build_heat_fd(grid)
        system = assemble(grid, pair, bdf_stencil(2), T=1.0, N=4,
                          boundary=lambda x, y, t: np.ones_like(x),
                          initial=lambda x, y: np.ones_like(x))
        assert_allclose(sequential_solve(system), np.ones(system.size), atol=1e-12)

    def test_source_enters_scaled_by_tau(self):
        grid = Grid2D(3)
        pair = build_heat_fd(grid)
        system = assemble(grid, pair, bdf_stencil(1), T=1.0, N=2, source=lambda x, y, t: t * np.ones_like(x))
        blocks = as_blocks(system.rhs, grid.J, 2)
        assert_allclose(blocks[:, 0], 0.5 * 0.5)
        assert_allclose(blocks[:, 1], 0.5 * 1.0)

    def test_invalid_arguments(self):
        pair = small_pair()
        with pytest.raises(ContractViolation):
            assemble(None, pair, bdf_stencil(1), T=1.0, N=0)
        with pytest.raises(DomainError):
            assemble(None, pair, bdf_stencil(1), T=-1.0, N=3)
        with pytest.raises(ContractViolation):
            assemble(None, pair, bdf_stencil(1), T=1.0, N=3, source=lambda x, y, t: x)
        with pytest.raises(ContractViolation):
            assemble(None, pair, bdf_stencil(1), T=1.0, N=3, initial=np.ones(4))
        system = assemble(None, pair, bdf_stencil(1), T=1.0, N=3)
        with pytest.raises(ContractViolation):
            apply_L(system, np.ones(4))

    def test_system_shapes(self):
        system = assemble(None, small_pair(), bdf_stencil(1), T=2.0, N=4)
        assert isinstance(system, AllAtOnceSystem)
        assert system.tau == pytest.approx(0.5)
        assert_allclose(system.times, [0.5, 1.0, 1.5, 2.0])
        assert system.size == 12
        assert isinstance(system.pair.M, sp.csr_matrix)
