import numpy as np
import pytest
from numpy.testing import assert_allclose

from spacetime.discretization import Grid2D, SpatialPair, assemble, bdf_stencil, build_heat_fd, build_heat_q1
from spacetime.errors import ConfigError, ContractViolation, DomainError
from spacetime.preconditioner import (
    BECPreconditioner,
    DenseDirectSolver,
    FstDirectSolver,
    bec_eigenvalues,
    choose_epsilon,
    inner_solve_dense,
    inner_solve_fst,
    inner_solve_multigrid,
    make_inner_solver,
    r_eps_pattern,
    reconstruct_R_eps,
)


def q1_system(m=3, N=8, order=1, T=1.0):
    grid = Grid2D(m)
    return assemble(grid, build_heat_q1(grid), bdf_stencil(order), T=T, N=N)


class TestEpsilon:
    @pytest.mark.parametrize("tau,expected", [(2.0, 0.5), (1.0, 0.5), (1 / 64, 1 / 128)])
    def test_choose_epsilon(self, tau, expected):
        assert choose_epsilon(tau) == pytest.approx(expected)

    def test_choose_epsilon_rejects_nonpositive_step(self):
        with pytest.raises(DomainError):
            choose_epsilon(0.0)


class TestTimeSymbol:
    def test_bdf1_two_steps(self):
        lams = bec_eigenvalues(bdf_stencil(1), 0.25, 2)
        assert_allclose(lams, [0.5, 1.5], atol=1e-14)

    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("N", [3, 8, 17])
    def test_routes_agree(self, order, N):
        stencil = bdf_stencil(order)
        direct = bec_eigenvalues(stencil, 0.1, N, route="direct")
        assert_allclose(bec_eigenvalues(stencil, 0.1, N, route="fft"), direct, atol=1e-13)

    def test_eigenvalues_are_conjugate_symmetric(self):
        lams = bec_eigenvalues(bdf_stencil(2), 0.3, 10)
        assert_allclose(lams[1:], np.conj(lams[:0:-1]), atol=1e-14)

    def test_pattern_wraps_scaled_band(self):
        R = r_eps_pattern(bdf_stencil(1), 0.3, 3)
        expected = np.array([[1.0, 0.0, -0.3], [-1.0, 1.0, 0.0], [0.0, -1.0, 1.0]])
        assert_allclose(R, expected)

    @pytest.mark.parametrize("order,eps", [(1, 1.0), (1, 0.01), (2, 0.5), (2, 1e-3)])
    def test_factorization_reconstructs_pattern(self, order, eps):
        stencil = bdf_stencil(order)
        assert_allclose(reconstruct_R_eps(stencil, eps, 7), r_eps_pattern(stencil, eps, 7), atol=1e-11)

    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            bec_eigenvalues(bdf_stencil(1), 1.5, 4)
        with pytest.raises(DomainError):
            bec_eigenvalues(bdf_stencil(1), 0.0, 4)
        with pytest.raises(ContractViolation):
            bec_eigenvalues(bdf_stencil(2), 0.5, 2)
        with pytest.raises(ContractViolation):
            bec_eigenvalues(bdf_stencil(1), 0.5, 4, route="chebyshev")


class TestInnerSolvers:
    def test_fst_and_dense_agree(self, rng):
        pair = build_heat_q1(Grid2D(7), a=0.5)
        rhs = rng.standard_normal(pair.J)
        lam = 0.8 + 0.4j
        expected = inner_solve_dense(lam, pair, rhs, tau=0.1)
        assert_allclose(inner_solve_fst(lam, pair, rhs, tau=0.1), expected, rtol=1e-10, atol=1e-12)

    def test_dense_solution_satisfies_block(self, rng):
        pair = build_heat_fd(Grid2D(4))
        rhs = rng.standard_normal(pair.J)
        lam = 1.2 - 0.3j
        z = inner_solve_dense(lam, pair, rhs, tau=0.25)
        assert_allclose(lam * (pair.M @ z) + 0.25 * (pair.K @ z), rhs, atol=1e-12)

    def test_multigrid_converges_to_direct_solution(self, rng):
        pair = build_heat_fd(Grid2D(31))
        rhs = rng.standard_normal(pair.J)
        lam = 1.0 + 0.5j
        expected = inner_solve_fst(lam, pair, rhs, tau=1 / 64)
        approx = inner_solve_multigrid(lam, pair, rhs, tau=1 / 64, cycles=10)
        assert np.linalg.norm(approx - expected) <= 1e-3 * np.linalg.norm(expected)

    def test_batched_solves_use_their_own_shift(self, rng):
        pair = build_heat_q1(Grid2D(3))
        lams = np.array([1.0, 2.0 + 1j, 0.5 - 0.5j])
        solver = FstDirectSolver(pair, tau=0.5)
        solver.prepare(lams)
        B = rng.standard_normal((pair.J, 3)).astype(complex)
        Z = solver.solve(B)
        for k in range(3):
            assert_allclose(Z[:, k], inner_solve_dense(lams[k], pair, B[:, k], tau=0.5), atol=1e-12)
        assert_allclose(solver.solve(B[:, :2]), Z[:, :2], atol=1e-14)

    def test_selection(self):
        q1 = build_heat_q1(Grid2D(15))
        variable = build_heat_fd(Grid2D(15), lambda x, y: 1.0 + x)
        assert make_inner_solver("auto", q1, 0.1).name == "fst"
        assert make_inner_solver("auto", variable, 0.1).name == "multigrid"
        with pytest.raises(ConfigError):
            make_inner_solver("fst", variable, 0.1)
        with pytest.raises(ConfigError):
            make_inner_solver("cholesky", q1, 0.1)
        with pytest.raises(ConfigError):
            DenseDirectSolver(q1, 0.1, cap=100)

    def test_multigrid_requires_a_grid(self):
        pair = SpatialPair.from_matrices(np.eye(4), 2 * np.eye(4))
        with pytest.raises(ConfigError):
            make_inner_solver("multigrid", pair, 0.1)


class TestApplyInverse:
    @pytest.mark.parametrize("order", [1, 2])
    @pytest.mark.parametrize("eps", [1.0, 0.1, 1e-3])
    def test_matches_dense_inverse(self, order, eps, rng):
        system = q1_system(N=8, order=order)
        pre = BECPreconditioner.setup(system, eps, inner="fst")
        y = rng.standard_normal(system.size)
        z = pre.apply_inverse(y)
        assert not np.iscomplexobj(z)
        P = pre.dense()
        assert np.linalg.norm(P @ z - y) <= 1e-10 * np.linalg.norm(y)

    @pytest.mark.parametrize("N", [5, 6])
    def test_reduction_does_not_change_result(self, N, rng):
        system = q1_system(N=N)
        y = rng.standard_normal(system.size)
        reduced = BECPreconditioner.setup(system, 0.2, inner="dense", reduction=True)
        full = BECPreconditioner.setup(system, 0.2, inner="dense", reduction=False)
        assert_allclose(reduced.apply_inverse(y), full.apply_inverse(y), atol=1e-12)
        assert reduced.stats.block_solves == N // 2 + 1
        assert full.stats.block_solves == N
        assert reduced.stats.fft_passes == 2

    def test_modeled_work_is_n_log_n_over_doubling(self, rng):
        ratios = []
        for N, m in [(8, 7), (16, 15), (32, 31)]:
            system = q1_system(m=m, N=N)
            pre = BECPreconditioner.setup(system, choose_epsilon(system.tau), inner="fst")
            v = rng.standard_normal(system.size)
            pre.apply_inverse(v)
            system.apply(v)
            assert system.stats.spmv == 2 * N
            assert pre.stats.fft_passes == 2
            assert pre.stats.block_solves == N // 2 + 1
            n = system.size
            ratios.append((pre.stats.work + system.stats.work) / (n * np.log2(n)))
        assert max(ratios) / min(ratios) < 2.0

    def test_complex_input_is_handled_blockwise(self, rng):
        system = q1_system(N=4)
        pre = BECPreconditioner.setup(system, 0.5, inner="fst")
        y = rng.standard_normal(system.size) + 1j * rng.standard_normal(system.size)
        z = pre.apply_inverse(y)
        assert_allclose(pre.dense() @ z, y, atol=1e-11)

    def test_zero_input(self):
        system = q1_system(N=4)
        pre = BECPreconditioner.setup(system, 0.5)
        assert_allclose(pre.apply_inverse(np.zeros(system.size)), 0.0)

    def test_needs_more_steps_than_stencil_depth(self):
        with pytest.raises(ContractViolation):
            BECPreconditioner.setup(q1_system(N=1), 0.5)
        with pytest.raises(ContractViolation):
            BECPreconditioner.setup(q1_system(N=2, order=2), 0.5)

    def test_wrong_length_is_rejected(self):
        system = q1_system(N=4)
        pre = BECPreconditioner.setup(system, 0.5)
        with pytest.raises(ContractViolation):
            pre.apply_inverse(np.ones(system.size + 1))

    def test_epsilon_range(self):
        system = q1_system(N=64)
        with pytest.raises(DomainError):
            BECPreconditioner.setup(system, 1.5)
        with pytest.raises(DomainError):
            BECPreconditioner.setup(system, 1e-13)

    def test_operator_wrapper(self, rng):
        system = q1_system(N=4)
        pre = BECPreconditioner.setup(system, 0.5)
        y = rng.standard_normal(system.size)
        assert_allclose(pre.as_operator().matvec(y), pre.apply_inverse(y))
