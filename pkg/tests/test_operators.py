import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose
from scipy.linalg import toeplitz

from spacetime.errors import ContractViolation
from spacetime.operators import (
    OpCounter,
    ToeplitzSpec,
    as_blocks,
    from_blocks,
    kron_matvec,
    spmv,
    time_matrix,
    toeplitz_matvec,
)
from spacetime.transforms import FourierPlan


def test_blocks_are_time_columns():
    v = np.arange(12.0)
    Y = as_blocks(v, 3, 4)
    assert Y.shape == (3, 4)
    assert_allclose(Y[:, 1], [3.0, 4.0, 5.0])
    assert_allclose(from_blocks(Y), v)


def test_as_blocks_rejects_wrong_length():
    with pytest.raises(ContractViolation):
        as_blocks(np.ones(7), 3, 2)


@pytest.mark.parametrize("N,J", [(1, 1), (3, 4), (5, 9)])
def test_kron_matvec_matches_dense_kron(N, J, rng):
    B = rng.standard_normal((N, N))
    C = sp.random(J, J, density=0.5, random_state=1, format="csr") + sp.eye(J)
    v = rng.standard_normal(N * J)
    assert_allclose(kron_matvec(B, C, v), np.kron(B, C.toarray()) @ v, atol=1e-12)


def test_kron_matvec_identity_time_factor(rng):
    C = rng.standard_normal((4, 4))
    v = rng.standard_normal(12)
    expected = from_blocks(C @ as_blocks(v, 4, 3))
    assert_allclose(kron_matvec(np.eye(3), C, v), expected, atol=1e-13)


def test_kron_matvec_inverse_factors_undo_it(rng):
    B = rng.standard_normal((4, 4)) + 4 * np.eye(4)
    C = rng.standard_normal((3, 3)) + 3 * np.eye(3)
    v = rng.standard_normal(12)
    w = kron_matvec(B, C, v)
    assert_allclose(kron_matvec(np.linalg.inv(B), np.linalg.inv(C), w), v, atol=1e-12)


def test_scaled_fourier_kron_identity_matches_direct_sum(rng):
    N, J, eps = 4, 3, 0.3
    theta = np.exp(2j * np.pi / N)
    v = rng.standard_normal(N * J)
    Y = as_blocks(v, J, N)
    expected = np.zeros((J, N), dtype=complex)
    for k in range(N):
        for j in range(N):
            expected[:, k] += eps ** (j / N) * theta ** (k * j) * Y[:, j]
    expected /= np.sqrt(N)
    F = FourierPlan(N, "inverse").apply(np.eye(N), axis=0)
    D = np.diag(eps ** (np.arange(N) / N))
    assert_allclose(kron_matvec(F @ D, np.eye(J), v), from_blocks(expected), atol=1e-12)


def test_spmv_checks_dimensions():
    A = sp.eye(3, format="csr")
    assert_allclose(spmv(A, np.ones(3)), np.ones(3))
    with pytest.raises(ContractViolation):
        spmv(A, np.ones(4))


def test_time_matrix_bdf2_pattern():
    R = time_matrix((1.5, -2.0, 0.5), 4).toarray()
    expected = np.array([
        [1.5, 0, 0, 0],
        [-2.0, 1.5, 0, 0],
        [0.5, -2.0, 1.5, 0],
        [0, 0.5, -2.0, 1.5],
    ])
    assert_allclose(R, expected)


@pytest.mark.parametrize("N", [1, 4, 9])
def test_toeplitz_matvec_matches_dense(N, rng):
    col = rng.standard_normal(N)
    row = rng.standard_normal(N)
    row[0] = col[0]
    spec = ToeplitzSpec(col, row)
    v = rng.standard_normal(N)
    assert_allclose(toeplitz_matvec(spec, v), toeplitz(col, row) @ v, atol=1e-12)
    V = rng.standard_normal((N, 3))
    assert_allclose(toeplitz_matvec(spec, V), toeplitz(col, row) @ V, atol=1e-12)


def test_lower_toeplitz_equals_time_matrix(rng):
    coefficients = (1.5, -2.0, 0.5)
    spec = ToeplitzSpec.lower(coefficients, 6)
    assert_allclose(spec.to_dense(), time_matrix(coefficients, 6).toarray())
    v = rng.standard_normal(6)
    assert_allclose(spec.as_operator().matvec(v), time_matrix(coefficients, 6) @ v, atol=1e-12)


def test_toeplitz_spec_rejects_inconsistent_diagonal():
    with pytest.raises(ContractViolation):
        ToeplitzSpec(np.array([1.0, 2.0]), np.array([0.0, 3.0]))


def test_op_counter():
    counter = OpCounter()
    counter.bump("block_solves", 3)
    counter.bump("applies")
    counter.bump("work", 2.5)
    assert counter.to_dict() == {"spmv": 0, "fft_passes": 0, "block_solves": 3, "applies": 1, "work": 2.5}
    counter.reset()
    assert counter.block_solves == 0
    assert counter.work == 0.0
