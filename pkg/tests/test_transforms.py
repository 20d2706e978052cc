import numpy as np
import pytest
from numpy.testing import assert_allclose

from spacetime.errors import ContractViolation
from spacetime.transforms import (
    FourierPlan,
    SinePlan,
    dst1_apply,
    fft_apply,
    fourier_matrix,
    sine_matrix,
)


@pytest.mark.parametrize("m", [1, 2, 5, 16, 31, 64])
def test_fourier_plans_match_dense_matrix(m, rng):
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    F = fourier_matrix(m)
    assert_allclose(fft_apply(FourierPlan(m, "inverse"), v), F @ v, atol=1e-12)
    assert_allclose(fft_apply(FourierPlan(m, "forward"), v), F.conj().T @ v, atol=1e-12)


def test_fourier_plan_is_unitary(rng):
    plan = FourierPlan(12, "forward")
    v = rng.standard_normal(12)
    w = plan.apply(v)
    assert_allclose(np.linalg.norm(w), np.linalg.norm(v), rtol=1e-13)
    assert_allclose(plan.inverted().apply(w), v, atol=1e-13)


def test_fourier_plan_along_axis(rng):
    Y = rng.standard_normal((5, 8))
    plan = FourierPlan(8, "inverse")
    expected = Y @ fourier_matrix(8).T
    assert_allclose(plan.apply(Y, axis=1), expected, atol=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 7, 15, 64])
def test_sine_plan_matches_dense_matrix(m, rng):
    v = rng.standard_normal(m)
    out = dst1_apply(SinePlan(m), v)
    assert not np.iscomplexobj(out)
    assert_allclose(out, sine_matrix(m) @ v, atol=1e-12)


def test_sine_plan_is_involutory(rng):
    plan = SinePlan(9)
    v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    assert_allclose(plan.apply(plan.apply(v)), v, atol=1e-13)


def test_sine_plan_diagonalizes_second_difference():
    m = 10
    S = sine_matrix(m)
    T = 2 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)
    expected = 2 - 2 * np.cos(np.arange(1, m + 1) * np.pi / (m + 1))
    assert_allclose(S @ T @ S, np.diag(expected), atol=1e-12)


def test_sine_plan_batches_over_leading_axes(rng):
    plan = SinePlan(6)
    X = rng.standard_normal((3, 6, 6))
    S = sine_matrix(6)
    assert_allclose(plan.apply(X, axis=-1), X @ S.T, atol=1e-12)
    assert_allclose(plan.apply(X, axis=-2), np.einsum("ij,bjk->bik", S, X), atol=1e-12)


def test_length_mismatch_is_rejected():
    with pytest.raises(ContractViolation):
        fft_apply(FourierPlan(4), np.ones(5))
    with pytest.raises(ContractViolation):
        dst1_apply(SinePlan(4), np.ones(3))
    with pytest.raises(ContractViolation):
        FourierPlan(0)
