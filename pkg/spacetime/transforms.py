"""
Unitary Fourier and sine transform kernels.

Normalization is unitary everywhere. With theta_m = exp(2*pi*i/m),

    F_m   = m**-0.5 * [theta_m**(i*j)]       (positive exponent, "inverse")
    F_m^* = conj(F_m)                        (conventional DFT, "forward")

so `FourierPlan(m, "forward")` applies F_m^* and `FourierPlan(m, "inverse")`
applies F_m. The DST-I is realized through one FFT of the odd extension of
length 2(m+1), so a single FFT kernel serves both transforms.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import fft as sp_fft

from .errors import ContractViolation

Direction = Literal["forward", "inverse"]


@dataclass(frozen=True)
class FourierPlan:
    """Unitary length-m DFT along one axis."""
    length: int
    direction: Direction = "forward"
    workers: int = 1

    def __post_init__(self):
        if self.length < 1:
            raise ContractViolation(f"FourierPlan length must be positive, got {self.length}")
        if self.direction not in ("forward", "inverse"):
            raise ContractViolation(f"Unknown direction '{self.direction}'")

    def inverted(self) -> "FourierPlan":
        other = "inverse" if self.direction == "forward" else "forward"
        return FourierPlan(self.length, other, self.workers)

    def apply(self, v: np.ndarray, axis: int = 0) -> np.ndarray:
        """Apply the plan along `axis` of v."""
        v = np.asarray(v)
        if v.shape[axis] != self.length:
            raise ContractViolation(
                f"FourierPlan of length {self.length} applied to axis of length {v.shape[axis]}"
            )
        if self.direction == "forward":
            return sp_fft.fft(v, axis=axis, norm="ortho", workers=self.workers)
        return sp_fft.ifft(v, axis=axis, norm="ortho", workers=self.workers)


@dataclass(frozen=True)
class SinePlan:
    """
    Orthonormal DST-I of length m:

        (S_m v)_i = sqrt(2/(m+1)) * sum_j sin(i*j*pi/(m+1)) v_j,   i, j = 1..m

    S_m is symmetric and involutory, and diagonalizes tridiag(-1, 2, -1)
    and tridiag(1, 4, 1).
    """
    length: int
    workers: int = 1

    def __post_init__(self):
        if self.length < 1:
            raise ContractViolation(f"SinePlan length must be positive, got {self.length}")

    @property
    def scale(self) -> float:
        return float(np.sqrt(2.0 / (self.length + 1)))

    def apply(self, v: np.ndarray, axis: int = -1) -> np.ndarray:
        """Apply S_m along `axis`; real input gives real output."""
        v = np.asarray(v)
        m = self.length
        if v.shape[axis] != m:
            raise ContractViolation(
                f"SinePlan of length {m} applied to axis of length {v.shape[axis]}"
            )
        moved = np.moveaxis(v, axis, -1)
        lead = moved.shape[:-1]

        # odd extension [0, v, 0, -reverse(v)] of length 2(m+1)
        ext = np.zeros(lead + (2 * (m + 1),), dtype=np.result_type(moved.dtype, np.float64))
        ext[..., 1:m + 1] = moved
        ext[..., m + 2:] = -moved[..., ::-1]
        spectrum = sp_fft.fft(ext, axis=-1, workers=self.workers)[..., 1:m + 1]

        # fft(ext)_k = -2i * sum_j v_j sin(pi*k*j/(m+1))
        out = (0.5j * self.scale) * spectrum
        if not np.iscomplexobj(v):
            out = out.real
        return np.moveaxis(out, -1, axis)


def fft_apply(plan: FourierPlan, v: np.ndarray) -> np.ndarray:
    """Return F_m v (inverse plan) or F_m^* v (forward plan) for a vector v."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != plan.length:
        raise ContractViolation(f"fft_apply expects a vector of length {plan.length}, got shape {v.shape}")
    return plan.apply(v)


def dst1_apply(plan: SinePlan, v: np.ndarray) -> np.ndarray:
    """Return S_m v for a vector v."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != plan.length:
        raise ContractViolation(f"dst1_apply expects a vector of length {plan.length}, got shape {v.shape}")
    return plan.apply(v)


def fourier_matrix(m: int) -> np.ndarray:
    """Dense F_m (positive exponent, unitary); oracle use only."""
    idx = np.arange(m)
    return np.exp(2j * np.pi * np.outer(idx, idx) / m) / np.sqrt(m)


def sine_matrix(m: int) -> np.ndarray:
    """Dense S_m; oracle use only."""
    idx = np.arange(1, m + 1)
    return np.sqrt(2.0 / (m + 1)) * np.sin(np.outer(idx, idx) * np.pi / (m + 1))
