"""
Matrix-free structured linear algebra.

Space-time vectors are stored block by block in time: v = (v^1; v^2; ...; v^N)
with v^n of length J. Reshaped column-major to a J x N matrix Y (one column
per time step) this is exactly vec(Y), so

    (B kron C) vec(Y) = vec(C Y B^T).

Every reshape in this package goes through `as_blocks` / `from_blocks`.
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import toeplitz
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from .errors import ContractViolation
from .transforms import FourierPlan

OperatorLike = Union[np.ndarray, sp.spmatrix, LinearOperator]


@dataclass
class OpCounter:
    """
    Operation counters for cost-model checks.

    `work` is a modeled operation count: nnz per sparse product, n log2 n per
    FFT of length n, and each inner solver's own per-block estimate.
    """
    spmv: int = 0
    fft_passes: int = 0
    block_solves: int = 0
    applies: int = 0
    work: float = 0.0

    def bump(self, name: str, count: int = 1) -> None:
        setattr(self, name, getattr(self, name) + count)

    def reset(self) -> None:
        self.spmv = self.fft_passes = self.block_solves = self.applies = 0
        self.work = 0.0

    def to_dict(self) -> dict:
        return {
            "spmv": self.spmv,
            "fft_passes": self.fft_passes,
            "block_solves": self.block_solves,
            "applies": self.applies,
            "work": self.work,
        }


def as_blocks(v: np.ndarray, J: int, N: int) -> np.ndarray:
    """View a length N*J vector as the J x N matrix of its time blocks."""
    v = np.asarray(v)
    if v.ndim != 1 or v.shape[0] != N * J:
        raise ContractViolation(f"expected a vector of length {N * J} (N={N}, J={J}), got shape {v.shape}")
    return v.reshape((J, N), order="F")


def from_blocks(Y: np.ndarray) -> np.ndarray:
    return np.asarray(Y).ravel(order="F")


def spmv(A: sp.spmatrix, v: np.ndarray) -> np.ndarray:
    """Sparse matrix times vector, O(nnz)."""
    v = np.asarray(v)
    if A.shape[1] != v.shape[0]:
        raise ContractViolation(f"spmv: matrix has {A.shape[1]} columns, vector has {v.shape[0]} entries")
    return A @ v


def kron_matvec(B: OperatorLike, C: OperatorLike, v: np.ndarray) -> np.ndarray:
    """
    Return (B kron C) v without forming the Kronecker product.

    B acts across time (N x N), C acts in space (J x J). C is applied to every
    column of the reshaped J x N block matrix, then B across its rows.
    """
    Bop = aslinearoperator(B)
    Cop = aslinearoperator(C)
    N = Bop.shape[1]
    J = Cop.shape[1]
    if Bop.shape[0] != N or Cop.shape[0] != J:
        raise ContractViolation(f"kron_matvec needs square factors, got {Bop.shape} and {Cop.shape}")
    Y = as_blocks(v, J, N)
    CY = Cop.matmat(Y)
    out = Bop.matmat(np.ascontiguousarray(CY.T)).T
    return from_blocks(out)


def time_matrix(coefficients: Sequence[float], N: int) -> sp.csr_matrix:
    """Lower-triangular banded Toeplitz matrix with r_j on the j-th subdiagonal."""
    diagonals, offsets = [], []
    for j, r in enumerate(coefficients):
        if j < N:
            diagonals.append(np.full(N - j, float(r)))
            offsets.append(-j)
    return sp.diags(diagonals, offsets, shape=(N, N), format="csr")


@dataclass(frozen=True)
class ToeplitzSpec:
    """First column and first row of an N x N Toeplitz matrix."""
    first_column: np.ndarray
    first_row: np.ndarray

    def __post_init__(self):
        col = np.asarray(self.first_column)
        row = np.asarray(self.first_row)
        if col.ndim != 1 or row.ndim != 1 or col.shape != row.shape:
            raise ContractViolation("Toeplitz first column and first row must be vectors of equal length")
        if col[0] != row[0]:
            raise ContractViolation("Toeplitz first column and first row disagree on the diagonal")

    @property
    def size(self) -> int:
        return len(self.first_column)

    @classmethod
    def lower(cls, coefficients: Sequence[float], N: int) -> "ToeplitzSpec":
        col = np.zeros(N)
        p = min(len(coefficients), N)
        col[:p] = coefficients[:p]
        row = np.zeros(N)
        row[0] = col[0]
        return cls(col, row)

    def embedding_symbol(self) -> np.ndarray:
        """Eigenvalues of the 2N circulant embedding, sqrt(2N) F^* c."""
        N = self.size
        c = np.concatenate([self.first_column, [0.0], np.asarray(self.first_row)[:0:-1]])
        return np.sqrt(2 * N) * FourierPlan(2 * N, "forward").apply(c)

    def as_operator(self) -> LinearOperator:
        N = self.size
        dtype = np.result_type(np.asarray(self.first_column).dtype, np.asarray(self.first_row).dtype)
        return LinearOperator(
            (N, N),
            matvec=lambda x: toeplitz_matvec(self, x),
            matmat=lambda X: toeplitz_matvec(self, X),
            dtype=dtype,
        )

    def to_dense(self) -> np.ndarray:
        return toeplitz(self.first_column, self.first_row)


def toeplitz_matvec(spec: ToeplitzSpec, v: np.ndarray) -> np.ndarray:
    """
    Toeplitz action in O(N log N) through the 2N circulant embedding

        C = F diag(sqrt(2N) F^* c) F^*,   C [v; 0] = [T v; *].

    v may be a vector or an N x k matrix (columns transformed independently).
    """
    v = np.asarray(v)
    N = spec.size
    if v.shape[0] != N:
        raise ContractViolation(f"toeplitz_matvec: operator is {N}x{N}, operand has {v.shape[0]} rows")
    forward = FourierPlan(2 * N, "forward")
    padded = np.zeros((2 * N,) + v.shape[1:], dtype=np.result_type(v.dtype, np.float64))
    padded[:N] = v
    symbol = spec.embedding_symbol().reshape((2 * N,) + (1,) * (v.ndim - 1))
    out = forward.inverted().apply(symbol * forward.apply(padded, axis=0), axis=0)[:N]
    if not (np.iscomplexobj(v) or np.iscomplexobj(spec.first_column) or np.iscomplexobj(spec.first_row)):
        out = out.real
    return out
