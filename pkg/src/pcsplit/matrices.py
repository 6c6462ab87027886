"""
Dense matrix kernels.

Everything is a dense `numpy` array. Block structure is exploited by the
dedicated constructors below, not by the storage format.

The block matrices of the multi-block calculus, for p blocks of size m:

    𝓛  = block lower triangle of identities (identity on and below the diagonal)
    𝓔  = [I, I, ..., I]                      (one block row)
    𝓘  = identity of size p·m
    𝓛⁻ᵀ = identity on the diagonal, -identity on the superdiagonal

with the identity 𝓛ᵀ + 𝓛 = 𝓘 + 𝓔ᵀ𝓔.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import TypeAlias

import numpy as np
import scipy.linalg as sla
from numpy.typing import ArrayLike, NDArray

from pcsplit.config import PIVOT_REL_TOL, RANK_REL_TOL, SPD_REL_TOL, SYMMETRY_TOL
from pcsplit.errors import DimensionError, RankDeficientError, SingularMatrixError

logger = logging.getLogger(__name__)

Vector: TypeAlias = NDArray[np.float64]
'''A one-dimensional float array.'''
Matrix: TypeAlias = NDArray[np.float64]
'''A two-dimensional float array.'''


def as_matrix(value: ArrayLike, name: str = 'matrix') -> Matrix:
    """
    Copy `value` into a finite two-dimensional float array.

    Scalars become 1×1 matrices.

    Raises:
        DimensionError: For anything that is not a scalar or a 2-D array.
        ValueError: For non-finite entries.
    """
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(value: ArrayLike, name: str = 'vector') -> Vector:
    """Copy `value` into a finite one-dimensional float array."""
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def frozen(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    """Mark an array read-only and return it."""
    arr.setflags(write=False)
    return arr


def _require_square(S: Matrix, name: str) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {S.shape}")


def symmetrize(S: Matrix) -> Matrix:
    """½(S + Sᵀ)."""
    return 0.5 * (S + S.T)


def relative_residual(A: Matrix, B: Matrix) -> float:
    """‖A − B‖_F / ‖B‖_F, with ‖B‖_F replaced by 1 when B is zero."""
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch {A.shape} vs {B.shape}")
    ref = float(np.linalg.norm(B))
    return float(np.linalg.norm(A - B)) / (ref if ref > 0.0 else 1.0)


def quad_norm_sq(S: Matrix, v: Vector) -> float:
    """‖v‖²_S = vᵀSv."""
    return float(v @ (S @ v))


@dataclass(frozen=True)
class SpdCertificate:
    """
    Numerical verdict on whether a matrix is symmetric positive definite.

    Attributes:
        is_spd: Symmetry defect within tolerance and smallest eigenvalue
            above the relative threshold.
        min_eig: Smallest eigenvalue of ½(S + Sᵀ).
        symmetry_defect: ‖S − Sᵀ‖_F / ‖S‖_F.
        scale: The reference norm the eigenvalue threshold is relative to.
    """
    is_spd: bool
    min_eig: float
    symmetry_defect: float
    scale: float

    def to_json(self) -> dict[str, float | bool]:
        return {
            'is_spd': self.is_spd,
            'min_eig': self.min_eig,
            'symmetry_defect': self.symmetry_defect,
        }


def spd_check(S: ArrayLike, scale: float | None = None) -> SpdCertificate:
    """
    Certify that `S` is symmetric positive definite.

    Args:
        S: Square matrix.
        scale: Reference norm for the eigenvalue threshold. Defaults to ‖S‖₂.
            Matrices that are a small difference of large ones (such as a
            profit matrix G = Qᵀ+Q − D) should be judged against the norm of
            the operands.

    Returns:
        The certificate. `is_spd` holds iff the symmetry defect is at most
        1e-10 and the smallest eigenvalue of ½(S + Sᵀ) exceeds 1e-10·scale.

    Raises:
        DimensionError: If `S` is not square.
    """
    S = np.asarray(S, dtype=np.float64)
    _require_square(S, 'S')
    fro = float(np.linalg.norm(S))
    defect = float(np.linalg.norm(S - S.T)) / fro if fro > 0.0 else 0.0
    min_eig = float(sla.eigvalsh(symmetrize(S))[0])
    ref = float(np.linalg.norm(S, 2)) if scale is None else float(scale)
    is_spd = defect <= SYMMETRY_TOL and ref > 0.0 and min_eig > SPD_REL_TOL * ref
    return SpdCertificate(is_spd=is_spd, min_eig=min_eig, symmetry_defect=defect, scale=ref)


@dataclass(frozen=True, eq=False)
class LuFactorization:
    """A checked LU factorization, reusable across right-hand sides."""
    lu: Matrix
    piv: NDArray[np.int32]
    min_pivot: float

    @property
    def size(self) -> int:
        return self.lu.shape[0]

    def solve(self, rhs: ArrayLike, trans: int = 0) -> NDArray[np.float64]:
        """Solve A·x = rhs (or Aᵀ·x = rhs with `trans=1`); `rhs` may be a matrix."""
        b = np.asarray(rhs, dtype=np.float64)
        if b.shape[0] != self.size:
            raise DimensionError(f"right-hand side has {b.shape[0]} rows, expected {self.size}")
        return sla.lu_solve((self.lu, self.piv), b, trans=trans, check_finite=False)


def factorize(A: ArrayLike, name: str = 'matrix') -> LuFactorization:
    """
    LU-factorize a square matrix, rejecting numerically singular ones.

    Raises:
        DimensionError: If `A` is not square.
        SingularMatrixError: If the smallest pivot is at most 1e-12·‖A‖₂.
    """
    A = np.asarray(A, dtype=np.float64)
    _require_square(A, name)
    norm = float(np.linalg.norm(A, 2))
    with warnings.catch_warnings():
        # exactly singular input warns; the pivot test below reports it
        warnings.simplefilter('ignore', sla.LinAlgWarning)
        lu, piv = sla.lu_factor(A, check_finite=True)
    min_pivot = float(np.min(np.abs(np.diag(lu))))
    if norm == 0.0 or min_pivot <= PIVOT_REL_TOL * norm:
        raise SingularMatrixError(f"{name} is singular", pivot=min_pivot)
    return LuFactorization(lu=lu, piv=piv, min_pivot=min_pivot)


def dense_solve(A: ArrayLike, rhs: ArrayLike) -> NDArray[np.float64]:
    """
    Solve A·x = rhs for square nonsingular A.

    Raises:
        SingularMatrixError: With the smallest pivot when A is singular.
    """
    return factorize(A).solve(rhs)


def column_rank_ok(A: Matrix) -> bool:
    """Smallest singular value above 1e-8 times the largest, and no more columns than rows."""
    if A.shape[1] > A.shape[0]:
        return False
    s = sla.svdvals(A)
    return bool(s[0] > 0.0 and s[-1] > RANK_REL_TOL * s[0])


def numerical_rank(A: Matrix) -> int:
    """Number of singular values above 1e-8 times the largest."""
    s = sla.svdvals(A)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_REL_TOL * s[0]))


def require_full_column_rank(A: Matrix, name: str = 'A') -> None:
    """Raise `RankDeficientError` unless `A` has full column rank."""
    if not column_rank_ok(A):
        raise RankDeficientError(
            f"{name} is rank-deficient (rank {numerical_rank(A)} < {A.shape[1]} columns)"
        )


def least_squares_recover(A: ArrayLike, y_img: ArrayLike) -> Vector:
    """
    Recover x = argmin ‖A·x − y_img‖ for full-column-rank A.

    Used to turn a tracked image A·x back into x.

    Raises:
        RankDeficientError: If A lacks full column rank.
        DimensionError: If `y_img` does not match A's rows.
    """
    A = as_matrix(A, 'A')
    y = as_vector(y_img, 'y_img')
    if y.size != A.shape[0]:
        raise DimensionError(f"image has length {y.size}, A has {A.shape[0]} rows")
    require_full_column_rank(A)
    x, *_ = sla.lstsq(A, y)
    return np.asarray(x, dtype=np.float64)


def range_projection(A: Matrix, r: Vector) -> Vector:
    """Orthogonal projection of `r` onto range(A)."""
    return A @ least_squares_recover(A, r)


def block_identity(p: int, m: int) -> Matrix:
    """𝓘 for p blocks of size m."""
    return np.eye(p * m)


def block_row_ones(p: int, m: int) -> Matrix:
    """𝓔 = [I, I, ..., I], an m × p·m matrix."""
    if p < 1 or m < 1:
        raise DimensionError(f"need p ≥ 1 and m ≥ 1, got p={p}, m={m}")
    return np.kron(np.ones((1, p)), np.eye(m))


def build_L_inv_T(p: int, m: int) -> Matrix:
    """
    𝓛⁻ᵀ: identity blocks on the diagonal, -identity on the superdiagonal.

    Satisfies 𝓛ᵀ·𝓛⁻ᵀ = I exactly.
    """
    if p < 1 or m < 1:
        raise DimensionError(f"need p ≥ 1 and m ≥ 1, got p={p}, m={m}")
    return np.kron(np.eye(p) - np.eye(p, k=1), np.eye(m))


@dataclass(frozen=True)
class BlockLowerOnes:
    """𝓛 for `p` blocks of size `m`."""
    p: int
    m: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.m < 1:
            raise DimensionError(f"need p ≥ 1 and m ≥ 1, got p={self.p}, m={self.m}")

    @property
    def size(self) -> int:
        return self.p * self.m

    def materialize(self) -> Matrix:
        return np.kron(np.tril(np.ones((self.p, self.p))), np.eye(self.m))

    def inverse_transpose(self) -> Matrix:
        return build_L_inv_T(self.p, self.m)

    def row_ones(self) -> Matrix:
        return block_row_ones(self.p, self.m)

    def apply_inverse_transpose(self, d: Vector) -> Vector:
        """𝓛⁻ᵀ·d without materializing: block i becomes dᵢ − dᵢ₊₁."""
        blocks = d.reshape(self.p, self.m)
        out = blocks.copy()
        out[:-1] -= blocks[1:]
        return out.reshape(-1)
