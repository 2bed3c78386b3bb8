"""
Dense complex matrix helpers.
Every routine accepts stacks of shape (..., n, n) and broadcasts over leading axes.
"""

import logging
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import expm

from algebra.errors import ShapeError, SingularError

logger = logging.getLogger(__name__)

CMatrix = NDArray[np.complex128]

# Inverse refuses matrices whose reciprocal condition number is below this
SINGULAR_RCOND = 1e-14


def as_cmatrix(x: Any, n: int = -1) -> CMatrix:
    """Coerce to a complex128 array of square matrices, checking finiteness"""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise ShapeError(f"expected square matrices, got shape {arr.shape}")
    if n >= 0 and arr.shape[-1] != n:
        raise ShapeError(f"expected {n}x{n} matrices, got {arr.shape[-2]}x{arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError("matrix has non-finite entries")
    return arr


def identity(n: int) -> CMatrix:
    return np.eye(n, dtype=np.complex128)


def max_norm(x: Any) -> float:
    """Entrywise maximum modulus (0 for empty input)"""
    arr = np.asarray(x)
    if arr.size == 0:
        return 0.0
    return float(np.max(np.abs(arr)))


def min_singular(x: CMatrix) -> NDArray[np.float64]:
    """Smallest singular value of each matrix in the stack"""
    return np.linalg.svd(x, compute_uv=False)[..., -1]


def spectral_norm(x: CMatrix) -> NDArray[np.float64]:
    return np.linalg.svd(x, compute_uv=False)[..., 0]


def matmul(*xs: CMatrix) -> CMatrix:
    """Left-to-right product of any number of (stacked) matrices"""
    if not xs:
        raise ValueError("matmul needs at least one factor")
    result = xs[0]
    for x in xs[1:]:
        result = result @ x
    return result


def inverse(x: CMatrix) -> CMatrix:
    """Inverse with a conditioning check on every matrix of the stack"""
    x = np.asarray(x, dtype=np.complex128)
    s = np.linalg.svd(x, compute_uv=False)
    bottom = s[..., -1]
    if np.any(bottom <= SINGULAR_RCOND * s[..., 0]):
        raise SingularError(
            f"matrix is singular or ill-conditioned (min singular value {float(np.min(bottom)):.3e})"
        )
    return np.linalg.inv(x)


def commutator(x: CMatrix, y: CMatrix) -> CMatrix:
    return x @ y - y @ x


def matexp(x: CMatrix) -> CMatrix:
    """Matrix exponential by scaling-and-squaring Pade (scipy), stacks allowed"""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 2:
        return expm(arr)
    # scipy handles stacks itself on recent versions; keep an explicit loop for older ones
    flat = arr.reshape((-1,) + arr.shape[-2:])
    out = np.empty_like(flat)
    for k in range(flat.shape[0]):
        out[k] = expm(flat[k])
    return out.reshape(arr.shape)
