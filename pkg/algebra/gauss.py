"""
Generalized Gauss decomposition a = a_{<0} a_0 a_{>0}

The p-block factorization is built by peeling off the first block and
recursing on the Schur complement, the 2-block formulas applied blockwise:

    a_{<0}: (a_0)_{21} = a_21 a_11^{-1}
    a_0:    a_11, then a_22 - a_21 a_11^{-1} a_12 (recursively)
    a_{>0}: (a_{>0})_{12} = a_11^{-1} a_12

All routines work on stacks of shape (..., n, n); points whose pivot blocks are
singular are flagged instead of raising in the stack variants.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from numpy.typing import NDArray

from algebra.errors import NotDecomposableError, SingularError
from algebra.gradation import GradedContext, Part, project
from algebra.matrices import CMatrix
from config.settings import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaussFactors:
    """Factors of a = lower @ zero @ upper (or of stacks of such matrices)"""

    lower: CMatrix
    zero: CMatrix
    upper: CMatrix

    def product(self) -> CMatrix:
        return self.lower @ self.zero @ self.upper

    def reverse_product(self) -> CMatrix:
        """upper @ zero @ lower, for factors produced by reverse_gauss_decompose"""
        return self.upper @ self.zero @ self.lower

    def take(self, index) -> "GaussFactors":
        """Factors at one point (or a sub-stack) of a stacked decomposition"""
        return GaussFactors(self.lower[index], self.zero[index], self.upper[index])


def _pivot_tol(tol: Optional[float]) -> float:
    return float(config.get("numerics.gauss_tol", 1e-10) if tol is None else tol)


def _decompose(
    ctx: GradedContext, a: CMatrix, tol: float
) -> Tuple[CMatrix, CMatrix, CMatrix, NDArray[np.int64]]:
    """Blockwise elimination over a stack

    Returns the three factors and, per matrix, the 1-based index of the first
    failing pivot block (0 when every pivot passed). Failed points carry NaN.
    """
    lead = a.shape[:-2]
    n = ctx.n
    eye = np.eye(n, dtype=np.complex128)

    lower = np.broadcast_to(eye, lead + (n, n)).copy()
    upper = np.broadcast_to(eye, lead + (n, n)).copy()
    zero = np.zeros(lead + (n, n), dtype=np.complex128)
    failed = np.zeros(lead, dtype=np.int64)

    finite = np.all(np.isfinite(a), axis=(-2, -1))
    work = np.where(finite[..., None, None], a, eye)
    failed[~finite] = 1

    scale = np.linalg.svd(work, compute_uv=False)[..., 0]

    for r in range(1, ctx.p + 1):
        blk = ctx.block_slice(r)
        size = ctx.sizes[r - 1]
        pivot = work[..., blk, blk]

        sigma = np.linalg.svd(pivot, compute_uv=False)
        bad = (sigma[..., -1] <= tol * scale) & (failed == 0)
        failed[bad] = r
        if np.any(failed):
            # keep eliminating on failed points with a harmless pivot
            pivot = np.where((failed > 0)[..., None, None], np.eye(size), pivot)

        zero[..., blk, blk] = pivot
        if r == ctx.p:
            break

        rest = slice(ctx.offsets[r], n)
        pinv = np.linalg.inv(pivot)
        a21 = work[..., rest, blk]
        a12 = work[..., blk, rest]
        lower[..., rest, blk] = a21 @ pinv
        upper[..., blk, rest] = pinv @ a12
        work = work.copy()
        work[..., rest, rest] = work[..., rest, rest] - a21 @ pinv @ a12

    if np.any(failed):
        mask = (failed > 0)[..., None, None]
        lower = np.where(mask, np.nan, lower)
        zero = np.where(mask, np.nan, zero)
        upper = np.where(mask, np.nan, upper)
    return lower, zero, upper, failed


def gauss_decompose_stack(
    ctx: GradedContext, a: CMatrix, tol: Optional[float] = None
) -> Tuple[GaussFactors, NDArray[np.bool_]]:
    """Decompose every matrix of a stack; returns the factors and a decomposable mask"""
    arr = ctx.check(a)
    lower, zero, upper, failed = _decompose(ctx, arr, _pivot_tol(tol))
    mask = failed == 0
    if not np.all(mask):
        logger.debug(f"Gauss decomposition failed at {int(np.sum(~mask))} of {mask.size} points")
    return GaussFactors(lower, zero, upper), mask


def gauss_decompose(ctx: GradedContext, a: CMatrix, tol: Optional[float] = None) -> GaussFactors:
    """Factor a single matrix as lower @ zero @ upper

    Raises NotDecomposableError with the 1-based index of the first pivot
    block whose smallest singular value is below tol * ||a||_2.
    """
    arr = ctx.check(a)
    if arr.ndim != 2:
        raise ValueError("gauss_decompose takes one matrix; use gauss_decompose_stack for stacks")
    lower, zero, upper, failed = _decompose(ctx, arr, _pivot_tol(tol))
    block = int(failed)
    if block:
        raise NotDecomposableError(
            f"leading block minor {block} is singular or ill-conditioned", block_index=block
        )
    return GaussFactors(lower, zero, upper)


def unit_inverse(ctx: GradedContext, x: CMatrix, part: Part) -> CMatrix:
    """Inverse of unit block-triangular matrices with exact structural zeros"""
    part = Part.parse(part)
    if part not in (Part.NEGATIVE, Part.POSITIVE):
        raise ValueError("unit_inverse applies to G_{<0} or G_{>0} elements")
    inv = np.linalg.inv(ctx.check(x))
    return project(ctx, inv, part) + np.eye(ctx.n, dtype=np.complex128)


def block_diag_inverse(ctx: GradedContext, x: CMatrix) -> CMatrix:
    """Inverse of block-diagonal matrices, inverting each diagonal block"""
    arr = ctx.check(x)
    out = np.zeros_like(arr)
    for r in range(1, ctx.p + 1):
        blk = ctx.block_slice(r)
        out[..., blk, blk] = np.linalg.inv(arr[..., blk, blk])
    return out


def reverse_gauss_decompose_stack(
    ctx: GradedContext, a: CMatrix, tol: Optional[float] = None
) -> Tuple[GaussFactors, NDArray[np.bool_]]:
    """Stack version of reverse_gauss_decompose: a = upper @ zero @ lower"""
    arr = ctx.check(a)
    finite = np.all(np.isfinite(arr), axis=(-2, -1))
    safe = np.where(finite[..., None, None], arr, np.eye(ctx.n))
    sigma = np.linalg.svd(safe, compute_uv=False)
    invertible = finite & (sigma[..., -1] > _pivot_tol(tol) * sigma[..., 0])
    safe = np.where(invertible[..., None, None], safe, np.eye(ctx.n))

    factors, mask = gauss_decompose_stack(ctx, np.linalg.inv(safe), tol)
    mask = mask & invertible
    fill = (~mask)[..., None, None]
    eye = np.eye(ctx.n)
    lower_in = np.where(fill, eye, factors.lower)
    zero_in = np.where(fill, eye, factors.zero)
    upper_in = np.where(fill, eye, factors.upper)

    # a^{-1} = L D U  =>  a = U^{-1} D^{-1} L^{-1}
    upper = unit_inverse(ctx, upper_in, Part.POSITIVE)
    zero = block_diag_inverse(ctx, zero_in)
    lower = unit_inverse(ctx, lower_in, Part.NEGATIVE)
    if not np.all(mask):
        upper = np.where(fill, np.nan, upper)
        zero = np.where(fill, np.nan, zero)
        lower = np.where(fill, np.nan, lower)
    return GaussFactors(lower, zero, upper), mask


def reverse_gauss_decompose(
    ctx: GradedContext, a: CMatrix, tol: Optional[float] = None
) -> GaussFactors:
    """Factor a = upper @ zero @ lower (the opposite ordering of gauss_decompose)"""
    arr = ctx.check(a)
    sigma = np.linalg.svd(arr, compute_uv=False)
    if sigma[-1] <= _pivot_tol(tol) * sigma[0]:
        raise SingularError("matrix is singular; no reverse Gauss decomposition")
    inv = gauss_decompose(ctx, np.linalg.inv(arr), tol)
    return GaussFactors(
        lower=unit_inverse(ctx, inv.lower, Part.NEGATIVE),
        zero=block_diag_inverse(ctx, inv.zero),
        upper=unit_inverse(ctx, inv.upper, Part.POSITIVE),
    )
