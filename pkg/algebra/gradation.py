"""
Block Z-gradations of gl(n, C)

A partition n = n_1 + ... + n_p splits an n x n matrix into p x p blocks;
block (r, s) has grade s - r. Block indices are 1-based throughout, matching
the usual (x_rs) notation.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple, Sequence, Union

import numpy as np
from numpy.typing import NDArray

from algebra.errors import ShapeError
from algebra.matrices import CMatrix, as_cmatrix

logger = logging.getLogger(__name__)


class Part(Enum):
    """Grade predicates for projections"""

    NEGATIVE = "<0"
    ZERO = "0"
    POSITIVE = ">0"
    NON_POSITIVE = "<=0"
    NON_NEGATIVE = ">=0"

    @classmethod
    def parse(cls, value: Union["Part", str]) -> "Part":
        if isinstance(value, Part):
            return value
        aliases = {"≤0": "<=0", "≥0": ">=0"}
        value = aliases.get(value, value)
        for part in cls:
            if part.value == value:
                return part
        raise ValueError(f"unknown grade part {value!r}")

    def admits(self, grade):
        """Predicate on a grade or an array of grades"""
        if self is Part.NEGATIVE:
            return grade < 0
        if self is Part.ZERO:
            return grade == 0
        if self is Part.POSITIVE:
            return grade > 0
        if self is Part.NON_POSITIVE:
            return grade <= 0
        return grade >= 0


@dataclass(frozen=True)
class BlockPartition:
    """Ordered block sizes (n_1, ..., n_p)"""

    sizes: Tuple[int, ...]

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if len(sizes) < 2:
            raise ShapeError(f"a gradation needs at least two blocks, got {sizes}")
        if any(s < 1 for s in sizes):
            raise ShapeError(f"block sizes must be positive, got {sizes}")

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def p(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class GradedContext:
    """A block partition with precomputed offsets and grade masks"""

    partition: BlockPartition
    offsets: Tuple[int, ...] = field(init=False)
    _grades: NDArray[np.int64] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        offsets = tuple(int(o) for o in np.concatenate(([0], np.cumsum(self.partition.sizes))))
        object.__setattr__(self, "offsets", offsets)
        # grade of every matrix entry, from the block it sits in
        block_of = np.repeat(np.arange(self.partition.p), self.partition.sizes)
        grades = block_of[None, :] - block_of[:, None]
        grades.setflags(write=False)
        object.__setattr__(self, "_grades", grades)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "GradedContext":
        return cls(BlockPartition(tuple(sizes)))

    @property
    def sizes(self) -> Tuple[int, ...]:
        return self.partition.sizes

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def p(self) -> int:
        return self.partition.p

    def grade(self, r: int, s: int) -> int:
        self._check_block(r)
        self._check_block(s)
        return s - r

    def block_slice(self, r: int) -> slice:
        self._check_block(r)
        return slice(self.offsets[r - 1], self.offsets[r])

    def mask(self, part: Union[Part, str]) -> NDArray[np.bool_]:
        """Boolean n x n mask of the entries whose grade satisfies the predicate"""
        return Part.parse(part).admits(self._grades)

    def grade_mask(self, grade: int) -> NDArray[np.bool_]:
        """Entries of exactly the given grade"""
        return self._grades == int(grade)

    def check(self, x: CMatrix) -> CMatrix:
        arr = np.asarray(x, dtype=np.complex128)
        if arr.ndim < 2 or arr.shape[-2:] != (self.n, self.n):
            raise ShapeError(f"expected {self.n}x{self.n} matrices for sizes {self.sizes}, got shape {arr.shape}")
        return arr

    def _check_block(self, r: int):
        if not 1 <= r <= self.p:
            raise IndexError(f"block index {r} out of range 1..{self.p}")


def project(ctx: GradedContext, x: CMatrix, part: Union[Part, str]) -> CMatrix:
    """Component of x (or of every matrix in a stack) in the requested grades"""
    arr = ctx.check(x)
    return np.where(ctx.mask(part), arr, 0).astype(np.complex128)


def block_get(ctx: GradedContext, x: CMatrix, r: int, s: int) -> CMatrix:
    arr = ctx.check(x)
    return arr[..., ctx.block_slice(r), ctx.block_slice(s)].copy()


def block_set(ctx: GradedContext, x: CMatrix, r: int, s: int, value: CMatrix) -> CMatrix:
    """Copy of x with block (r, s) replaced"""
    arr = ctx.check(x).copy()
    rows, cols = ctx.block_slice(r), ctx.block_slice(s)
    value = np.asarray(value, dtype=np.complex128)
    expected = arr[..., rows, cols].shape
    if value.shape[-2:] != expected[-2:]:
        raise ShapeError(f"block ({r},{s}) has shape {expected[-2:]}, got {value.shape}")
    arr[..., rows, cols] = value
    return arr


def block_diag(ctx: GradedContext, blocks: Sequence[CMatrix]) -> CMatrix:
    """Assemble a grade-zero matrix from its diagonal blocks"""
    if len(blocks) != ctx.p:
        raise ShapeError(f"expected {ctx.p} diagonal blocks, got {len(blocks)}")
    arrays = [np.asarray(b, dtype=np.complex128) for b in blocks]
    lead = np.broadcast_shapes(*(a.shape[:-2] for a in arrays))
    out = np.zeros(lead + (ctx.n, ctx.n), dtype=np.complex128)
    for r, b in enumerate(arrays, start=1):
        sl = ctx.block_slice(r)
        if b.shape[-2:] != (ctx.sizes[r - 1], ctx.sizes[r - 1]):
            raise ShapeError(f"diagonal block {r} must be {ctx.sizes[r - 1]}x{ctx.sizes[r - 1]}")
        out[..., sl, sl] = b
    return out


def is_in_subgroup(ctx: GradedContext, x: CMatrix, part: Union[Part, str], atol: float = 0.0) -> bool:
    """Structural membership in G_{<0}, G_0 or G_{>0}

    For the nilpotent subgroups the diagonal blocks must be identities and the
    opposite-grade blocks zero; for G_0 only off-diagonal blocks are tested.
    """
    part = Part.parse(part)
    arr = ctx.check(x)
    if part is Part.ZERO:
        outside = ~ctx.mask(Part.ZERO)
        return bool(np.all(np.abs(arr[..., outside]) <= atol))
    if part is Part.NEGATIVE:
        forbidden = ctx.mask(Part.POSITIVE)
    elif part is Part.POSITIVE:
        forbidden = ctx.mask(Part.NEGATIVE)
    else:
        raise ValueError("subgroup membership is defined for <0, 0 and >0 only")
    diag = ctx.mask(Part.ZERO)
    eye = np.eye(ctx.n, dtype=bool)
    ok_forbidden = np.all(np.abs(arr[..., forbidden]) <= atol)
    ok_diag = np.all(np.abs(arr[..., diag & eye] - 1) <= atol)
    ok_off = np.all(np.abs(arr[..., diag & ~eye]) <= atol)
    return bool(ok_forbidden and ok_diag and ok_off)


def unit_triangular(ctx: GradedContext, blocks: dict, side: str = "upper") -> CMatrix:
    """Unit block-triangular matrix from {(r, s): block} entries"""
    x = np.eye(ctx.n, dtype=np.complex128)
    for (r, s), value in blocks.items():
        strict = Part.POSITIVE if side == "upper" else Part.NEGATIVE
        if not strict.admits(ctx.grade(r, s)):
            raise ShapeError(f"block ({r},{s}) is not strictly {side}")
        x = block_set(ctx, x, r, s, value)
    return x


__all__ = [
    "Part",
    "BlockPartition",
    "GradedContext",
    "project",
    "block_get",
    "block_set",
    "block_diag",
    "is_in_subgroup",
    "unit_triangular",
    "as_cmatrix",
]
