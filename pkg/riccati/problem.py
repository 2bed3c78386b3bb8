"""
Riccati-type problems on a graded gl(n, C)

Upper side: d psi_{>0} psi_{>0}^{-1} = (psi_{>0} lam psi_{>0}^{-1})_{>0}
Lower side: d W W^{-1} = (W lam W^{-1})_{<0}, W unit block-lower

For two blocks the upper side is U' = B - AU + UD - UCU on the (1,2) block and
the lower side is V' = C + VA - DV - VBV on the (2,1) block.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from algebra.errors import ShapeError
from algebra.gradation import GradedContext, Part, block_get, is_in_subgroup, project, unit_triangular
from algebra.matrices import CMatrix
from flow.fields import MatrixField, assemble_blocks, masked
from flow.grids import FieldOnGrid, Trajectory

logger = logging.getLogger(__name__)

RICCATI_SIDES = {"upper": Part.POSITIVE, "lower": Part.NEGATIVE}


def side_part(side: str) -> Part:
    if side not in RICCATI_SIDES:
        raise ValueError(f"Riccati side must be 'upper' or 'lower', got {side!r}")
    return RICCATI_SIDES[side]


@dataclass(frozen=True)
class RiccatiProblem:
    """Coefficient fields, an initial point in G_{>0} (or G_{<0}) and the solved side

    One field with one coordinate is the ordinary equation; d fields on d
    coordinates give the multidimensional system, one field per direction.
    """

    ctx: GradedContext
    fields: Tuple[MatrixField, ...]
    initial: CMatrix
    side: str = "upper"

    def __post_init__(self):
        fields = (self.fields,) if isinstance(self.fields, MatrixField) else tuple(self.fields)
        object.__setattr__(self, "fields", fields)
        part = side_part(self.side)
        if not fields:
            raise ShapeError("a Riccati problem needs at least one coefficient field")
        for f in fields:
            if f.shape != (self.ctx.n, self.ctx.n):
                raise ShapeError(f"coefficient {f.name} is {f.shape}, expected {self.ctx.n}x{self.ctx.n}")
            if f.dim_in != len(fields):
                raise ShapeError(f"{len(fields)} direction fields must each take {len(fields)} coordinates")
        initial = self.ctx.check(np.asarray(self.initial, dtype=np.complex128))
        if not is_in_subgroup(self.ctx, initial, part):
            raise ShapeError(f"initial value must be unit block-{self.side} triangular")
        object.__setattr__(self, "initial", initial)

    @property
    def dim(self) -> int:
        return len(self.fields)

    @property
    def lam(self) -> MatrixField:
        if self.dim != 1:
            raise ValueError("lam is defined for one-dimensional problems; use fields")
        return self.fields[0]

    @property
    def part(self) -> Part:
        return side_part(self.side)

    def with_fields(self, fields: Union[MatrixField, Sequence[MatrixField]], initial: Optional[CMatrix] = None) -> "RiccatiProblem":
        fields = (fields,) if isinstance(fields, MatrixField) else tuple(fields)
        return RiccatiProblem(self.ctx, fields, self.initial if initial is None else initial, self.side)

    @classmethod
    def two_block(
        cls,
        ctx: GradedContext,
        A: Optional[MatrixField],
        B: Optional[MatrixField],
        C: Optional[MatrixField],
        D: Optional[MatrixField],
        m: CMatrix,
        side: str = "upper",
    ) -> "RiccatiProblem":
        """lam = [[A, B], [C, D]] with U(0) = m (upper) or V(0) = m (lower)"""
        if ctx.p != 2:
            raise ShapeError("two_block needs a 2-block gradation")
        lam = assemble_blocks([[A, B], [C, D]], ctx.sizes)
        return cls(ctx, (lam,), initial_from_block(ctx, m, side), side)


def initial_from_block(ctx: GradedContext, m: CMatrix, side: str = "upper") -> CMatrix:
    """[[I, m], [0, I]] for the upper side, [[I, 0], [m, I]] for the lower side"""
    key = (1, 2) if side_part(side) is Part.POSITIVE else (2, 1)
    return unit_triangular(ctx, {key: np.asarray(m, dtype=np.complex128)}, side)


@dataclass(frozen=True)
class RiccatiSolution:
    """Solution samples: a trajectory in one dimension, a grid otherwise"""

    ctx: GradedContext
    side: str
    method: str
    trajectory: Optional[Trajectory] = None
    grid: Optional[FieldOnGrid] = None
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def values(self) -> CMatrix:
        if self.trajectory is not None:
            return self.trajectory.values
        if self.grid is not None:
            return self.grid.values
        raise ValueError("empty Riccati solution")

    @property
    def final(self) -> CMatrix:
        if self.trajectory is None:
            raise ValueError("final is defined for one-dimensional solutions")
        return self.trajectory.final

    def block(self, r: int, s: int) -> CMatrix:
        return block_get(self.ctx, self.values, r, s)

    @property
    def U(self) -> CMatrix:
        """The nontrivial block: (1,2) on the upper side, (2,1) on the lower side"""
        if self.ctx.p != 2:
            raise ValueError("U is defined for 2-block gradations; use block(r, s)")
        return self.block(1, 2) if self.side == "upper" else self.block(2, 1)


def rhs(ctx: GradedContext, lam_val: CMatrix, y: CMatrix, side: str = "upper") -> CMatrix:
    """Tangent of the Riccati flow: P(y lam y^{-1}) y, P the side's strict projection

    Works on stacks. The product keeps the structural zeros of y exact.
    """
    part = side_part(side)
    y = np.asarray(y, dtype=np.complex128)
    conj = y @ lam_val @ np.linalg.inv(y)
    return project(ctx, conj, part) @ y


def riccati_blocks_2(
    A: CMatrix, B: CMatrix, C: CMatrix, D: CMatrix, U: CMatrix, side: str = "upper"
) -> CMatrix:
    """Matrix Riccati right-hand side for lam = [[A, B], [C, D]]"""
    if side_part(side) is Part.POSITIVE:
        return B - A @ U + U @ D - U @ C @ U
    return C + U @ A - D @ U - U @ B @ U


def riccati_blocks_3(
    lam_blocks: Dict[Tuple[int, int], CMatrix], U12: CMatrix, U13: CMatrix, U23: CMatrix
) -> Tuple[CMatrix, CMatrix, CMatrix]:
    """Coupled upper-side system for a 3-block gradation

    lam_blocks maps (r, s) to the block of lam: A_rr on the diagonal, B_rs above,
    C_rs below. Returns (U12', U13', U23').
    """
    A11, A22, A33 = lam_blocks[(1, 1)], lam_blocks[(2, 2)], lam_blocks[(3, 3)]
    B12, B13, B23 = lam_blocks[(1, 2)], lam_blocks[(1, 3)], lam_blocks[(2, 3)]
    C21, C31, C32 = lam_blocks[(2, 1)], lam_blocks[(3, 1)], lam_blocks[(3, 2)]

    dU12 = B12 - A11 @ U12 + U12 @ A22 + U13 @ C32 - U12 @ C21 @ U12 - U13 @ C31 @ U12
    dU23 = (
        B23
        - A22 @ U23
        + U23 @ A33
        - C21 @ U13
        + C21 @ U12 @ U23
        - U23 @ C31 @ U13
        - U23 @ C32 @ U23
        + U23 @ C31 @ U12 @ U23
    )
    dU13 = B13 - A11 @ U13 + U13 @ A33 + U12 @ B23 - U12 @ C21 @ U13 - U13 @ C31 @ U13
    return dU12, dU13, dU23


def project_field(ctx: GradedContext, lam: MatrixField, part: Union[Part, str]) -> MatrixField:
    """Grade projection of a coefficient field, exact partials preserved"""
    return masked(lam, ctx.mask(part), name=f"P{Part.parse(part).value}({lam.name})")
