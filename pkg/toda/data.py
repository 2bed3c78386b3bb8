"""
Toda data and the tensor grid over R^{2d}

Coordinates are ordered (z^{-1}, ..., z^{-d}, z^{+1}, ..., z^{+d}). Chiral fields
take only their own d coordinates: gamma_minus, c_minus and xi_plus live on z^-,
gamma_plus, c_plus and xi_minus on z^+. Chirality is therefore structural.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from algebra.errors import IntegrabilityError, ShapeError
from algebra.gradation import GradedContext, Part, project
from algebra.matrices import CMatrix, commutator
from config.settings import config
from flow.fields import MatrixField, evaluate_on_grid, identity_field
from flow.grids import ResidualReport, grid_max_norm
from flow.integrate import zero_curvature_residual

logger = logging.getLogger(__name__)

MINUS, PLUS = "minus", "plus"


@dataclass(frozen=True)
class TodaGrid:
    """Tensor grid: d axes for z^- followed by d axes for z^+"""

    minus_axes: Tuple[NDArray[np.float64], ...]
    plus_axes: Tuple[NDArray[np.float64], ...]

    def __post_init__(self):
        minus = tuple(np.asarray(a, dtype=np.float64) for a in self.minus_axes)
        plus = tuple(np.asarray(a, dtype=np.float64) for a in self.plus_axes)
        if not minus or len(minus) != len(plus):
            raise ShapeError(f"need d >= 1 axes on each side, got {len(minus)} and {len(plus)}")
        for a in minus + plus:
            if a.ndim != 1 or len(a) < 2:
                raise ShapeError("every grid axis needs at least two nodes")
        object.__setattr__(self, "minus_axes", minus)
        object.__setattr__(self, "plus_axes", plus)

    @classmethod
    def uniform(cls, d: int, nodes: int, extent: float, start: float = 0.0) -> "TodaGrid":
        axis = np.linspace(start, start + extent, nodes)
        return cls(tuple(axis for _ in range(d)), tuple(axis for _ in range(d)))

    @property
    def d(self) -> int:
        return len(self.minus_axes)

    @property
    def axes(self) -> Tuple[NDArray[np.float64], ...]:
        return self.minus_axes + self.plus_axes

    @property
    def minus_shape(self) -> Tuple[int, ...]:
        return tuple(len(a) for a in self.minus_axes)

    @property
    def plus_shape(self) -> Tuple[int, ...]:
        return tuple(len(a) for a in self.plus_axes)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.minus_shape + self.plus_shape

    def coordinate(self, index: Sequence[int]) -> Tuple[float, ...]:
        return tuple(float(a[i]) for a, i in zip(self.axes, index))

    def lift(self, values: CMatrix, side: str) -> CMatrix:
        """Broadcast values sampled on one chiral sub-grid to the full grid"""
        d = self.d
        tail = values.shape[d:]
        if side == MINUS:
            shaped = values.reshape(self.minus_shape + (1,) * d + tail)
        elif side == PLUS:
            shaped = values.reshape((1,) * d + self.plus_shape + tail)
        else:
            raise ValueError(f"side must be {MINUS!r} or {PLUS!r}, got {side!r}")
        return np.broadcast_to(shaped, self.shape + tail)

    def sample(self, f: MatrixField, side: str) -> CMatrix:
        """A chiral field on its own sub-grid"""
        return evaluate_on_grid(f, self.minus_axes if side == MINUS else self.plus_axes)


@dataclass(frozen=True)
class TodaData:
    """Input of the Toda construction

    gamma_minus, gamma_plus take values in G_0; c_minus[i], c_plus[i] in the
    grade -1 and +1 subspaces; xi_minus in G_{<0}, xi_plus in G_{>0}. The xi
    maps default to the identity.
    """

    ctx: GradedContext
    gamma_minus: MatrixField
    gamma_plus: MatrixField
    c_minus: Tuple[MatrixField, ...]
    c_plus: Tuple[MatrixField, ...]
    xi_minus: Optional[MatrixField] = None
    xi_plus: Optional[MatrixField] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        c_minus, c_plus = tuple(self.c_minus), tuple(self.c_plus)
        d = len(c_minus)
        if d == 0 or len(c_plus) != d:
            raise ShapeError(f"need d >= 1 fields c_minus and c_plus, got {d} and {len(c_plus)}")
        object.__setattr__(self, "c_minus", c_minus)
        object.__setattr__(self, "c_plus", c_plus)
        n = self.ctx.n
        if self.xi_minus is None:
            object.__setattr__(self, "xi_minus", identity_field(n, d))
        if self.xi_plus is None:
            object.__setattr__(self, "xi_plus", identity_field(n, d))
        for f in (self.gamma_minus, self.gamma_plus, self.xi_minus, self.xi_plus) + c_minus + c_plus:
            if f.shape != (n, n) or f.dim_in != d:  # type: ignore[union-attr]
                raise ShapeError(f"{f.name} must be a {n}x{n} field of {d} chiral coordinates")  # type: ignore[union-attr]

    @property
    def d(self) -> int:
        return len(self.c_minus)

    def dressed_minus(self) -> Tuple[MatrixField, ...]:
        """gamma_- c_{-i} gamma_-^{-1}, the coefficients of the z^- flow for mu_-"""
        return tuple(c.conjugate_by(self.gamma_minus) for c in self.c_minus)

    def dressed_plus(self) -> Tuple[MatrixField, ...]:
        return tuple(c.conjugate_by(self.gamma_plus) for c in self.c_plus)


def _grade_defect(values: CMatrix, allowed: NDArray[np.bool_]) -> float:
    return grid_max_norm(np.where(allowed, 0, values))


def _subgroup_defect(ctx: GradedContext, values: CMatrix, part: Part) -> float:
    """Distance of samples from the unit subgroup of the given side"""
    return grid_max_norm(values - project(ctx, values, part) - np.eye(ctx.n))


def _commutator_defect(values: Sequence[CMatrix]) -> float:
    worst = 0.0
    for a, b in itertools.combinations(values, 2):
        worst = max(worst, grid_max_norm(commutator(a, b)))
    return worst


def check_toda_data(data: TodaData, grid: TodaGrid, gate: Optional[float] = None) -> ResidualReport:
    """Residuals of every condition the construction relies on

    chirality is structural and reported as 0; commutators [c_i, c_j] on each
    side; grade and subgroup membership of the samples; integrability of the
    mu flows, d_i (gamma c_j gamma^{-1}) - d_j (gamma c_i gamma^{-1}) on each
    sub-grid. With `gate` given, an integrability residual above it raises.
    """
    if grid.d != data.d:
        raise ShapeError(f"data has d={data.d}, grid has d={grid.d}")
    ctx = data.ctx
    report = ResidualReport(meta={"d": data.d, "grid": list(grid.shape), "partition": list(ctx.sizes)})
    report.add("chirality", 0.0)

    c_minus = [grid.sample(c, MINUS) for c in data.c_minus]
    c_plus = [grid.sample(c, PLUS) for c in data.c_plus]
    report.add("commutator_minus", _commutator_defect(c_minus))
    report.add("commutator_plus", _commutator_defect(c_plus))
    report.add("grade_c_minus", max(_grade_defect(c, ctx.grade_mask(-1)) for c in c_minus))
    report.add("grade_c_plus", max(_grade_defect(c, ctx.grade_mask(1)) for c in c_plus))

    zero = ctx.mask(Part.ZERO)
    gamma_defect = max(
        _grade_defect(grid.sample(data.gamma_minus, MINUS), zero),
        _grade_defect(grid.sample(data.gamma_plus, PLUS), zero),
    )
    report.add("grade_gamma", gamma_defect)
    xi_defect = max(
        _subgroup_defect(ctx, grid.sample(data.xi_minus, PLUS), Part.NEGATIVE),  # type: ignore[arg-type]
        _subgroup_defect(ctx, grid.sample(data.xi_plus, MINUS), Part.POSITIVE),  # type: ignore[arg-type]
    )
    report.add("grade_xi", xi_defect)

    minus = zero_curvature_residual(data.dressed_minus(), grid.minus_axes, "right")["zero_curvature"]
    plus = zero_curvature_residual(data.dressed_plus(), grid.plus_axes, "right")["zero_curvature"]
    report.add("integrability_minus", minus)
    report.add("integrability_plus", plus)
    logger.debug(f"Toda data check: {report.residuals}")

    if gate is not None and max(minus, plus) > gate:
        raise IntegrabilityError(
            f"the mu flows are not integrable: residuals {minus:.3e} (z^-), {plus:.3e} (z^+) above {gate:.1e}",
            residual=max(minus, plus),
        )
    return report


def integrability_gate(gate: Optional[float] = None) -> float:
    return float(config.get("numerics.integrability_gate", 1e-8) if gate is None else gate)
