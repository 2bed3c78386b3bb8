"""
Finite-difference residuals of the WZNW and Toda equations on a TodaGrid

Grids order the coordinates (z^-..., z^+...). Every residual is the max
modulus over interior nodes; points that failed upstream (NaN) are skipped.
"""

import itertools
import logging
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from algebra.errors import ShapeError
from algebra.gauss import gauss_decompose_stack
from algebra.gradation import Part
from algebra.matrices import CMatrix, commutator
from flow.grids import FieldOnGrid, ResidualReport, gradient_values, grid_max_norm
from flow.integrate import curvature_on_grid
from toda.data import MINUS, PLUS, TodaData, TodaGrid

if TYPE_CHECKING:
    from toda.construction import TodaSolution

logger = logging.getLogger(__name__)


def _split(grid: FieldOnGrid) -> int:
    if grid.dim % 2:
        raise ShapeError(f"a WZNW grid needs 2d axes, got {grid.dim}")
    return grid.dim // 2


def _toda_grid(values: FieldOnGrid) -> TodaGrid:
    d = _split(values)
    return TodaGrid(values.axes[:d], values.axes[d:])


def _interior_max(values: CMatrix, dims: int) -> float:
    return grid_max_norm(values, dims)


def _lifted(data_fields, tgrid: TodaGrid, side: str) -> List[CMatrix]:
    return [tgrid.lift(tgrid.sample(f, side), side) for f in data_fields]


def wznw_residual(psi: FieldOnGrid) -> ResidualReport:
    """d_{+j}(psi^{-1} d_{-i} psi), its dual form and the current conditions

    wznw:               d_{+j} iota_{-i},  iota_{-i} = psi^{-1} d_{-i} psi
    wznw_dual:          d_{-i} iota_{+j},  iota_{+j} = -d_{+j} psi psi^{-1}
    current_*_curvature: d_a iota_b - d_b iota_a + [iota_a, iota_b] per side
    """
    d = _split(psi)
    axes, dims = psi.axes, psi.dim
    values = psi.values
    inv = np.linalg.inv(values)

    iota_minus = [inv @ gradient_values(values, axes, i) for i in range(d)]
    iota_plus = [-gradient_values(values, axes, d + j) @ inv for j in range(d)]

    forward = dual = 0.0
    for i, j in itertools.product(range(d), repeat=2):
        forward = max(forward, _interior_max(gradient_values(iota_minus[i], axes, d + j), dims))
        dual = max(dual, _interior_max(gradient_values(iota_plus[j], axes, i), dims))

    report = ResidualReport(meta={"d": d, "grid": list(psi.grid_shape)})
    report.add("wznw", forward)
    report.add("wznw_dual", dual)
    report.add("current_minus_curvature", curvature_on_grid(iota_minus, axes, list(range(d)), "right"))
    report.add("current_plus_curvature", curvature_on_grid(iota_plus, axes, list(range(d, 2 * d)), "right"))
    logger.debug(f"WZNW residuals {report.residuals}")
    return report


def toda_residual(gamma: FieldOnGrid, data: TodaData) -> ResidualReport:
    """The three Toda equations for gamma on the full grid

    toda_minus_compat:  d_{-i}(gamma c_{-j} gamma^{-1}) - d_{-j}(gamma c_{-i} gamma^{-1})
    toda_mixed:         d_{+j}(gamma^{-1} d_{-i} gamma) - [c_{-i}, gamma^{-1} c_{+j} gamma]
    toda_plus_compat:   d_{+i}(gamma^{-1} c_{+j} gamma) - d_{+j}(gamma^{-1} c_{+i} gamma)
    """
    tgrid = _toda_grid(gamma)
    d = tgrid.d
    if d != data.d:
        raise ShapeError(f"gamma lives on d={d}, data has d={data.d}")
    axes, dims = gamma.axes, gamma.dim
    g = gamma.values
    g_inv = np.linalg.inv(g)
    c_minus = _lifted(data.c_minus, tgrid, MINUS)
    c_plus = _lifted(data.c_plus, tgrid, PLUS)

    minus_terms = [g @ c @ g_inv for c in c_minus]
    plus_terms = [g_inv @ c @ g for c in c_plus]
    left_log = [g_inv @ gradient_values(g, axes, i) for i in range(d)]

    minus_compat = plus_compat = mixed = 0.0
    for i, j in itertools.combinations(range(d), 2):
        value = gradient_values(minus_terms[j], axes, i) - gradient_values(minus_terms[i], axes, j)
        minus_compat = max(minus_compat, _interior_max(value, dims))
        value = gradient_values(plus_terms[j], axes, d + i) - gradient_values(plus_terms[i], axes, d + j)
        plus_compat = max(plus_compat, _interior_max(value, dims))
    for i, j in itertools.product(range(d), repeat=2):
        value = gradient_values(left_log[i], axes, d + j) - commutator(c_minus[i], plus_terms[j])
        mixed = max(mixed, _interior_max(value, dims))

    report = ResidualReport(meta={"d": d, "grid": list(gamma.grid_shape)})
    report.add("toda_minus_compat", minus_compat)
    report.add("toda_mixed", mixed)
    report.add("toda_plus_compat", plus_compat)
    logger.debug(f"Toda residuals {report.residuals}")
    return report


def constraint_residual(psi: FieldOnGrid, data: TodaData, sol: Optional["TodaSolution"] = None) -> ResidualReport:
    """Grading constraints on psi, read from psi itself and from its Gauss factors

    constraint_minus:         (psi^{-1} d_{-i} psi)_{<0} - c_{-i}
    constraint_plus:          (d_{+j} psi psi^{-1})_{>0} + c_{+j}
    constraint_minus_factor:  psi_0^{-1} (psi_{<0}^{-1} d_{-i} psi_{<0}) psi_0 - c_{-i}
    constraint_plus_factor:   psi_0 (d_{+j} psi_{>0} psi_{>0}^{-1}) psi_0^{-1} + c_{+j}
    psi_zero_vs_gamma:        psi_0 - gamma at every grid point (with a solution given)
    """
    tgrid = _toda_grid(psi)
    d, ctx = tgrid.d, data.ctx
    axes, dims = psi.axes, psi.dim
    values = psi.values
    inv = np.linalg.inv(values)
    c_minus = _lifted(data.c_minus, tgrid, MINUS)
    c_plus = _lifted(data.c_plus, tgrid, PLUS)

    factors, ok = gauss_decompose_stack(ctx, values)
    lower, zero, upper = factors.lower, factors.zero, factors.upper
    lower_inv, zero_inv, upper_inv = np.linalg.inv(lower), np.linalg.inv(zero), np.linalg.inv(upper)
    negative, positive = ctx.mask(Part.NEGATIVE), ctx.mask(Part.POSITIVE)

    direct_minus = direct_plus = factor_minus = factor_plus = 0.0
    for i in range(d):
        current = inv @ gradient_values(values, axes, i)
        direct_minus = max(direct_minus, _interior_max(np.where(negative, current, 0) - c_minus[i], dims))
        inner = lower_inv @ gradient_values(lower, axes, i)
        factor_minus = max(factor_minus, _interior_max(zero_inv @ inner @ zero - c_minus[i], dims))
    for j in range(d):
        current = gradient_values(values, axes, d + j) @ inv
        direct_plus = max(direct_plus, _interior_max(np.where(positive, current, 0) + c_plus[j], dims))
        inner = gradient_values(upper, axes, d + j) @ upper_inv
        factor_plus = max(factor_plus, _interior_max(zero @ inner @ zero_inv + c_plus[j], dims))

    report = ResidualReport(meta={"d": d, "decomposable_fraction": float(np.mean(ok))})
    report.add("constraint_minus", direct_minus)
    report.add("constraint_plus", direct_plus)
    report.add("constraint_minus_factor", factor_minus)
    report.add("constraint_plus_factor", factor_plus)
    if sol is not None:
        report.add("psi_zero_vs_gamma", grid_max_norm(zero - sol.gamma.values))
    return report


def connection_curvature(gamma: FieldOnGrid, data: TodaData) -> ResidualReport:
    """Zero curvature of omega_{-i} = c_{-i} + gamma^{-1} d_{-i} gamma, omega_{+i} = gamma^{-1} c_{+i} gamma"""
    tgrid = _toda_grid(gamma)
    d = tgrid.d
    g = gamma.values
    g_inv = np.linalg.inv(g)
    c_minus = _lifted(data.c_minus, tgrid, MINUS)
    c_plus = _lifted(data.c_plus, tgrid, PLUS)
    omega = [c_minus[i] + g_inv @ gradient_values(g, gamma.axes, i) for i in range(d)]
    omega += [g_inv @ c @ g for c in c_plus]

    report = ResidualReport(meta={"d": d})
    return report.add("connection_curvature", curvature_on_grid(omega, gamma.axes, list(range(2 * d)), "right"))
