"""
Gauge transformations lam' = chi lam chi^{-1} - d chi chi^{-1}

For chi in G_0 the Riccati solution transforms covariantly:
psi'_{>0} = chi psi_{>0} chi^{-1}, with the initial point conjugated by chi(0).
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from algebra.errors import ShapeError
from algebra.gradation import GradedContext, Part, is_in_subgroup, project
from algebra.matrices import CMatrix, max_norm
from flow.fields import MatrixField, evaluate_on_grid, product, right_log_derivative
from flow.grids import FieldOnGrid, ResidualReport, Trajectory, gradient_values
from flow.integrate import solve_linear_1d, solve_linear_md
from riccati.problem import RiccatiProblem, project_field
from riccati.solvers import solve_direct

logger = logging.getLogger(__name__)

Gauge = Union[MatrixField, Trajectory, FieldOnGrid]
Coefficients = Union[MatrixField, Sequence[MatrixField]]


def gauge_transform(lam: Coefficients, chi: Gauge):
    """Transformed coefficients, in the form chi comes in

    A MatrixField chi gives fields (partials by the product rule). A sampled
    chi gives sampled coefficients on its nodes, using the derivatives the
    producing solver recorded when available.
    """
    single = isinstance(lam, MatrixField)
    fields: Tuple[MatrixField, ...] = (lam,) if single else tuple(lam)  # type: ignore[arg-type]

    if isinstance(chi, MatrixField):
        chi_inv = chi.inverse()
        out = tuple(
            product(chi, f, chi_inv) - right_log_derivative(chi, i) for i, f in enumerate(fields)
        )
        return out[0] if single else out

    grid = chi.to_grid() if isinstance(chi, Trajectory) else chi
    if len(fields) != grid.dim:
        raise ShapeError(f"{len(fields)} coefficient fields for a {grid.dim}-axis gauge")
    chi_vals = grid.values
    chi_inv = np.linalg.inv(chi_vals)
    transformed = []
    for i, f in enumerate(fields):
        lam_vals = evaluate_on_grid(f, grid.axes)
        if grid.derivatives is not None:
            d_chi = grid.derivatives[i]
        else:
            d_chi = gradient_values(chi_vals, grid.axes, i)
        values = chi_vals @ lam_vals @ chi_inv - d_chi @ chi_inv
        transformed.append(FieldOnGrid(grid.axes, values, {"gauge": True}))
    return transformed[0] if single else tuple(transformed)


def covariance_check(
    problem: RiccatiProblem,
    chi: MatrixField,
    interval: Optional[Tuple[float, float]] = None,
    steps: Optional[int] = None,
    axes: Optional[Sequence[Sequence[float]]] = None,
    order: Optional[Sequence[int]] = None,
    substeps: Optional[int] = None,
) -> ResidualReport:
    """Solve with lam and with the chi-transformed lam; compare chi psi chi^{-1} to the latter"""
    ctx = problem.ctx
    one_dim = problem.dim == 1 and axes is None
    origin = np.array([interval[0]]) if one_dim and interval is not None else np.array([a[0] for a in axes or []])
    chi0 = chi(origin)
    if not is_in_subgroup(ctx, chi0, Part.ZERO, atol=1e-12):
        raise ShapeError("covariance holds for gauges in G_0; chi(origin) is not block-diagonal")

    base = solve_direct(problem, interval, steps, axes, order, substeps)
    transformed_fields = gauge_transform(problem.fields, chi)
    initial = chi0 @ problem.initial @ np.linalg.inv(chi0)
    initial = project(ctx, initial, problem.part) + np.eye(ctx.n)
    moved = solve_direct(problem.with_fields(transformed_fields, initial), interval, steps, axes, order, substeps)

    if base.trajectory is not None:
        chi_vals = np.stack([chi(x) for x in base.trajectory.nodes])
    else:
        chi_vals = evaluate_on_grid(chi, base.grid.axes)  # type: ignore[union-attr]
    expected = chi_vals @ base.values @ np.linalg.inv(chi_vals)
    discrepancy = float(np.max(np.abs(expected - moved.values)))
    logger.debug(f"covariance discrepancy {discrepancy:.3e}")

    report = ResidualReport(meta={"side": problem.side, "points": int(np.prod(base.values.shape[:-2]))})
    return report.add("covariance", discrepancy)


def normalize_grade_zero(
    ctx: GradedContext,
    fields: Coefficients,
    axes: Sequence[Sequence[float]],
    order: Optional[Sequence[int]] = None,
    substeps: Optional[int] = None,
    steps: Optional[int] = None,
    atol: float = 0.0,
) -> Union[Trajectory, FieldOnGrid]:
    """Gauge chi with chi^{-1} d_i chi = (lam_i)_0, removing the grade-zero part

    Only defined when (lam_i)_{>0} vanishes on the grid; the grade-zero parts
    must then satisfy their own zero-curvature condition, which solve_linear_md
    checks and reports.
    """
    fields = (fields,) if isinstance(fields, MatrixField) else tuple(fields)
    for f in fields:
        positive = max_norm(project(ctx, evaluate_on_grid(f, axes), Part.POSITIVE))
        if positive > atol:
            raise ValueError(
                f"grade-zero normalization needs (lam)_{{>0}} = 0; {f.name} has {positive:.3e}"
            )

    zero_parts = tuple(project_field(ctx, f, Part.ZERO) for f in fields)
    if len(axes) == 1:
        axis = np.asarray(axes[0], dtype=np.float64)
        n_steps = steps or (len(axis) - 1)
        return solve_linear_1d(zero_parts[0], np.eye(ctx.n), (axis[0], axis[-1]), n_steps, "right")

    chi = solve_linear_md(zero_parts, np.eye(ctx.n), axes, order, "right", substeps=substeps)
    derivatives = tuple(chi.values @ evaluate_on_grid(f, chi.axes) for f in zero_parts)
    return FieldOnGrid(chi.axes, chi.values, dict(chi.meta), derivatives)
