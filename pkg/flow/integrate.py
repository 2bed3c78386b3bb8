"""
Linear matrix flows

One dimension:  dpsi/dx = psi lam (side="right") or lam psi (side="left").
Many dimensions: d_i psi = psi lam_i or lam_i psi, integrated along staircase
paths from the grid origin; path independence holds when the zero-curvature
residual vanishes and is checked, not assumed.
"""

import logging
import itertools
import warnings
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from algebra.errors import CurvatureWarning, DivergenceError, ShapeError
from algebra.matrices import CMatrix, as_cmatrix, commutator, matexp
from config.settings import config
from flow.fields import MatrixField, evaluate_batch, evaluate_on_grid
from flow.grids import FieldOnGrid, ResidualReport, Trajectory, check_side, gradient_values, grid_max_norm

logger = logging.getLogger(__name__)

METHODS = ("rk4", "magnus-midpoint")

# step(direction, points (M, dim), h, state (M, n, n)) -> new state
StaircaseStep = Callable[[int, NDArray[np.float64], float, CMatrix], CMatrix]
# field(direction, points (M, dim), state (M, n, n)) -> tangent (M, n, n)
VectorField = Callable[[int, NDArray[np.float64], CMatrix], CMatrix]


def _method(method: Optional[str]) -> str:
    method = method or config.get("numerics.stepper", "rk4")
    if method not in METHODS:
        raise ValueError(f"unknown stepper {method!r}; expected one of {METHODS}")
    return method


def _steps(steps: Optional[int]) -> int:
    steps = int(config.get("numerics.default_steps", 400) if steps is None else steps)
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    return steps


def _act(side: str, lam: CMatrix, psi: CMatrix) -> CMatrix:
    return psi @ lam if side == "right" else lam @ psi


def rk4_step(f: Callable[[float, CMatrix], CMatrix], x: float, h: float, y: CMatrix) -> CMatrix:
    """One classical Runge-Kutta step for y' = f(x, y)"""
    k1 = f(x, y)
    k2 = f(x + h / 2, y + (h / 2) * k1)
    k3 = f(x + h / 2, y + (h / 2) * k2)
    k4 = f(x + h, y + h * k3)
    return y + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)


def solve_linear_1d(
    lam: MatrixField,
    psi0: CMatrix,
    interval: Tuple[float, float],
    steps: Optional[int] = None,
    side: str = "right",
    method: Optional[str] = None,
) -> Trajectory:
    """Fixed-step integration of dpsi/dx = psi lam (or lam psi) over `interval`"""
    check_side(side)
    method = _method(method)
    steps = _steps(steps)
    if lam.dim_in != 1:
        raise ShapeError(f"solve_linear_1d needs a one-coordinate field, {lam.name} has {lam.dim_in}")
    psi = as_cmatrix(psi0, lam.n)

    lo, hi = float(interval[0]), float(interval[1])
    nodes = np.linspace(lo, hi, steps + 1)
    h = (hi - lo) / steps
    values = np.empty((steps + 1,) + psi.shape, dtype=np.complex128)
    derivatives = np.empty_like(values)
    values[0] = psi

    def f(x: float, y: CMatrix) -> CMatrix:
        return _act(side, lam(x), y)

    for k in range(steps):
        x = nodes[k]
        lam_k = lam(x)
        derivatives[k] = _act(side, lam_k, psi)
        if method == "rk4":
            psi = rk4_step(f, x, h, psi)
        else:
            psi = _act(side, matexp(h * lam(x + h / 2)), psi)
        if not np.all(np.isfinite(psi)):
            raise DivergenceError(
                f"linear flow left the finite range at x={nodes[k + 1]:.6g}",
                coordinate=(nodes[k + 1],),
                index=k + 1,
                last_state=values[k],
            )
        values[k + 1] = psi
    derivatives[steps] = _act(side, lam(nodes[steps]), psi)

    logger.debug(f"solve_linear_1d: {steps} {method} steps on [{lo}, {hi}], side={side}")
    return Trajectory(nodes, values, side, derivatives, {"method": method, "steps": steps})


def path_ordered_exp(
    lam: MatrixField,
    interval: Tuple[float, float],
    steps: Optional[int] = None,
    method: Optional[str] = None,
) -> CMatrix:
    """P exp(int lam dx) as the end value of the right-action flow from the identity"""
    return solve_linear_1d(lam, np.eye(lam.n), interval, steps, "right", method).final


def step_doubling_defect(
    lam: MatrixField,
    psi0: CMatrix,
    interval: Tuple[float, float],
    steps: Optional[int] = None,
    side: str = "right",
    method: Optional[str] = None,
) -> float:
    """||psi_N - psi_2N|| at the end of the interval"""
    steps = _steps(steps)
    coarse = solve_linear_1d(lam, psi0, interval, steps, side, method).final
    fine = solve_linear_1d(lam, psi0, interval, 2 * steps, side, method).final
    return float(np.max(np.abs(coarse - fine)))


# -- staircase integration ------------------------------------------------------


def integrate_staircase(
    step: StaircaseStep,
    psi0: CMatrix,
    axes: Sequence[Sequence[float]],
    order: Optional[Sequence[int]] = None,
    substeps: Optional[int] = None,
) -> CMatrix:
    """Fill a tensor grid by sweeping the axes in `order` from the grid origin

    The first sweep integrates along order[0] from the origin; each later sweep
    starts from every point already filled and integrates along the next axis.
    Returns values of shape (len_0, ..., len_{d-1}, n, n).
    """
    axes = [np.asarray(a, dtype=np.float64) for a in axes]
    d = len(axes)
    order = tuple(range(d)) if order is None else tuple(int(o) for o in order)
    if sorted(order) != list(range(d)):
        raise ValueError(f"order {order} is not a permutation of {d} directions")
    substeps = int(config.get("numerics.substeps", 4) if substeps is None else substeps)
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")

    psi0 = np.asarray(psi0, dtype=np.complex128)
    shape = tuple(len(a) for a in axes)
    values = np.full(shape + psi0.shape, np.nan, dtype=np.complex128)
    values[(0,) * d] = psi0

    for stage, axis in enumerate(order):
        swept = order[:stage]
        ranges = [range(shape[a]) if a in swept else range(1) for a in range(d)]
        starts = list(itertools.product(*ranges))
        index = [np.array(col, dtype=np.intp) for col in zip(*starts)]
        state = values[tuple(index)]
        points = np.array([[axes[a][i[a]] for a in range(d)] for i in starts], dtype=np.float64)

        for k in range(shape[axis] - 1):
            x0, x1 = axes[axis][k], axes[axis][k + 1]
            h = (x1 - x0) / substeps
            for j in range(substeps):
                points[:, axis] = x0 + j * h
                state = step(axis, points, h, state)
            index[axis] = np.full(len(starts), k + 1, dtype=np.intp)
            values[tuple(index)] = state
        logger.debug(f"staircase sweep {stage + 1}/{d} along axis {axis}: {len(starts)} lines")
    return values


def rk4_staircase_step(field: VectorField) -> StaircaseStep:
    """Runge-Kutta step of d_axis y = field(axis, x, y) on a batch of points"""

    def step(axis: int, points: NDArray[np.float64], h: float, state: CMatrix) -> CMatrix:
        shifted = points.copy()
        k1 = field(axis, points, state)
        shifted[:, axis] = points[:, axis] + h / 2
        k2 = field(axis, shifted, state + (h / 2) * k1)
        k3 = field(axis, shifted, state + (h / 2) * k2)
        shifted[:, axis] = points[:, axis] + h
        k4 = field(axis, shifted, state + h * k3)
        new = state + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        _check_finite(new, shifted)
        return new

    return step


def linear_staircase_step(fields: Sequence[MatrixField], side: str, method: str) -> StaircaseStep:
    if method == "rk4":
        return rk4_staircase_step(lambda axis, pts, y: _act(side, evaluate_batch(fields[axis], pts), y))

    def step(axis: int, points: NDArray[np.float64], h: float, state: CMatrix) -> CMatrix:
        mid = points.copy()
        mid[:, axis] = points[:, axis] + h / 2
        propagator = matexp(h * evaluate_batch(fields[axis], mid))
        new = _act(side, propagator, state)
        _check_finite(new, mid)
        return new

    return step


def _check_finite(state: CMatrix, points: NDArray[np.float64]):
    bad = ~np.all(np.isfinite(state), axis=(-2, -1))
    if np.any(bad):
        k = int(np.argmax(bad))
        raise DivergenceError(
            f"flow left the finite range near {tuple(points[k])}", coordinate=points[k], index=k
        )


def solve_linear_md(
    fields: Sequence[MatrixField],
    psi0: CMatrix,
    axes: Sequence[Sequence[float]],
    order: Optional[Sequence[int]] = None,
    side: str = "right",
    method: Optional[str] = None,
    substeps: Optional[int] = None,
    gate: Optional[float] = None,
    check_curvature: bool = True,
) -> FieldOnGrid:
    """Solve d_i psi = psi lam_i (or lam_i psi) on a tensor grid

    When the zero-curvature residual exceeds `gate` the result depends on the
    sweep order; a CurvatureWarning is issued and recorded in the metadata.
    """
    check_side(side)
    method = _method(method)
    fields = tuple(fields)
    d = len(fields)
    if len(axes) != d or any(f.dim_in != d for f in fields):
        raise ShapeError(f"{d} direction fields need {d} axes and {d}-coordinate fields")
    psi0 = as_cmatrix(psi0, fields[0].n)

    meta = {"method": method, "side": side, "order": list(order or range(d)), "grid": [len(a) for a in axes]}
    if check_curvature and d >= 2:
        gate = float(config.get("numerics.curvature_gate", 1e-8) if gate is None else gate)
        report = zero_curvature_residual(fields, axes, side)
        meta["curvature"] = report["zero_curvature"]
        if report["zero_curvature"] > gate:
            meta["curvature_warning"] = True
            message = f"zero-curvature residual {report['zero_curvature']:.3e} exceeds {gate:.1e}; result depends on the sweep order"
            logger.warning(message)
            warnings.warn(message, CurvatureWarning, stacklevel=2)

    values = integrate_staircase(linear_staircase_step(fields, side, method), psi0, axes, order, substeps)
    return FieldOnGrid(tuple(np.asarray(a, dtype=np.float64) for a in axes), values, meta)


# -- integrability ---------------------------------------------------------------


def curvature(
    d_i_lam_j: CMatrix, d_j_lam_i: CMatrix, lam_i: CMatrix, lam_j: CMatrix, side: str = "right"
) -> CMatrix:
    """d_i lam_j - d_j lam_i +/- [lam_i, lam_j]; + for right action, - for left"""
    sign = 1.0 if check_side(side) == "right" else -1.0
    return d_i_lam_j - d_j_lam_i + sign * commutator(lam_i, lam_j)


def zero_curvature_residual(
    fields: Sequence[MatrixField], axes: Sequence[Sequence[float]], side: str = "right"
) -> ResidualReport:
    """Max over grid points and pairs i < j of the curvature of the family lam_i"""
    fields = tuple(fields)
    d = len(fields)
    report = ResidualReport(meta={"side": side, "grid": [len(a) for a in axes]})
    if d < 2:
        return report.add("zero_curvature", 0.0)

    axes = [np.asarray(a, dtype=np.float64) for a in axes]
    values = [evaluate_on_grid(f, axes) for f in fields]
    partials: Dict[Tuple[int, int], CMatrix] = {}

    def partial_of(i: int, j: int) -> CMatrix:
        """d_i lam_j on the grid"""
        if (i, j) not in partials:
            partials[(i, j)] = evaluate_on_grid(fields[j].partial(i), axes)
        return partials[(i, j)]

    worst = 0.0
    for i, j in itertools.combinations(range(d), 2):
        value = curvature(partial_of(i, j), partial_of(j, i), values[i], values[j], side)
        pair = float(np.max(np.abs(value)))
        report.add(f"zero_curvature_{i + 1}{j + 1}", pair)
        worst = max(worst, pair)
    return report.add("zero_curvature", worst)


def curvature_on_grid(
    values: Sequence[CMatrix],
    axes: Sequence[NDArray[np.float64]],
    directions: Sequence[int],
    side: str = "right",
) -> float:
    """Interior max-norm curvature of sampled components lam_a along `directions`"""
    worst = 0.0
    for (a, da), (b, db) in itertools.combinations(enumerate(directions), 2):
        value = curvature(
            gradient_values(values[b], axes, da),
            gradient_values(values[a], axes, db),
            values[a],
            values[b],
            side,
        )
        worst = max(worst, grid_max_norm(value, len(axes)))
    return worst
