"""
Riccati solvers

solve_direct integrates the nonlinear equation with fixed-step RK4 (staircase
RK4 in several dimensions). solve_by_linearization integrates the linear flow
d psi = psi lam from the initial point and reads the solution off the Gauss
factors. Both apply the same blow-up rule: the state leaves the finite range,
a Gauss pivot fails, or one step moves the state by at least
numerics.blowup_scale * max(1, max|state|). Smooth growth such as exp(x) moves
by about h * rate per step and passes; near a pole the jump is of order
h * max|state|**2.
"""

import logging
from typing import Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from algebra.errors import BlowupAtNode, DivergenceError, NotDecomposableError
from algebra.gauss import gauss_decompose, gauss_decompose_stack, reverse_gauss_decompose_stack
from algebra.matrices import CMatrix
from config.settings import config
from flow.fields import evaluate_batch
from flow.grids import FieldOnGrid, Trajectory
from flow.integrate import (
    integrate_staircase,
    rk4_staircase_step,
    rk4_step,
    solve_linear_1d,
    solve_linear_md,
)
from riccati.problem import RiccatiProblem, RiccatiSolution, rhs

logger = logging.getLogger(__name__)


def _blowup_scale(scale: Optional[float]) -> float:
    return float(config.get("numerics.blowup_scale", 0.5) if scale is None else scale)


def _escaped(previous: CMatrix, current: CMatrix, scale: float) -> NDArray[np.bool_]:
    """Blow-up predicate per matrix of a stack, comparing one step with the next"""
    finite = np.all(np.isfinite(current), axis=(-2, -1))
    jump = np.max(np.abs(np.where(finite[..., None, None], current - previous, 0)), axis=(-2, -1))
    size = np.max(np.abs(previous), axis=(-2, -1))
    return ~finite | (jump >= scale * np.maximum(1.0, size))


def _escaped_on_grid(values: CMatrix, ndim: int, scale: float) -> NDArray[np.bool_]:
    """Blow-up predicate per grid node: the jump from any lower neighbour escapes"""
    failed = ~np.all(np.isfinite(values), axis=(-2, -1))
    for axis in range(ndim):
        count = values.shape[axis]
        if count < 2:
            continue
        lower = np.take(values, range(count - 1), axis=axis)
        upper = np.take(values, range(1, count), axis=axis)
        escaped = _escaped(lower, upper, scale)
        pad = [(0, 0)] * ndim
        pad[axis] = (1, 0)
        failed |= np.pad(escaped, pad, constant_values=False)
    return failed


def _substeps(substeps: Optional[int]) -> int:
    return int(config.get("numerics.substeps", 4) if substeps is None else substeps)


def _md_step_size(axes: Sequence[Sequence[float]], substeps: Optional[int]) -> float:
    substeps = _substeps(substeps)
    spacing = max(float(np.max(np.abs(np.diff(a)))) for a in axes if len(a) > 1)
    return spacing / substeps


def solve_direct(
    problem: RiccatiProblem,
    interval: Optional[Tuple[float, float]] = None,
    steps: Optional[int] = None,
    axes: Optional[Sequence[Sequence[float]]] = None,
    order: Optional[Sequence[int]] = None,
    substeps: Optional[int] = None,
    blowup_scale: Optional[float] = None,
) -> RiccatiSolution:
    """RK4 on the Riccati vector field; raises DivergenceError at blow-up"""
    scale = _blowup_scale(blowup_scale)
    ctx, side = problem.ctx, problem.side

    if problem.dim == 1 and axes is None:
        if interval is None:
            raise ValueError("a one-dimensional problem needs an interval")
        steps = int(config.get("numerics.default_steps", 400) if steps is None else steps)
        lam = problem.lam
        lo, hi = float(interval[0]), float(interval[1])
        nodes = np.linspace(lo, hi, steps + 1)
        h = (hi - lo) / steps

        def f(x: float, y: CMatrix) -> CMatrix:
            return rhs(ctx, lam(x), y, side)

        y = problem.initial.copy()
        values = np.empty((steps + 1,) + y.shape, dtype=np.complex128)
        derivatives = np.empty_like(values)
        values[0] = y
        for k in range(steps):
            derivatives[k] = f(nodes[k], y)
            new = rk4_step(f, nodes[k], h, y)
            if _escaped(y, new, scale):
                logger.warning(f"Riccati solution blows up near x={nodes[k + 1]:.6g}")
                raise DivergenceError(
                    f"Riccati solution escapes at x={nodes[k + 1]:.6g}",
                    coordinate=(nodes[k + 1],),
                    index=k + 1,
                    last_state=y,
                )
            y = new
            values[k + 1] = y
        derivatives[steps] = f(nodes[steps], y)
        logger.debug(f"solve_direct: {steps} rk4 steps on [{lo}, {hi}] ({side} side)")
        trajectory = Trajectory(nodes, values, "right", derivatives, {"method": "rk4", "steps": steps})
        return RiccatiSolution(ctx, side, "direct", trajectory=trajectory)

    if axes is None:
        raise ValueError("a multidimensional problem needs grid axes")
    fields = problem.fields
    h_ref = _md_step_size(axes, substeps)

    def field(axis: int, points: NDArray[np.float64], y: CMatrix) -> CMatrix:
        return rhs(ctx, evaluate_batch(fields[axis], points), y, side)

    rk4 = rk4_staircase_step(field)

    def step(axis: int, points: NDArray[np.float64], h: float, y: CMatrix) -> CMatrix:
        try:
            new = rk4(axis, points, h, y)
        except DivergenceError as e:
            logger.warning(f"Riccati solution blows up near {e.coordinate}")
            raise
        escaped = _escaped(y, new, scale)
        if np.any(escaped):
            k = int(np.argmax(escaped))
            point = points[k].copy()
            point[axis] += h
            logger.warning(f"Riccati solution blows up near {tuple(point)}")
            raise DivergenceError(
                f"Riccati solution escapes near {tuple(point)}", coordinate=point, index=k, last_state=y[k]
            )
        return new

    values = integrate_staircase(step, problem.initial, axes, order, substeps)
    grid = FieldOnGrid(
        tuple(np.asarray(a, dtype=np.float64) for a in axes),
        values,
        {"method": "rk4-staircase", "order": list(order or range(len(axes))), "step": h_ref},
    )
    return RiccatiSolution(ctx, side, "direct", grid=grid)


def _first_failure(failed: NDArray[np.bool_]) -> Tuple[int, ...]:
    """Failing grid index closest to the origin (ties broken in C order)"""
    indices = np.argwhere(failed)
    best = indices[np.argmin(indices.sum(axis=1))]
    return tuple(int(i) for i in best)


def _block_of_failure(problem: RiccatiProblem, matrix: CMatrix) -> Optional[int]:
    try:
        gauss_decompose(problem.ctx, matrix)
    except NotDecomposableError as e:
        return e.block_index
    return None


def solve_by_linearization(
    problem: RiccatiProblem,
    interval: Optional[Tuple[float, float]] = None,
    steps: Optional[int] = None,
    axes: Optional[Sequence[Sequence[float]]] = None,
    order: Optional[Sequence[int]] = None,
    substeps: Optional[int] = None,
    method: Optional[str] = None,
    blowup_scale: Optional[float] = None,
) -> RiccatiSolution:
    """Linear flow from the initial point, then one Gauss step per sample

    Raises BlowupAtNode at the first node where the blow-up rule triggers.
    """
    scale = _blowup_scale(blowup_scale)
    ctx, side = problem.ctx, problem.side
    one_dim = problem.dim == 1 and axes is None

    if one_dim:
        if interval is None:
            raise ValueError("a one-dimensional problem needs an interval")
        linear = solve_linear_1d(problem.lam, problem.initial, interval, steps, "right", method)
        samples = linear.values
        ndim, steps_per_sample = 1, 1
    else:
        if axes is None:
            raise ValueError("a multidimensional problem needs grid axes")
        linear_grid = solve_linear_md(
            problem.fields, problem.initial, axes, order, "right", method, substeps
        )
        samples = linear_grid.values
        ndim, steps_per_sample = len(axes), _substeps(substeps)

    if side == "upper":
        factors, ok = gauss_decompose_stack(ctx, samples)
        solved = factors.upper
    else:
        factors, ok = reverse_gauss_decompose_stack(ctx, samples)
        solved = factors.lower
    # samples are steps_per_sample integrator steps apart
    failed = ~ok | _escaped_on_grid(solved, ndim, scale * steps_per_sample)

    if np.any(failed):
        if one_dim:
            k = int(np.argmax(failed))
            node: object = k
            coordinate: Tuple[float, ...] = (float(linear.nodes[k]),)
        else:
            node = _first_failure(failed)
            coordinate = linear_grid.coordinate(node)  # type: ignore[arg-type]
        block = _block_of_failure(problem, samples[node]) if side == "upper" else None
        logger.warning(f"linearized Riccati solution leaves the decomposable set at {coordinate}")
        raise BlowupAtNode(
            f"Gauss factor of the linear flow escapes at node {node} ({coordinate})",
            node=node,  # type: ignore[arg-type]
            coordinate=coordinate,
            block_index=block,
        )

    if one_dim:
        lam_values = np.stack([problem.lam(x) for x in linear.nodes])
        derivatives = rhs(ctx, lam_values, solved, side)
        trajectory = Trajectory(linear.nodes, solved, "right", derivatives, dict(linear.meta))
        return RiccatiSolution(ctx, side, "linearization", trajectory=trajectory)

    grid = FieldOnGrid(linear_grid.axes, solved, dict(linear_grid.meta))
    return RiccatiSolution(ctx, side, "linearization", grid=grid)


def solve_two_ways(problem: RiccatiProblem, **kwargs) -> Tuple[RiccatiSolution, RiccatiSolution, float]:
    """Both solvers on the same problem and their max discrepancy"""
    direct = solve_direct(problem, **{k: v for k, v in kwargs.items() if k != "method"})
    linear = solve_by_linearization(problem, **kwargs)
    return direct, linear, float(np.max(np.abs(direct.values - linear.values)))


