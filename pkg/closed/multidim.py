"""
Closed form for the multidimensional 2-block system with lam_i = [[0, 0], [C_i, 0]]

The upper-side solution is U = (I + m S)^{-1} m with d_i S = C_i, S(origin) = 0.
S exists only for a curl-free family, d_i C_j = d_j C_i, which is checked on a
small box grid before any line integral is taken.
"""

import itertools
import logging
from typing import Optional, Sequence

import numpy as np

from algebra.errors import NotIntegrableError, ShapeError
from algebra.gradation import GradedContext
from algebra.matrices import CMatrix
from config.settings import config
from flow.fields import MatrixField, assemble_blocks
from closed.one_dim import resolve
from closed.quadrature import cumulative_simpson, even_steps
from riccati.problem import RiccatiProblem, initial_from_block

logger = logging.getLogger(__name__)

CURL_NODES = 5


def _check_family(C_fields: Sequence[MatrixField]) -> int:
    d = len(C_fields)
    if d == 0:
        raise ShapeError("need at least one direction field")
    shape = C_fields[0].shape
    for f in C_fields:
        if f.dim_in != d or f.shape != shape:
            raise ShapeError(f"{d} direction fields must share a shape and take {d} coordinates")
    return d


def curl_residual(
    C_fields: Sequence[MatrixField],
    point: Sequence[float],
    origin: Optional[Sequence[float]] = None,
    nodes: int = CURL_NODES,
) -> float:
    """max |d_i C_j - d_j C_i| on a nodes^d grid spanning the box from origin to point"""
    d = _check_family(C_fields)
    point = np.asarray(point, dtype=np.float64)
    origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=np.float64)
    axes = [np.linspace(o, p, nodes) for o, p in zip(origin, point)]
    worst = 0.0
    for index in itertools.product(range(nodes), repeat=d):
        x = np.array([axes[k][i] for k, i in enumerate(index)])
        for i, j in itertools.combinations(range(d), 2):
            curl = C_fields[j].derivative(i, x) - C_fields[i].derivative(j, x)
            worst = max(worst, float(np.max(np.abs(curl))))
    return worst


def potential(
    C_fields: Sequence[MatrixField],
    point: Sequence[float],
    origin: Optional[Sequence[float]] = None,
    steps: Optional[int] = None,
    gate: Optional[float] = None,
) -> CMatrix:
    """S(point) with d_i S = C_i, S(origin) = 0

    Integrates along the staircase origin -> point one coordinate at a time,
    Simpson on each leg. Raises NotIntegrableError when the family has curl.
    """
    d = _check_family(C_fields)
    point = np.asarray(point, dtype=np.float64)
    origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=np.float64)
    if point.shape != (d,) or origin.shape != (d,):
        raise ShapeError(f"point and origin need {d} coordinates")
    gate = float(config.get("numerics.integrability_gate", 1e-8) if gate is None else gate)
    curl = curl_residual(C_fields, point, origin)
    if curl > gate:
        raise NotIntegrableError(f"coefficient family has curl {curl:.3e} above {gate:.1e}; no potential exists")

    steps = even_steps(config.get("numerics.default_steps", 400) if steps is None else steps)
    S = np.zeros(C_fields[0].shape, dtype=np.complex128)
    corner = origin.copy()
    for axis in range(d):
        length = point[axis] - origin[axis]
        if length == 0.0:
            continue
        leg = np.linspace(origin[axis], point[axis], steps + 1)
        samples = []
        for t in leg:
            corner[axis] = t
            samples.append(C_fields[axis](corner))
        S = S + cumulative_simpson(np.stack(samples), length / steps)[-1]
        corner[axis] = point[axis]
    return S


def solve_md_nilpotent(
    C_fields: Sequence[MatrixField],
    m: CMatrix,
    point: Sequence[float],
    origin: Optional[Sequence[float]] = None,
    steps: Optional[int] = None,
) -> CMatrix:
    """U(point) = (I + m S)^{-1} m; BlowupError where I + m S is singular"""
    _check_family(C_fields)
    m = np.asarray(m, dtype=np.complex128)
    n2, n1 = C_fields[0].shape
    if m.shape != (n1, n2):
        raise ShapeError(f"m must be {n1}x{n2}, got {m.shape}")
    S = potential(C_fields, point, origin, steps)
    return resolve(np.eye(n1) + m @ S, m, point)


def md_nilpotent_problem(C_fields: Sequence[MatrixField], m: CMatrix) -> RiccatiProblem:
    """The same system as a generic multidimensional RiccatiProblem"""
    _check_family(C_fields)
    n2, n1 = C_fields[0].shape
    ctx = GradedContext.from_sizes((n1, n2))
    fields = tuple(assemble_blocks([[None, None], [C, None]], ctx.sizes) for C in C_fields)
    return RiccatiProblem(ctx, fields, initial_from_block(ctx, m, "upper"), "upper")
