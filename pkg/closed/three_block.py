"""
Closed form for the 3-block upper-side system with strictly lower coefficients

lam = [[0, 0, 0], [C21, 0, 0], [C31, C32, 0]] integrates by quadratures:
S21' = C21, S32' = C32, S31' = C31 + S32 C21, and the Gauss factors of
m psi with psi = [[I, 0, 0], [S21, I, 0], [S31, S32, I]] give U12, U13, U23.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from algebra.errors import ShapeError
from algebra.gradation import GradedContext, unit_triangular
from algebra.matrices import CMatrix
from config.settings import config
from flow.fields import MatrixField, assemble_blocks
from closed.one_dim import resolve
from closed.quadrature import cumulative_simpson, even_steps
from riccati.problem import RiccatiProblem

logger = logging.getLogger(__name__)


def _sizes(C21: MatrixField, C31: MatrixField, C32: MatrixField) -> Tuple[int, int, int]:
    n2, n1 = C21.shape
    n3, n2b = C32.shape
    if n2b != n2 or C31.shape != (n3, n1):
        raise ShapeError(f"inconsistent block shapes C21={C21.shape}, C31={C31.shape}, C32={C32.shape}")
    for f in (C21, C31, C32):
        if f.dim_in != 1:
            raise ShapeError(f"{f.name} must depend on one coordinate")
    return n1, n2, n3


def three_block_problem(
    C21: MatrixField,
    C31: MatrixField,
    C32: MatrixField,
    m12: CMatrix,
    m13: CMatrix,
    m23: CMatrix,
) -> RiccatiProblem:
    """The same system as a generic RiccatiProblem, for the direct solvers"""
    sizes = _sizes(C21, C31, C32)
    ctx = GradedContext.from_sizes(sizes)
    lam = assemble_blocks([[None, None, None], [C21, None, None], [C31, C32, None]], sizes)
    initial = unit_triangular(ctx, {(1, 2): m12, (1, 3): m13, (2, 3): m23}, "upper")
    return RiccatiProblem(ctx, (lam,), initial, "upper")


def solve_three_block_nilpotent(
    C21: MatrixField,
    C31: MatrixField,
    C32: MatrixField,
    m12: CMatrix,
    m13: CMatrix,
    m23: CMatrix,
    x: float,
    steps: Optional[int] = None,
) -> Dict[str, CMatrix]:
    """U12, U13, U23 at x, keyed "U12", "U13", "U23"; BlowupError where a resolvent is singular"""
    n1, n2, n3 = _sizes(C21, C31, C32)
    m12, m13, m23 = (np.asarray(a, dtype=np.complex128) for a in (m12, m13, m23))
    if m12.shape != (n1, n2) or m13.shape != (n1, n3) or m23.shape != (n2, n3):
        raise ShapeError("initial blocks do not match the coefficient blocks")

    steps = even_steps(config.get("numerics.default_steps", 400) if steps is None else steps)
    nodes = np.linspace(0.0, x, steps + 1)
    h = x / steps
    c21 = np.stack([C21(t) for t in nodes])
    c31 = np.stack([C31(t) for t in nodes])
    c32 = np.stack([C32(t) for t in nodes])

    S21 = cumulative_simpson(c21, h)
    S32 = cumulative_simpson(c32, h)
    S31 = cumulative_simpson(c31 + S32 @ c21, h)[-1]
    S21, S32 = S21[-1], S32[-1]

    K = np.eye(n1) + m12 @ S21 + m13 @ S31
    top = m12 + m13 @ S32
    U12 = resolve(K, top, x)
    U13 = resolve(K, m13, x)

    middle = S21 + m23 @ S31
    schur = np.eye(n2) + m23 @ S32 - middle @ U12
    U23 = resolve(schur, m23 - middle @ U13, x)
    logger.debug(f"three-block closed form at x={x:.6g} with {steps} Simpson steps")
    return {"U12": U12, "U13": U13, "U23": U23}
