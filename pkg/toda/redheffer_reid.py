"""
The auxiliary linear system d_{-i} psi = psi lam_{-i}, d_{+i} psi = -lam_{+i} psi
and the pair of multidimensional Riccati equations it linearizes

  lam_{-i} = xi_+^{-1} (c_{-i} + gamma_-^{-1} d_{-i} gamma_-) xi_+ + xi_+^{-1} d_{-i} xi_+   (on z^-)
  lam_{+i} = xi_-^{-1} d_{+i} xi_- + xi_-^{-1} (gamma_+^{-1} d_{+i} gamma_+ + c_{+i}) xi_-   (on z^+)

For two blocks, gamma_- = diag(beta_{-1}, beta_{-2}), c_{-i} = [[0, 0], [X_{-i}, 0]]
and xi_+ = [[I, Xi], [0, I]] (mirror on the + side). The upper block U_- of psi_{>0}
solves the upper-side equation with lam_{-i}; the lower block U_+ of psi_{<0}^{-1}
solves the lower-side equation with lam_{+i}.
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from algebra.errors import BlowupError, ShapeError
from algebra.gradation import Part, project
from algebra.matrices import CMatrix, min_singular, spectral_norm
from config.settings import config
from flow.fields import MatrixField, evaluate_on_grid, left_log_derivative, product
from flow.grids import FieldOnGrid, ResidualReport, gradient_values, grid_max_norm
from flow.integrate import zero_curvature_residual
from riccati.problem import riccati_blocks_2
from toda.construction import TodaSolution
from toda.data import MINUS, PLUS, TodaData, TodaGrid, check_toda_data, integrability_gate

logger = logging.getLogger(__name__)

Fields = Tuple[MatrixField, ...]


def redheffer_reid_fields(data: TodaData, grid: Optional[TodaGrid] = None) -> Tuple[Fields, Fields]:
    """lam_{-i} on z^- and lam_{+i} on z^+; with a grid the data is checked first

    Raises IntegrabilityError when the grid check fails the integrability gate.
    """
    if grid is not None:
        check_toda_data(data, grid, gate=integrability_gate())
    xi_plus, xi_minus = data.xi_plus, data.xi_minus
    xi_plus_inv, xi_minus_inv = xi_plus.inverse(), xi_minus.inverse()  # type: ignore[union-attr]

    lam_minus = tuple(
        product(xi_plus_inv, c + left_log_derivative(data.gamma_minus, i), xi_plus)  # type: ignore[arg-type]
        + left_log_derivative(xi_plus, i)  # type: ignore[arg-type]
        for i, c in enumerate(data.c_minus)
    )
    lam_plus = tuple(
        left_log_derivative(xi_minus, i)  # type: ignore[arg-type]
        + product(xi_minus_inv, left_log_derivative(data.gamma_plus, i) + c, xi_minus)  # type: ignore[arg-type]
        for i, c in enumerate(data.c_plus)
    )
    for k, f in enumerate(lam_minus):
        f.name = f"lam_minus_{k + 1}"
    for k, f in enumerate(lam_plus):
        f.name = f"lam_plus_{k + 1}"
    return lam_minus, lam_plus


def redheffer_reid_residual(lam_minus: Fields, lam_plus: Fields, data: TodaData, grid: TodaGrid) -> ResidualReport:
    """Zero curvature of each family and the grading constraint on lam"""
    ctx = data.ctx
    report = ResidualReport(meta={"d": data.d})
    report.add("rr_curvature_minus", zero_curvature_residual(lam_minus, grid.minus_axes, "right")["zero_curvature"])
    report.add("rr_curvature_plus", zero_curvature_residual(lam_plus, grid.plus_axes, "right")["zero_curvature"])

    minus = plus = 0.0
    for lam, c in zip(lam_minus, data.c_minus):
        diff = project(ctx, grid.sample(lam, MINUS), Part.NEGATIVE) - grid.sample(c, MINUS)
        minus = max(minus, grid_max_norm(diff))
    for lam, c in zip(lam_plus, data.c_plus):
        diff = project(ctx, grid.sample(lam, PLUS), Part.POSITIVE) - grid.sample(c, PLUS)
        plus = max(plus, grid_max_norm(diff))
    report.add("rr_grading_minus", minus)
    report.add("rr_grading_plus", plus)
    return report


def _two_block(data: TodaData) -> Tuple[slice, slice]:
    if data.ctx.p != 2:
        raise ShapeError("the two-block parametrization needs a 2-block gradation")
    return data.ctx.block_slice(1), data.ctx.block_slice(2)


def two_block_components(data: TodaData, sign: str, x) -> Dict[str, List[CMatrix]]:
    """Blocks A, B, C, D of every lam_{sign i} at the chiral point x, from beta, X and Xi

    Minus side, with a_k = beta_{-k}^{-1} d beta_{-k} and Xi = (xi_+)_{12}:
      A = a_1 - Xi X,  B = a_1 Xi - Xi a_2 - Xi X Xi + d Xi,  C = X,  D = a_2 + X Xi
    Plus side, with b_k = beta_{+k}^{-1} d beta_{+k} and Xi = (xi_-)_{21}:
      A = b_1 + X Xi,  B = X,  C = b_2 Xi - Xi b_1 - Xi X Xi + d Xi,  D = b_2 - Xi X
    """
    s1, s2 = _two_block(data)
    x = np.asarray(x, dtype=np.float64)
    if sign == MINUS:
        gamma, cs, xi, xi_block = data.gamma_minus, data.c_minus, data.xi_plus, (s1, s2)
    elif sign == PLUS:
        gamma, cs, xi, xi_block = data.gamma_plus, data.c_plus, data.xi_minus, (s2, s1)
    else:
        raise ValueError(f"sign must be {MINUS!r} or {PLUS!r}")

    beta1, beta2 = gamma.block(s1, s1), gamma.block(s2, s2)
    Xi_field = xi.block(*xi_block)  # type: ignore[union-attr]
    Xi = Xi_field(x)
    out: Dict[str, List[CMatrix]] = {"A": [], "B": [], "C": [], "D": []}
    for i, c in enumerate(cs):
        log1 = np.linalg.solve(beta1(x), beta1.derivative(i, x))
        log2 = np.linalg.solve(beta2(x), beta2.derivative(i, x))
        dXi = Xi_field.derivative(i, x)
        if sign == MINUS:
            X = c(x)[s2, s1]
            blocks = (log1 - Xi @ X, log1 @ Xi - Xi @ log2 - Xi @ X @ Xi + dXi, X, log2 + X @ Xi)
        else:
            X = c(x)[s1, s2]
            blocks = (log1 + X @ Xi, X, log2 @ Xi - Xi @ log1 - Xi @ X @ Xi + dXi, log2 - Xi @ X)
        for key, value in zip("ABCD", blocks):
            out[key].append(value)
    return out


def _resolvent(matrix: CMatrix, tgrid_axes, context: str) -> CMatrix:
    """Stack inverse; the first singular point raises BlowupError with its coordinate"""
    tol = float(config.get("numerics.gauss_tol", 1e-10))
    bad = ~(min_singular(matrix) > tol * spectral_norm(matrix))
    if np.any(bad):
        index = tuple(int(i) for i in np.argwhere(bad)[0])
        coordinate = tuple(float(a[i]) for a, i in zip(tgrid_axes, index))
        logger.warning(f"{context} resolvent is singular at {coordinate}")
        raise BlowupError(f"{context} solution blows up at {coordinate}", coordinate=coordinate)
    return np.linalg.inv(matrix)


def riccati_md_solutions(
    data: TodaData, sol: TodaSolution, m_minus: CMatrix, m_plus: CMatrix
) -> Tuple[FieldOnGrid, FieldOnGrid]:
    """General solutions U_- (on the z^- sub-grid) and U_+ (on the z^+ sub-grid)

    U_- = (xi_+)_{12} - beta_{-1}^{-1} (I - m_- (mu_-)_{21})^{-1} m_- beta_{-2}
    U_+ = (xi_-)_{21} - beta_{+2}^{-1} m_+ (I - (mu_+)_{12} m_+)^{-1} beta_{+1}
    """
    s1, s2 = _two_block(data)
    n1, n2 = data.ctx.sizes
    m_minus = np.asarray(m_minus, dtype=np.complex128)
    m_plus = np.asarray(m_plus, dtype=np.complex128)
    if m_minus.shape != (n1, n2) or m_plus.shape != (n2, n1):
        raise ShapeError(f"m_minus must be {n1}x{n2} and m_plus {n2}x{n1}")
    grid = sol.grid

    gamma_m = grid.sample(data.gamma_minus, MINUS)
    xi_p = grid.sample(data.xi_plus, MINUS)  # type: ignore[arg-type]
    mu_21 = sol.mu_minus.values[..., s2, s1]
    resolvent = _resolvent(np.eye(n1) - m_minus @ mu_21, grid.minus_axes, "U_minus")
    beta1_inv = np.linalg.inv(gamma_m[..., s1, s1])
    U_minus = xi_p[..., s1, s2] - beta1_inv @ resolvent @ m_minus @ gamma_m[..., s2, s2]

    gamma_p = grid.sample(data.gamma_plus, PLUS)
    xi_m = grid.sample(data.xi_minus, PLUS)  # type: ignore[arg-type]
    mu_12 = sol.mu_plus.values[..., s1, s2]
    resolvent = _resolvent(np.eye(n1) - mu_12 @ m_plus, grid.plus_axes, "U_plus")
    beta2_inv = np.linalg.inv(gamma_p[..., s2, s2])
    U_plus = xi_m[..., s2, s1] - beta2_inv @ m_plus @ resolvent @ gamma_p[..., s1, s1]

    return (
        FieldOnGrid(grid.minus_axes, U_minus, {"side": "upper", "block": [1, 2]}),
        FieldOnGrid(grid.plus_axes, U_plus, {"side": "lower", "block": [2, 1]}),
    )


def _riccati_defect(lam: Fields, U: FieldOnGrid, s1: slice, s2: slice, side: str) -> float:
    worst = 0.0
    for i, f in enumerate(lam):
        values = evaluate_on_grid(f, U.axes)
        A, B = values[..., s1, s1], values[..., s1, s2]
        C, D = values[..., s2, s1], values[..., s2, s2]
        value = gradient_values(U.values, U.axes, i) - riccati_blocks_2(A, B, C, D, U.values, side)
        worst = max(worst, grid_max_norm(value, U.dim))
    return worst


def riccati_md_residual(
    data: TodaData, lam_minus: Fields, lam_plus: Fields, U_minus: FieldOnGrid, U_plus: FieldOnGrid
) -> ResidualReport:
    """d_i U - RHS(U) by central differences: upper side on z^-, lower side on z^+"""
    s1, s2 = _two_block(data)
    report = ResidualReport(meta={"d": data.d})
    report.add("riccati_minus", _riccati_defect(lam_minus, U_minus, s1, s2, "upper"))
    report.add("riccati_plus", _riccati_defect(lam_plus, U_plus, s1, s2, "lower"))
    return report
