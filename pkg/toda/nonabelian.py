"""
The maximally nonabelian family: n = d + 1, gradation (d, 1)

Free data are the scalar functions F_-(z^-), F_+(z^+) and H_{-i}(z^-), H_{+i}(z^+).
With J_-[i, j] = d_{-i} H_{-j} and J_+[i, j] = d_{+i} H_{+j}:

  gamma_- = diag((F_- J_-)^{-1}, 1 / F_-)      gamma_+ = diag(F_+ J_+^T, F_+)
  (c_{-i})[d, i] = 1                           (c_{+i})[i, d] = 1

Then gamma_- c_{-i} gamma_-^{-1} has bottom row d_{-i} H_-, so the mu flows
integrate exactly to (mu_-)_{21} = H_- - H_-(0) and (mu_+)_{12} = H_+ - H_+(0),
and the Riccati solutions take the logarithmic form

  U_{-i} = xi_{+i} + d_{-i} log(1 - (H_- - H_-(0)) . m_-)
  U_{+i} = xi_{-i} + d_{+i} log(1 - m_+ . (H_+ - H_+(0)))
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from algebra.errors import ShapeError, SingularError
from algebra.gradation import GradedContext
from algebra.matrices import CMatrix
from flow.fields import MatrixField, constant, coordinate_symbols, from_sympy, inverse_field
from flow.grids import FieldOnGrid
from toda.data import TodaData, TodaGrid

logger = logging.getLogger(__name__)

Expr = Union[str, float, sp.Expr]


def _sympify(value: Expr, symbols: Sequence[sp.Symbol]) -> sp.Expr:
    local = {str(s): s for s in symbols}
    return sp.sympify(value, locals=local)


@dataclass(frozen=True)
class NonabelianSpec:
    """Free functions of the family, as SymPy expressions in zm1..zmd / zp1..zpd

    xi_plus (d entries in z^-) fills the (1, 2) column of xi_+; xi_minus
    (d entries in z^+) fills the (2, 1) row of xi_-. Both default to zero.
    """

    d: int
    F_minus: Expr
    F_plus: Expr
    H_minus: Sequence[Expr]
    H_plus: Sequence[Expr]
    xi_plus: Optional[Sequence[Expr]] = None
    xi_minus: Optional[Sequence[Expr]] = None

    def __post_init__(self):
        if self.d < 1:
            raise ShapeError(f"d must be >= 1, got {self.d}")
        zm, zp = self.symbols
        object.__setattr__(self, "F_minus", _sympify(self.F_minus, zm))
        object.__setattr__(self, "F_plus", _sympify(self.F_plus, zp))
        for name, syms in (("H_minus", zm), ("H_plus", zp), ("xi_plus", zm), ("xi_minus", zp)):
            value = getattr(self, name)
            if value is None:
                value = [0] * self.d
            if len(value) != self.d:
                raise ShapeError(f"{name} needs {self.d} entries, got {len(value)}")
            object.__setattr__(self, name, tuple(_sympify(v, syms) for v in value))

    @property
    def symbols(self) -> Tuple[Tuple[sp.Symbol, ...], Tuple[sp.Symbol, ...]]:
        return coordinate_symbols("zm", self.d), coordinate_symbols("zp", self.d)

    @property
    def ctx(self) -> GradedContext:
        return GradedContext.from_sizes((self.d, 1))

    def jacobian(self, side: str) -> sp.Matrix:
        """J[i, j] = d_i H_j on the given side"""
        zm, zp = self.symbols
        syms, H = (zm, self.H_minus) if side == "minus" else (zp, self.H_plus)
        return sp.Matrix(self.d, self.d, lambda i, j: sp.diff(H[j], syms[i]))

    def shifted(self, side: str) -> Tuple[sp.Expr, ...]:
        """H - H(origin)"""
        zm, zp = self.symbols
        syms, H = (zm, self.H_minus) if side == "minus" else (zp, self.H_plus)
        origin = {s: 0 for s in syms}
        return tuple(h - h.subs(origin) for h in H)  # type: ignore[union-attr]


def _grade_one_fields(d: int, lower: bool) -> Tuple[MatrixField, ...]:
    fields = []
    for i in range(d):
        value = np.zeros((d + 1, d + 1))
        if lower:
            value[d, i] = 1.0
        else:
            value[i, d] = 1.0
        fields.append(constant(value, d, name=f"c_{'minus' if lower else 'plus'}_{i + 1}"))
    return tuple(fields)


def _check_nonsingular(spec: NonabelianSpec, grid: Optional[TodaGrid]):
    """det J and F must not vanish on the sub-grids (at the origin without a grid)"""
    zm, zp = spec.symbols
    for side, syms, F in (("minus", zm, spec.F_minus), ("plus", zp, spec.F_plus)):
        det = sp.lambdify(syms, spec.jacobian(side).det() * F, modules="numpy")
        axes = None if grid is None else (grid.minus_axes if side == "minus" else grid.plus_axes)
        if axes is None:
            values = np.atleast_1d(det(*([0.0] * spec.d)))
        else:
            mesh = np.meshgrid(*axes, indexing="ij")
            values = np.broadcast_to(det(*mesh), mesh[0].shape)
        if np.any(np.abs(values) < 1e-12):
            raise SingularError(f"F_{side} det J_{side} vanishes on the {side} grid")


def maximally_nonabelian_data(spec: NonabelianSpec, grid: Optional[TodaGrid] = None) -> TodaData:
    """TodaData for the family; SingularError when F or the Jacobian of H degenerates"""
    _check_nonsingular(spec, grid)
    d = spec.d
    zm, zp = spec.symbols

    F_m, F_p = spec.F_minus, spec.F_plus
    inverse_gamma_minus = sp.diag(F_m * spec.jacobian("minus"), F_m)
    gamma_minus = inverse_field(from_sympy(inverse_gamma_minus, zm, name="gamma_minus^-1"))
    gamma_minus.name = "gamma_minus"
    gamma_plus = from_sympy(sp.diag(F_p * spec.jacobian("plus").T, F_p), zp, name="gamma_plus")

    xi_plus = sp.eye(d + 1)
    xi_minus = sp.eye(d + 1)
    for i in range(d):
        xi_plus[i, d] = spec.xi_plus[i]  # type: ignore[index]
        xi_minus[d, i] = spec.xi_minus[i]  # type: ignore[index]

    logger.debug(f"maximally nonabelian data, d={d}")
    return TodaData(
        ctx=spec.ctx,
        gamma_minus=gamma_minus,
        gamma_plus=gamma_plus,
        c_minus=_grade_one_fields(d, lower=True),
        c_plus=_grade_one_fields(d, lower=False),
        xi_minus=from_sympy(xi_minus, zp, name="xi_minus"),
        xi_plus=from_sympy(xi_plus, zm, name="xi_plus"),
        meta={"family": "maximally_nonabelian", "d": d},
    )


def nonabelian_log_formula(
    spec: NonabelianSpec, m_minus: CMatrix, m_plus: CMatrix, grid: TodaGrid
) -> Tuple[FieldOnGrid, FieldOnGrid]:
    """U_- (d x 1, on z^-) and U_+ (1 x d, on z^+) from the logarithmic closed form"""
    d = spec.d
    m_minus = np.asarray(m_minus, dtype=np.complex128).reshape(d)
    m_plus = np.asarray(m_plus, dtype=np.complex128).reshape(d)
    zm, zp = spec.symbols
    H_m, H_p = spec.shifted("minus"), spec.shifted("plus")

    log_minus = sp.log(1 - sum(h * complex(m) for h, m in zip(H_m, m_minus)))
    log_plus = sp.log(1 - sum(complex(m) * h for h, m in zip(H_p, m_plus)))
    U_minus = sp.Matrix(d, 1, lambda i, _: spec.xi_plus[i] + sp.diff(log_minus, zm[i]))  # type: ignore[index]
    U_plus = sp.Matrix(1, d, lambda _, i: spec.xi_minus[i] + sp.diff(log_plus, zp[i]))  # type: ignore[index]

    def sample(matrix: sp.Matrix, syms, axes) -> CMatrix:
        compiled = sp.lambdify(syms, matrix, modules="numpy")
        mesh = np.meshgrid(*axes, indexing="ij")
        out = np.empty(mesh[0].shape + matrix.shape, dtype=np.complex128)
        for index in np.ndindex(*mesh[0].shape):
            out[index] = np.asarray(compiled(*(m[index] for m in mesh)), dtype=np.complex128)
        return out

    return (
        FieldOnGrid(grid.minus_axes, sample(U_minus, zm, grid.minus_axes), {"formula": "log", "side": "upper"}),
        FieldOnGrid(grid.plus_axes, sample(U_plus, zp, grid.plus_axes), {"formula": "log", "side": "lower"}),
    )
