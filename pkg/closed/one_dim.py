"""
Closed forms for the 2-block Riccati equation U' = B - AU + UD - UCU, U(0) = m

  B = 0:          U = Q^{-1} (I + m S)^{-1} m R,  Q' = QA, R' = RD, S' = R C Q^{-1}
  C = B, A=D=0:   U = (F + H + m(F - H))^{-1} (F - H + m(F + H)),  F' = FB, H' = -HB
  constant B, C:  psi = exp(x [[0, B], [C, 0]]),  U = (psi11 + m psi21)^{-1} (psi12 + m psi22)
"""

import logging
from dataclasses import dataclass
from math import factorial
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from algebra.errors import BlowupError, ShapeError, SingularError
from algebra.gradation import GradedContext
from algebra.matrices import CMatrix, inverse, matexp, min_singular, spectral_norm
from config.settings import config
from flow.fields import MatrixField, constant
from flow.grids import Trajectory
from flow.integrate import path_ordered_exp, solve_linear_1d
from closed.quadrature import cumulative_simpson, even_steps
from riccati.problem import RiccatiProblem

logger = logging.getLogger(__name__)


def resolve(left: CMatrix, right: CMatrix, at: Union[float, Sequence[float]]) -> CMatrix:
    """left^{-1} right, with a singular left factor reported as blow-up at `at`

    The left factor counts as singular when its smallest singular value is at
    most numerics.gauss_tol * max(1, ||left||_2).
    """
    coordinate = tuple(float(c) for c in np.atleast_1d(at))
    left = np.asarray(left, dtype=np.complex128)
    tol = float(config.get("numerics.gauss_tol", 1e-10))
    floor = tol * max(1.0, float(spectral_norm(left)))
    try:
        if float(min_singular(left)) <= floor:
            raise SingularError(f"min singular value {float(min_singular(left)):.3e} below {floor:.1e}")
        return inverse(left) @ right
    except SingularError as e:
        logger.warning(f"closed-form factor is singular at {coordinate}")
        raise BlowupError(f"closed-form solution blows up at {coordinate}: {e}", coordinate=coordinate)


def _steps(steps: Optional[int]) -> int:
    return even_steps(config.get("numerics.default_steps", 400) if steps is None else steps)


@dataclass(frozen=True)
class TriangularCoeffs1D:
    """lam = [[A, 0], [C, D]] on one coordinate, with U(0) = m; A or D None means zero"""

    C: MatrixField
    m: CMatrix
    A: Optional[MatrixField] = None
    D: Optional[MatrixField] = None

    def __post_init__(self):
        n2, n1 = self.C.shape
        object.__setattr__(self, "m", np.asarray(self.m, dtype=np.complex128))
        if self.m.shape != (n1, n2):
            raise ShapeError(f"m must be {n1}x{n2}, got {self.m.shape}")
        if self.A is not None and self.A.shape != (n1, n1):
            raise ShapeError(f"A must be {n1}x{n1}")
        if self.D is not None and self.D.shape != (n2, n2):
            raise ShapeError(f"D must be {n2}x{n2}")
        if self.C.dim_in != 1:
            raise ShapeError("coefficients must depend on one coordinate")

    @property
    def sizes(self) -> Tuple[int, int]:
        n2, n1 = self.C.shape
        return n1, n2

    def problem(self) -> RiccatiProblem:
        return RiccatiProblem.two_block(GradedContext.from_sizes(self.sizes), self.A, None, self.C, self.D, self.m)


def _block_trajectory(field: Optional[MatrixField], size: int, x: float, steps: int) -> Trajectory:
    if field is None:
        nodes = np.linspace(0.0, x, steps + 1)
        eye = np.broadcast_to(np.eye(size, dtype=np.complex128), (steps + 1, size, size)).copy()
        return Trajectory(nodes, eye, "right", np.zeros_like(eye))
    return solve_linear_1d(field, np.eye(size), (0.0, x), steps, "right", "rk4")


def reduce_b_zero_gauge(A: Optional[MatrixField], D: Optional[MatrixField], sizes: Tuple[int, int], x: float, steps: Optional[int] = None) -> Trajectory:
    """chi = diag(Q, R) with Q' = QA, R' = RD; its gauge action removes the grade-zero part"""
    steps = _steps(steps)
    n1, n2 = sizes
    Q = _block_trajectory(A, n1, x, steps)
    R = _block_trajectory(D, n2, x, steps)
    n = n1 + n2
    values = np.zeros((steps + 1, n, n), dtype=np.complex128)
    derivatives = np.zeros_like(values)
    values[:, :n1, :n1], values[:, n1:, n1:] = Q.values, R.values
    derivatives[:, :n1, :n1], derivatives[:, n1:, n1:] = Q.derivatives, R.derivatives
    return Trajectory(Q.nodes, values, "right", derivatives, {"gauge": "b_zero"})


def solve_b_zero(c: TriangularCoeffs1D, x: float, steps: Optional[int] = None) -> CMatrix:
    """U(x) for B = 0 via the path-ordered exponentials Q, R and the integral S"""
    steps = _steps(steps)
    n1, n2 = c.sizes
    Q = _block_trajectory(c.A, n1, x, steps)
    R = _block_trajectory(c.D, n2, x, steps)
    h = x / steps

    Q_inv = np.linalg.inv(Q.values)
    C_vals = np.stack([c.C(node) for node in Q.nodes])
    S = cumulative_simpson(R.values @ C_vals @ Q_inv, h)[-1]

    K = np.eye(n1) + c.m @ S
    return Q_inv[-1] @ resolve(K, c.m @ R.values[-1], x)


def solve_cb_equal(B: MatrixField, m: CMatrix, x: float, steps: Optional[int] = None) -> CMatrix:
    """U(x) for A = D = 0 and C = B (square blocks)"""
    rows, cols = B.shape
    if rows != cols:
        raise ShapeError("the C = B family needs n1 = n2")
    m = np.asarray(m, dtype=np.complex128)
    steps = _steps(steps)
    F = path_ordered_exp(B, (0.0, x), steps, "rk4")
    H = path_ordered_exp(-B, (0.0, x), steps, "rk4")
    return resolve(F + H + m @ (F - H), F - H + m @ (F + H), x)


def cb_equal_problem(B: MatrixField, m: CMatrix) -> RiccatiProblem:
    n = B.shape[0]
    return RiccatiProblem.two_block(GradedContext.from_sizes((n, n)), None, B, B, None, m)


@dataclass(frozen=True)
class ConstantBC:
    """Constant off-diagonal blocks B (n1 x n2), C (n2 x n1) and U(0) = m"""

    B: CMatrix
    C: CMatrix
    m: CMatrix

    def __post_init__(self):
        for name in ("B", "C", "m"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.complex128))
        n1, n2 = self.B.shape
        if self.C.shape != (n2, n1) or self.m.shape != (n1, n2):
            raise ShapeError(f"B is {self.B.shape}; C must be {(n2, n1)} and m {(n1, n2)}")

    @property
    def sizes(self) -> Tuple[int, int]:
        return self.B.shape  # type: ignore[return-value]

    @property
    def nondegenerate(self) -> bool:
        n1, n2 = self.sizes
        if n1 != n2:
            return False
        return bool(abs(np.linalg.det(self.B)) > 0 and abs(np.linalg.det(self.C)) > 0)

    def generator(self) -> CMatrix:
        n1, n2 = self.sizes
        return np.block([[np.zeros((n1, n1)), self.B], [self.C, np.zeros((n2, n2))]])

    def problem(self) -> RiccatiProblem:
        B = constant(self.B, 1, name="B")
        C = constant(self.C, 1, name="C")
        return RiccatiProblem.two_block(GradedContext.from_sizes(self.sizes), None, B, C, None, self.m)


def _constant_bc_u(psi: CMatrix, m: CMatrix, n1: int, x: float) -> CMatrix:
    p11, p12 = psi[:n1, :n1], psi[:n1, n1:]
    p21, p22 = psi[n1:, :n1], psi[n1:, n1:]
    return resolve(p11 + m @ p21, p12 + m @ p22, x)


def solve_constant_bc(c: ConstantBC, x: float) -> CMatrix:
    """U(x) from the block exponential; no square roots of BC are formed"""
    if not c.nondegenerate:
        logger.debug("constant B, C are not a nondegenerate square pair; the exponential form still applies")
    psi = matexp(x * c.generator())
    return _constant_bc_u(psi, c.m, c.sizes[0], x)


def constant_bc_series(B: CMatrix, C: CMatrix, m: CMatrix, x: float, terms: int = 20) -> CMatrix:
    """U(x) from the even/odd power series of the cosh/sinh blocks, `terms` terms each"""
    B, C, m = (np.asarray(a, dtype=np.complex128) for a in (B, C, m))
    n1, n2 = B.shape
    BC, CB = B @ C, C @ B
    p11 = np.zeros((n1, n1), dtype=np.complex128)
    p22 = np.zeros((n2, n2), dtype=np.complex128)
    p12 = np.zeros((n1, n2), dtype=np.complex128)
    p21 = np.zeros((n2, n1), dtype=np.complex128)
    power_bc, power_cb = np.eye(n1, dtype=np.complex128), np.eye(n2, dtype=np.complex128)
    for k in range(terms):
        even = x ** (2 * k) / factorial(2 * k)
        odd = x ** (2 * k + 1) / factorial(2 * k + 1)
        p11 += even * power_bc
        p22 += even * power_cb
        p12 += odd * power_bc @ B
        p21 += odd * power_cb @ C
        power_bc, power_cb = power_bc @ BC, power_cb @ CB
    psi = np.block([[p11, p12], [p21, p22]])
    return _constant_bc_u(psi, m, n1, x)
