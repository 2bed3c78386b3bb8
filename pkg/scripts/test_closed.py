#!/usr/bin/env python3
"""
Closed-Form Oracle Tests
Each integrable family against the general linearization solver
"""

import numpy as np
import pytest
import sympy as sp

from algebra import BlowupError, NotIntegrableError, ShapeError, block_get
from closed import (
    ConstantBC,
    TriangularCoeffs1D,
    cb_equal_problem,
    constant_bc_series,
    cumulative_simpson,
    curl_residual,
    even_steps,
    md_nilpotent_problem,
    reduce_b_zero_gauge,
    simpson,
    solve_b_zero,
    solve_cb_equal,
    solve_constant_bc,
    solve_md_nilpotent,
    solve_three_block_nilpotent,
    three_block_problem,
)
from flow import constant, coordinate_symbols, from_sympy
from riccati import gauge_transform, solve_by_linearization

X = sp.Symbol("x", real=True)


def field(rows):
    return from_sympy(sp.Matrix(rows), (X,))


def numeric_u(problem, x, steps=400):
    return solve_by_linearization(problem, (0.0, x), steps=steps).U[-1]


def test_simpson_rules():
    nodes = np.linspace(0.0, 1.0, 9)
    h = nodes[1] - nodes[0]
    assert simpson(nodes**3, h) == pytest.approx(0.25, abs=1e-14)
    np.testing.assert_allclose(cumulative_simpson(nodes**2, h), nodes**3 / 3, atol=1e-14)
    with pytest.raises(ValueError):
        cumulative_simpson(np.ones(4), 0.1)
    assert even_steps(3) == 4 and even_steps(1) == 2 and even_steps(10) == 10


def test_b_zero_family_matches_numeric():
    c = TriangularCoeffs1D(
        C=field([[1 + X, 0.5]]),
        m=[[0.4], [0.1]],
        A=field([[0.1, X], [0, -0.2]]),
        D=field([[0.2 * X]]),
    )
    np.testing.assert_allclose(solve_b_zero(c, 1.0, steps=400), numeric_u(c.problem(), 1.0), atol=1e-8)


def test_b_zero_without_grade_zero_part():
    c = TriangularCoeffs1D(C=constant([[2.0]], 1), m=[[0.5]])
    # U' = -U C U, so U = m / (1 + m C x)
    assert solve_b_zero(c, 0.6)[0, 0] == pytest.approx(0.5 / 1.6, abs=1e-12)


def test_b_zero_blowup():
    c = TriangularCoeffs1D(C=constant([[1.0]], 1), m=[[-1.0]])
    with pytest.raises(BlowupError) as info:
        solve_b_zero(c, 1.0)
    assert info.value.coordinate == (1.0,)


def test_b_zero_gauge_removes_grade_zero():
    c = TriangularCoeffs1D(C=field([[1 + X, 0.5]]), m=[[0.0], [0.0]], A=field([[0.1, X], [0, -0.2]]), D=field([[X]]))
    chi = reduce_b_zero_gauge(c.A, c.D, c.sizes, 1.0, steps=100)
    moved = gauge_transform(c.problem().lam, chi)
    assert np.max(np.abs(moved.values[:, :2, :2])) <= 1e-12
    assert np.max(np.abs(moved.values[:, 2:, 2:])) <= 1e-12
    assert np.max(np.abs(moved.values[:, :2, 2:])) <= 1e-12


def test_balanced_family_matches_numeric():
    B = field([[0.5, X], [0.2, -0.3]])
    m = [[0.1, 0.0], [0.0, 0.2]]
    np.testing.assert_allclose(solve_cb_equal(B, m, 1.0, steps=400), numeric_u(cb_equal_problem(B, m), 1.0), atol=1e-8)


def test_balanced_family_scalar_is_tanh():
    assert solve_cb_equal(constant([[1.0]], 1), [[0.0]], 1.0)[0, 0] == pytest.approx(np.tanh(1.0), abs=1e-9)
    with pytest.raises(ShapeError):
        solve_cb_equal(constant([[1.0, 2.0]], 1), [[0.0, 0.0]], 1.0)


@pytest.mark.parametrize(
    "B, C, m",
    [
        ([[1.0, 0.5], [0.0, 1.0]], [[0.3, 0.0], [0.2, 0.4]], [[0.1, 0.0], [0.0, 0.1]]),
        ([[0.7, -0.2]], [[0.4], [0.9j]], [[0.2, 0.1]]),
    ],
)
def test_constant_family(B, C, m):
    c = ConstantBC(B, C, m)
    closed = solve_constant_bc(c, 0.8)
    np.testing.assert_allclose(closed, constant_bc_series(B, C, m, 0.8, terms=20), atol=1e-12)
    np.testing.assert_allclose(closed, numeric_u(c.problem(), 0.8), atol=1e-8)


def test_constant_family_blowup():
    # U' = 1 + U^2 from zero: tan(x) is singular at pi/2
    c = ConstantBC([[1.0]], [[-1.0]], [[0.0]])
    assert solve_constant_bc(c, 1.0)[0, 0] == pytest.approx(np.tan(1.0), abs=1e-12)
    with pytest.raises(BlowupError):
        solve_constant_bc(c, np.pi / 2)


def test_constant_family_shapes():
    with pytest.raises(ShapeError):
        ConstantBC([[1.0, 0.0]], [[1.0, 0.0]], [[0.0, 0.0]])
    assert not ConstantBC([[1.0, 0.0]], [[1.0], [0.0]], [[0.0, 0.0]]).nondegenerate


def test_three_block_family_matches_numeric():
    C21, C31, C32 = field([[1 + X]]), constant([[0.5]], 1), field([[X]])
    blocks = ([[0.2]], [[0.1]], [[0.3]])
    closed = solve_three_block_nilpotent(C21, C31, C32, *blocks, x=1.0, steps=400)

    problem = three_block_problem(C21, C31, C32, *blocks)
    numeric = solve_by_linearization(problem, (0.0, 1.0), steps=400)
    for key, (r, s) in {"U12": (1, 2), "U13": (1, 3), "U23": (2, 3)}.items():
        np.testing.assert_allclose(closed[key], block_get(problem.ctx, numeric.values[-1], r, s), atol=1e-8)


def test_three_block_shape_mismatch():
    with pytest.raises(ShapeError):
        solve_three_block_nilpotent(
            constant([[1.0]], 1), constant([[0.5]], 1), constant([[1.0]], 1), [[0.2, 0.0]], [[0.1]], [[0.3]], x=1.0
        )


def test_multidimensional_family():
    x1, x2 = coordinate_symbols("x", 2)
    # C_i = d_i (x1^2 / 2 + x1 x2)
    C = [from_sympy(sp.Matrix([[x1 + x2]]), (x1, x2)), from_sympy(sp.Matrix([[x1]]), (x1, x2))]
    point = (0.5, 0.5)
    assert curl_residual(C, point) <= 1e-14

    closed = solve_md_nilpotent(C, [[0.3]], point)
    assert closed[0, 0] == pytest.approx(0.3 / (1 + 0.3 * 0.375), abs=1e-12)

    axes = [np.linspace(0.0, 0.5, 11)] * 2
    numeric = solve_by_linearization(md_nilpotent_problem(C, [[0.3]]), axes=axes, substeps=4)
    np.testing.assert_allclose(numeric.U[-1, -1], closed, atol=1e-8)


def test_family_with_curl_is_rejected():
    x1, x2 = coordinate_symbols("x", 2)
    C = [from_sympy(sp.Matrix([[x2]]), (x1, x2)), from_sympy(sp.Matrix([[-x1]]), (x1, x2))]
    assert curl_residual(C, (1.0, 1.0)) == pytest.approx(2.0)
    with pytest.raises(NotIntegrableError):
        solve_md_nilpotent(C, [[0.3]], (1.0, 1.0))
