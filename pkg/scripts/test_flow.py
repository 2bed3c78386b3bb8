#!/usr/bin/env python3
"""
Linear Flow Tests
Coefficient fields, one-dimensional and staircase integration, zero curvature
"""

import numpy as np
import pytest
import sympy as sp
from scipy.linalg import expm

from algebra import CurvatureWarning, ShapeError, TooFewNodesError
from flow import (
    FieldOnGrid,
    MatrixField,
    ResidualReport,
    constant,
    coordinate_symbols,
    evaluate_on_grid,
    from_sympy,
    grid_max_norm,
    inverse_field,
    partial_derivative,
    path_ordered_exp,
    product,
    solve_linear_1d,
    solve_linear_md,
    step_doubling_defect,
    zero_curvature_residual,
)

X = sp.Symbol("x", real=True)
LAM = np.array([[0.3, 1.0 + 0.2j], [-0.7, -0.1j]])


def polynomial_field():
    return from_sympy(sp.Matrix([[X, 1], [-1, X**2 / 2]]), (X,), name="poly")


@pytest.mark.parametrize("side", ["right", "left"])
def test_constant_coefficients_match_exponential(side):
    psi0 = np.array([[1.0, 0.5], [0.2j, 2.0]])
    traj = solve_linear_1d(constant(LAM, 1), psi0, (0.0, 1.0), steps=200, side=side, method="rk4")
    exact = psi0 @ expm(LAM) if side == "right" else expm(LAM) @ psi0
    np.testing.assert_allclose(traj.final, exact, atol=1e-9)
    assert len(traj) == 201


def test_magnus_midpoint_is_exact_for_constants():
    traj = solve_linear_1d(constant(LAM, 1), np.eye(2), (0.0, 2.0), steps=7, method="magnus-midpoint")
    np.testing.assert_allclose(traj.final, expm(2.0 * LAM), atol=1e-12)


@pytest.mark.parametrize("method, ratio", [("rk4", 14.0), ("magnus-midpoint", 3.5)])
def test_halving_the_step_shows_the_order(method, ratio):
    lam = polynomial_field()
    reference = solve_linear_1d(lam, np.eye(2), (0.0, 1.0), steps=6400, method="rk4").final
    errors = [
        np.max(np.abs(solve_linear_1d(lam, np.eye(2), (0.0, 1.0), steps=n, method=method).final - reference))
        for n in (40, 80)
    ]
    assert errors[0] / errors[1] >= ratio


def test_recorded_derivatives_follow_the_side():
    traj = solve_linear_1d(constant(LAM, 1), np.eye(2), (0.0, 1.0), steps=20, side="left")
    np.testing.assert_allclose(traj.derivatives, LAM @ traj.values, atol=1e-14)


def test_flows_compose_over_intervals():
    lam = polynomial_field()
    whole = solve_linear_1d(lam, np.eye(2), (0.0, 1.0), steps=200).final
    first = solve_linear_1d(lam, np.eye(2), (0.0, 0.5), steps=100).final
    second = solve_linear_1d(lam, first, (0.5, 1.0), steps=100).final
    np.testing.assert_allclose(second, whole, atol=1e-12)
    np.testing.assert_allclose(path_ordered_exp(lam, (0.0, 1.0), steps=200), whole, atol=1e-14)


def test_step_doubling_defect_is_small():
    assert step_doubling_defect(polynomial_field(), np.eye(2), (0.0, 1.0), steps=200) < 1e-9


def test_bad_arguments_are_rejected():
    lam = constant(LAM, 1)
    with pytest.raises(ValueError):
        solve_linear_1d(lam, np.eye(2), (0.0, 1.0), steps=0)
    with pytest.raises(ValueError):
        solve_linear_1d(lam, np.eye(2), (0.0, 1.0), side="middle")
    with pytest.raises(ShapeError):
        solve_linear_1d(lam, np.eye(3), (0.0, 1.0))
    with pytest.raises(ShapeError):
        solve_linear_1d(constant(LAM, 2), np.eye(2), (0.0, 1.0))


def test_sympy_fields_have_exact_partials():
    x1, x2 = coordinate_symbols("x", 2)
    field = from_sympy(sp.Matrix([[x1**2 * x2, sp.sin(x2)]]), (x1, x2))
    point = np.array([2.0, 3.0])
    np.testing.assert_allclose(field.derivative(0, point), [[12.0, 0.0]], atol=1e-14)
    np.testing.assert_allclose(field.derivative(1, point), [[4.0, np.cos(3.0)]], atol=1e-14)
    assert field.has_partials


def test_central_differences_without_partials():
    field = MatrixField(lambda x: np.array([[np.sin(x[0]), np.exp(x[0])]]), 1, (1, 2), name="raw")
    assert not field.has_partials
    np.testing.assert_allclose(field.derivative(0, 0.3), [[np.cos(0.3), np.exp(0.3)]], atol=1e-9)


def test_product_and_inverse_partials():
    g = from_sympy(sp.Matrix([[1 + X, X**2], [0, sp.exp(X)]]), (X,))
    h = from_sympy(sp.Matrix([[X, 1], [1, 2 * X]]), (X,))
    x = 0.4
    expected = g.derivative(0, x) @ h(x) + g(x) @ h.derivative(0, x)
    np.testing.assert_allclose(product(g, h).derivative(0, x), expected, atol=1e-13)

    inv = inverse_field(g)
    g_inv = np.linalg.inv(g(x))
    np.testing.assert_allclose(inv.derivative(0, x), -g_inv @ g.derivative(0, x) @ g_inv, atol=1e-13)


def test_commuting_constants_on_a_grid():
    lam1 = np.array([[0.0, 1.0], [1.0, 0.0]])
    lam2 = np.eye(2) + 0.5 * lam1
    fields = [constant(lam1, 2), constant(lam2, 2)]
    axes = [np.linspace(0.0, 0.5, 6), np.linspace(0.0, 0.4, 5)]

    report = zero_curvature_residual(fields, axes)
    assert report["zero_curvature"] <= 1e-12

    forward = solve_linear_md(fields, np.eye(2), axes, order=(0, 1), method="magnus-midpoint")
    backward = solve_linear_md(fields, np.eye(2), axes, order=(1, 0), method="magnus-midpoint")
    assert np.max(np.abs(forward.values - backward.values)) <= 1e-8

    x1, x2 = axes[0][-1], axes[1][-1]
    np.testing.assert_allclose(forward.values[-1, -1], expm(x1 * lam1 + x2 * lam2), atol=1e-10)
    assert "curvature_warning" not in forward.meta


def test_nonzero_curvature_warns():
    fields = [constant([[0.0, 1.0], [0.0, 0.0]], 2), constant([[0.0, 0.0], [1.0, 0.0]], 2)]
    axes = [np.linspace(0.0, 0.2, 3)] * 2
    with pytest.warns(CurvatureWarning):
        grid = solve_linear_md(fields, np.eye(2), axes)
    assert grid.meta["curvature_warning"] is True
    assert grid.meta["curvature"] == pytest.approx(1.0)


def test_batch_evaluation_matches_pointwise():
    x1, x2 = coordinate_symbols("x", 2)
    g = from_sympy(sp.Matrix([[1, x1 * x2], [sp.exp(x1), 2 + x2**2]]), (x1, x2))
    composite = product(g.partial(0), inverse_field(g)) + constant(LAM, 2)
    axes = [np.linspace(0.0, 0.3, 4), np.linspace(-0.2, 0.2, 3)]
    grid = evaluate_on_grid(composite, axes)
    assert grid.shape == (4, 3, 2, 2)
    for a, u in enumerate(axes[0]):
        for b, v in enumerate(axes[1]):
            np.testing.assert_allclose(grid[a, b], composite(np.array([u, v])), atol=1e-14)


def test_left_curvature_sign():
    # lam_i = d_i g g^{-1} is flat for the left action
    x1, x2 = coordinate_symbols("x", 2)
    g = from_sympy(sp.Matrix([[1, x1 * x2], [x1, 1 + x1**2 * x2]]), (x1, x2))
    lams = [product(g.partial(k), g.inverse()) for k in range(2)]
    axes = [np.linspace(0.0, 0.3, 4)] * 2
    assert zero_curvature_residual(lams, axes, side="left")["zero_curvature"] <= 1e-12
    assert zero_curvature_residual(lams, axes, side="right")["zero_curvature"] > 1e-3


def test_grid_differences_are_exact_on_quadratics():
    axes = (np.linspace(0.0, 1.0, 5), np.linspace(-1.0, 1.0, 7))
    x1, x2 = coordinate_symbols("x", 2)
    field = from_sympy(sp.Matrix([[x1**2 + x1 * x2]]), (x1, x2))
    grid = FieldOnGrid(axes, evaluate_on_grid(field, axes))
    d1 = partial_derivative(grid, 0)
    expected = evaluate_on_grid(field.partial(0), axes)
    np.testing.assert_allclose(d1.values, expected, atol=1e-12)

    with pytest.raises(TooFewNodesError):
        partial_derivative(FieldOnGrid((np.array([0.0, 1.0]),), np.zeros((2, 1, 1))), 0)


def test_grid_max_norm_ignores_failed_points():
    values = np.ones((4, 4, 1, 1))
    values[0, 0] = 50.0
    values[2, 2] = np.nan
    assert grid_max_norm(values) == 50.0
    assert grid_max_norm(values, grid_dims=2) == 1.0
    assert grid_max_norm(np.full((3, 1, 1), np.nan)) == 0.0


def test_residual_report():
    report = ResidualReport().add("a", 1e-9).add("b", 2e-3)
    assert report.max() == 2e-3
    assert report.failures(1e-5) == ["b"]
    assert not report.passes(1e-5)

    merged = ResidualReport().merge(report, prefix="x_")
    assert "x_a" in merged

    for bad in (-1.0, float("nan"), float("inf")):
        with pytest.raises(ValueError):
            ResidualReport().add("c", bad)
