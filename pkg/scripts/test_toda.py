#!/usr/bin/env python3
"""
Multidimensional Toda Tests
Liouville and maximally nonabelian constructions, WZNW and constraint residuals,
the Riccati pair of the auxiliary linear system
"""

import numpy as np
import pytest
import sympy as sp

from algebra import GradedContext, IntegrabilityError, NotDecomposableError, SingularError
from flow import FieldOnGrid, constant, from_sympy, identity_field
from toda import (
    NonabelianSpec,
    TodaData,
    TodaGrid,
    check_toda_data,
    connection_curvature,
    constraint_residual,
    construct_solution,
    maximally_nonabelian_data,
    nonabelian_log_formula,
    reconstruct_wznw,
    redheffer_reid_fields,
    redheffer_reid_residual,
    riccati_md_residual,
    riccati_md_solutions,
    two_block_components,
    wznw_residual,
)

E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
E21 = np.array([[0.0, 0.0], [1.0, 0.0]])
GATE = 1e-5


def liouville_data():
    ctx = GradedContext.from_sizes((1, 1))
    return TodaData(ctx, identity_field(2, 1), identity_field(2, 1), (constant(E21, 1),), (constant(E12, 1),))


def nonabelian_spec():
    return NonabelianSpec(
        d=2,
        F_minus="1 + 0.1*zm1",
        F_plus="1 + 0.1*zp2",
        H_minus=["zm1 + 0.1*zm2**2", "zm2 + 0.1*zm1*zm2"],
        H_plus=["zp1 + 0.1*zp1*zp2", "zp2 + 0.1*zp1**2"],
        xi_plus=["0.1*zm1", "0.05*zm2"],
        xi_minus=["0.2*zp2", "0"],
    )


@pytest.fixture(scope="module")
def liouville():
    data = liouville_data()
    grid = TodaGrid.uniform(1, 41, 0.1)
    return data, construct_solution(data, grid, strict=True)


@pytest.fixture(scope="module")
def nonabelian():
    spec = nonabelian_spec()
    grid = TodaGrid.uniform(2, 9, 0.04)
    data = maximally_nonabelian_data(spec, grid)
    return spec, data, construct_solution(data, grid, strict=True)


def test_grid_layout():
    grid = TodaGrid.uniform(2, 3, 1.0)
    assert grid.shape == (3, 3, 3, 3)
    lifted = grid.lift(np.arange(9.0).reshape(3, 3, 1, 1), "minus")
    assert lifted.shape == (3, 3, 3, 3, 1, 1)
    assert lifted[1, 2, 0, 1, 0, 0] == 5.0
    assert grid.coordinate((0, 1, 2, 0)) == (0.0, 0.5, 1.0, 0.0)


def test_liouville_gamma_is_explicit(liouville):
    _, sol = liouville
    mesh = sol.gamma.mesh()
    e = 1.0 - mesh[..., 0] * mesh[..., 1]
    np.testing.assert_allclose(sol.gamma.values[..., 0, 0], e, atol=1e-12)
    np.testing.assert_allclose(sol.gamma.values[..., 1, 1], 1.0 / e, atol=1e-12)
    assert not sol.partial


def test_liouville_residuals(liouville):
    data, sol = liouville
    for label in ("toda_minus_compat", "toda_mixed", "toda_plus_compat", "gauss_reconstruction"):
        assert sol.residuals[label] <= GATE, label

    psi = reconstruct_wznw(sol, data)
    assert wznw_residual(psi).max() <= GATE
    constraints = constraint_residual(psi, data, sol)
    assert constraints.max() <= GATE
    assert constraints["psi_zero_vs_gamma"] <= 1e-6
    assert connection_curvature(sol.gamma, data)["connection_curvature"] <= GATE


def test_liouville_riccati_pair(liouville):
    data, sol = liouville
    m = 0.5
    U_minus, U_plus = riccati_md_solutions(data, sol, [[m]], [[m]])
    z_minus = sol.grid.minus_axes[0]
    z_plus = sol.grid.plus_axes[0]
    np.testing.assert_allclose(U_minus.values[:, 0, 0], -m / (1 - m * z_minus), atol=1e-8)
    np.testing.assert_allclose(U_plus.values[:, 0, 0], -m / (1 - m * z_plus), atol=1e-8)

    lam_minus, lam_plus = redheffer_reid_fields(data, sol.grid)
    assert riccati_md_residual(data, lam_minus, lam_plus, U_minus, U_plus).max() <= GATE
    assert redheffer_reid_residual(lam_minus, lam_plus, data, sol.grid).max() <= 1e-12


def test_failed_gauss_points_are_reported():
    data = liouville_data()
    grid = TodaGrid.uniform(1, 5, 2.0)
    with pytest.raises(NotDecomposableError) as info:
        construct_solution(data, grid, strict=True)
    assert info.value.block_index == 1
    assert info.value.coordinate == (0.5, 2.0)

    sol = construct_solution(data, grid)
    assert sol.partial
    assert sorted(sol.failures) == [(0.5, 2.0), (1.0, 1.0), (2.0, 0.5)]
    assert np.all(np.isnan(sol.gamma.values[2, 2]))
    assert sol.residuals.meta["failures"] == 3


def test_non_integrable_data_is_rejected():
    ctx = GradedContext.from_sizes((1, 1))
    zm1, zm2 = sp.symbols("zm1 zm2", real=True)
    c_minus = (constant(E21, 2), from_sympy(sp.Matrix([[0, 0], [zm1, 0]]), (zm1, zm2)))
    c_plus = (constant(E12, 2), constant(E12, 2))
    data = TodaData(ctx, identity_field(2, 2), identity_field(2, 2), c_minus, c_plus)
    grid = TodaGrid.uniform(2, 3, 0.1)

    report = check_toda_data(data, grid)
    assert report["integrability_minus"] == pytest.approx(1.0)
    assert report["integrability_plus"] <= 1e-14
    with pytest.raises(IntegrabilityError) as info:
        construct_solution(data, grid)
    assert info.value.residual == pytest.approx(1.0)


def test_nonabelian_residuals(nonabelian):
    _, data, sol = nonabelian
    assert sol.residuals["data_integrability_minus"] <= 1e-12
    for label in ("toda_minus_compat", "toda_mixed", "toda_plus_compat"):
        assert sol.residuals[label] <= GATE, label

    psi = reconstruct_wznw(sol, data)
    assert wznw_residual(psi).max() <= GATE
    constraints = constraint_residual(psi, data, sol)
    assert constraints.max() <= GATE
    assert constraints["psi_zero_vs_gamma"] <= 1e-6


def test_nonabelian_mu_flows_integrate_exactly(nonabelian):
    spec, _, sol = nonabelian
    zm = spec.symbols[0]
    H = sp.lambdify(zm, sp.Matrix([list(spec.shifted("minus"))]), modules="numpy")
    mesh = np.meshgrid(*sol.grid.minus_axes, indexing="ij")
    expected = np.stack([np.asarray(H(a, b), dtype=float)[0] for a, b in zip(mesh[0].ravel(), mesh[1].ravel())])
    got = sol.mu_minus.values[..., 2, :2].reshape(-1, 2)
    np.testing.assert_allclose(got, expected, atol=1e-10)


def test_nonabelian_log_formula(nonabelian):
    spec, data, sol = nonabelian
    m_minus, m_plus = [[0.3], [0.2]], [[0.2, 0.1]]
    U_minus, U_plus = riccati_md_solutions(data, sol, m_minus, m_plus)
    log_minus, log_plus = nonabelian_log_formula(spec, m_minus, m_plus, sol.grid)
    np.testing.assert_allclose(U_minus.values, log_minus.values, atol=1e-8)
    np.testing.assert_allclose(U_plus.values, log_plus.values, atol=1e-8)

    lam_minus, lam_plus = redheffer_reid_fields(data)
    assert riccati_md_residual(data, lam_minus, lam_plus, U_minus, U_plus).max() <= GATE
    rr = redheffer_reid_residual(lam_minus, lam_plus, data, sol.grid)
    assert rr["rr_curvature_minus"] <= 1e-10 and rr["rr_curvature_plus"] <= 1e-10
    assert rr["rr_grading_minus"] <= 1e-12 and rr["rr_grading_plus"] <= 1e-12


@pytest.mark.parametrize("sign, point", [("minus", (0.02, 0.03)), ("plus", (0.01, 0.04))])
def test_two_block_components_match_fields(nonabelian, sign, point):
    _, data, _ = nonabelian
    lam_minus, lam_plus = redheffer_reid_fields(data)
    fields = lam_minus if sign == "minus" else lam_plus
    blocks = two_block_components(data, sign, point)
    s1, s2 = data.ctx.block_slice(1), data.ctx.block_slice(2)
    for i, f in enumerate(fields):
        value = f(point)
        np.testing.assert_allclose(blocks["A"][i], value[s1, s1], atol=1e-12)
        np.testing.assert_allclose(blocks["B"][i], value[s1, s2], atol=1e-12)
        np.testing.assert_allclose(blocks["C"][i], value[s2, s1], atol=1e-12)
        np.testing.assert_allclose(blocks["D"][i], value[s2, s2], atol=1e-12)


def test_degenerate_nonabelian_data():
    spec = NonabelianSpec(d=1, F_minus="zm1", F_plus="1", H_minus=["zm1"], H_plus=["zp1"])
    with pytest.raises(SingularError):
        maximally_nonabelian_data(spec)


def test_wznw_residual_separates_factorized_fields():
    grid = TodaGrid.uniform(1, 21, 0.5)
    zm, zp = grid.minus_axes[0], grid.plus_axes[0]
    left = np.stack([np.array([[np.exp(t), t], [0.0, np.exp(-t)]]) for t in zp])
    right = np.stack([np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]]) for t in zm])
    psi = grid.lift(left, "plus") @ grid.lift(right, "minus")
    assert wznw_residual(FieldOnGrid(grid.axes, psi)).max() <= 1e-8

    mesh = np.meshgrid(zm, zp, indexing="ij")
    product = mesh[0] * mesh[1]
    coupled = np.zeros(grid.shape + (2, 2))
    coupled[..., 0, 0] = coupled[..., 1, 1] = 1.0
    coupled[..., 0, 1] = product**2
    assert wznw_residual(FieldOnGrid(grid.axes, coupled))["wznw"] > 1e-3
