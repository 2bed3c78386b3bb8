"""
Constructive solution of the multidimensional Toda equations

  1. mu_-^{-1} d_{-i} mu_- = gamma_- c_{-i} gamma_-^{-1} on the z^- sub-grid,
     mu_+^{-1} d_{+i} mu_+ = gamma_+ c_{+i} gamma_+^{-1} on the z^+ sub-grid,
     both from mu(origin) = I;
  2. mu_+^{-1} mu_- = nu_- eta nu_+^{-1} (Gauss decomposition at every point);
  3. gamma = gamma_+^{-1} eta gamma_-.

The WZNW solution psi = xi_-^{-1} gamma_+^{-1} mu_+^{-1} mu_- gamma_- xi_+ is
rebuilt from the same pieces.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from algebra.errors import NotDecomposableError
from algebra.gauss import block_diag_inverse, gauss_decompose, gauss_decompose_stack, unit_inverse
from algebra.gradation import Part
from flow.grids import FieldOnGrid, ResidualReport, grid_max_norm
from flow.integrate import solve_linear_md
from toda.data import MINUS, PLUS, TodaData, TodaGrid, check_toda_data, integrability_gate
from toda.residuals import toda_residual

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TodaSolution:
    """gamma on the full grid with the intermediate flows and Gauss factors

    mu_minus and mu_plus live on their chiral sub-grids; nu_minus, eta and
    nu_plus on the full grid. Points where the Gauss step failed hold NaN and
    are listed in `failures`.
    """

    grid: TodaGrid
    gamma: FieldOnGrid
    mu_minus: FieldOnGrid
    mu_plus: FieldOnGrid
    nu_minus: FieldOnGrid
    eta: FieldOnGrid
    nu_plus: FieldOnGrid
    residuals: ResidualReport
    failures: List[Tuple[float, ...]] = field(default_factory=list)

    @property
    def partial(self) -> bool:
        return bool(self.failures)


def _chiral_flow(fields, axes, ctx, method, substeps) -> FieldOnGrid:
    return solve_linear_md(
        fields, np.eye(ctx.n), axes, side="right", method=method, substeps=substeps, check_curvature=False
    )


def construct_solution(
    data: TodaData,
    grid: TodaGrid,
    strict: bool = False,
    gate: Optional[float] = None,
    method: Optional[str] = None,
    substeps: Optional[int] = None,
) -> TodaSolution:
    """gamma solving the Toda equations for the given data

    Raises IntegrabilityError when the mu flows are not integrable. Points
    where mu_+^{-1} mu_- has no Gauss decomposition are reported and left as
    NaN; with strict=True the first one raises NotDecomposableError instead.
    """
    ctx = data.ctx
    check = check_toda_data(data, grid, gate=integrability_gate(gate))
    logger.info(f"Toda construction on grid {grid.shape}, partition {ctx.sizes}")

    mu_minus = _chiral_flow(data.dressed_minus(), grid.minus_axes, ctx, method, substeps)
    mu_plus = _chiral_flow(data.dressed_plus(), grid.plus_axes, ctx, method, substeps)

    mu_m = grid.lift(mu_minus.values, MINUS)
    mu_p = grid.lift(mu_plus.values, PLUS)
    target = np.linalg.inv(mu_p) @ mu_m
    factors, ok = gauss_decompose_stack(ctx, target)

    failures: List[Tuple[float, ...]] = []
    if not np.all(ok):
        bad = np.argwhere(~ok)
        failures = [grid.coordinate(tuple(int(i) for i in index)) for index in bad]
        first = tuple(int(i) for i in bad[0])
        if strict:
            try:
                gauss_decompose(ctx, target[first])
            except NotDecomposableError as e:
                raise NotDecomposableError(
                    f"mu_+^{{-1}} mu_- has no Gauss decomposition at {failures[0]}",
                    block_index=e.block_index,
                    coordinate=failures[0],
                )
        logger.warning(f"Gauss step failed at {len(failures)} grid points; first at {failures[0]}")

    nu_plus = unit_inverse(ctx, factors.upper, Part.POSITIVE)
    gamma_m = grid.lift(grid.sample(data.gamma_minus, MINUS), MINUS)
    gamma_p = grid.lift(grid.sample(data.gamma_plus, PLUS), PLUS)
    gamma = block_diag_inverse(ctx, gamma_p) @ factors.zero @ gamma_m

    axes = grid.axes
    gamma_grid = FieldOnGrid(axes, gamma, {"partial": bool(failures)})
    residuals = toda_residual(gamma_grid, data)
    residuals.add("gauss_reconstruction", grid_max_norm(target - factors.product()))
    residuals.merge(check, prefix="data_")
    residuals.meta.update({"failures": len(failures), "partial": bool(failures)})

    return TodaSolution(
        grid=grid,
        gamma=gamma_grid,
        mu_minus=mu_minus,
        mu_plus=mu_plus,
        nu_minus=FieldOnGrid(axes, factors.lower),
        eta=FieldOnGrid(axes, factors.zero),
        nu_plus=FieldOnGrid(axes, nu_plus),
        residuals=residuals,
        failures=failures,
    )


def reconstruct_wznw(sol: TodaSolution, data: TodaData) -> FieldOnGrid:
    """psi = xi_-^{-1} gamma_+^{-1} mu_+^{-1} mu_- gamma_- xi_+ on the full grid"""
    grid = sol.grid
    xi_m = grid.lift(grid.sample(data.xi_minus, PLUS), PLUS)  # type: ignore[arg-type]
    xi_p = grid.lift(grid.sample(data.xi_plus, MINUS), MINUS)  # type: ignore[arg-type]
    gamma_m = grid.lift(grid.sample(data.gamma_minus, MINUS), MINUS)
    gamma_p = grid.lift(grid.sample(data.gamma_plus, PLUS), PLUS)
    mu_m = grid.lift(sol.mu_minus.values, MINUS)
    mu_p = grid.lift(sol.mu_plus.values, PLUS)

    left = np.linalg.inv(gamma_p @ xi_m) @ np.linalg.inv(mu_p)
    psi = left @ mu_m @ gamma_m @ xi_p
    logger.debug(f"reconstructed psi on grid {grid.shape}")
    return FieldOnGrid(grid.axes, psi, {"kind": "wznw", "d": grid.d})
