#!/usr/bin/env python3
"""
Scenario runner
Turns a validated scenario into solver calls, a residual report and artifacts
"""

import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import sympy as sp
from numpy.typing import NDArray

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from algebra.codec import matrix_to_json
from algebra.errors import ShapeError
from algebra.gauss import gauss_decompose, reverse_gauss_decompose
from algebra.gradation import GradedContext
from algebra.matrices import max_norm
from closed import (
    ConstantBC,
    TriangularCoeffs1D,
    cb_equal_problem,
    constant_bc_series,
    curl_residual,
    md_nilpotent_problem,
    solve_b_zero,
    solve_cb_equal,
    solve_constant_bc,
    solve_md_nilpotent,
    solve_three_block_nilpotent,
    three_block_problem,
)
from config.schema import (
    ClosedFormScenario,
    FlowScenario,
    GaussScenario,
    GeneralTodaPayload,
    NonabelianPayload,
    RiccatiMDScenario,
    RiccatiScenario,
    Scenario,
    TodaGridSpec,
    TodaScenario,
    WznwScenario,
    as_matrix,
)
from config.settings import config
from flow.fields import coordinate_symbols, from_sympy
from flow.grids import FieldOnGrid, ResidualReport, Trajectory, grid_max_norm
from flow.integrate import solve_linear_1d, step_doubling_defect, zero_curvature_residual
from riccati.problem import RiccatiProblem, RiccatiSolution, initial_from_block
from riccati.solvers import solve_by_linearization, solve_direct, solve_two_ways
from toda import (
    NonabelianSpec,
    TodaData,
    TodaGrid,
    constraint_residual,
    construct_solution,
    maximally_nonabelian_data,
    nonabelian_log_formula,
    reconstruct_wznw,
    redheffer_reid_fields,
    redheffer_reid_residual,
    riccati_md_residual,
    riccati_md_solutions,
    wznw_residual,
)
from toda.data import MINUS, PLUS

logger = logging.getLogger(__name__)

X = sp.Symbol("x", real=True)


@dataclass
class Overrides:
    """Command-line overrides applied on top of a scenario file"""

    steps: Optional[int] = None
    grid: Optional[int] = None
    gate: Optional[float] = None


@dataclass
class Artifact:
    """Matrices at sample points: coordinates (M, k), values (M, rows, cols)"""

    label: str
    coordinates: NDArray[np.float64]
    values: NDArray[np.complex128]
    columns: Sequence[str] = ()

    @classmethod
    def from_trajectory(cls, label: str, trajectory: Trajectory, values=None) -> "Artifact":
        values = trajectory.values if values is None else values
        return cls(label, trajectory.nodes.reshape(-1, 1), np.asarray(values), ("x",))

    @classmethod
    def from_grid(cls, label: str, grid: FieldOnGrid, names: Optional[Sequence[str]] = None) -> "Artifact":
        coordinates = grid.mesh().reshape(-1, grid.dim)
        values = grid.values.reshape((-1,) + grid.values.shape[grid.dim:])
        names = names or [f"x{k + 1}" for k in range(grid.dim)]
        return cls(label, coordinates, values, tuple(names))

    def table(self) -> NDArray[np.float64]:
        """Coordinates, then re and im of every entry in row-major order"""
        flat = self.values.reshape(self.values.shape[0], -1)
        pairs = np.stack([flat.real, flat.imag], axis=-1).reshape(flat.shape[0], -1)
        return np.column_stack([self.coordinates, pairs])

    def header(self) -> str:
        rows, cols = self.values.shape[-2:]
        entries = [f"{part}_{r + 1}{c + 1}" for r in range(rows) for c in range(cols) for part in ("re", "im")]
        return ",".join(list(self.columns) + entries)


@dataclass
class ScenarioResult:
    name: str
    kind: str
    report: ResidualReport
    artifacts: List[Artifact] = field(default_factory=list)


def _steps(value: Optional[int], overrides: Overrides) -> int:
    steps = overrides.steps or value or config.get("numerics.default_steps", 400)
    return int(steps)


def _toda_grid(spec: TodaGridSpec, d: int, overrides: Overrides) -> TodaGrid:
    return TodaGrid.uniform(d, overrides.grid or spec.nodes, spec.extent, spec.start)


def _chiral_names(d: int) -> List[str]:
    return [f"zm{k + 1}" for k in range(d)] + [f"zp{k + 1}" for k in range(d)]


# -- gauss -------------------------------------------------------------------------


def run_gauss(scenario: GaussScenario, overrides: Overrides) -> ScenarioResult:
    ctx = GradedContext.from_sizes(scenario.partition)
    a = as_matrix(scenario.matrix)
    if scenario.reverse:
        factors = reverse_gauss_decompose(ctx, a, scenario.tol)
        rebuilt = factors.reverse_product()
    else:
        factors = gauss_decompose(ctx, a, scenario.tol)
        rebuilt = factors.product()

    report = ResidualReport(meta={"partition": list(ctx.sizes), "reverse": scenario.reverse})
    report.add("reconstruction", max_norm(a - rebuilt) / max(1.0, max_norm(a)))
    stack = np.stack([factors.lower, factors.zero, factors.upper])
    artifact = Artifact("factors", np.arange(3.0).reshape(-1, 1), stack, ("factor",))
    return ScenarioResult(scenario.name or "gauss", scenario.kind, report, [artifact])


# -- linear flow ---------------------------------------------------------------------


def run_flow(scenario: FlowScenario, overrides: Overrides) -> ScenarioResult:
    lam = scenario.field.to_field((X,), name="lam")
    psi0 = np.eye(lam.n) if scenario.psi0 is None else as_matrix(scenario.psi0)
    steps = _steps(scenario.steps, overrides)
    trajectory = solve_linear_1d(lam, psi0, scenario.interval, steps, scenario.side, scenario.method)

    report = ResidualReport(meta={"steps": steps, "side": scenario.side, "method": trajectory.meta["method"]})
    report.add(
        "step_doubling",
        step_doubling_defect(lam, psi0, scenario.interval, steps, scenario.side, scenario.method),
    )
    return ScenarioResult(scenario.name or "flow", scenario.kind, report, [Artifact.from_trajectory("psi", trajectory)])


# -- Riccati ---------------------------------------------------------------------------


def _problem(scenario, fields) -> RiccatiProblem:
    ctx = GradedContext.from_sizes(scenario.partition)
    if scenario.initial is not None:
        initial = as_matrix(scenario.initial)
    else:
        initial = initial_from_block(ctx, as_matrix(scenario.m), scenario.side)
    return RiccatiProblem(ctx, tuple(fields), initial, scenario.side)


def _solved(solution: RiccatiSolution):
    return solution.U if solution.ctx.p == 2 else solution.values


def run_riccati(scenario: RiccatiScenario, overrides: Overrides) -> ScenarioResult:
    problem = _problem(scenario, [scenario.field.to_field((X,), name="lam")])
    steps = _steps(scenario.steps, overrides)
    direct, linear, gap = solve_two_ways(
        problem, interval=scenario.interval, steps=steps, method=scenario.method
    )

    report = ResidualReport(meta={"steps": steps, "side": scenario.side, "partition": list(problem.ctx.sizes)})
    report.add("direct_vs_linearization", gap)
    solved = _solved(linear)
    if scenario.reference is not None:
        exact = from_sympy(sp.Matrix([[sp.sympify(e, locals={"x": X}) for e in row] for row in scenario.reference]), (X,))
        nodes = linear.trajectory.nodes  # type: ignore[union-attr]
        expected = np.stack([exact(np.array([x])) for x in nodes])
        if expected.shape != solved.shape:
            raise ShapeError(f"reference is {expected.shape[1:]}, solution block is {solved.shape[1:]}")
        report.add("reference", float(np.max(np.abs(expected - solved))))

    artifact = Artifact.from_trajectory("solution", linear.trajectory, solved)  # type: ignore[arg-type]
    return ScenarioResult(scenario.name or "riccati", scenario.kind, report, [artifact])


def run_riccati_md(scenario: RiccatiMDScenario, overrides: Overrides) -> ScenarioResult:
    d = len(scenario.fields)
    symbols = coordinate_symbols("x", d)
    fields = [spec.to_field(symbols, name=f"lam_{k + 1}") for k, spec in enumerate(scenario.fields)]
    problem = _problem(scenario, fields)
    axes = [axis.linspace(overrides.grid) for axis in scenario.axes]
    order = scenario.order or list(range(d))
    options = dict(axes=axes, substeps=scenario.substeps)

    report = ResidualReport(meta={"grid": [len(a) for a in axes], "order": order, "side": scenario.side})
    report.add("curvature", zero_curvature_residual(fields, axes)["zero_curvature"])
    direct = solve_direct(problem, order=order, **options)
    linear = solve_by_linearization(problem, order=order, method=scenario.method, **options)
    swapped = solve_by_linearization(problem, order=order[::-1], method=scenario.method, **options)
    report.add("direct_vs_linearization", grid_max_norm(direct.values - linear.values))
    report.add("order_independence", grid_max_norm(linear.values - swapped.values))

    solved = FieldOnGrid(linear.grid.axes, _solved(linear))  # type: ignore[union-attr]
    return ScenarioResult(scenario.name or "riccati-md", scenario.kind, report, [Artifact.from_grid("solution", solved)])


# -- closed forms ---------------------------------------------------------------------


def _closed_point(x: Sequence[float], value) -> Artifact:
    return Artifact("closed", np.asarray(x, dtype=np.float64).reshape(1, -1), np.asarray(value)[None], ())


def _numeric_1d(problem: RiccatiProblem, x: float, steps: int) -> RiccatiSolution:
    return solve_by_linearization(problem, interval=(0.0, x), steps=steps)


def run_closed_form(scenario: ClosedFormScenario, overrides: Overrides) -> ScenarioResult:
    payload = scenario.problem
    family = payload.family
    steps = _steps(payload.steps, overrides)
    report = ResidualReport(meta={"family": family, "steps": steps})
    artifacts: List[Artifact] = []

    if family == "b_zero":
        coeffs = TriangularCoeffs1D(
            C=payload.C.to_field((X,), name="C"),
            m=as_matrix(payload.m),
            A=None if payload.A is None else payload.A.to_field((X,), name="A"),
            D=None if payload.D is None else payload.D.to_field((X,), name="D"),
        )
        closed = solve_b_zero(coeffs, payload.x, steps)
        numeric = _numeric_1d(coeffs.problem(), payload.x, steps)
        report.add("closed_vs_numeric", max_norm(closed - numeric.U[-1]))
    elif family == "cb_equal":
        B = payload.B.to_field((X,), name="B")
        m = as_matrix(payload.m)
        closed = solve_cb_equal(B, m, payload.x, steps)
        numeric = _numeric_1d(cb_equal_problem(B, m), payload.x, steps)
        report.add("closed_vs_numeric", max_norm(closed - numeric.U[-1]))
    elif family == "constant_bc":
        B, C, m = as_matrix(payload.B), as_matrix(payload.C), as_matrix(payload.m)
        coeffs = ConstantBC(B, C, m)
        closed = solve_constant_bc(coeffs, payload.x)
        numeric = _numeric_1d(coeffs.problem(), payload.x, steps)
        report.add("closed_vs_numeric", max_norm(closed - numeric.U[-1]))
        report.add("series", max_norm(closed - constant_bc_series(B, C, m, payload.x, payload.series_terms)))
    elif family == "three_block_nilpotent":
        C21, C31, C32 = (getattr(payload, k).to_field((X,), name=k) for k in ("C21", "C31", "C32"))
        m12, m13, m23 = as_matrix(payload.m12), as_matrix(payload.m13), as_matrix(payload.m23)
        blocks = solve_three_block_nilpotent(C21, C31, C32, m12, m13, m23, payload.x, steps)
        numeric = _numeric_1d(three_block_problem(C21, C31, C32, m12, m13, m23), payload.x, steps)
        worst = 0.0
        for key in ("U12", "U13", "U23"):
            r, s = int(key[1]), int(key[2])
            worst = max(worst, max_norm(blocks[key] - numeric.block(r, s)[-1]))
        report.add("closed_vs_numeric", worst)
        closed = numeric.values[-1].copy()
        for key, value in blocks.items():
            closed[numeric.ctx.block_slice(int(key[1])), numeric.ctx.block_slice(int(key[2]))] = value
    else:
        d = len(payload.C)
        symbols = coordinate_symbols("x", d)
        C_fields = [spec.to_field(symbols, name=f"C_{k + 1}") for k, spec in enumerate(payload.C)]
        m = as_matrix(payload.m)
        closed = solve_md_nilpotent(C_fields, m, payload.point, steps=steps)
        nodes = overrides.grid or payload.nodes
        axes = [np.linspace(0.0, p, nodes) for p in payload.point]
        numeric = solve_by_linearization(md_nilpotent_problem(C_fields, m), axes=axes)
        report.add("curl", curl_residual(C_fields, payload.point))
        report.add("closed_vs_numeric", max_norm(closed - numeric.U[(-1,) * d]))
        grid = FieldOnGrid(numeric.grid.axes, numeric.U)  # type: ignore[union-attr]
        artifacts.append(Artifact.from_grid("numeric", grid))
        artifacts.append(_closed_point(payload.point, closed))
        return ScenarioResult(scenario.name or family, scenario.kind, report, artifacts)

    trajectory = numeric.trajectory
    artifacts.append(Artifact.from_trajectory("numeric", trajectory, _solved(numeric)))  # type: ignore[arg-type]
    artifacts.append(_closed_point([payload.x], closed))
    return ScenarioResult(scenario.name or family, scenario.kind, report, artifacts)


# -- Toda and WZNW --------------------------------------------------------------------


def _general_data(payload: GeneralTodaPayload) -> TodaData:
    d = payload.d
    zm, zp = coordinate_symbols("zm", d), coordinate_symbols("zp", d)

    def optional(spec, symbols, name):
        return None if spec is None else spec.to_field(symbols, name=name)

    return TodaData(
        ctx=GradedContext.from_sizes(payload.partition),
        gamma_minus=payload.gamma_minus.to_field(zm, name="gamma_minus"),
        gamma_plus=payload.gamma_plus.to_field(zp, name="gamma_plus"),
        c_minus=tuple(c.to_field(zm, name=f"c_minus_{k + 1}") for k, c in enumerate(payload.c_minus)),
        c_plus=tuple(c.to_field(zp, name=f"c_plus_{k + 1}") for k, c in enumerate(payload.c_plus)),
        xi_minus=optional(payload.xi_minus, zp, "xi_minus"),
        xi_plus=optional(payload.xi_plus, zm, "xi_plus"),
        meta={"family": "general", "d": d},
    )


def _nonabelian_spec(payload: NonabelianPayload) -> NonabelianSpec:
    return NonabelianSpec(
        d=payload.d,
        F_minus=payload.F_minus,
        F_plus=payload.F_plus,
        H_minus=payload.H_minus,
        H_plus=payload.H_plus,
        xi_plus=payload.xi_plus,
        xi_minus=payload.xi_minus,
    )


def run_toda(scenario: TodaScenario, overrides: Overrides) -> ScenarioResult:
    payload = scenario.data
    grid = _toda_grid(scenario.grid, payload.d, overrides)
    spec = None
    if isinstance(payload, NonabelianPayload):
        spec = _nonabelian_spec(payload)
        data = maximally_nonabelian_data(spec, grid)
    else:
        data = _general_data(payload)

    sol = construct_solution(data, grid, strict=True, substeps=scenario.substeps)
    report = sol.residuals
    psi = reconstruct_wznw(sol, data)
    report.merge(wznw_residual(psi))
    report.merge(constraint_residual(psi, data, sol))
    lam_minus, lam_plus = redheffer_reid_fields(data)
    report.merge(redheffer_reid_residual(lam_minus, lam_plus, data, grid))

    names = _chiral_names(grid.d)
    artifacts = [Artifact.from_grid("gamma", sol.gamma, names)]
    if payload.m_minus is not None and payload.m_plus is not None:
        m_minus, m_plus = as_matrix(payload.m_minus), as_matrix(payload.m_plus)
        U_minus, U_plus = riccati_md_solutions(data, sol, m_minus, m_plus)
        report.merge(riccati_md_residual(data, lam_minus, lam_plus, U_minus, U_plus))
        if spec is not None:
            log_minus, log_plus = nonabelian_log_formula(spec, m_minus, m_plus, grid)
            report.add("log_formula_minus", grid_max_norm(U_minus.values - log_minus.values))
            report.add("log_formula_plus", grid_max_norm(U_plus.values - log_plus.values))
        artifacts.append(Artifact.from_grid("U_minus", U_minus, names[: grid.d]))
        artifacts.append(Artifact.from_grid("U_plus", U_plus, names[grid.d:]))

    report.meta["family"] = payload.family
    return ScenarioResult(scenario.name or "toda", scenario.kind, report, artifacts)


def run_wznw(scenario: WznwScenario, overrides: Overrides) -> ScenarioResult:
    d = scenario.d
    if scenario.psi is not None:
        psi = FieldOnGrid(tuple(np.asarray(a) for a in scenario.psi.axes), scenario.psi.array(), {"source": "grid"})
    else:
        grid = _toda_grid(scenario.grid, d, overrides)
        zm, zp = coordinate_symbols("zm", d), coordinate_symbols("zp", d)
        minus = scenario.minus_factor.to_field(zm, name="minus_factor")  # type: ignore[union-attr]
        plus = scenario.plus_factor.to_field(zp, name="plus_factor")  # type: ignore[union-attr]
        values = grid.lift(grid.sample(plus, PLUS), PLUS) @ grid.lift(grid.sample(minus, MINUS), MINUS)
        psi = FieldOnGrid(grid.axes, values, {"source": "factorized"})

    report = wznw_residual(psi)
    artifact = Artifact.from_grid("psi", psi, _chiral_names(d))
    return ScenarioResult(scenario.name or "wznw-check", scenario.kind, report, [artifact])


RUNNERS: Dict[str, Callable[[Any, Overrides], ScenarioResult]] = {
    "gauss": run_gauss,
    "flow": run_flow,
    "riccati": run_riccati,
    "riccati-md": run_riccati_md,
    "closed-form": run_closed_form,
    "toda": run_toda,
    "wznw-check": run_wznw,
}


def run_scenario(scenario: Scenario, overrides: Optional[Overrides] = None) -> ScenarioResult:
    """Dispatch on kind; library errors propagate to the caller"""
    overrides = overrides or Overrides()
    logger.info(f"Running scenario {scenario.name} ({scenario.kind})")
    result = RUNNERS[scenario.kind](scenario, overrides)
    logger.info(f"Scenario {result.name}: max residual {result.report.max():.3e}")
    return result


# -- output ------------------------------------------------------------------------------


def write_json(path: Path, payload: Dict[str, Any]):
    with open(path, "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def write_artifacts(result: ScenarioResult, out_dir: Path) -> List[Path]:
    """<name>.<label>.csv and <name>.<label>.json per artifact"""
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for artifact in result.artifacts:
        stem = out_dir / f"{result.name}.{artifact.label}"
        np.savetxt(f"{stem}.csv", artifact.table(), fmt="%.17g", delimiter=",", header=artifact.header())
        write_json(
            Path(f"{stem}.json"),
            {
                "columns": list(artifact.columns),
                "coordinates": artifact.coordinates.tolist(),
                "values": matrix_to_json(artifact.values),
            },
        )
        written += [Path(f"{stem}.csv"), Path(f"{stem}.json")]
    logger.debug(f"Wrote {len(written)} artifact files to {out_dir}")
    return written


def residual_gate(scenario_gate: Optional[float], overrides: Overrides) -> float:
    if overrides.gate is not None:
        return float(overrides.gate)
    if scenario_gate is not None:
        return float(scenario_gate)
    return float(config.get("cli.residual_gate", 1e-5))