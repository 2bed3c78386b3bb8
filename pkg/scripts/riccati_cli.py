#!/usr/bin/env python3
"""
Riccati-Toda command line
Runs bundled or user scenario files and writes CSV/JSON artifacts with a residual report

Exit codes: 0 every residual within the gate, 1 gate failure,
2 unreadable or invalid scenario, 3 numerical failure (blow-up, no Gauss decomposition).
"""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import sympy as sp
from pydantic import ValidationError

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from algebra.errors import RiccatiTodaError, ShapeError, coordinate_of
from config.schema import load_scenario
from config.settings import config
from scripts.scenario_runner import Overrides, residual_gate, run_scenario, write_artifacts, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_GATE = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3


def scenario_dir() -> Path:
    return Path(config.get("cli.scenario_dir", project_root / "config" / "scenarios"))


def list_examples() -> List[Dict[str, str]]:
    """Bundled scenarios as name / kind / description entries"""
    catalog = []
    for path in sorted(scenario_dir().glob("*.json")):
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
        catalog.append(
            {
                "name": path.stem,
                "kind": payload.get("kind", "?"),
                "description": payload.get("description", ""),
                "path": str(path),
            }
        )
    return catalog


def _report(name: str, kind: str, status: str, gate: float, body: Dict[str, Any]) -> Dict[str, Any]:
    report = {"scenario": name, "kind": kind, "status": status, "gate": gate}
    report.update(body)
    return report


def run_file(path: Path, out_dir: Path, overrides: Overrides) -> int:
    """Run one scenario file; returns its exit code"""
    try:
        scenario = load_scenario(path)
    except FileNotFoundError as e:
        logger.error(f"Scenario file not found: {e}")
        return EXIT_PARSE
    except OSError as e:
        logger.error(f"{path}: cannot read scenario: {e}")
        return EXIT_PARSE
    except UnicodeDecodeError as e:
        logger.error(f"{path}: not UTF-8 text: {e}")
        return EXIT_PARSE
    except json.JSONDecodeError as e:
        logger.error(f"{path}: invalid JSON: {e}")
        return EXIT_PARSE
    except ValidationError as e:
        logger.error(f"{path}: invalid scenario:\n{e}")
        return EXIT_PARSE

    name = scenario.name or path.stem
    gate = residual_gate(scenario.gate, overrides)
    report_path = out_dir / f"{name}.report.json"
    out_dir.mkdir(parents=True, exist_ok=True)

    try:
        result = run_scenario(scenario, overrides)
    except ShapeError as e:
        logger.error(f"{name}: payload does not fit the {scenario.kind} scenario: {e}")
        return EXIT_PARSE
    except (sp.SympifyError, SyntaxError) as e:
        logger.error(f"{name}: cannot parse an expression: {e}")
        return EXIT_PARSE
    except (RiccatiTodaError, np.linalg.LinAlgError) as e:
        coordinate = coordinate_of(e)
        logger.error(f"{name}: numerical failure ({type(e).__name__}) at {coordinate}: {e}")
        error = {"type": type(e).__name__, "message": str(e), "coordinate": coordinate}
        for attr in ("block_index", "node", "residual"):
            if getattr(e, attr, None) is not None:
                error[attr] = getattr(e, attr)
        write_json(report_path, _report(name, scenario.kind, "numeric_failure", gate, {"error": error}))
        return EXIT_NUMERIC

    write_artifacts(result, out_dir)
    failed = result.report.failures(gate)
    status = "gate_failure" if failed else "pass"
    body = result.report.to_dict()
    body["failed"] = failed
    write_json(report_path, _report(name, scenario.kind, status, gate, body))

    if failed:
        for label in failed:
            logger.warning(f"{name}: {label} = {result.report[label]:.3e} exceeds gate {gate:.1e}")
        return EXIT_GATE
    logger.info(f"{name}: all {len(result.report.residuals)} residuals within {gate:.1e}")
    return EXIT_OK


def run_files(paths: Sequence[Path], out_dir: Path, overrides: Overrides) -> int:
    """Run scenarios in order; the exit code is the most severe one"""
    codes = [run_file(Path(p), out_dir, overrides) for p in paths]
    for path, code in zip(paths, codes):
        print(f"{'✅' if code == EXIT_OK else '❌'} {Path(path).name}: exit {code}")
    return max(codes, default=EXIT_OK)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function for command-line usage"""
    import argparse

    parser = argparse.ArgumentParser(description="Riccati-type matrix equations and multidimensional Toda systems")
    parser.add_argument("command", choices=["run", "list-examples"], help="Run scenario files or list the bundled ones")
    parser.add_argument("configs", nargs="*", type=Path, help="Scenario JSON files (for run)")
    parser.add_argument("--out-dir", type=Path, default=None, help="Directory for CSV, JSON and report files")
    parser.add_argument("--steps", type=int, default=None, help="Override the integration steps of every scenario")
    parser.add_argument("--grid", type=int, default=None, help="Override the nodes per grid axis")
    parser.add_argument("--gate", type=float, default=None, help="Residual gate (default cli.residual_gate)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Verbose logging")

    args = parser.parse_args(argv)
    config.setup_logging(verbose=args.verbose)

    if args.command == "list-examples":
        catalog = list_examples()
        print(f"Found {len(catalog)} bundled scenarios in {scenario_dir()}:")
        for entry in catalog:
            print(f"  {entry['name']:<28} {entry['kind']:<12} {entry['description']}")
        return EXIT_OK

    if not args.configs:
        parser.error("run needs at least one scenario file")
    for flag in ("steps", "grid"):
        value = getattr(args, flag)
        if value is not None and value < 1:
            parser.error(f"--{flag} must be positive")
    if args.gate is not None and args.gate <= 0:
        parser.error("--gate must be positive")

    out_dir = args.out_dir or Path(config.get("cli.out_dir", "out"))
    overrides = Overrides(steps=args.steps, grid=args.grid, gate=args.gate)
    return run_files(args.configs, out_dir, overrides)


if __name__ == "__main__":
    sys.exit(main())
