#!/usr/bin/env python3
"""
Riccati-Toda System Test Script
Checks the installation: dependencies, configuration, bundled scenarios and a
short solver run. Works as a script (riccati-toda-test) and under pytest.
"""

import importlib
import sys
import time
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))


def print_header(title):
    print(f"\n{'='*60}")
    print(f"  {title}")
    print(f"{'='*60}")


def print_test(name, status, details=""):
    status_symbol = "✅" if status else "❌"
    print(f"{status_symbol} {name}")
    if details:
        print(f"   {details}")


def check_python_dependencies():
    """Third-party packages the library imports"""
    print_header("Checking Python Dependencies")

    required_packages = ["numpy", "scipy", "sympy", "pydantic", "yaml", "dotenv"]

    all_good = True
    for package in required_packages:
        try:
            module = importlib.import_module(package)
            print_test(f"Required: {package}", True, getattr(module, "__version__", ""))
        except ImportError as e:
            print_test(f"Required: {package}", False, f"Import error: {e}")
            all_good = False

    return all_good


def check_project_structure():
    print_header("Checking Project Structure")

    required_packages = ["algebra", "flow", "riccati", "closed", "toda", "config"]
    required_files = [
        "config/settings.py",
        "config/schema.py",
        "config/riccati.yaml",
        "scripts/riccati_cli.py",
        "scripts/scenario_runner.py",
        "requirements.txt",
    ]

    all_good = True
    for name in required_packages:
        try:
            importlib.import_module(name)
            print_test(f"Package: {name}", True)
        except Exception as e:
            print_test(f"Package: {name}", False, f"Error: {e}")
            all_good = False

    for file_name in required_files:
        exists = (project_root / file_name).is_file()
        print_test(f"File: {file_name}", exists)
        all_good = all_good and exists

    return all_good


def check_configuration():
    """Numerical settings load and are usable"""
    print_header("Checking Configuration")

    try:
        from config.settings import config

        tol = float(config.get("numerics.gauss_tol", 0.0))
        steps = int(config.get("numerics.default_steps", 0))
        gate = float(config.get("cli.residual_gate", 0.0))

        print_test("Config Loading", True)
        print_test("Gauss tolerance", 0.0 < tol < 1e-3, f"numerics.gauss_tol = {tol:.1e}")
        print_test("Default steps", steps > 0, f"numerics.default_steps = {steps}")
        print_test("Residual gate", gate > 0.0, f"cli.residual_gate = {gate:.1e}")
        return 0.0 < tol < 1e-3 and steps > 0 and gate > 0.0

    except Exception as e:
        print_test("Configuration", False, f"Error: {e}")
        return False


def check_scenarios():
    """Every bundled scenario validates against the schema"""
    print_header("Checking Bundled Scenarios")

    try:
        from config.schema import load_scenario
        from scripts.riccati_cli import list_examples

        catalog = list_examples()
        print_test("Scenario catalog", bool(catalog), f"{len(catalog)} scenario(s)")
        all_good = bool(catalog)
        for entry in catalog:
            try:
                load_scenario(entry["path"])
                print_test(f"{entry['name']} ({entry['kind']})", True)
            except Exception as e:
                print_test(entry["name"], False, f"Error: {e}")
                all_good = False
        return all_good

    except Exception as e:
        print_test("Scenarios", False, f"Error: {e}")
        return False


def check_solver():
    """U' = 1 - U^2 from zero on both solvers against tanh"""
    print_header("Checking Riccati Solver")

    try:
        import numpy as np

        from algebra import GradedContext
        from flow import constant
        from riccati import RiccatiProblem, solve_two_ways

        problem = RiccatiProblem(
            GradedContext.from_sizes((1, 1)), (constant([[0.0, 1.0], [1.0, 0.0]], 1),), np.eye(2)
        )
        start = time.time()
        _, linear, discrepancy = solve_two_ways(problem, interval=(0.0, 1.0), steps=200)
        elapsed = time.time() - start
        error = float(np.max(np.abs(linear.U[:, 0, 0] - np.tanh(linear.trajectory.nodes))))

        print_test("Direct vs linearization", discrepancy < 1e-8, f"max discrepancy {discrepancy:.2e}")
        print_test("Against tanh", error < 1e-8, f"max error {error:.2e} in {elapsed:.2f}s")
        return discrepancy < 1e-8 and error < 1e-8

    except Exception as e:
        print_test("Riccati Solver", False, f"Error: {e}")
        return False


CHECKS = [
    ("Project Structure", check_project_structure),
    ("Python Dependencies", check_python_dependencies),
    ("Configuration", check_configuration),
    ("Bundled Scenarios", check_scenarios),
    ("Riccati Solver", check_solver),
]


@pytest.mark.parametrize("check", [c for _, c in CHECKS], ids=[name for name, _ in CHECKS])
def test_installation(check):
    assert check()


def main():
    """Run all checks"""
    print("🧮 Riccati-Toda - System Test")
    print("=" * 60)

    results = {}

    for check_name, check_func in CHECKS:
        try:
            results[check_name] = check_func()
        except Exception as e:
            print_test(f"{check_name} (Exception)", False, f"Error: {e}")
            results[check_name] = False

    # Summary
    print_header("Test Summary")

    passed = sum(1 for result in results.values() if result)
    total = len(results)

    for check_name, result in results.items():
        print_test(check_name, result)

    print(f"\nOverall: {passed}/{total} checks passed")

    if passed == total:
        print("\n🎉 All checks passed! Try: riccati-toda list-examples")
    else:
        print(f"\n⚠️  {total - passed} check(s) failed. Please address the issues above.")
        print("\nCommon fixes:")
        print("- Run: pip install -e .")
        print("- Check config/riccati.yaml or the file named by RICCATI_TODA_CONFIG")

    return 0 if passed == total else 1


if __name__ == "__main__":
    sys.exit(main())
