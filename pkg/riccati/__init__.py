"""
Riccati-type equations: direct integration, linearization through Gauss
decomposition, and gauge transformations
"""

from riccati.problem import (
    RiccatiProblem,
    RiccatiSolution,
    initial_from_block,
    rhs,
    riccati_blocks_2,
    riccati_blocks_3,
    project_field,
    side_part,
)
from riccati.solvers import solve_direct, solve_by_linearization, solve_two_ways
from riccati.gauge import gauge_transform, covariance_check, normalize_grade_zero

__all__ = [
    "RiccatiProblem",
    "RiccatiSolution",
    "initial_from_block",
    "rhs",
    "riccati_blocks_2",
    "riccati_blocks_3",
    "project_field",
    "side_part",
    "solve_direct",
    "solve_by_linearization",
    "solve_two_ways",
    "gauge_transform",
    "covariance_check",
    "normalize_grade_zero",
]
