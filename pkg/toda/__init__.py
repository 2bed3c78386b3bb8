"""
Generalized WZNW equations, their multidimensional Toda reduction, the
constructive solution, and the integrable Riccati families it produces
"""

from toda.data import TodaData, TodaGrid, check_toda_data
from toda.residuals import connection_curvature, constraint_residual, toda_residual, wznw_residual
from toda.construction import TodaSolution, construct_solution, reconstruct_wznw
from toda.redheffer_reid import (
    redheffer_reid_fields,
    redheffer_reid_residual,
    riccati_md_residual,
    riccati_md_solutions,
    two_block_components,
)
from toda.nonabelian import NonabelianSpec, maximally_nonabelian_data, nonabelian_log_formula

__all__ = [
    "TodaData",
    "TodaGrid",
    "check_toda_data",
    "connection_curvature",
    "constraint_residual",
    "toda_residual",
    "wznw_residual",
    "TodaSolution",
    "construct_solution",
    "reconstruct_wznw",
    "redheffer_reid_fields",
    "redheffer_reid_residual",
    "riccati_md_residual",
    "riccati_md_solutions",
    "two_block_components",
    "NonabelianSpec",
    "maximally_nonabelian_data",
    "nonabelian_log_formula",
]
