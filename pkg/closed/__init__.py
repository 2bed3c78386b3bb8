"""
Closed-form solutions of integrable Riccati families, used as oracles for the
general solvers
"""

from closed.quadrature import cumulative_simpson, simpson, even_steps
from closed.one_dim import (
    ConstantBC,
    TriangularCoeffs1D,
    cb_equal_problem,
    constant_bc_series,
    reduce_b_zero_gauge,
    resolve,
    solve_b_zero,
    solve_cb_equal,
    solve_constant_bc,
)
from closed.three_block import solve_three_block_nilpotent, three_block_problem
from closed.multidim import curl_residual, md_nilpotent_problem, potential, solve_md_nilpotent

__all__ = [
    "cumulative_simpson",
    "simpson",
    "even_steps",
    "ConstantBC",
    "TriangularCoeffs1D",
    "cb_equal_problem",
    "constant_bc_series",
    "reduce_b_zero_gauge",
    "resolve",
    "solve_b_zero",
    "solve_cb_equal",
    "solve_constant_bc",
    "solve_three_block_nilpotent",
    "three_block_problem",
    "curl_residual",
    "md_nilpotent_problem",
    "potential",
    "solve_md_nilpotent",
]
