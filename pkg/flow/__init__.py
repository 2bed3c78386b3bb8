"""
Linear matrix flows, coefficient fields and zero-curvature checks
"""

from flow.fields import (
    MatrixField,
    constant,
    zeros,
    identity_field,
    product,
    linear_combination,
    inverse_field,
    pullback,
    sub_block,
    masked,
    assemble_blocks,
    left_log_derivative,
    right_log_derivative,
    from_sympy,
    coordinate_symbols,
    evaluate_batch,
    evaluate_on_grid,
)
from flow.grids import (
    Trajectory,
    FieldOnGrid,
    ResidualReport,
    partial_derivative,
    gradient_values,
    interior,
    grid_max_norm,
)
from flow.integrate import (
    solve_linear_1d,
    path_ordered_exp,
    step_doubling_defect,
    integrate_staircase,
    rk4_staircase_step,
    solve_linear_md,
    curvature,
    zero_curvature_residual,
    curvature_on_grid,
)

__all__ = [
    "MatrixField",
    "constant",
    "zeros",
    "identity_field",
    "product",
    "linear_combination",
    "inverse_field",
    "pullback",
    "sub_block",
    "masked",
    "assemble_blocks",
    "left_log_derivative",
    "right_log_derivative",
    "from_sympy",
    "coordinate_symbols",
    "evaluate_batch",
    "evaluate_on_grid",
    "Trajectory",
    "FieldOnGrid",
    "ResidualReport",
    "partial_derivative",
    "gradient_values",
    "interior",
    "grid_max_norm",
    "solve_linear_1d",
    "path_ordered_exp",
    "step_doubling_defect",
    "integrate_staircase",
    "rk4_staircase_step",
    "solve_linear_md",
    "curvature",
    "zero_curvature_residual",
    "curvature_on_grid",
]
