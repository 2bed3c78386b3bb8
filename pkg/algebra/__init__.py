"""
Complex matrices, block Z-gradations of gl(n, C) and generalized Gauss decomposition
"""

from algebra.errors import (
    RiccatiTodaError,
    ShapeError,
    SingularError,
    NotDecomposableError,
    BlowupAtNode,
    DivergenceError,
    BlowupError,
    NotIntegrableError,
    IntegrabilityError,
    TooFewNodesError,
    CurvatureWarning,
)
from algebra.matrices import (
    CMatrix,
    as_cmatrix,
    identity,
    max_norm,
    inverse,
    matmul,
    matexp,
    commutator,
)
from algebra.gradation import (
    Part,
    BlockPartition,
    GradedContext,
    project,
    block_get,
    block_set,
    block_diag,
    is_in_subgroup,
    unit_triangular,
)
from algebra.gauss import (
    GaussFactors,
    gauss_decompose,
    gauss_decompose_stack,
    reverse_gauss_decompose,
    reverse_gauss_decompose_stack,
    unit_inverse,
)
from algebra.codec import matrix_to_json, matrix_from_json

__all__ = [
    "RiccatiTodaError",
    "ShapeError",
    "SingularError",
    "NotDecomposableError",
    "BlowupAtNode",
    "DivergenceError",
    "BlowupError",
    "NotIntegrableError",
    "IntegrabilityError",
    "TooFewNodesError",
    "CurvatureWarning",
    "CMatrix",
    "as_cmatrix",
    "identity",
    "max_norm",
    "inverse",
    "matmul",
    "matexp",
    "commutator",
    "Part",
    "BlockPartition",
    "GradedContext",
    "project",
    "block_get",
    "block_set",
    "block_diag",
    "is_in_subgroup",
    "unit_triangular",
    "GaussFactors",
    "gauss_decompose",
    "gauss_decompose_stack",
    "reverse_gauss_decompose",
    "reverse_gauss_decompose_stack",
    "unit_inverse",
    "matrix_to_json",
    "matrix_from_json",
]
