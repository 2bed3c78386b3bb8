"""
JSON encoding of complex matrices: nested row-major lists of [re, im] pairs.
Stacks nest one more list level per leading axis.
"""

from typing import Any, List, Optional

import numpy as np

from algebra.errors import ShapeError
from algebra.matrices import CMatrix


def matrix_to_json(x: Any) -> List:
    """Encode a matrix (or stack) as nested lists ending in [re, im] pairs"""
    arr = np.asarray(x, dtype=np.complex128)
    pairs = np.stack([arr.real, arr.imag], axis=-1)
    return pairs.tolist()


def matrix_from_json(data: Any, ndim: Optional[int] = None) -> CMatrix:
    """Decode nested lists into a complex array

    Leaves may be [re, im] pairs or plain real numbers. `ndim` is the number of
    array axes expected (2 for one matrix); without it, a trailing axis of
    length 2 is read as pairs only when the nesting is at least three deep.
    """
    try:
        arr = np.asarray(data, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ShapeError(f"matrix payload is not a rectangular numeric array: {e}")

    if ndim is None:
        pairs = arr.ndim >= 3 and arr.shape[-1] == 2
    elif arr.ndim == ndim + 1 and arr.shape[-1] == 2:
        pairs = True
    elif arr.ndim == ndim:
        pairs = False
    else:
        raise ShapeError(f"expected a {ndim}-axis matrix payload, got shape {arr.shape}")

    if pairs:
        out = arr[..., 0] + 1j * arr[..., 1]
    else:
        out = arr.astype(np.complex128)
    if out.ndim < 2:
        raise ShapeError(f"matrix payload must have at least two axes, got shape {out.shape}")
    return np.ascontiguousarray(out, dtype=np.complex128)
