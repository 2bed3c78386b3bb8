"""
Composite Simpson quadrature on the flow solver's node set

Nodes x_0, ..., x_{2N} are equally spaced with step h; even nodes close a
Simpson panel, odd nodes are panel midpoints and get the half-panel rule
int_{x_0}^{x_1} f = h/12 (5 f_0 + 8 f_1 - f_2).
"""

import numpy as np
from numpy.typing import NDArray


def even_steps(steps: int) -> int:
    """Smallest even step count >= steps (Simpson panels need pairs of intervals)"""
    steps = max(int(steps), 2)
    return steps + (steps % 2)


def cumulative_simpson(values: NDArray, h: float) -> NDArray:
    """Running integral from x_0 at every node; values has shape (2N + 1, ...)"""
    values = np.asarray(values)
    count = values.shape[0]
    if count < 3 or count % 2 == 0:
        raise ValueError(f"cumulative_simpson needs an odd number (>= 3) of nodes, got {count}")

    out = np.zeros_like(values, dtype=np.result_type(values, np.float64))
    f0, f1, f2 = values[0:-2:2], values[1:-1:2], values[2::2]
    panels = (h / 3.0) * (f0 + 4.0 * f1 + f2)
    out[2::2] = np.cumsum(panels, axis=0)
    out[1::2] = out[0:-2:2] + (h / 12.0) * (5.0 * f0 + 8.0 * f1 - f2)
    return out


def simpson(values: NDArray, h: float) -> NDArray:
    """Integral over the whole node set"""
    return cumulative_simpson(values, h)[-1]
