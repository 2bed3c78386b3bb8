"""
Sampled solutions and residual reports
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.typing import NDArray

from algebra.errors import ShapeError, TooFewNodesError
from algebra.matrices import CMatrix

logger = logging.getLogger(__name__)

SIDES = ("right", "left")


def check_side(side: str) -> str:
    if side not in SIDES:
        raise ValueError(f"side must be 'right' (dpsi = psi lam) or 'left' (dpsi = lam psi), got {side!r}")
    return side


@dataclass(frozen=True)
class Trajectory:
    """psi sampled at nodes x_0, ..., x_N of an interval

    `derivatives` holds the vector field evaluated at each node when the
    solver recorded it; gauge transformations use it in place of differencing.
    """

    nodes: NDArray[np.float64]
    values: CMatrix
    side: str = "right"
    derivatives: Optional[CMatrix] = None
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        check_side(self.side)
        if self.values.shape[0] != self.nodes.shape[0]:
            raise ShapeError(f"{self.nodes.shape[0]} nodes but {self.values.shape[0]} values")

    def __len__(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def final(self) -> CMatrix:
        return self.values[-1]

    @property
    def step(self) -> float:
        return float(self.nodes[1] - self.nodes[0]) if len(self) > 1 else 0.0

    def to_grid(self) -> "FieldOnGrid":
        derivatives = None if self.derivatives is None else (self.derivatives,)
        return FieldOnGrid((self.nodes,), self.values, dict(self.meta), derivatives)

    def map(self, fn: Callable[[CMatrix], CMatrix]) -> "Trajectory":
        return Trajectory(self.nodes, fn(self.values), self.side, None, dict(self.meta))


@dataclass(frozen=True)
class FieldOnGrid:
    """Matrices on a tensor grid; values has shape (len_0, ..., len_{d-1}, rows, cols)

    `derivatives`, when present, holds the exact partials along every axis as
    recorded by the producer.
    """

    axes: Tuple[NDArray[np.float64], ...]
    values: CMatrix
    meta: Dict[str, Any] = field(default_factory=dict)
    derivatives: Optional[Tuple[CMatrix, ...]] = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=np.float64) for a in self.axes)
        object.__setattr__(self, "axes", axes)
        expected = tuple(len(a) for a in axes)
        if self.values.shape[: len(axes)] != expected or self.values.ndim != len(axes) + 2:
            raise ShapeError(f"grid values of shape {self.values.shape} do not match axes {expected}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def grid_shape(self) -> Tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def matrix_shape(self) -> Tuple[int, int]:
        return self.values.shape[-2:]  # type: ignore[return-value]

    def coordinate(self, index: Sequence[int]) -> Tuple[float, ...]:
        return tuple(float(self.axes[k][i]) for k, i in enumerate(index))

    def mesh(self) -> NDArray[np.float64]:
        """Coordinates of every grid point, shape (len_0, ..., dim)"""
        return np.stack(np.meshgrid(*self.axes, indexing="ij"), axis=-1)

    def map(self, fn: Callable[[CMatrix], CMatrix]) -> "FieldOnGrid":
        return FieldOnGrid(self.axes, fn(self.values), dict(self.meta))


def partial_derivative(grid: FieldOnGrid, direction: int) -> FieldOnGrid:
    """Second-order differences along one axis (central inside, one-sided at the ends)"""
    if not 0 <= direction < grid.dim:
        raise IndexError(f"direction {direction} out of range for a {grid.dim}-axis grid")
    axis = grid.axes[direction]
    if len(axis) < 3:
        raise TooFewNodesError(f"axis {direction} has {len(axis)} nodes; at least 3 are needed")
    values = np.gradient(grid.values, axis, axis=direction, edge_order=2)
    return FieldOnGrid(grid.axes, values, dict(grid.meta))


def gradient_values(values: CMatrix, axes: Sequence[NDArray[np.float64]], direction: int) -> CMatrix:
    """partial_derivative on a raw value array laid out like FieldOnGrid.values"""
    axis = np.asarray(axes[direction], dtype=np.float64)
    if len(axis) < 3:
        raise TooFewNodesError(f"axis {direction} has {len(axis)} nodes; at least 3 are needed")
    return np.gradient(values, axis, axis=direction, edge_order=2)


def interior(values: NDArray, grid_dims: int) -> NDArray:
    """Drop the boundary layer on every grid axis that has room for one"""
    index = tuple(slice(1, -1) if values.shape[k] >= 3 else slice(None) for k in range(grid_dims))
    return values[index]


def grid_max_norm(values: NDArray, grid_dims: Optional[int] = None) -> float:
    """Max modulus over a stack, restricted to interior nodes when grid_dims is given

    NaN entries (failed grid points) are ignored.
    """
    arr = np.asarray(values)
    if grid_dims is not None:
        arr = interior(arr, grid_dims)
    mod = np.abs(arr)
    if mod.size == 0 or np.all(np.isnan(mod)):
        return 0.0
    return float(np.nanmax(mod))


@dataclass
class ResidualReport:
    """Per-equation max-norm residuals with grid and step metadata"""

    residuals: Dict[str, float] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)

    def add(self, label: str, value: float) -> "ResidualReport":
        value = float(value)
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"residual {label} must be finite and non-negative, got {value}")
        self.residuals[label] = value
        return self

    def merge(self, other: "ResidualReport", prefix: str = "") -> "ResidualReport":
        for label, value in other.residuals.items():
            self.add(f"{prefix}{label}", value)
        for key, value in other.meta.items():
            self.meta.setdefault(f"{prefix}{key}", value)
        return self

    def __getitem__(self, label: str) -> float:
        return self.residuals[label]

    def __contains__(self, label: str) -> bool:
        return label in self.residuals

    def max(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def failures(self, gate: float, labels: Optional[Sequence[str]] = None) -> List[str]:
        names = self.residuals if labels is None else labels
        return [label for label in names if self.residuals[label] > gate]

    def passes(self, gate: float, labels: Optional[Sequence[str]] = None) -> bool:
        return not self.failures(gate, labels)

    def to_dict(self) -> Dict[str, Any]:
        return {"residuals": dict(sorted(self.residuals.items())), "meta": _jsonable(self.meta)}


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value
