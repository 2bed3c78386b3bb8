"""
Matrix-valued coefficient fields

A MatrixField maps a coordinate vector in R^dim_in to a complex matrix of fixed
shape. Fields built from SymPy expressions carry exact partial derivatives of
every order and evaluate whole batches of points in one call; combinators
(products, sums, inverses, pullbacks) propagate partials by the product rule,
so derivative accuracy is only lost where a leaf field has no analytic partials
and central differences take over.
"""

import logging
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from numpy.typing import NDArray

from algebra.errors import ShapeError
from algebra.matrices import CMatrix
from config.settings import config

logger = logging.getLogger(__name__)

Evaluator = Callable[[NDArray[np.float64]], CMatrix]
BatchEvaluator = Callable[[NDArray[np.float64]], CMatrix]
PartialFactory = Callable[[int], "MatrixField"]
Box = Tuple[Tuple[float, float], ...]


class MatrixField:
    """Coordinates -> complex matrix, with optional analytic partials"""

    def __init__(
        self,
        evaluator: Evaluator,
        dim_in: int,
        shape: Union[int, Tuple[int, int]],
        partials: Optional[PartialFactory] = None,
        domain: Optional[Box] = None,
        fd_step: Optional[float] = None,
        name: str = "field",
        batch: Optional[BatchEvaluator] = None,
    ):
        if dim_in < 1:
            raise ShapeError(f"a field needs at least one coordinate, got dim_in={dim_in}")
        self.evaluator = evaluator
        self.dim_in = int(dim_in)
        self.shape: Tuple[int, int] = (shape, shape) if isinstance(shape, int) else tuple(shape)  # type: ignore[assignment]
        self.domain = domain
        self.fd_step = float(config.get("numerics.fd_step", 1e-5) if fd_step is None else fd_step)
        self.name = name
        self._partials = partials
        # (M, dim_in) points -> (M, rows, cols) values, when the field has one
        self.batch = batch
        self._partial_cache: Dict[int, "MatrixField"] = {}

    def __repr__(self) -> str:
        return f"MatrixField({self.name}, dim_in={self.dim_in}, shape={self.shape})"

    @property
    def n(self) -> int:
        if self.shape[0] != self.shape[1]:
            raise ShapeError(f"{self.name} is not square: {self.shape}")
        return self.shape[0]

    @property
    def has_partials(self) -> bool:
        return self._partials is not None

    def __call__(self, x) -> CMatrix:
        point = np.asarray(x, dtype=np.float64).reshape(-1)
        if point.size != self.dim_in:
            raise ShapeError(f"{self.name} takes {self.dim_in} coordinates, got {point.size}")
        value = np.asarray(self.evaluator(point), dtype=np.complex128)
        if value.shape != self.shape:
            value = np.broadcast_to(value, self.shape).astype(np.complex128)
        return value

    def contains(self, x) -> bool:
        if self.domain is None:
            return True
        point = np.asarray(x, dtype=np.float64).reshape(-1)
        return all(lo <= c <= hi for c, (lo, hi) in zip(point, self.domain))

    # -- derivatives ----------------------------------------------------------

    def partial(self, index: int) -> "MatrixField":
        """The field of partial derivatives along coordinate `index`"""
        if not 0 <= index < self.dim_in:
            raise IndexError(f"coordinate index {index} out of range for {self.name}")
        if index not in self._partial_cache:
            if self._partials is not None:
                self._partial_cache[index] = self._partials(index)
            else:
                self._partial_cache[index] = _central_difference(self, index)
        return self._partial_cache[index]

    def derivative(self, index: int, x) -> CMatrix:
        return self.partial(index)(x)

    # -- algebra --------------------------------------------------------------

    def __matmul__(self, other: "MatrixField") -> "MatrixField":
        return product(self, other)

    def __add__(self, other: "MatrixField") -> "MatrixField":
        return linear_combination([(1.0, self), (1.0, other)])

    def __sub__(self, other: "MatrixField") -> "MatrixField":
        return linear_combination([(1.0, self), (-1.0, other)])

    def __neg__(self) -> "MatrixField":
        return linear_combination([(-1.0, self)])

    def __mul__(self, scalar: complex) -> "MatrixField":
        return linear_combination([(complex(scalar), self)])

    __rmul__ = __mul__

    def inverse(self) -> "MatrixField":
        return inverse_field(self)

    def conjugate_by(self, g: "MatrixField") -> "MatrixField":
        """g @ self @ g^{-1}"""
        return product(g, self, g.inverse())

    def pullback(self, indices: Sequence[int], dim_in: int) -> "MatrixField":
        return pullback(self, indices, dim_in)

    def block(self, rows: slice, cols: slice) -> "MatrixField":
        return sub_block(self, rows, cols)


def _central_difference(field: MatrixField, index: int) -> MatrixField:
    h = field.fd_step

    def evaluate(x):
        step = np.zeros_like(x)
        step[index] = h
        return (field(x + step) - field(x - step)) / (2.0 * h)

    def evaluate_many(points):
        step = np.zeros(field.dim_in)
        step[index] = h
        return (evaluate_batch(field, points + step) - evaluate_batch(field, points - step)) / (2.0 * h)

    return MatrixField(
        evaluate,
        field.dim_in,
        field.shape,
        domain=field.domain,
        fd_step=h,
        name=f"d{index}({field.name})",
        batch=evaluate_many,
    )


def _repeat(value: CMatrix, count: int) -> CMatrix:
    return np.broadcast_to(value, (count,) + value.shape).copy()


def constant(value, dim_in: int, name: str = "constant") -> MatrixField:
    arr = np.array(value, dtype=np.complex128)
    if arr.ndim != 2:
        raise ShapeError(f"constant field needs a matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    zero = zeros(arr.shape, dim_in)
    return MatrixField(
        lambda x: arr, dim_in, arr.shape, partials=lambda i: zero, name=name, batch=lambda p: _repeat(arr, len(p))
    )


def zeros(shape: Union[int, Tuple[int, int]], dim_in: int) -> MatrixField:
    """The zero field; it is its own partial derivative"""
    rows, cols = (shape, shape) if isinstance(shape, int) else shape
    value = np.zeros((rows, cols), dtype=np.complex128)
    value.setflags(write=False)
    holder: Dict[str, MatrixField] = {}
    field = MatrixField(
        lambda x: value,
        dim_in,
        (rows, cols),
        partials=lambda i: holder["0"],
        name="0",
        batch=lambda p: _repeat(value, len(p)),
    )
    holder["0"] = field
    return field


def identity_field(n: int, dim_in: int) -> MatrixField:
    return constant(np.eye(n), dim_in, name="I")


def product(*fields: MatrixField) -> MatrixField:
    """Matrix product with product-rule partials"""
    if not fields:
        raise ValueError("product needs at least one factor")
    if len(fields) == 1:
        return fields[0]
    dim_in = _common_dim(fields)
    for left, right in zip(fields, fields[1:]):
        if left.shape[1] != right.shape[0]:
            raise ShapeError(f"cannot multiply {left.shape} by {right.shape}")

    def evaluate(x):
        result = fields[0](x)
        for f in fields[1:]:
            result = result @ f(x)
        return result

    def evaluate_many(points):
        result = evaluate_batch(fields[0], points)
        for f in fields[1:]:
            result = result @ evaluate_batch(f, points)
        return result

    def partials(index: int) -> MatrixField:
        terms = []
        for k in range(len(fields)):
            factors = list(fields)
            factors[k] = fields[k].partial(index)
            terms.append((1.0, product(*factors)))
        return linear_combination(terms)

    shape = (fields[0].shape[0], fields[-1].shape[1])
    return MatrixField(
        evaluate, dim_in, shape, partials=partials, name="*".join(f.name for f in fields), batch=evaluate_many
    )


def linear_combination(terms: Sequence[Tuple[complex, MatrixField]]) -> MatrixField:
    """sum_k a_k f_k for scalar a_k"""
    if not terms:
        raise ValueError("linear_combination needs at least one term")
    fields = [f for _, f in terms]
    dim_in = _common_dim(fields)
    shape = fields[0].shape
    if any(f.shape != shape for f in fields):
        raise ShapeError("cannot add fields of different shapes")
    coeffs = [complex(a) for a, _ in terms]

    def evaluate(x):
        total = coeffs[0] * fields[0](x)
        for a, f in zip(coeffs[1:], fields[1:]):
            total = total + a * f(x)
        return total

    def evaluate_many(points):
        total = coeffs[0] * evaluate_batch(fields[0], points)
        for a, f in zip(coeffs[1:], fields[1:]):
            total = total + a * evaluate_batch(f, points)
        return total

    def partials(index: int) -> MatrixField:
        return linear_combination([(a, f.partial(index)) for a, f in zip(coeffs, fields)])

    name = "+".join(f.name for f in fields)
    return MatrixField(evaluate, dim_in, shape, partials=partials, name=name, batch=evaluate_many)


def inverse_field(field: MatrixField) -> MatrixField:
    """Pointwise inverse; d(g^{-1}) = -g^{-1} dg g^{-1}"""
    n = field.n
    holder: Dict[str, MatrixField] = {}

    def evaluate(x):
        return np.linalg.inv(field(x))

    def partials(index: int) -> MatrixField:
        inv = holder["inv"]
        return -product(inv, field.partial(index), inv)

    inv = MatrixField(
        evaluate,
        field.dim_in,
        n,
        partials=partials,
        name=f"inv({field.name})",
        batch=lambda points: np.linalg.inv(evaluate_batch(field, points)),
    )
    holder["inv"] = inv
    return inv


def pullback(field: MatrixField, indices: Sequence[int], dim_in: int) -> MatrixField:
    """Extend a field to dim_in coordinates, reading only the listed ones

    Partials along the ignored coordinates are exactly zero.
    """
    indices = tuple(int(i) for i in indices)
    if len(indices) != field.dim_in:
        raise ShapeError(f"{field.name} takes {field.dim_in} coordinates, {len(indices)} indices given")
    zero = zeros(field.shape, dim_in)

    def evaluate(x):
        return field(x[list(indices)])

    def partials(index: int) -> MatrixField:
        if index in indices:
            return pullback(field.partial(indices.index(index)), indices, dim_in)
        return zero

    def evaluate_many(points):
        return evaluate_batch(field, points[:, list(indices)])

    return MatrixField(evaluate, dim_in, field.shape, partials=partials, name=field.name, batch=evaluate_many)


def sub_block(field: MatrixField, rows: slice, cols: slice) -> MatrixField:
    probe = np.empty(field.shape)[rows, cols]

    def evaluate(x):
        return field(x)[rows, cols]

    def partials(index: int) -> MatrixField:
        return sub_block(field.partial(index), rows, cols)

    def evaluate_many(points):
        return evaluate_batch(field, points)[:, rows, cols]

    return MatrixField(
        evaluate, field.dim_in, probe.shape, partials=partials, name=f"{field.name}[block]", batch=evaluate_many
    )


def masked(field: MatrixField, mask: NDArray[np.bool_], name: Optional[str] = None) -> MatrixField:
    """Entries outside `mask` set to exactly zero (grade projections of a field)"""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != field.shape:
        raise ShapeError(f"mask {mask.shape} does not fit field {field.shape}")

    def evaluate(x):
        return np.where(mask, field(x), 0)

    def partials(index: int) -> MatrixField:
        return masked(field.partial(index), mask)

    def evaluate_many(points):
        return np.where(mask, evaluate_batch(field, points), 0)

    return MatrixField(
        evaluate, field.dim_in, field.shape, partials=partials, name=name or field.name, batch=evaluate_many
    )


def assemble_blocks(blocks: Sequence[Sequence[Optional[MatrixField]]], sizes: Sequence[int]) -> MatrixField:
    """Square field from a p x p grid of block fields (None for zero blocks)"""
    sizes = tuple(int(s) for s in sizes)
    offsets = np.concatenate(([0], np.cumsum(sizes)))
    n = int(offsets[-1])
    present = [f for row in blocks for f in row if f is not None]
    if not present:
        raise ValueError("assemble_blocks needs at least one non-zero block")
    dim_in = _common_dim(present)
    for r, row in enumerate(blocks):
        for s, f in enumerate(row):
            if f is not None and f.shape != (sizes[r], sizes[s]):
                raise ShapeError(f"block ({r + 1},{s + 1}) must be {sizes[r]}x{sizes[s]}, got {f.shape}")

    def evaluate(x):
        out = np.zeros((n, n), dtype=np.complex128)
        for r, row in enumerate(blocks):
            for s, f in enumerate(row):
                if f is not None:
                    out[offsets[r]:offsets[r + 1], offsets[s]:offsets[s + 1]] = f(x)
        return out

    def evaluate_many(points):
        out = np.zeros((len(points), n, n), dtype=np.complex128)
        for r, row in enumerate(blocks):
            for s, f in enumerate(row):
                if f is not None:
                    out[:, offsets[r]:offsets[r + 1], offsets[s]:offsets[s + 1]] = evaluate_batch(f, points)
        return out

    def partials(index: int) -> MatrixField:
        return assemble_blocks(
            [[None if f is None else f.partial(index) for f in row] for row in blocks], sizes
        )

    return MatrixField(evaluate, dim_in, n, partials=partials, name="blocks", batch=evaluate_many)


def left_log_derivative(g: MatrixField, index: int) -> MatrixField:
    """g^{-1} d_index g"""
    return product(g.inverse(), g.partial(index))


def right_log_derivative(g: MatrixField, index: int) -> MatrixField:
    """d_index g g^{-1}"""
    return product(g.partial(index), g.inverse())


def from_sympy(
    matrix,
    symbols: Sequence[sp.Symbol],
    name: str = "expr",
    domain: Optional[Box] = None,
) -> MatrixField:
    """Field from a SymPy matrix in the given coordinate symbols, exact partials"""
    mat = sp.Matrix(matrix)
    symbols = tuple(symbols)
    rows, cols = mat.shape
    if mat.is_zero_matrix:
        return zeros((rows, cols), len(symbols))
    compiled = sp.lambdify(symbols, mat, modules="numpy")
    entries = sp.lambdify(symbols, mat.tolist(), modules="numpy")

    def evaluate(x):
        value = np.asarray(compiled(*x), dtype=np.complex128)
        return np.broadcast_to(value, (rows, cols))

    def evaluate_many(points):
        # entries free of the coordinates come back as scalars
        out = np.empty((len(points), rows, cols), dtype=np.complex128)
        for r, row in enumerate(entries(*points.T)):
            for c, entry in enumerate(row):
                out[:, r, c] = entry
        return out

    def partials(index: int) -> MatrixField:
        return from_sympy(mat.diff(symbols[index]), symbols, name=f"d{index}({name})", domain=domain)

    return MatrixField(
        evaluate, len(symbols), (rows, cols), partials=partials, domain=domain, name=name, batch=evaluate_many
    )


def coordinate_symbols(prefix: str, count: int) -> Tuple[sp.Symbol, ...]:
    return tuple(sp.Symbol(f"{prefix}{k + 1}", real=True) for k in range(count))


def evaluate_batch(field: MatrixField, points: NDArray[np.float64]) -> CMatrix:
    """Evaluate at each row of a (M, dim_in) coordinate array"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, field.dim_in)
    if field.batch is not None:
        return np.asarray(field.batch(points), dtype=np.complex128).reshape((points.shape[0],) + field.shape)
    out = np.empty((points.shape[0],) + field.shape, dtype=np.complex128)
    for k, point in enumerate(points):
        out[k] = field(point)
    return out


def evaluate_on_grid(field: MatrixField, axes: Sequence[Sequence[float]]) -> CMatrix:
    """Values on the tensor grid spanned by `axes`, shape (len_0, ..., rows, cols)"""
    axes = [np.asarray(a, dtype=np.float64) for a in axes]
    if len(axes) != field.dim_in:
        raise ShapeError(f"{field.name} takes {field.dim_in} coordinates, {len(axes)} axes given")
    shape = tuple(len(a) for a in axes)
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
    out = evaluate_batch(field, points).reshape(shape + field.shape)
    logger.debug(f"Evaluated {field.name} on grid {shape}")
    return out


def _common_dim(fields: Sequence[MatrixField]) -> int:
    dims = {f.dim_in for f in fields}
    if len(dims) != 1:
        raise ShapeError(f"fields live on different coordinate spaces: {sorted(dims)}")
    return dims.pop()
