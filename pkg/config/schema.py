"""
Scenario file models for the riccati-toda CLI

A scenario is one JSON document with a `kind` and the payload that kind needs.
Matrices are nested lists of [re, im] pairs (plain reals are accepted);
coefficient fields are FieldSpec objects discriminated on `type`.
"""

import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from pydantic import AfterValidator, BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, TypeAdapter, field_validator, model_validator
from scipy.interpolate import RegularGridInterpolator

from algebra.codec import matrix_from_json
from algebra.errors import ShapeError
from algebra.matrices import CMatrix
from flow.fields import MatrixField, constant, from_sympy

SCHEMA_VERSION = 1
MAX_POLYNOMIAL_DEGREE = 8

Symbols = Sequence[sp.Symbol]


def as_matrix(payload: List) -> CMatrix:
    return matrix_from_json(payload, ndim=2)


def _check_matrix(payload: List) -> List:
    as_matrix(payload)
    return payload


MatrixPayload = Annotated[List, AfterValidator(_check_matrix)]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -- coefficient fields -----------------------------------------------------------


class ConstantFieldSpec(_Model):
    type: Literal["constant"]
    value: MatrixPayload

    @property
    def shape(self) -> Tuple[int, int]:
        return as_matrix(self.value).shape  # type: ignore[return-value]

    def to_field(self, symbols: Symbols, name: str = "constant") -> MatrixField:
        return constant(as_matrix(self.value), len(symbols), name=name)


class Monomial(_Model):
    powers: List[Annotated[int, Field(ge=0)]]
    coeff: MatrixPayload


class PolynomialFieldSpec(_Model):
    """sum_k coeff_k * prod_i x_i^powers_k[i]"""

    type: Literal["polynomial"]
    terms: List[Monomial] = Field(min_length=1)

    @model_validator(mode="after")
    def _consistent(self) -> "PolynomialFieldSpec":
        shapes = {as_matrix(t.coeff).shape for t in self.terms}
        if len(shapes) != 1:
            raise ValueError(f"polynomial coefficients disagree in shape: {sorted(shapes)}")
        arities = {len(t.powers) for t in self.terms}
        if len(arities) != 1:
            raise ValueError("every monomial needs the same number of powers")
        degree = max(sum(t.powers) for t in self.terms)
        if degree > MAX_POLYNOMIAL_DEGREE:
            raise ValueError(f"polynomial degree {degree} exceeds {MAX_POLYNOMIAL_DEGREE}")
        return self

    @property
    def shape(self) -> Tuple[int, int]:
        return as_matrix(self.terms[0].coeff).shape  # type: ignore[return-value]

    def to_field(self, symbols: Symbols, name: str = "polynomial") -> MatrixField:
        if len(self.terms[0].powers) != len(symbols):
            raise ShapeError(f"{name}: monomials have {len(self.terms[0].powers)} powers, field takes {len(symbols)} coordinates")
        total = sp.zeros(*self.shape)
        for term in self.terms:
            monomial = sp.Mul(*(s**p for s, p in zip(symbols, term.powers)))
            total += sp.Matrix(as_matrix(term.coeff).tolist()) * monomial
        return from_sympy(total, symbols, name=name)


def _parsed_rows(rows):
    """Rectangular rows of SymPy-readable entries, or ValueError"""
    if len({len(row) for row in rows}) != 1:
        raise ValueError("expression rows must have equal length")
    for row in rows:
        for entry in row:
            try:
                sp.sympify(entry)
            except (sp.SympifyError, TypeError, SyntaxError) as e:
                raise ValueError(f"cannot parse expression {entry!r}: {e}")
    return rows


class ExpressionFieldSpec(_Model):
    """Entries as SymPy strings in the coordinate names the scenario declares"""

    type: Literal["expression"]
    entries: List[List[Union[str, float]]] = Field(min_length=1)

    @field_validator("entries")
    @classmethod
    def _rectangular(cls, value):
        return _parsed_rows(value)

    @property
    def shape(self) -> Tuple[int, int]:
        return len(self.entries), len(self.entries[0])

    def to_field(self, symbols: Symbols, name: str = "expression") -> MatrixField:
        local = {str(s): s for s in symbols}
        matrix = sp.Matrix([[sp.sympify(e, locals=local) for e in row] for row in self.entries])
        stray = matrix.free_symbols - set(symbols)
        if stray:
            raise ShapeError(f"{name} uses undeclared coordinates {sorted(map(str, stray))}")
        return from_sympy(matrix, symbols, name=name)


class GridFieldSpec(_Model):
    """Sampled matrices on a tensor grid, interpolated between nodes"""

    type: Literal["grid"]
    axes: List[List[float]] = Field(min_length=1)
    values: List
    method: Literal["linear", "cubic"] = "linear"

    @model_validator(mode="after")
    def _grid_shape(self) -> "GridFieldSpec":
        for axis in self.axes:
            if len(axis) < 2 or np.any(np.diff(axis) <= 0):
                raise ValueError("grid axes need at least two strictly increasing nodes")
        values = self.array()
        expected = tuple(len(a) for a in self.axes)
        if values.shape[: len(expected)] != expected or values.ndim != len(expected) + 2:
            raise ValueError(f"grid values have shape {values.shape}, axes need {expected} + (rows, cols)")
        return self

    def array(self) -> CMatrix:
        return matrix_from_json(self.values, ndim=len(self.axes) + 2)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.array().shape[-2:]  # type: ignore[return-value]

    def to_field(self, symbols: Symbols, name: str = "grid") -> MatrixField:
        if len(symbols) != len(self.axes):
            raise ShapeError(f"{name} is sampled on {len(self.axes)} axes, field takes {len(symbols)} coordinates")
        values = self.array()
        rows, cols = values.shape[-2:]
        axes = tuple(np.asarray(a) for a in self.axes)
        real = RegularGridInterpolator(axes, values.real, method=self.method, bounds_error=False, fill_value=None)
        imag = RegularGridInterpolator(axes, values.imag, method=self.method, bounds_error=False, fill_value=None)

        def evaluate(x):
            point = np.asarray(x, dtype=np.float64).reshape(1, -1)
            return (real(point)[0] + 1j * imag(point)[0]).reshape(rows, cols)

        box = tuple((float(a[0]), float(a[-1])) for a in axes)
        return MatrixField(evaluate, len(axes), (rows, cols), domain=box, name=name)


FieldSpec = Annotated[
    Union[ConstantFieldSpec, PolynomialFieldSpec, ExpressionFieldSpec, GridFieldSpec],
    Field(discriminator="type"),
]


# -- grids ---------------------------------------------------------------------------


class AxisSpec(_Model):
    start: float = 0.0
    stop: float
    nodes: Annotated[int, Field(ge=3)] = 11

    def linspace(self, nodes: Optional[int] = None) -> np.ndarray:
        return np.linspace(self.start, self.stop, nodes or self.nodes)


class TodaGridSpec(_Model):
    nodes: Annotated[int, Field(ge=3)] = 9
    extent: PositiveFloat = 0.1
    start: float = 0.0


# -- scenarios -----------------------------------------------------------------------


class _Scenario(_Model):
    version: Literal[1] = SCHEMA_VERSION
    name: Optional[str] = None
    description: str = ""
    gate: Optional[PositiveFloat] = None


class GaussScenario(_Scenario):
    kind: Literal["gauss"]
    partition: List[PositiveInt] = Field(min_length=1)
    matrix: MatrixPayload
    tol: Optional[PositiveFloat] = None
    reverse: bool = False

    @model_validator(mode="after")
    def _fits(self) -> "GaussScenario":
        n = sum(self.partition)
        if as_matrix(self.matrix).shape != (n, n):
            raise ValueError(f"matrix must be {n}x{n} for partition {self.partition}")
        return self


class FlowScenario(_Scenario):
    kind: Literal["flow"]
    field: FieldSpec
    psi0: Optional[MatrixPayload] = None
    interval: Tuple[float, float] = (0.0, 1.0)
    steps: Optional[PositiveInt] = None
    side: Literal["right", "left"] = "right"
    method: Optional[Literal["rk4", "magnus-midpoint"]] = None


class _RiccatiPayload(_Scenario):
    partition: List[PositiveInt] = Field(min_length=2)
    initial: Optional[MatrixPayload] = None
    m: Optional[MatrixPayload] = None
    side: Literal["upper", "lower"] = "upper"
    method: Optional[Literal["rk4", "magnus-midpoint"]] = None

    @model_validator(mode="after")
    def _one_initial(self):
        if (self.initial is None) == (self.m is None):
            raise ValueError("give exactly one of `initial` (full unit triangular) or `m` (2-block)")
        if self.m is not None and len(self.partition) != 2:
            raise ValueError("`m` needs a 2-block partition; use `initial` otherwise")
        return self


class RiccatiScenario(_RiccatiPayload):
    kind: Literal["riccati"]
    field: FieldSpec
    interval: Tuple[float, float] = (0.0, 1.0)
    steps: Optional[PositiveInt] = None
    reference: Optional[List[List[str]]] = None

    @field_validator("reference")
    @classmethod
    def _reference_parses(cls, value):
        return None if value is None else _parsed_rows(value)


class RiccatiMDScenario(_RiccatiPayload):
    kind: Literal["riccati-md"]
    fields: List[FieldSpec] = Field(min_length=1)
    axes: List[AxisSpec] = Field(min_length=1)
    order: Optional[List[int]] = None
    substeps: Optional[PositiveInt] = None

    @model_validator(mode="after")
    def _directions(self) -> "RiccatiMDScenario":
        if len(self.fields) != len(self.axes):
            raise ValueError(f"{len(self.fields)} direction fields need as many axes, got {len(self.axes)}")
        if self.order is not None and sorted(self.order) != list(range(len(self.axes))):
            raise ValueError("order must be a permutation of the axis indices")
        return self


class BZeroPayload(_Model):
    family: Literal["b_zero"]
    C: FieldSpec
    A: Optional[FieldSpec] = None
    D: Optional[FieldSpec] = None
    m: MatrixPayload
    x: float
    steps: Optional[PositiveInt] = None


class CBEqualPayload(_Model):
    family: Literal["cb_equal"]
    B: FieldSpec
    m: MatrixPayload
    x: float
    steps: Optional[PositiveInt] = None


class ConstantBCPayload(_Model):
    family: Literal["constant_bc"]
    B: MatrixPayload
    C: MatrixPayload
    m: MatrixPayload
    x: float
    steps: Optional[PositiveInt] = None
    series_terms: Annotated[int, Field(ge=1)] = 20


class ThreeBlockPayload(_Model):
    family: Literal["three_block_nilpotent"]
    C21: FieldSpec
    C31: FieldSpec
    C32: FieldSpec
    m12: MatrixPayload
    m13: MatrixPayload
    m23: MatrixPayload
    x: float
    steps: Optional[PositiveInt] = None


class MDNilpotentPayload(_Model):
    family: Literal["md_nilpotent"]
    C: List[FieldSpec] = Field(min_length=1)
    m: MatrixPayload
    point: List[float]
    nodes: Annotated[int, Field(ge=3)] = 11
    steps: Optional[PositiveInt] = None

    @model_validator(mode="after")
    def _point(self) -> "MDNilpotentPayload":
        if len(self.point) != len(self.C):
            raise ValueError(f"point needs {len(self.C)} coordinates")
        return self


ClosedFormPayload = Annotated[
    Union[BZeroPayload, CBEqualPayload, ConstantBCPayload, ThreeBlockPayload, MDNilpotentPayload],
    Field(discriminator="family"),
]


class ClosedFormScenario(_Scenario):
    kind: Literal["closed-form"]
    problem: ClosedFormPayload


class NonabelianPayload(_Model):
    family: Literal["maximally_nonabelian"]
    d: PositiveInt
    F_minus: Union[str, float]
    F_plus: Union[str, float]
    H_minus: List[Union[str, float]]
    H_plus: List[Union[str, float]]
    xi_plus: Optional[List[Union[str, float]]] = None
    xi_minus: Optional[List[Union[str, float]]] = None
    m_minus: Optional[MatrixPayload] = None
    m_plus: Optional[MatrixPayload] = None

    @model_validator(mode="after")
    def _lengths(self) -> "NonabelianPayload":
        for name in ("H_minus", "H_plus", "xi_plus", "xi_minus"):
            value = getattr(self, name)
            if value is not None and len(value) != self.d:
                raise ValueError(f"{name} needs {self.d} entries, got {len(value)}")
        return self


class GeneralTodaPayload(_Model):
    """Chiral data as fields of zm1..zmd (gamma_minus, c_minus, xi_plus) or zp1..zpd"""

    family: Literal["general"]
    partition: List[PositiveInt] = Field(min_length=2)
    gamma_minus: FieldSpec
    gamma_plus: FieldSpec
    c_minus: List[FieldSpec] = Field(min_length=1)
    c_plus: List[FieldSpec] = Field(min_length=1)
    xi_minus: Optional[FieldSpec] = None
    xi_plus: Optional[FieldSpec] = None
    m_minus: Optional[MatrixPayload] = None
    m_plus: Optional[MatrixPayload] = None

    @model_validator(mode="after")
    def _directions(self) -> "GeneralTodaPayload":
        if len(self.c_minus) != len(self.c_plus):
            raise ValueError("c_minus and c_plus need the same number of directions")
        return self

    @property
    def d(self) -> int:
        return len(self.c_minus)


TodaPayload = Annotated[Union[NonabelianPayload, GeneralTodaPayload], Field(discriminator="family")]


class TodaScenario(_Scenario):
    kind: Literal["toda"]
    data: TodaPayload
    grid: TodaGridSpec = TodaGridSpec()
    substeps: Optional[PositiveInt] = None


class WznwScenario(_Scenario):
    """psi sampled on a grid, or psi = plus_factor(z^+) minus_factor(z^-)"""

    kind: Literal["wznw-check"]
    d: PositiveInt = 1
    psi: Optional[GridFieldSpec] = None
    minus_factor: Optional[FieldSpec] = None
    plus_factor: Optional[FieldSpec] = None
    grid: TodaGridSpec = TodaGridSpec()

    @model_validator(mode="after")
    def _one_source(self) -> "WznwScenario":
        factorized = self.minus_factor is not None and self.plus_factor is not None
        if (self.psi is not None) == factorized:
            raise ValueError("give either `psi` or both `minus_factor` and `plus_factor`")
        if self.psi is not None and len(self.psi.axes) != 2 * self.d:
            raise ValueError(f"psi must be sampled on 2d = {2 * self.d} axes")
        return self


Scenario = Annotated[
    Union[
        GaussScenario,
        FlowScenario,
        RiccatiScenario,
        RiccatiMDScenario,
        ClosedFormScenario,
        TodaScenario,
        WznwScenario,
    ],
    Field(discriminator="kind"),
]

_SCENARIO: TypeAdapter = TypeAdapter(Scenario)


def parse_scenario(payload: dict) -> Scenario:
    """Validate a decoded JSON document; raises pydantic.ValidationError"""
    return _SCENARIO.validate_python(payload)


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a scenario file; JSON errors surface as json.JSONDecodeError,
    bytes that are not UTF-8 as UnicodeDecodeError"""
    with open(path, "r", encoding="utf-8") as f:
        payload = json.load(f)
    scenario = parse_scenario(payload)
    if scenario.name is None:
        scenario = scenario.model_copy(update={"name": Path(path).stem})
    return scenario
