# The MIT License (MIT)
# Copyright © 2024 szmk contributors

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

import typing
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from szmk.constants import (
    DEFAULT_QUAD_ORDER,
    DEFAULT_TAIL_TOL,
    MAX_TAIL_TOL,
    REFINE_LEVELS,
)


RealFn = typing.Callable[[typing.Any], typing.Any]


class OperatorConfig(BaseModel):
    """
    Parameters of the operator R_{m,a} plus the numerical controls of its evaluation.

    Attributes:
    - m: operator index
    - a: fixed base, strictly greater than one
    - tail_tol: Poisson mass allowed to be dropped by the series truncation
    - quad_order: Gauss-Legendre nodes per segment [k/m, (k+1)/m]
    """
    model_config = ConfigDict(frozen=True)

    m: int = Field(ge=1)
    a: float = Field(gt=1.0)
    tail_tol: float = Field(default=DEFAULT_TAIL_TOL, gt=0.0, le=MAX_TAIL_TOL)
    quad_order: int = Field(default=DEFAULT_QUAD_ORDER, ge=1)

    def with_m(self, m: int) -> "OperatorConfig":
        return OperatorConfig(m=m, a=self.a, tail_tol=self.tail_tol, quad_order=self.quad_order)


class WeightRange(BaseModel):
    """
    Contiguous block of Poisson masses s_{m,k}(x), k in [k_lo, k_hi], kept by the truncation.
    """
    model_config = ConfigDict(frozen=True)

    k_lo: int = Field(ge=0)
    k_hi: int
    weights: typing.List[float]
    tail_tol: float = DEFAULT_TAIL_TOL

    @model_validator(mode="after")
    def _check_mass(self) -> "WeightRange":
        if self.k_hi < self.k_lo:
            raise ValueError(f"k_hi={self.k_hi} < k_lo={self.k_lo}")
        if len(self.weights) != self.k_hi - self.k_lo + 1:
            raise ValueError("one weight per k in [k_lo, k_hi] is required")
        if any(w < 0.0 for w in self.weights):
            raise ValueError("Poisson masses are non-negative")
        total = float(np.sum(self.weights))
        # a few ulps of rounding on either side of the interval are tolerated
        if not (1.0 - self.tail_tol - 1e-14 <= total <= 1.0 + 1e-14):
            raise ValueError(f"retained mass {total!r} outside [1 - tail_tol, 1]")
        return self

    @property
    def omitted_mass(self) -> float:
        return max(0.0, 1.0 - float(np.sum(self.weights)))


class EvalResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    terms_used: int = Field(ge=1)
    tail_bound: float = Field(ge=0.0)


class MomentReport(BaseModel):
    """
    One operator moment computed along three independent paths.

    closed_form is None past the orders the closed formulas cover (raw > 3, central > 4).
    """
    kind: typing.Literal["raw", "central"]
    order: int = Field(ge=0)
    closed_form: typing.Optional[float] = None
    exact: float
    numeric: float
    max_discrepancy: float = Field(ge=0.0)


class AsymptoticCheck(BaseModel):
    order: typing.Literal[2, 3, 6]
    limit_value: float
    sequence: typing.List[typing.Tuple[int, float]]
    converged: bool

    @property
    def errors(self) -> typing.List[float]:
        return [abs(value - self.limit_value) for _, value in self.sequence]


class GridSpec(BaseModel):
    """
    Uniform sampling of a window [lo, hi] used for every empirical supremum.
    """
    model_config = ConfigDict(frozen=True)

    lo: float = Field(default=0.0, ge=0.0)
    hi: float
    points: int = Field(ge=2)
    refine_levels: int = Field(default=REFINE_LEVELS, ge=0)

    @model_validator(mode="after")
    def _check_window(self) -> "GridSpec":
        if not self.hi > self.lo:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")
        return self

    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.points - 1)


class ModulusResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(ge=0.0)
    argmax_location: typing.Tuple[float, float]
    grid: GridSpec


class GrowthClass(Enum):
    BOUNDED = "BOUNDED"
    POLYNOMIAL = "POLYNOMIAL"
    EXPONENTIAL = "EXPONENTIAL"


class BVMetadata(BaseModel):
    """
    One-sided derivative rules f'(x+) and f'(x-).
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dplus: RealFn
    dminus: RealFn


class TestFunction(BaseModel):
    """
    A function of t >= 0 the operator is applied to.

    eval, d1 and d2 must accept numpy arrays and return arrays of the same shape
    (scalars broadcast).
    """
    __test__ = False  # not a pytest class
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    eval: RealFn
    d1: typing.Optional[RealFn] = None
    d2: typing.Optional[RealFn] = None
    growth_class: GrowthClass = GrowthClass.POLYNOMIAL
    safe_upper: typing.Optional[float] = None
    bv_metadata: typing.Optional[BVMetadata] = None

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(np.asarray(self.eval(t), dtype=float), t.shape)

    def __repr_args__(self):
        return [("name", self.name), ("growth_class", self.growth_class)]


class BVFunction(BaseModel):
    """
    A function of DBV[0, inf): its derivative has bounded variation on every finite interval.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    base: TestFunction
    dplus: RealFn
    dminus: RealFn


class TheoremId(Enum):
    LIP_MAXIMAL = "LIP_MAXIMAL"
    DITZIAN_TOTIK = "DITZIAN_TOTIK"
    LIP_UV = "LIP_UV"
    BV_RATE = "BV_RATE"
    VORONOVSKAYA = "VORONOVSKAYA"
    GRUSS = "GRUSS"


class BoundReport(BaseModel):
    theorem_id: TheoremId
    x: float
    m: int
    a: float
    bound: float
    observed: float
    holds: bool
    surrogate_flags: typing.List[str] = []

    @field_validator("bound", "observed")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not np.isfinite(value):
            raise ValueError("bound and observed error must be finite")
        return value


class VoronovskayaReport(BaseModel):
    x: float
    m: int
    a: float
    residual: float
    delta_f2: float
    proof_majorant: float


class ConvergenceRow(BaseModel):
    m: int
    a: float
    sup_error: float
    argmax: float
