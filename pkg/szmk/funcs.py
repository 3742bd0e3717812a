"""
Registry of the functions the operator is exercised on: the monomials e_0..e_4, the two
functions of the graphical examples, and a handful of bounded / kinked helpers.

Parameterized entries take their parameter after a colon: `abs_shift:1.5`, `constant:3`.
"""

from types import MappingProxyType
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from szmk.constants import EXP_SAFE_UPPER, FD_STEP
from szmk.errors import EnvelopeError, MissingDerivativeError, UnknownFunctionError
from szmk.protocol import BVMetadata, GrowthClass, TestFunction
from szmk.utils.misc import relative_deviation


def _monomial(power: int) -> TestFunction:
    def d1(t):
        return power * t ** (power - 1) if power >= 1 else np.zeros_like(t)

    def d2(t):
        return power * (power - 1) * t ** (power - 2) if power >= 2 else np.zeros_like(t)

    return TestFunction(
        name=f"e{power}",
        eval=(lambda t: t ** power) if power else (lambda t: np.ones_like(t)),
        d1=d1,
        d2=d2,
        growth_class=GrowthClass.BOUNDED if power == 0 else GrowthClass.POLYNOMIAL,
    )


def constant(c: float = 1.0) -> TestFunction:
    return TestFunction(
        name=f"constant:{c:g}",
        eval=lambda t: np.full_like(t, c),
        d1=np.zeros_like,
        d2=np.zeros_like,
        growth_class=GrowthClass.BOUNDED,
    )


def abs_shift(c: float = 1.0) -> TestFunction:
    """|t - c|: continuous, derivative jumps from -1 to 1 at t = c."""
    return TestFunction(
        name=f"abs_shift:{c:g}",
        eval=lambda t: np.abs(t - c),
        d1=lambda t: np.sign(t - c),
        d2=np.zeros_like,
        growth_class=GrowthClass.POLYNOMIAL,
        bv_metadata=BVMetadata(
            dplus=lambda x: np.where(np.asarray(x) >= c, 1.0, -1.0),
            dminus=lambda x: np.where(np.asarray(x) <= c, -1.0, 1.0),
        ),
    )


def _x2expx() -> TestFunction:
    return TestFunction(
        name="x2expx",
        eval=lambda t: t ** 2 * np.exp(t),
        d1=lambda t: (t ** 2 + 2 * t) * np.exp(t),
        d2=lambda t: (t ** 2 + 4 * t + 2) * np.exp(t),
        growth_class=GrowthClass.EXPONENTIAL,
        safe_upper=EXP_SAFE_UPPER,
    )


def _xcos2x1() -> TestFunction:
    return TestFunction(
        name="xcos2x1",
        eval=lambda t: t * np.cos(2 * t + 1),
        d1=lambda t: np.cos(2 * t + 1) - 2 * t * np.sin(2 * t + 1),
        d2=lambda t: -4 * np.sin(2 * t + 1) - 4 * t * np.cos(2 * t + 1),
        growth_class=GrowthClass.POLYNOMIAL,
    )


def _sqrt() -> TestFunction:
    return TestFunction(
        name="sqrt",
        eval=np.sqrt,
        d1=lambda t: 0.5 / np.sqrt(t),
        d2=lambda t: -0.25 * t ** -1.5,
        growth_class=GrowthClass.POLYNOMIAL,
    )


def _trig(name: str) -> TestFunction:
    if name == "cos":
        return TestFunction(
            name="cos", eval=np.cos, d1=lambda t: -np.sin(t), d2=lambda t: -np.cos(t),
            growth_class=GrowthClass.BOUNDED,
        )
    return TestFunction(
        name="sin", eval=np.sin, d1=np.cos, d2=lambda t: -np.sin(t),
        growth_class=GrowthClass.BOUNDED,
    )


# name -> (factory, takes a parameter)
_REGISTRY: Dict[str, Tuple[Callable[..., TestFunction], bool]] = {
    "e0": (lambda: _monomial(0), False),
    "e1": (lambda: _monomial(1), False),
    "e2": (lambda: _monomial(2), False),
    "e3": (lambda: _monomial(3), False),
    "e4": (lambda: _monomial(4), False),
    "x2expx": (_x2expx, False),
    "xcos2x1": (_xcos2x1, False),
    "sqrt": (_sqrt, False),
    "cos": (lambda: _trig("cos"), False),
    "sin": (lambda: _trig("sin"), False),
    "abs_shift": (abs_shift, True),
    "kink": (lambda: abs_shift(1.0), False),
    "constant": (constant, True),
}
REGISTRY = MappingProxyType(_REGISTRY)


def available_names() -> List[str]:
    return sorted(REGISTRY)


def registry_get(name: str) -> TestFunction:
    """
    Returns the registered function `name`, or `name:param` for parameterized entries.

    Raises:
        UnknownFunctionError: listing the available names.
    """
    base, _, param = name.partition(":")
    entry = REGISTRY.get(base)
    if entry is None or (param and not entry[1]):
        raise UnknownFunctionError(
            f"Unknown function '{name}'. Available: {', '.join(available_names())}"
        )
    factory, parameterized = entry
    if parameterized and param:
        try:
            return factory(float(param))
        except ValueError:
            raise UnknownFunctionError(f"Bad parameter in '{name}': expected a number after ':'")
    return factory()


def envelope_check(f: TestFunction, t_max: float) -> None:
    """
    Rejects evaluating an exponential-growth function beyond the range where it stays finite.
    """
    if f.growth_class is GrowthClass.EXPONENTIAL and f.safe_upper is not None and t_max > f.safe_upper:
        raise EnvelopeError(
            f"{f.name} grows exponentially; truncation range reaches t={t_max:.6g} "
            f"beyond its safe limit {f.safe_upper:g}"
        )


def finite_diff_check(f: TestFunction, x: float, step: float = FD_STEP) -> Tuple[float, Optional[float]]:
    """
    Deviation of the analytic derivatives from central differences at x.

    d1 is compared with the central difference of f and d2 with the central difference of d1.
    Deviations are |analytic - numeric| / max(1, |numeric|). The second entry is None when f
    carries no d2.
    """
    if f.d1 is None:
        raise MissingDerivativeError(f"{f.name} has no first derivative")
    numeric_d1 = float((f(x + step) - f(x - step)) / (2 * step))
    d1_dev = relative_deviation(float(f.d1(np.float64(x))), numeric_d1)
    if f.d2 is None:
        return d1_dev, None
    numeric_d2 = float((f.d1(np.float64(x + step)) - f.d1(np.float64(x - step))) / (2 * step))
    d2_dev = relative_deviation(float(f.d2(np.float64(x))), numeric_d2)
    return d1_dev, d2_dev
