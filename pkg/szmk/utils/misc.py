from functools import lru_cache
from typing import Tuple

import numpy as np


@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights on [-1, 1], cached per order.

    The returned arrays are read-only; the rule is exact for polynomials of degree 2*order - 1.
    """
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def expm1_minus_identity(z: float) -> float:
    """
    e^z - 1 - z without the cancellation of the direct formula near z = 0.
    """
    if abs(z) > 0.5:
        return float(np.expm1(z) - z)
    term = z * z / 2.0
    total = 0.0
    n = 2
    while abs(term) > 1e-18 * abs(total) and n < 60:
        total += term
        n += 1
        term *= z / n
    return total


def relative_deviation(value: float, reference: float) -> float:
    """|value - reference| scaled by max(1, |reference|)."""
    return abs(value - reference) / max(1.0, abs(reference))
