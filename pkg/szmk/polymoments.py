"""
Moments of R_{m,a}.

Three independent paths are provided:

- closed forms for R(e_i), i <= 3, and for the central moments Lambda^j, j <= 4;
- an exact engine for any order up to STIRLING_MAX, with no series truncation: the segment
  average m * int_{k/m}^{(k+1)/m} t^j dt equals E[(k + U)^j] / m^j with U uniform on [0, 1],
  and the Poisson moments E[K^r] are sums of Stirling numbers of the second kind times lambda^i;
- the kernel path (quadrature over the truncated series) from `szmk.kernel`.

All central moments are evaluated through lambda and delta = m * Lambda^1 = lambda - m x + 1/2,
never through the binomial sum of raw moments, which cancels catastrophically once m >= 100.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import comb

from szmk.constants import (
    ASYMPTOTIC_ENVELOPES,
    ASYMPTOTIC_SCALES,
    IDENTITY_SLACK,
    STIRLING_MAX,
)
from szmk.errors import DomainError
from szmk.kernel import apply_operator, beta_ratio, kernel_cdf
from szmk.protocol import AsymptoticCheck, MomentReport, OperatorConfig, TestFunction


class StirlingTable:
    """
    Stirling numbers of the second kind S(n, k), 0 <= k <= n <= n_max.

    Filled once by S(n, k) = k S(n-1, k) + S(n-1, k-1); the table is read-only afterwards.
    Entries up to n = 20 are below 2^53, so the float table is exact.
    """

    def __init__(self, n_max: int):
        table = np.zeros((n_max + 1, n_max + 1))
        table[0, 0] = 1.0
        for n in range(1, n_max + 1):
            for k in range(1, n + 1):
                table[n, k] = k * table[n - 1, k] + table[n - 1, k - 1]
        table.setflags(write=False)
        self.n_max = n_max
        self._table = table

    def __call__(self, n: int, k: int) -> float:
        return float(self._table[n, k])

    def row(self, n: int) -> np.ndarray:
        return self._table[n, : n + 1]


STIRLING2 = StirlingTable(STIRLING_MAX)


def _check_args(m: int, a: float, x: float) -> None:
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if a <= 1.0:
        raise DomainError(f"a must be > 1, got {a}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")


def _lambda_delta(m: int, a: float, x: float) -> Tuple[float, float]:
    beta, beta_minus_m = beta_ratio(m, a)
    return x * beta, x * beta_minus_m + 0.5


def raw_moment_closed(i: int, m: int, a: float, x: float) -> float:
    if i not in (0, 1, 2, 3):
        raise DomainError(f"closed raw moments exist for orders 0..3, got {i}")
    _check_args(m, a, x)
    lam, _ = _lambda_delta(m, a, x)
    if i == 0:
        return 1.0
    if i == 1:
        return 1.0 / (2 * m) + lam / m
    if i == 2:
        return 1.0 / (3 * m ** 2) + 2 * lam / m ** 2 + lam ** 2 / m ** 2
    return (
        1.0 / (4 * m ** 3)
        + 3.5 * lam / m ** 3
        + 4.5 * lam ** 2 / m ** 3
        + lam ** 3 / m ** 3
    )


def central_moment_closed(j: int, m: int, a: float, x: float) -> float:
    """
    Lambda^j(x) = R((t - x)^j; x) for j = 1..4.

    Written as m^j Lambda^j = polynomial(lambda, delta), which is the same polynomial in x as
    the expanded formulas. The order-3 expression uses lambda^3 / m^3 as its top term.
    """
    if j not in (1, 2, 3, 4):
        raise DomainError(f"closed central moments exist for orders 1..4, got {j}")
    _check_args(m, a, x)
    lam, delta = _lambda_delta(m, a, x)
    if j == 1:
        return delta / m
    if j == 2:
        return (lam + 1.0 / 12 + delta ** 2) / m ** 2
    if j == 3:
        return (lam + 3 * delta * (lam + 1.0 / 12) + delta ** 3) / m ** 3
    return (
        3 * lam ** 2 + 1.5 * lam + 1.0 / 80
        + 4 * delta * lam
        + 6 * delta ** 2 * (lam + 1.0 / 12)
        + delta ** 4
    ) / m ** 4


def poisson_raw_moment(r: int, lam: float) -> float:
    """E[K^r] for K ~ Poisson(lam), as sum_i S(r, i) lam^i."""
    return float(STIRLING2.row(r) @ lam ** np.arange(r + 1))


def poisson_central_moments(n: int, lam: float) -> List[float]:
    """E[(K - lam)^r], r = 0..n, from mu_{r+1} = lam * sum_{i<r} C(r, i) mu_i."""
    mu = [1.0, 0.0]
    for r in range(1, n):
        mu.append(lam * sum(comb(r, i, exact=True) * mu[i] for i in range(r)))
    return mu[: n + 1]


def _uniform_central_moment(r: int) -> float:
    # E[(U - 1/2)^r], U uniform on [0, 1]
    return 0.0 if r % 2 else 0.5 ** r / (r + 1)


def _check_order(j: int) -> None:
    if j < 0:
        raise DomainError(f"moment order must be >= 0, got {j}")
    if j > STIRLING_MAX:
        raise DomainError(f"moment order {j} exceeds the supported maximum {STIRLING_MAX}")


def raw_moment_exact(j: int, m: int, a: float, x: float) -> float:
    _check_order(j)
    _check_args(m, a, x)
    lam, _ = _lambda_delta(m, a, x)
    # E[(K + U)^j] = sum_r C(j, r) E[K^r] / (j - r + 1)
    total = sum(
        comb(j, r, exact=True) * poisson_raw_moment(r, lam) / (j - r + 1)
        for r in range(j + 1)
    )
    return total / m ** j


def central_moment_exact(j: int, m: int, a: float, x: float) -> float:
    """
    Lambda^j(x) for any order j <= STIRLING_MAX.

    Equal to sum_r C(j, r) (-x)^{j-r} raw_moment_exact(r), evaluated as
    E[(A + B + delta)^j] / m^j with A = K - lambda and B = U - 1/2 independent.
    """
    _check_order(j)
    _check_args(m, a, x)
    lam, delta = _lambda_delta(m, a, x)
    mu = poisson_central_moments(j, lam)
    # c_n = E[(A + B)^n]
    c = [
        sum(comb(n, p, exact=True) * mu[p] * _uniform_central_moment(n - p) for p in range(n + 1))
        for n in range(j + 1)
    ]
    total = sum(comb(j, n, exact=True) * c[n] * delta ** (j - n) for n in range(j + 1))
    return total / m ** j


def central_moment_binomial(j: int, m: int, a: float, x: float) -> float:
    """The literal definition sum_r C(j, r) (-x)^{j-r} R(e_r; x); use for moderate m only."""
    _check_order(j)
    _check_args(m, a, x)
    return sum(
        comb(j, r, exact=True) * (-x) ** (j - r) * raw_moment_exact(r, m, a, x)
        for r in range(j + 1)
    )


def asymptotic_limit(order: int, a: float, x: float) -> float:
    """Limit of m^{order/2} Lambda^order (m^2 Lambda^3 for order 3) as m -> infinity."""
    if a <= 1.0:
        raise DomainError(f"a must be > 1, got {a}")
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if order == 2:
        return x
    if order == 3:
        return -0.5 * x * (3 * x * math.log(a) - 5)
    if order == 6:
        return 15 * x ** 3
    raise DomainError(f"asymptotic limits are known for orders 2, 3, 6, got {order}")


def scaled_central_moment(order: int, m: int, a: float, x: float) -> float:
    if order not in ASYMPTOTIC_SCALES:
        raise DomainError(f"asymptotic limits are known for orders 2, 3, 6, got {order}")
    return m ** ASYMPTOTIC_SCALES[order] * central_moment_exact(order, m, a, x)


def asymptotic_check(order: int, a: float, x: float, m_seq: Sequence[int]) -> AsymptoticCheck:
    """
    Scaled central moments along m_seq against their limit.

    converged: errors strictly decrease along the (increasing) sequence and the last error is
    within ASYMPTOTIC_ENVELOPES[order] / m.
    """
    limit = asymptotic_limit(order, a, x)
    m_sorted = sorted(m_seq)
    sequence = [(m, scaled_central_moment(order, m, a, x)) for m in m_sorted]
    errors = [abs(value - limit) for _, value in sequence]
    decreasing = all(later < earlier for earlier, later in zip(errors, errors[1:]))
    within = errors[-1] <= ASYMPTOTIC_ENVELOPES[order] / m_sorted[-1]
    return AsymptoticCheck(
        order=order,
        limit_value=limit,
        sequence=sequence,
        converged=decreasing and within,
    )


def check_lemma_l2(m: int, a: float, x: float) -> Tuple[bool, bool]:
    """
    (Lambda^1 <= 1/(2m), Lambda^2 <= 1/(3m^2) + x(x+1)/m).
    """
    first_bound = 1.0 / (2 * m)
    second_bound = 1.0 / (3 * m ** 2) + x * (x + 1) / m
    first = central_moment_closed(1, m, a, x) <= first_bound * (1 + IDENTITY_SLACK)
    second = central_moment_closed(2, m, a, x) <= second_bound * (1 + IDENTITY_SLACK)
    return first, second


def check_lemma_l3(
    m: int,
    a: float,
    x: float,
    y: float,
    z: float,
    cfg: Optional[OperatorConfig] = None,
) -> Tuple[bool, bool]:
    """
    Chebyshev-type kernel tail bounds for 0 <= y < x < z:
    J(x, y) <= Lambda^2(x) / (x - y)^2 and 1 - J(x, z) <= Lambda^2(x) / (z - x)^2.
    """
    if not 0 <= y < x:
        raise DomainError(f"need 0 <= y < x, got y={y}, x={x}")
    if not z > x:
        raise DomainError(f"need z > x, got z={z}, x={x}")
    cfg = cfg or OperatorConfig(m=m, a=a)
    second = central_moment_closed(2, m, a, x)
    left_tail = kernel_cdf(x, y, cfg)
    # truncated mass counts as right tail
    right_tail = 1.0 - kernel_cdf(x, z, cfg)
    slack = 1 + IDENTITY_SLACK
    return (
        left_tail <= second / (x - y) ** 2 * slack,
        right_tail <= second / (z - x) ** 2 * slack + cfg.tail_tol,
    )


def _monomial(power: int, shift: float = 0.0) -> TestFunction:
    return TestFunction(name=f"(t-{shift:g})^{power}", eval=lambda t: (t - shift) ** power)


def moment_report(kind: str, order: int, cfg: OperatorConfig, x: float) -> MomentReport:
    """
    One moment along the closed, exact and kernel paths.

    max_discrepancy is the largest pairwise absolute difference among the available paths.
    """
    m, a = cfg.m, cfg.a
    if kind == "raw":
        closed = raw_moment_closed(order, m, a, x) if order <= 3 else None
        exact = raw_moment_exact(order, m, a, x)
        numeric = apply_operator(_monomial(order), cfg, x).value
    elif kind == "central":
        closed = central_moment_closed(order, m, a, x) if 1 <= order <= 4 else None
        exact = central_moment_exact(order, m, a, x)
        numeric = apply_operator(_monomial(order, x), cfg, x).value
    else:
        raise DomainError(f"moment kind must be 'raw' or 'central', got {kind!r}")
    paths = [value for value in (closed, exact, numeric) if value is not None]
    return MomentReport(
        kind=kind,
        order=order,
        closed_form=closed,
        exact=exact,
        numeric=numeric,
        max_discrepancy=max(abs(p - q) for p in paths for q in paths),
    )
