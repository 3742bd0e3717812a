"""
Evaluation of the modified Szász-Mirakjan-Kantorovich operator

    R_{m,a}(f; x) = m * sum_k s_{m,k}(x) * integral_{k/m}^{(k+1)/m} f(t) dt,

where s_{m,k}(x) is the Poisson mass of k with mean lambda = x log(a) / (a^{1/m} - 1).

The series is truncated to the Poisson k-range carrying all but `tail_tol` of the mass and
every segment integral is a fixed-order Gauss-Legendre rule. The same node set gives the
kernel measure used by `operator_error` and by the Grüss quantity in `szmk.theorems`.

Functions:
    lambda_param: Poisson mean at x.
    beta_ratio: log(a)/(a^{1/m}-1) and its distance to m, both without cancellation.
    poisson_weights: truncated Poisson block built from the modal term.
    segment_integral: Gauss-Legendre integral of f over [k/m, (k+1)/m].
    apply_operator: R_{m,a}(f; x) with its truncation bookkeeping.
    operator_error: R_{m,a}(f; x) - f(x) on the normalized kernel measure.
    kernel_cdf: J(x, y), the kernel mass on [0, y].
    kernel_density: the kernel R(x, t) of the integral representation.
    operator_on_grid: apply_operator over many x, in parallel, in input order.
"""

import concurrent.futures
import math
from functools import partial
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import poisson

from szmk.errors import DomainError, NonFiniteError
from szmk.funcs import envelope_check
from szmk.protocol import EvalResult, OperatorConfig, TestFunction, WeightRange
from szmk.utils.misc import expm1_minus_identity, gauss_legendre


def beta_ratio(m: int, a: float) -> Tuple[float, float]:
    """
    Returns (beta, beta - m) with beta = log(a) / (a^{1/m} - 1).

    a^{1/m} - 1 is evaluated as expm1(log(a)/m) and beta - m through the series of
    e^z - 1 - z, so both stay accurate up to m = 10^6 and beyond.
    """
    if a <= 1.0:
        raise DomainError(f"a must be > 1, got {a}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    z = math.log(a) / m
    denominator = math.expm1(z)
    beta = m * z / denominator
    beta_minus_m = -m * expm1_minus_identity(z) / denominator
    return beta, beta_minus_m


def lambda_param(x: float, cfg: OperatorConfig) -> float:
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    beta, _ = beta_ratio(cfg.m, cfg.a)
    return x * beta


def _poisson_block(lam: float, tail_tol: float) -> Tuple[int, np.ndarray]:
    if lam < 0:
        raise DomainError(f"Poisson mean must be >= 0, got {lam}")
    if not 0.0 < tail_tol <= 1e-6:
        raise DomainError(f"tail_tol must lie in (0, 1e-6], got {tail_tol}")
    if lam == 0.0:
        return 0, np.ones(1)

    # half of the budget on each side
    k_lo = max(0, int(poisson.ppf(tail_tol / 2.0, lam)))
    k_hi = max(k_lo, int(poisson.isf(tail_tol / 2.0, lam)))
    k_mode = min(max(int(math.floor(lam)), k_lo), k_hi)

    # ratios to the modal term; exp(k log(lam) - lam - log k!) loses ~1e-11 for lam ~ 1e4
    up = np.cumprod(lam / np.arange(k_mode + 1, k_hi + 1, dtype=float))
    down = np.cumprod(np.arange(k_mode, k_lo, -1, dtype=float) / lam)
    relative = np.concatenate([down[::-1], [1.0], up])

    omitted = float(poisson.sf(k_hi, lam))
    if k_lo > 0:
        omitted += float(poisson.cdf(k_lo - 1, lam))
    return k_lo, relative * ((1.0 - omitted) / relative.sum())


def poisson_weights(lam: float, tail_tol: float) -> WeightRange:
    """
    Truncated Poisson masses around the mean, omitted mass at most `tail_tol`.

    The range comes from the Poisson quantiles at tail_tol/2 on each side; the masses are
    filled by the ratio recurrence starting from the modal term, so lambda^k / k! is never
    formed and large means do not overflow.
    """
    k_lo, weights = _poisson_block(lam, tail_tol)
    return WeightRange(
        k_lo=k_lo,
        k_hi=k_lo + len(weights) - 1,
        weights=weights.tolist(),
        tail_tol=tail_tol,
    )


def _segment_nodes(ks: np.ndarray, m: int, quad_order: int) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = gauss_legendre(quad_order)
    t = (ks[:, None] + (nodes[None, :] + 1.0) / 2.0) / m
    return t, weights / (2.0 * m)


def evaluate_finite(f: TestFunction, t: np.ndarray) -> np.ndarray:
    values = f(t)
    if not np.all(np.isfinite(values)):
        bad = t[~np.isfinite(values)]
        raise NonFiniteError(f"{f.name} is not finite at t={float(bad.flat[0])!r}")
    return values


def segment_integral(f: TestFunction, k: int, m: int, quad_order: int) -> float:
    if k < 0 or m < 1 or quad_order < 1:
        raise DomainError(f"invalid segment k={k}, m={m}, quad_order={quad_order}")
    t, weights = _segment_nodes(np.array([k], dtype=float), m, quad_order)
    return float(evaluate_finite(f, t)[0] @ weights)


def kernel_nodes(cfg: OperatorConfig, x: float) -> Tuple[np.ndarray, np.ndarray, WeightRange]:
    """
    Discrete form of the kernel measure at x: quadrature nodes t_q and masses p_q with
    R_{m,a}(f; x) = sum_q p_q f(t_q) for every f the rule integrates exactly.
    """
    lam = lambda_param(x, cfg)
    k_lo, weights = _poisson_block(lam, cfg.tail_tol)
    ks = np.arange(k_lo, k_lo + len(weights), dtype=float)
    t, quad_weights = _segment_nodes(ks, cfg.m, cfg.quad_order)
    masses = cfg.m * weights[:, None] * quad_weights[None, :]
    block = WeightRange.model_construct(
        k_lo=k_lo, k_hi=k_lo + len(weights) - 1, weights=weights, tail_tol=cfg.tail_tol
    )
    return t.ravel(), masses.ravel(), block


def apply_operator(f: TestFunction, cfg: OperatorConfig, x: float) -> EvalResult:
    t, masses, block = kernel_nodes(cfg, x)
    envelope_check(f, float(t.max()))
    values = evaluate_finite(f, t)
    return EvalResult(
        value=float(masses @ values),
        terms_used=block.k_hi - block.k_lo + 1,
        tail_bound=block.omitted_mass * float(np.max(np.abs(values))),
    )


def operator_error(f: TestFunction, cfg: OperatorConfig, x: float) -> float:
    """
    R_{m,a}(f; x) - f(x) computed as sum_q p_q (f(t_q) - f(x)) / sum_q p_q.

    Differs from apply_operator(f).value - f(x) by at most tail_tol * |f(x)|, and is exactly
    zero for constants.
    """
    t, masses, _ = kernel_nodes(cfg, x)
    envelope_check(f, float(t.max()))
    values = evaluate_finite(f, t)
    center = float(f(x))
    return float(masses @ (values - center)) / float(np.sum(masses))


def kernel_cdf(x: float, y: float, cfg: OperatorConfig) -> float:
    if x < 0 or y < 0:
        raise DomainError(f"kernel_cdf needs x, y >= 0, got x={x}, y={y}")
    k_lo, weights = _poisson_block(lambda_param(x, cfg), cfg.tail_tol)
    ks = np.arange(k_lo, k_lo + len(weights), dtype=float)
    # m * |[k/m, (k+1)/m] ∩ [0, y]|
    overlap = np.clip(cfg.m * y - ks, 0.0, 1.0)
    return float(min(1.0, weights @ overlap))


def kernel_density(x: float, t: float, cfg: OperatorConfig) -> float:
    if x < 0 or t < 0:
        raise DomainError(f"kernel_density needs x, t >= 0, got x={x}, t={t}")
    k = math.floor(cfg.m * t)
    return cfg.m * float(poisson.pmf(k, lambda_param(x, cfg)))


def operator_on_grid(
    f: TestFunction,
    cfg: OperatorConfig,
    xs: Sequence[float],
    max_workers: int = 8,
) -> List[EvalResult]:
    evaluate = partial(apply_operator, f, cfg)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        return [*executor.map(evaluate, xs)]
