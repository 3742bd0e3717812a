"""
Right-hand sides of the approximation estimates for R_{m,a}, set against the observed error.

Observed errors always come from `kernel.operator_error` (normalized kernel measure), so a
bound comparison is never confounded by the series truncation.
"""

import concurrent.futures
import math
from functools import partial
from typing import Dict, List, Optional, Sequence

import numpy as np

from szmk.constants import BOUND_SLACK, BV_CONSTANT, MAJORANT_M, TV_REFINE_LEVELS
from szmk.errors import DomainError, MissingDerivativeError
from szmk.kernel import apply_operator, evaluate_finite, kernel_nodes, operator_error
from szmk.moduli import (
    default_window,
    dt_modulus,
    lip_uv_constant,
    lipschitz_maximal,
    psi,
    total_variation,
    u_of_x,
    weighted_modulus,
)
from szmk.polymoments import central_moment_closed, central_moment_exact
from szmk.protocol import (
    BoundReport,
    BVFunction,
    ConvergenceRow,
    GridSpec,
    OperatorConfig,
    TestFunction,
    TheoremId,
    VoronovskayaReport,
)

K_FUNCTIONAL_FLAG = "K-functional via modulus relation"


def _second_moment(cfg: OperatorConfig, x: float) -> float:
    return central_moment_closed(2, cfg.m, cfg.a, x)


def _report(
    theorem_id: TheoremId,
    cfg: OperatorConfig,
    x: float,
    bound: float,
    observed: float,
    flags: Optional[List[str]] = None,
) -> BoundReport:
    return BoundReport(
        theorem_id=theorem_id,
        x=x,
        m=cfg.m,
        a=cfg.a,
        bound=bound,
        observed=observed,
        holds=observed <= bound * (1.0 + BOUND_SLACK),
        surrogate_flags=flags or [],
    )


def observed_error(f: TestFunction, cfg: OperatorConfig, x: float) -> float:
    return abs(operator_error(f, cfg, x))


def bound_lipschitz_maximal(
    f: TestFunction,
    alpha: float,
    cfg: OperatorConfig,
    x: float,
    grid: Optional[GridSpec] = None,
) -> BoundReport:
    """
    |R(f; x) - f(x)| <= eta_alpha(f; x) * (Lambda^2(x))^{alpha/2}.

    The exponent alpha/2 comes from Hoelder's inequality; for alpha = 1 it is the square root.
    """
    eta = lipschitz_maximal(f, x, alpha, grid or default_window()).value
    bound = eta * _second_moment(cfg, x) ** (alpha / 2.0)
    return _report(TheoremId.LIP_MAXIMAL, cfg, x, bound, observed_error(f, cfg, x))


def ditzian_totik_argument(cfg: OperatorConfig, x: float) -> float:
    """u(x) sqrt(Lambda^2(x)) / psi(x), the step at which the modulus is taken."""
    if x <= 0:
        raise DomainError(f"the Ditzian-Totik estimate needs x > 0, got {x}")
    return u_of_x(x) * math.sqrt(_second_moment(cfg, x)) / psi(x)


def bound_ditzian_totik(
    f: TestFunction,
    cfg: OperatorConfig,
    x: float,
    grid: Optional[GridSpec] = None,
    majorant_M: float = MAJORANT_M,
) -> BoundReport:
    """
    2 K_psi(f; u(x) sqrt(Lambda^2) / psi(x)), with K_psi replaced by M * dt_modulus.
    The report is always flagged; `holds` is informative only.
    """
    step = ditzian_totik_argument(cfg, x)
    modulus = dt_modulus(f, step, grid or default_window()).value
    return _report(
        TheoremId.DITZIAN_TOTIK,
        cfg,
        x,
        2.0 * majorant_M * modulus,
        observed_error(f, cfg, x),
        [K_FUNCTIONAL_FLAG, f"M={majorant_M:g}"],
    )


def bound_lip_uv(
    f: TestFunction,
    M: Optional[float],
    u: float,
    v: float,
    a_exp: float,
    cfg: OperatorConfig,
    x: float,
    grid: Optional[GridSpec] = None,
) -> BoundReport:
    """
    M (Lambda^2(x) / (u x^2 + v x))^{a/2}. When M is None the empirical constant of f on
    the grid is used.
    """
    if x <= 0:
        raise DomainError(f"the two-parameter Lipschitz estimate needs x > 0, got {x}")
    if M is None:
        M = lip_uv_constant(f, u, v, a_exp, grid or default_window())
    bound = M * (_second_moment(cfg, x) / (u * x ** 2 + v * x)) ** (a_exp / 2.0)
    return _report(TheoremId.LIP_UV, cfg, x, bound, observed_error(f, cfg, x))


def as_bv_function(f: TestFunction) -> BVFunction:
    """Wraps f with its one-sided derivative rules; smooth functions use d1 on both sides."""
    if f.bv_metadata is not None:
        meta = f.bv_metadata
        return BVFunction(base=f, dplus=meta.dplus, dminus=meta.dminus)
    if f.d1 is None:
        raise MissingDerivativeError(f"{f.name} has no derivative, so it is not in DBV")
    return BVFunction(base=f, dplus=f.d1, dminus=f.d1)


def derivative_auxiliary(f: BVFunction, x: float) -> TestFunction:
    """
    f'_x(t) = f'(t) - f'(x-) for t < x, 0 at t = x, f'(t) - f'(x+) for t > x.
    """
    d1 = f.base.d1
    if d1 is None:
        raise MissingDerivativeError(f"{f.base.name} has no derivative")
    left = float(f.dminus(x))
    right = float(f.dplus(x))

    def auxiliary(t):
        t = np.asarray(t, dtype=float)
        slope = np.asarray(d1(t), dtype=float)
        return np.where(t < x, slope - left, np.where(t > x, slope - right, 0.0))

    return TestFunction(name=f"{f.base.name}'_x[{x:g}]", eval=auxiliary)


def bv_terms(
    f: BVFunction,
    cfg: OperatorConfig,
    x: float,
    C: float = BV_CONSTANT,
    refine_levels: int = TV_REFINE_LEVELS,
) -> Dict[str, float]:
    """
    The six terms of the DBV estimate, keyed by name. Sums over k run from 1 to floor(sqrt(m)).
    """
    if x <= 0:
        raise DomainError(f"the DBV estimate needs x > 0, got {x}")
    m = cfg.m
    dplus, dminus = float(f.dplus(x)), float(f.dminus(x))
    aux = derivative_auxiliary(f, x)
    root = math.sqrt(m)
    ks = range(1, int(math.isqrt(m)) + 1)

    def variation(lo: float, hi: float) -> float:
        return total_variation(aux, lo, hi, refine_levels)

    return {
        "jump_mean": abs(dplus + dminus) / (4.0 * m),
        "jump_gap": math.sqrt(C * x * (x + 1.0) / (4.0 * m)) * abs(dplus - dminus),
        "left_sum": C * (x + 1.0) / m * sum(variation(x - x / k, x) for k in ks),
        "left_near": x / root * variation(x - x / root, x),
        "right_near": x / root * variation(x, x + x / root),
        "right_sum": C * (x + 1.0) / m * sum(variation(x, x + x / k) for k in ks),
    }


def bound_bv(
    f: BVFunction,
    cfg: OperatorConfig,
    x: float,
    C: float = BV_CONSTANT,
    refine_levels: int = TV_REFINE_LEVELS,
) -> BoundReport:
    terms = bv_terms(f, cfg, x, C, refine_levels)
    return _report(
        TheoremId.BV_RATE,
        cfg,
        x,
        sum(terms.values()),
        observed_error(f.base, cfg, x),
        [f"C={C:g} (constant not fixed by the estimate)"],
    )


def _taylor_remainder(f: TestFunction, cfg: OperatorConfig, x: float) -> float:
    if f.d1 is None or f.d2 is None:
        raise MissingDerivativeError(f"{f.name} needs first and second derivatives")
    t, masses, _ = kernel_nodes(cfg, x)
    values = evaluate_finite(f, t)
    fx, d1, d2 = float(f(x)), float(f.d1(np.float64(x))), float(f.d2(np.float64(x)))
    offset = t - x
    # R(f - Taylor_2 f) on the normalized kernel measure
    remainder = values - fx - d1 * offset - 0.5 * d2 * offset ** 2
    return float(masses @ remainder) / float(np.sum(masses))


def voronovskaya_residual(f: TestFunction, cfg: OperatorConfig, x: float) -> float:
    """m |R(f; x) - f(x) - f'(x) Lambda^1(x) - f''(x) Lambda^2(x) / 2|."""
    return cfg.m * abs(_taylor_remainder(f, cfg, x))


def second_derivative(f: TestFunction) -> TestFunction:
    if f.d2 is None:
        raise MissingDerivativeError(f"{f.name} has no second derivative")
    return TestFunction(name=f"{f.name}''", eval=f.d2, growth_class=f.growth_class, safe_upper=f.safe_upper)


def voronovskaya_report(
    f: TestFunction,
    cfg: OperatorConfig,
    x: float,
    grid: Optional[GridSpec] = None,
) -> VoronovskayaReport:
    """
    Residual together with Delta(f''; 1/sqrt(m)) and the majorant of the remainder,
    m * 8 (1 + x^2) Delta(f''; xi) (Lambda^2 + Lambda^6 / xi^4) at xi = 1/sqrt(m).
    """
    residual = voronovskaya_residual(f, cfg, x)
    xi = 1.0 / math.sqrt(cfg.m)
    delta = weighted_modulus(second_derivative(f), xi, grid or default_window()).value
    moments = central_moment_exact(2, cfg.m, cfg.a, x) + central_moment_exact(6, cfg.m, cfg.a, x) / xi ** 4
    return VoronovskayaReport(
        x=x,
        m=cfg.m,
        a=cfg.a,
        residual=residual,
        delta_f2=delta,
        proof_majorant=cfg.m * 8.0 * (1.0 + x ** 2) * delta * moments,
    )


def bound_voronovskaya(
    f: TestFunction,
    cfg: OperatorConfig,
    x: float,
    grid: Optional[GridSpec] = None,
) -> BoundReport:
    report = voronovskaya_report(f, cfg, x, grid)
    return _report(
        TheoremId.VORONOVSKAYA,
        cfg,
        x,
        report.proof_majorant,
        report.residual,
        ["majorant uses Delta(f''), not Delta(f)"],
    )


def gruss_quantity(mu: TestFunction, nu: TestFunction, cfg: OperatorConfig, x: float) -> float:
    """
    m (R(mu nu; x) - R(mu; x) R(nu; x)), the covariance of mu and nu under the normalized
    kernel measure. Values are shifted by their first node value, which leaves the
    covariance unchanged and makes a constant mu give exactly 0.
    """
    t, masses, _ = kernel_nodes(cfg, x)
    weights = masses / np.sum(masses)
    dmu = evaluate_finite(mu, t) - float(mu(t[0]))
    dnu = evaluate_finite(nu, t) - float(nu(t[0]))
    covariance = float(weights @ (dmu * dnu)) - float(weights @ dmu) * float(weights @ dnu)
    return cfg.m * covariance


def gruss_limit(mu: TestFunction, nu: TestFunction, x: float) -> float:
    """x mu'(x) nu'(x)."""
    for g in (mu, nu):
        if g.d1 is None:
            raise MissingDerivativeError(f"{g.name} has no first derivative")
    return x * float(mu.d1(np.float64(x))) * float(nu.d1(np.float64(x)))


def _sup_error(f: TestFunction, cfg: OperatorConfig, nodes: np.ndarray, max_workers: int) -> ConvergenceRow:
    error = partial(operator_error, f, cfg)
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        errors = np.abs([*executor.map(error, nodes)])
    i = int(np.argmax(errors))
    return ConvergenceRow(m=cfg.m, a=cfg.a, sup_error=float(errors[i]), argmax=float(nodes[i]))


def uniform_convergence(
    f: TestFunction,
    cfg: OperatorConfig,
    m_list: Sequence[int],
    grid: GridSpec,
    max_workers: int = 8,
) -> List[ConvergenceRow]:
    """sup over the grid of |R_{m,a}(f) - f| for each m, in the order of m_list."""
    nodes = grid.nodes()
    return [_sup_error(f, cfg.with_m(m), nodes, max_workers) for m in m_list]


def check_contraction(f: TestFunction, cfg: OperatorConfig, x: float) -> bool:
    """|R(f; x)| <= sup |f| over the nodes the kernel covers at x."""
    t, _, _ = kernel_nodes(cfg, x)
    norm = float(np.max(np.abs(evaluate_finite(f, t))))
    return abs(apply_operator(f, cfg, x).value) <= norm * (1.0 + BOUND_SLACK)
