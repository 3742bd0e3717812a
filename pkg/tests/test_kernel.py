"""Operator evaluation: Poisson weights, quadrature and the kernel measure."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import poisson

from szmk.errors import DomainError, EnvelopeError, NonFiniteError
from szmk.funcs import registry_get
from szmk.kernel import (
    apply_operator,
    beta_ratio,
    kernel_cdf,
    kernel_density,
    lambda_param,
    operator_error,
    operator_on_grid,
    poisson_weights,
    segment_integral,
)
from szmk.polymoments import raw_moment_closed
from szmk.protocol import OperatorConfig, TestFunction


def test_beta_ratio_small_m():
    beta, beta_minus_m = beta_ratio(1, 2.0)
    assert beta == pytest.approx(math.log(2.0), rel=1e-15)
    assert beta_minus_m == pytest.approx(math.log(2.0) - 1.0, rel=1e-14)


def test_beta_ratio_large_m_keeps_offset():
    """beta - m tends to -log(a)/2 and must not lose digits to cancellation."""
    m, a = 10 ** 6, 2.0
    _, beta_minus_m = beta_ratio(m, a)
    expected = -math.log(a) / 2 + math.log(a) ** 2 / (12 * m)
    assert beta_minus_m == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("m, a", [(0, 2.0), (10, 1.0), (10, 0.5)])
def test_beta_ratio_rejects_domain(m, a):
    with pytest.raises(DomainError):
        beta_ratio(m, a)


def test_lambda_param(cfg):
    beta, _ = beta_ratio(cfg.m, cfg.a)
    assert lambda_param(1.5, cfg) == pytest.approx(1.5 * beta)
    with pytest.raises(DomainError):
        lambda_param(-0.1, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        OperatorConfig(m=0, a=2.0)
    with pytest.raises(ValueError):
        OperatorConfig(m=10, a=1.0)
    with pytest.raises(ValueError):
        OperatorConfig(m=10, a=2.0, tail_tol=1e-3)


def test_poisson_weights_at_zero_mean():
    block = poisson_weights(0.0, 1e-12)
    assert (block.k_lo, block.k_hi) == (0, 0)
    assert block.weights == [1.0]


@pytest.mark.parametrize("lam", [0.3, 5.0, 80.0, 1234.5])
def test_poisson_weights_match_pmf(lam):
    block = poisson_weights(lam, 1e-12)
    ks = np.arange(block.k_lo, block.k_hi + 1)
    np.testing.assert_allclose(block.weights, poisson.pmf(ks, lam), rtol=1e-10, atol=1e-300)


@settings(max_examples=50, deadline=None)
@given(st.floats(min_value=1e-6, max_value=1e5), st.sampled_from([1e-12, 1e-9, 1e-6]))
def test_poisson_weights_mass(lam, tail_tol):
    block = poisson_weights(lam, tail_tol)
    total = sum(block.weights)
    assert 1.0 - tail_tol - 1e-14 <= total <= 1.0 + 1e-14
    assert 0.0 <= block.omitted_mass <= tail_tol + 1e-14
    assert block.k_lo <= lam <= block.k_hi + 1


def test_tail_bound_is_omitted_mass_times_largest_value():
    cfg = OperatorConfig(m=10, a=2.0, tail_tol=1e-6)
    result = apply_operator(registry_get("constant:2"), cfg, 3.0)
    block = poisson_weights(lambda_param(3.0, cfg), cfg.tail_tol)
    assert result.tail_bound == pytest.approx(2.0 * block.omitted_mass, rel=1e-12, abs=1e-20)
    assert result.tail_bound <= 2.0 * (cfg.tail_tol + 1e-14)


def test_segment_integral_exact_for_polynomials():
    e2 = registry_get("e2")
    assert segment_integral(e2, 0, 1, 8) == pytest.approx(1.0 / 3.0, rel=1e-14)
    assert segment_integral(e2, 3, 10, 8) == pytest.approx((0.4 ** 3 - 0.3 ** 3) / 3.0, rel=1e-13)
    with pytest.raises(DomainError):
        segment_integral(e2, -1, 10, 8)


@pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 5.0])
@pytest.mark.parametrize("i", [0, 1, 2, 3])
def test_apply_operator_reproduces_closed_moments(cfg, x, i):
    result = apply_operator(registry_get(f"e{i}"), cfg, x)
    expected = raw_moment_closed(i, cfg.m, cfg.a, x)
    assert abs(result.value - expected) <= 1e-9 * (1.0 + abs(expected))
    assert result.terms_used >= 1
    assert result.tail_bound <= 1e-8


def test_operator_at_origin_is_single_segment(cfg):
    """R(f; 0) = m * integral_0^{1/m} f."""
    f = registry_get("x2expx")
    expected = cfg.m * (math.exp(0.1) * (0.01 - 0.2 + 2.0) - 2.0)
    result = apply_operator(f, cfg, 0.0)
    assert result.value == pytest.approx(expected, rel=1e-13)
    assert result.terms_used == 1


def test_operator_error_vanishes_for_constants(cfg):
    for x in (0.0, 0.7, 3.0):
        assert operator_error(registry_get("constant:3"), cfg, x) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=-3.0, max_value=3.0))
def test_operator_is_linear(x, c):
    cfg = OperatorConfig(m=25, a=2.0)
    f, g = registry_get("cos"), registry_get("e2")
    combo = TestFunction(name="combo", eval=lambda t: np.cos(t) + c * t ** 2)
    left = apply_operator(combo, cfg, x).value
    right = apply_operator(f, cfg, x).value + c * apply_operator(g, cfg, x).value
    assert left == pytest.approx(right, rel=1e-12, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(min_value=0.0, max_value=5.0))
def test_operator_is_positive(x):
    assert apply_operator(registry_get("abs_shift:2"), OperatorConfig(m=10, a=3.0), x).value >= 0.0


def test_kernel_cdf_is_a_distribution(cfg):
    x = 1.5
    values = [kernel_cdf(x, y, cfg) for y in np.linspace(0.0, 10.0, 101)]
    assert values[0] == 0.0
    assert all(later >= earlier for earlier, later in zip(values, values[1:]))
    assert values[-1] == pytest.approx(1.0, abs=1e-11)
    with pytest.raises(DomainError):
        kernel_cdf(-1.0, 0.5, cfg)


def test_kernel_density_is_piecewise_poisson(cfg):
    x = 2.0
    lam = lambda_param(x, cfg)
    assert kernel_density(x, 1.23, cfg) == pytest.approx(cfg.m * poisson.pmf(12, lam))
    # density integrates to one over [0, 10]
    ts = (np.arange(0, 100) + 0.5) / cfg.m
    total = sum(kernel_density(x, t, cfg) for t in ts) / cfg.m
    assert total == pytest.approx(1.0, abs=1e-9)


def test_operator_on_grid_keeps_order(cfg):
    f = registry_get("xcos2x1")
    xs = [3.0, 0.0, 1.25, 4.5, 0.5]
    parallel = operator_on_grid(f, cfg, xs, max_workers=4)
    sequential = [apply_operator(f, cfg, x) for x in xs]
    assert [r.value for r in parallel] == [r.value for r in sequential]


def test_exponential_function_outside_envelope():
    cfg = OperatorConfig(m=1, a=2.0)
    with pytest.raises(EnvelopeError):
        apply_operator(registry_get("x2expx"), cfg, 1000.0)


def test_non_finite_integrand(cfg):
    f = TestFunction(name="blows_up", eval=lambda t: np.where(t > 0.5, np.inf, t))
    with pytest.raises(NonFiniteError):
        apply_operator(f, cfg, 1.0)
