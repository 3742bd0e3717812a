"""Approximation estimates against the observed operator error."""

import math
from typing import Dict, Optional, get_type_hints

import numpy as np
import pytest

from szmk.errors import DomainError, MissingDerivativeError
from szmk.funcs import registry_get
from szmk.moduli import lip_uv_constant, psi, u_of_x
from szmk.polymoments import central_moment_closed, check_lemma_l3
from szmk.protocol import GridSpec, OperatorConfig, TestFunction, TheoremId
from szmk.theorems import (
    K_FUNCTIONAL_FLAG,
    as_bv_function,
    bound_bv,
    bound_ditzian_totik,
    bound_lip_uv,
    bound_lipschitz_maximal,
    bound_voronovskaya,
    bv_terms,
    check_contraction,
    derivative_auxiliary,
    ditzian_totik_argument,
    gruss_limit,
    gruss_quantity,
    observed_error,
    uniform_convergence,
    voronovskaya_report,
    voronovskaya_residual,
)


class TestLipschitzMaximal:
    def test_constant(self, cfg, window):
        report = bound_lipschitz_maximal(registry_get("constant:5"), 1.0, cfg, 2.0, window)
        assert report.bound == 0.0
        assert report.observed == 0.0
        assert report.holds
        assert report.theorem_id is TheoremId.LIP_MAXIMAL

    def test_identity_is_jensen(self, cfg, window):
        x = 1.5
        report = bound_lipschitz_maximal(registry_get("e1"), 1.0, cfg, x, window)
        assert report.bound == pytest.approx(math.sqrt(central_moment_closed(2, cfg.m, cfg.a, x)))
        assert report.observed == pytest.approx(abs(central_moment_closed(1, cfg.m, cfg.a, x)))
        assert report.holds

    def test_sqrt_at_origin(self, cfg, window):
        report = bound_lipschitz_maximal(registry_get("sqrt"), 0.5, cfg, 0.0, window)
        # Gauss-Legendre only approximates the sqrt singularity at 0
        assert report.observed == pytest.approx(2.0 / (3.0 * math.sqrt(cfg.m)), rel=1e-2)
        assert report.bound == pytest.approx((1.0 / (3.0 * cfg.m ** 2)) ** 0.25, rel=1e-6)
        assert report.holds

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 4.0])
    def test_oscillating_function(self, cfg, window, x):
        assert bound_lipschitz_maximal(registry_get("xcos2x1"), 1.0, cfg, x, window).holds


class TestDitzianTotik:
    def test_argument(self, cfg):
        x = 2.0
        expected = u_of_x(x) * math.sqrt(central_moment_closed(2, cfg.m, cfg.a, x)) / psi(x)
        assert ditzian_totik_argument(cfg, x) == pytest.approx(expected)
        with pytest.raises(DomainError):
            ditzian_totik_argument(cfg, 0.0)

    def test_report_is_flagged(self, cfg, window):
        report = bound_ditzian_totik(registry_get("xcos2x1"), cfg, 1.0, window, majorant_M=3.0)
        assert report.surrogate_flags == [K_FUNCTIONAL_FLAG, "M=3"]
        assert report.bound >= 0.0
        with pytest.raises(DomainError):
            bound_ditzian_totik(registry_get("e1"), cfg, 0.0, window)


class TestLipUV:
    @pytest.mark.parametrize("x", [1.0, 2.0, 3.0])
    def test_empirical_constant_holds(self, cfg, window, x):
        report = bound_lip_uv(registry_get("xcos2x1"), None, 1.0, 1.0, 1.0, cfg, x, window)
        assert report.holds

    def test_explicit_constant(self, cfg):
        x = 1.0
        report = bound_lip_uv(registry_get("e1"), 2.0, 1.0, 1.0, 0.5, cfg, x)
        expected = 2.0 * (central_moment_closed(2, cfg.m, cfg.a, x) / 2.0) ** 0.25
        assert report.bound == pytest.approx(expected)
        with pytest.raises(DomainError):
            bound_lip_uv(registry_get("e1"), 2.0, 1.0, 1.0, 0.5, cfg, 0.0)


class TestBoundedVariation:
    def test_identity_reduces_to_mean_term(self, cfg):
        terms = bv_terms(as_bv_function(registry_get("e1")), cfg, 1.0)
        assert terms["jump_mean"] == pytest.approx(1.0 / (2 * cfg.m))
        assert terms["jump_gap"] == 0.0
        assert sum(terms.values()) == pytest.approx(1.0 / (2 * cfg.m))
        assert bound_bv(as_bv_function(registry_get("e1")), cfg, 1.0).holds

    @pytest.mark.parametrize("m", [10, 100])
    def test_kink(self, m):
        cfg = OperatorConfig(m=m, a=2.0)
        report = bound_bv(as_bv_function(registry_get("kink")), cfg, 1.0, C=2.0)
        assert report.holds
        assert report.surrogate_flags == ["C=2 (constant not fixed by the estimate)"]

    def test_smooth_function_terms(self):
        cfg = OperatorConfig(m=25, a=2.0)
        terms = bv_terms(as_bv_function(registry_get("xcos2x1")), cfg, 2.0, refine_levels=2)
        assert set(terms) == {"jump_mean", "jump_gap", "left_sum", "left_near", "right_near", "right_sum"}
        assert all(value >= 0.0 for value in terms.values())
        assert terms["jump_gap"] == 0.0
        assert terms["left_sum"] > 0.0

    def test_derivative_auxiliary(self):
        f = as_bv_function(registry_get("x2expx"))
        aux = derivative_auxiliary(f, 1.0)
        d1 = registry_get("x2expx").d1
        assert float(aux(1.0)) == 0.0
        assert float(aux(2.0)) == pytest.approx(float(d1(2.0) - d1(1.0)))
        assert float(aux(0.5)) == pytest.approx(float(d1(0.5) - d1(1.0)))

    def test_requirements(self, cfg):
        with pytest.raises(MissingDerivativeError):
            as_bv_function(TestFunction(name="bare", eval=np.tanh))
        with pytest.raises(DomainError):
            bv_terms(as_bv_function(registry_get("e1")), cfg, 0.0)


class TestVoronovskaya:
    @pytest.mark.parametrize("name", ["e0", "e1", "e2"])
    @pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 5.0])
    def test_quadratics_have_no_residual(self, cfg, name, x):
        assert voronovskaya_residual(registry_get(name), cfg, x) <= 1e-10 * cfg.m

    def test_cubic_residual_is_third_moment(self, cfg):
        x = 2.0
        expected = cfg.m * abs(central_moment_closed(3, cfg.m, cfg.a, x))
        assert voronovskaya_residual(registry_get("e3"), cfg, x) == pytest.approx(expected, rel=1e-7)

    def test_residual_decreases(self):
        f = registry_get("x2expx")
        residuals = [voronovskaya_residual(f, OperatorConfig(m=m, a=2.0), 1.0) for m in (100, 1000, 10000)]
        assert residuals[0] > residuals[1] > residuals[2]

    def test_report_and_majorant(self, window):
        cfg = OperatorConfig(m=25, a=2.0)
        f = registry_get("x2expx")
        report = voronovskaya_report(f, cfg, 1.0, window)
        assert report.delta_f2 > 0.0
        assert report.residual == pytest.approx(voronovskaya_residual(f, cfg, 1.0))
        bound = bound_voronovskaya(f, cfg, 1.0, window)
        assert bound.bound == pytest.approx(report.proof_majorant)
        assert bound.holds

    def test_needs_second_derivative(self, cfg):
        only_d1 = TestFunction(name="only_d1", eval=np.tanh, d1=lambda t: 1 - np.tanh(t) ** 2)
        with pytest.raises(MissingDerivativeError):
            voronovskaya_residual(only_d1, cfg, 1.0)


class TestGruss:
    def test_constant_factor_vanishes(self, cfg):
        assert gruss_quantity(registry_get("constant:3"), registry_get("xcos2x1"), cfg, 1.5) == 0.0

    @pytest.mark.parametrize("x", [0.0, 1.0, 3.0])
    def test_symmetric(self, cfg, x):
        mu, nu = registry_get("x2expx"), registry_get("sin")
        assert gruss_quantity(mu, nu, cfg, x) == gruss_quantity(nu, mu, cfg, x)

    @pytest.mark.parametrize("x", [0.0, 1.0, 2.5])
    def test_identity_gives_variance(self, cfg, x):
        e1 = registry_get("e1")
        lambda1 = central_moment_closed(1, cfg.m, cfg.a, x)
        lambda2 = central_moment_closed(2, cfg.m, cfg.a, x)
        assert gruss_quantity(e1, e1, cfg, x) == pytest.approx(cfg.m * (lambda2 - lambda1 ** 2), rel=1e-8)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
    def test_limit(self, x):
        cfg = OperatorConfig(m=10 ** 4, a=2.0)
        e1, e2 = registry_get("e1"), registry_get("e2")
        assert gruss_limit(e1, e2, x) == pytest.approx(2 * x ** 2)
        assert abs(gruss_quantity(e1, e2, cfg, x) - gruss_limit(e1, e2, x)) <= 1e-2 * (1 + 2 * x ** 2)


def test_uniform_convergence():
    grid = GridSpec(lo=0.0, hi=5.0, points=51)
    rows = uniform_convergence(registry_get("xcos2x1"), OperatorConfig(m=10, a=2.0), [10, 100, 1000], grid, 4)
    assert [row.m for row in rows] == [10, 100, 1000]
    errors = [row.sup_error for row in rows]
    assert errors[0] > errors[1] > errors[2]
    assert all(0.0 <= row.argmax <= 5.0 for row in rows)
    assert rows[0].sup_error == pytest.approx(
        max(observed_error(registry_get("xcos2x1"), OperatorConfig(m=10, a=2.0), x) for x in grid.nodes())
    )


@pytest.mark.parametrize("name", ["cos", "xcos2x1", "abs_shift:2"])
@pytest.mark.parametrize("x", [0.0, 1.0, 4.0])
def test_contraction(cfg, name, x):
    assert check_contraction(registry_get(name), cfg, x)


@pytest.mark.parametrize("name", ["e1", "xcos2x1"])
@pytest.mark.parametrize("m", [10, 25, 100])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.5, 5.0])
def test_lipschitz_estimates_hold_on_the_figure_window(window, name, m, x):
    cfg = OperatorConfig(m=m, a=2.0)
    f = registry_get(name)
    assert bound_lipschitz_maximal(f, 1.0, cfg, x, window).holds
    assert bound_lip_uv(f, None, 1.0, 1.0, 1.0, cfg, x, window).holds


@pytest.mark.parametrize("m", [10, 100])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_identity_bv_bound_is_exact(m, x):
    cfg = OperatorConfig(m=m, a=2.0)
    report = bound_bv(as_bv_function(registry_get("e1")), cfg, x)
    assert report.bound == 1.0 / (2 * m)
    assert report.holds


def test_gruss_with_unit_function_vanishes(cfg):
    assert gruss_quantity(registry_get("e0"), registry_get("x2expx"), cfg, 2.0) == 0.0


@pytest.mark.parametrize("name", ["e1", "xcos2x1"])
@pytest.mark.parametrize("m", [10, 25, 100])
def test_lipschitz_estimates_hold_on_every_figure_grid_point(window, name, m):
    cfg = OperatorConfig(m=m, a=2.0)
    f = registry_get(name)
    M = lip_uv_constant(f, 1.0, 1.0, 1.0, window)
    failures = []
    for x in GridSpec(lo=0.0, hi=5.0, points=201).nodes()[1:]:
        x = float(x)
        if not bound_lipschitz_maximal(f, 1.0, cfg, x, window).holds:
            failures.append(("LIP_MAXIMAL", x))
        if not bound_lip_uv(f, M, 1.0, 1.0, 1.0, cfg, x).holds:
            failures.append(("LIP_UV", x))
    assert failures == []


@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_gruss_error_shrinks_like_one_over_m(x):
    e1, e2 = registry_get("e1"), registry_get("e2")
    limit = gruss_limit(e1, e2, x)
    errors = [abs(gruss_quantity(e1, e2, OperatorConfig(m=m, a=2.0), x) - limit) for m in (10 ** 2, 10 ** 3, 10 ** 4)]
    for coarse, fine in zip(errors, errors[1:]):
        assert 5.0 < coarse / fine < 20.0


def test_public_signatures_are_typed():
    assert get_type_hints(bv_terms)["return"] == Dict[str, float]
    assert get_type_hints(check_lemma_l3)["cfg"] == Optional[OperatorConfig]
