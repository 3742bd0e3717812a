import numpy as np
import pytest

from szmk.errors import EnvelopeError, MissingDerivativeError, UnknownFunctionError
from szmk.funcs import REGISTRY, available_names, envelope_check, finite_diff_check, registry_get
from szmk.protocol import GrowthClass, TestFunction

# stays clear of the kink of abs_shift / kink at t = 1
POINTS = 0.3 + 0.237 * np.arange(20)


def test_registry_values():
    assert float(registry_get("e3")(2.0)) == 8.0
    assert float(registry_get("e0")(7.0)) == 1.0
    assert float(registry_get("abs_shift:1.5")(2.0)) == 0.5
    assert float(registry_get("constant:3")(0.4)) == 3.0
    assert float(registry_get("x2expx")(1.0)) == pytest.approx(np.e)
    assert float(registry_get("xcos2x1")(0.0)) == 0.0
    np.testing.assert_array_equal(registry_get("e2")(np.array([1.0, 3.0])), [1.0, 9.0])


def test_registry_names():
    names = available_names()
    assert names == sorted(names)
    assert {"e0", "e1", "e2", "e3", "e4", "x2expx", "xcos2x1", "abs_shift", "constant"} <= set(names)
    assert registry_get("constant:3").name == "constant:3"
    assert registry_get("x2expx").growth_class is GrowthClass.EXPONENTIAL


@pytest.mark.parametrize("name", ["nope", "e1:2", "abs_shift:left"])
def test_unknown_function(name):
    with pytest.raises(UnknownFunctionError):
        registry_get(name)


def test_registry_is_read_only():
    with pytest.raises(TypeError):
        REGISTRY["e5"] = REGISTRY["e4"]


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_derivatives_match_finite_differences(name):
    f = registry_get(name)
    for x in POINTS:
        d1_dev, d2_dev = finite_diff_check(f, float(x))
        assert d1_dev <= 1e-6, f"{name} d1 at {x}"
        assert d2_dev is not None and d2_dev <= 1e-6, f"{name} d2 at {x}"


def test_finite_diff_check_needs_d1():
    bare = TestFunction(name="bare", eval=np.tanh)
    with pytest.raises(MissingDerivativeError):
        finite_diff_check(bare, 1.0)
    only_d1 = TestFunction(name="only_d1", eval=np.tanh, d1=lambda t: 1 - np.tanh(t) ** 2)
    d1_dev, d2_dev = finite_diff_check(only_d1, 0.5)
    assert d1_dev <= 1e-8
    assert d2_dev is None


def test_envelope_check():
    f = registry_get("x2expx")
    envelope_check(f, 599.0)
    with pytest.raises(EnvelopeError):
        envelope_check(f, 601.0)
    envelope_check(registry_get("e4"), 1e6)


def test_abs_shift_metadata():
    meta = registry_get("abs_shift:2").bv_metadata
    assert float(meta.dplus(2.0)) == 1.0
    assert float(meta.dminus(2.0)) == -1.0
    assert float(meta.dplus(1.0)) == -1.0
    assert float(meta.dminus(3.0)) == 1.0
