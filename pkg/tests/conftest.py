import pytest

from szmk.protocol import GridSpec, OperatorConfig


@pytest.fixture
def cfg():
    return OperatorConfig(m=10, a=2.0)


@pytest.fixture
def window():
    return GridSpec(lo=0.0, hi=10.0, points=201)


@pytest.fixture
def small_window():
    return GridSpec(lo=0.0, hi=5.0, points=101, refine_levels=2)
