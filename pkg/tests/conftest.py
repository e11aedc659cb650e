import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "charwave", deadline=None, max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture])
settings.load_profile("charwave")


def ratios(values):
    """Successive error ratios e[i-1] / e[i]."""
    return [a / b for a, b in zip(values, values[1:])]


def in_band(ratio, p, lo=0.7, hi=1.3):
    return lo * 2**p <= ratio <= hi * 2**p


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tau():
    return 2 * math.pi
