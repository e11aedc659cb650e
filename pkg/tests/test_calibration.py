"""Frozen tolerance constants cover a fresh oracle calibration."""

import pytest

from charwave.estimates import DEFAULT_TOL_CONSTANTS, calibrate_tolerance_constants


@pytest.fixture(scope="module")
def fresh():
    return calibrate_tolerance_constants()


@pytest.mark.parametrize("key", sorted(DEFAULT_TOL_CONSTANTS))
def test_frozen_constant_covers_calibration(fresh, key):
    assert fresh[key] <= DEFAULT_TOL_CONSTANTS[key]


def test_every_problem_calibrated(fresh):
    assert set(fresh) == set(DEFAULT_TOL_CONSTANTS)
