"""Energy-estimate bookkeeping: norms, bounds, balance residuals, sweeps."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from charwave import estimates as E
from charwave.cauchy import CauchyState
from charwave.grid import GridError, GridSpec
from charwave.nullcone import ConeCharData
from charwave.nullplane import PlaneCharData

GRIDS = {
    "nullplane": lambda: GridSpec.nullplane(8, 1.0, 2, n_y=8),
    "nullplane_deriv": lambda: GridSpec.nullplane(8, 1.0, 2, n_y=8),
    "nullcone": lambda: GridSpec.nullcone(8, 1.0, 2, n_phi=8),
    "nullcone_deriv": lambda: GridSpec.nullcone(8, 1.0, 2, n_phi=8),
}
ZERO = {"nullplane": PlaneCharData, "nullplane_deriv": PlaneCharData,
        "nullcone": ConeCharData, "nullcone_deriv": ConeCharData}


@pytest.mark.parametrize("problem", list(GRIDS))
def test_zero_data_gives_zero_report(problem):
    g = GRIDS[problem]()
    rep = E.report_for(problem, ZERO[problem].zeros(g))
    for k in ("lhs_norm", "data_norm_char", "data_norm_transverse", "volume_source",
              "rhs_bound", "margin", "balance_residual"):
        assert getattr(rep, k) == 0.0
    if problem == "nullcone_deriv":
        assert rep.c > 0 and rep.cT == pytest.approx(rep.c * g.T)


def test_zero_cauchy_report():
    rep = E.report_for("cauchy", CauchyState.zeros(GridSpec.cauchy(8, T=0.25)))
    assert rep.lhs_norm == rep.rhs_bound == rep.balance_residual == 0.0


@pytest.mark.parametrize("problem", list(GRIDS))
def test_quadratic_scaling(problem):
    g = GRIDS[problem]()
    data = E.random_data(problem, g, 11)
    rep = E.report_for(problem, data)
    big = E.report_for(problem, math.sqrt(10.0) * data)
    ref = rep.scaled(10.0)
    for k in ("lhs_norm", "data_norm_char", "data_norm_transverse", "volume_source", "rhs_bound",
              "margin"):
        assert getattr(big, k) == pytest.approx(getattr(ref, k), rel=1e-10, abs=1e-13)


@pytest.mark.parametrize("problem", list(GRIDS))
@given(seed=st.integers(0, 10**6))
def test_margin_minus_dropped_is_signed_residual(problem, seed):
    rep = E.report_for(problem, E.random_data(problem, GRIDS[problem](), seed))
    scale = 1e-12 * max(1.0, rep.rhs_bound)
    assert rep.margin - rep.dropped == pytest.approx(-rep.balance_signed, abs=scale)
    assert rep.balance_residual == abs(rep.balance_signed)


def test_linear_plane_solution_balances_exactly():
    """Constant ``R, P, Q`` (a linear potential) is reproduced exactly."""
    g = GridSpec.nullplane(8, 1.0, 2, n_y=8)
    data = PlaneCharData(g, np.full(g.slice_shape, 0.5), np.full(g.stage_shape, -1.0),
                         np.full(g.stage_shape, 2.0), np.zeros(g.stage_shape))
    rep = E.report_for("nullplane", data)
    assert rep.balance_residual < 1e-12 * rep.rhs_bound
    assert rep.margin > 0


def test_boundary_only_cone_data():
    """With no cone data the top norm is controlled by the worldtube data alone."""
    g = GridSpec.nullcone(16, 1.0, 2, n_phi=8)
    data = E.random_data("nullcone", g, 4)
    data.R_on_u0 = np.zeros(g.slice_shape)
    rep = E.report_for("nullcone", data)
    assert rep.data_norm_char == 0.0
    assert rep.lhs_norm <= 2 * rep.data_norm_transverse + E.tolerance(g, rep.rhs_bound, "nullcone")


@pytest.mark.parametrize("problem", list(GRIDS))
def test_small_sweep_margins(problem):
    reps = E.property_sweep(problem, GRIDS[problem](), 3, seed=100)
    assert [r.seed for r in reps] == [100, 101, 102]
    assert all(E.margin_ok(r) for r in reps)


def test_sweep_empty():
    assert E.property_sweep("nullplane", GRIDS["nullplane"](), 0, seed=1) == []


def test_sweep_unknown_problem():
    with pytest.raises(GridError, match="problem"):
        E.property_sweep("sphere", GRIDS["nullplane"](), 1, seed=1)


def test_sweep_failure_names_seed():
    strict = {k: -1.0e30 for k in E.DEFAULT_TOL_CONSTANTS}
    with pytest.raises(E.EstimateFailure, match="seed 5") as info:
        E.property_sweep("nullplane", GRIDS["nullplane"](), 2, seed=5, constants=strict)
    assert info.value.seed == 5


def test_tolerance_scales_with_spacing():
    coarse, fine = GridSpec.nullplane(8, 1.0, 2), GridSpec.nullplane(16, 1.0, 2)
    a = E.tolerance(coarse, 1.0, "nullplane")
    b = E.tolerance(fine, 1.0, "nullplane")
    assert a / b == pytest.approx((coarse.max_spacing / fine.max_spacing) ** 2)


class TestRefinement:
    def test_non_doubling(self):
        with pytest.raises(GridError, match="double"):
            E.check_doubling([8, 16, 24])

    def test_too_few(self):
        with pytest.raises(GridError, match="at least 3"):
            E.check_doubling([8, 16])

    def test_table(self):
        tab = E.ConvergenceTable("x", [8, 16, 32], [1.0, 0.25, 0.0625])
        assert tab.ratios[1:] == [4.0, 4.0]
        assert tab.orders[1:] == [2.0, 2.0]
        assert tab.in_band(2) and not tab.in_band(4)
        assert math.isnan(tab.ratios[0])

    def test_zero_value_ratio(self):
        tab = E.ConvergenceTable("x", [8, 16, 32], [1.0, 0.0, 0.0])
        assert tab.ratios[1] == math.inf


def test_report_row_matches_columns():
    rep = E.report_for("nullplane", E.random_data("nullplane", GRIDS["nullplane"](), 3), seed=3)
    row = rep.row()
    assert len(row) == len(E.EstimateReport.CSV_COLUMNS)
    assert row[0] == "nullplane" and row[-1] == 3
