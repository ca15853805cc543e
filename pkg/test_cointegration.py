#!/usr/bin/env python3
import sys
from datetime import date

import numpy as np

from cointegration import adf_battery, engle_granger, fit_ecm, fit_ecm_pruned, johansen
from series_core import PriceSeries, business_days
from simulation import ar1, cointegrated_pair, ecm_pair, random_walk
from utils import AlignmentError, NotPositiveDefiniteError, SampleSizeError, run_suite


def test_engle_granger_detects_constructed_pair():
    hits = 0
    for seed in range(100):
        y, x = cointegrated_pair(2000, beta=2.0, phi=0.5, seed=seed)
        res = engle_granger(y, x)
        assert abs(res.slope - 2.0) < 0.05, res.slope
        hits += res.cointegrated_at_5pct
    assert hits >= 95, hits


def test_engle_granger_size_on_independent_walks():
    false_hits = sum(engle_granger(random_walk(2000, seed=s), random_walk(2000, seed=s + 500))
                     .cointegrated_at_5pct for s in range(100))
    assert false_hits <= 10, false_hits


def test_engle_granger_flag_and_residuals():
    y, x = cointegrated_pair(1000, beta=1.5, seed=1, intercept=3.0)
    res = engle_granger(y, x)
    adf = res.residual_adf
    assert res.cointegrated_at_5pct == (adf.statistic < adf.critical_values[1])
    assert abs(np.mean(res.residuals)) < 1e-10
    assert adf.deterministic == "none"
    assert res.to_dict()["slope"] == res.slope


def test_engle_granger_records_leg_unit_roots():
    y, x = cointegrated_pair(1000, beta=1.0, seed=12)
    res = engle_granger(y, x)
    assert all(a is not None for a in res.leg_adf)
    assert res.legs_i1 == tuple(not a.stationary_at_5pct for a in res.leg_adf)
    legs = res.to_dict()["legs"]
    assert [leg["series"] for leg in legs] == ["y", "x"]
    assert legs[1]["p_value"] == res.leg_adf[1].p_value
    # a stationary leg is flagged, not rejected
    x0 = ar1(1000, 0.3, seed=14)
    s = engle_granger(ar1(1000, 0.3, seed=13) + 0.5 * x0, x0)
    assert s.legs_i1 == (False, False)


def test_engle_granger_identical_series_is_degenerate():
    x = random_walk(500, seed=2)
    res = engle_granger(x, x.copy())
    assert abs(res.slope - 1.0) < 1e-10
    assert res.residual_adf.degenerate
    assert res.cointegrated_at_5pct


def test_engle_granger_misaligned_input():
    try:
        engle_granger(random_walk(100, seed=3), random_walk(99, seed=4))
    except AlignmentError:
        return
    raise AssertionError("series of different length accepted")


def test_johansen_selects_rank_one_for_cointegrated_pair():
    ranks = [johansen(np.column_stack(cointegrated_pair(2000, beta=1.0, seed=s))).selected_rank
             for s in range(100)]
    assert sum(r == 1 for r in ranks) >= 90, ranks


def test_johansen_restricted_constant_on_driftless_pair():
    ranks = [johansen(np.column_stack(cointegrated_pair(500, beta=1.0, intercept=3.0, seed=s)))
             .selected_rank for s in range(100)]
    assert sum(r == 1 for r in ranks) >= 85, ranks
    res = johansen(np.column_stack(cointegrated_pair(2000, beta=1.0, intercept=3.0, seed=11)))
    assert res.det_case == "restricted"
    v = res.eigenvectors[:, 0] / res.eigenvectors[0, 0]
    assert v.shape == (3,)
    assert abs(v[1] + 1.0) < 0.05, v
    assert abs(v[2] + 3.0) < 0.3, v


def test_johansen_selects_rank_zero_for_independent_walks():
    ranks = [johansen(np.column_stack([random_walk(2000, seed=s),
                                       random_walk(2000, seed=s + 500)])).selected_rank
             for s in range(100)]
    assert sum(r == 0 for r in ranks) >= 85, ranks


def test_johansen_selects_full_rank_for_stationary_pair():
    ranks = [johansen(np.column_stack([ar1(2000, 0.5, seed=s),
                                       ar1(2000, 0.5, seed=s + 500)])).selected_rank
             for s in range(100)]
    assert sum(r == 2 for r in ranks) >= 85, ranks


def test_johansen_statistics_properties():
    Z = np.column_stack(cointegrated_pair(1500, beta=1.0, seed=5))
    res = johansen(Z)
    assert np.all(res.trace_stats >= res.max_eig_stats - 1e-9)
    assert np.all((res.eigenvalues >= 0) & (res.eigenvalues < 1))
    assert np.all(np.diff(res.eigenvalues) <= 0)
    assert res.trace_cv.shape == (2, 3)
    assert res.trace_cv[0, 1] > res.trace_cv[1, 1]
    scaled = johansen(Z * np.array([3.0, 0.25]))
    assert np.allclose(scaled.trace_stats, res.trace_stats, atol=1e-6)
    assert np.allclose(scaled.max_eig_stats, res.max_eig_stats, atol=1e-6)
    assert "cointegrating" in res.summary_sentence()


def test_johansen_preconditions():
    x = random_walk(500, seed=6)
    cases = (
        (np.column_stack([x, x]), NotPositiveDefiniteError),
        (np.column_stack([x[:30], x[:30] + 1.0]), SampleSizeError),
        (np.column_stack([x] * 5), ValueError),
    )
    for Z, err in cases:
        try:
            johansen(Z)
        except err:
            continue
        raise AssertionError(f"johansen on {Z.shape} did not raise {err.__name__}")


def test_ecm_exact_recovery_without_noise():
    y, x, u = ecm_pair(500, b=0.8, c=-0.2, seed=7, noise_sd=0.0)
    res = fit_ecm(y, x, u)
    assert abs(res.b1 - 0.8) < 1e-8
    assert abs(res.adjustment_coef + 0.2) < 1e-8
    assert abs(res.pi - 0.2) < 1e-8
    assert abs(res.a0) < 1e-8
    assert res.included_terms == ("const", "dx", "u_lag1")


def test_ecm_recovery_from_engle_granger_residuals():
    adj, b1 = [], []
    for seed in range(20):
        y, x, _ = ecm_pair(3000, b=0.8, c=-0.2, seed=100 + seed)
        res = fit_ecm(y, x, engle_granger(y, x).residuals)
        adj.append(res.adjustment_coef)
        b1.append(res.b1)
    assert -0.25 <= np.mean(adj) <= -0.15, np.mean(adj)
    assert 0.75 <= np.mean(b1) <= 0.85, np.mean(b1)
    assert np.mean(adj) < 0


def test_ecm_pruning_drops_insignificant_terms():
    y, x, u = ecm_pair(3000, seed=8)
    full, pruned = fit_ecm_pruned(y, x, u)
    assert full.included_terms == ("const", "dx", "dy_lag1", "u_lag1")
    assert set(pruned.included_terms) <= set(full.included_terms)
    assert {"dx", "u_lag1"} <= set(pruned.included_terms)
    p = dict(zip(full.fit.names, full.fit.p_values()))
    for term in ("const", "dy_lag1"):
        assert (term in pruned.included_terms) == (p[term] < 0.05)
    d = pruned.to_dict()
    assert d["pi"] == -d["adjustment_coef"]


def test_ecm_residual_length_checked():
    y, x, u = ecm_pair(200, seed=9)
    try:
        fit_ecm(y, x, u[1:])
    except AlignmentError:
        return
    raise AssertionError("short residual series accepted")


def test_adf_battery_rows():
    dates = business_days(date(2015, 1, 5), 600)
    spot = PriceSeries(dates, 100.0 * np.exp(random_walk(600, seed=10, sigma=0.01)), "spot")
    futures = PriceSeries(dates, spot.values * np.exp(ar1(600, 0.5, seed=11, sigma=0.002)),
                          "futures")
    rows = adf_battery([spot, futures])
    assert [(r.series, r.transform) for r in rows] == [
        ("spot", "log level"), ("spot", "return"), ("spot", "first difference"),
        ("futures", "log level"), ("futures", "return"), ("futures", "first difference"),
    ]
    assert rows[1].result.stationary_at_5pct and rows[2].result.stationary_at_5pct
    assert abs(rows[1].result.statistic - rows[2].result.statistic) < 1e-6
    assert rows[0].to_dict()["series"] == "spot"


ALL_TESTS = [
    test_engle_granger_detects_constructed_pair,
    test_engle_granger_size_on_independent_walks,
    test_engle_granger_flag_and_residuals,
    test_engle_granger_records_leg_unit_roots,
    test_engle_granger_identical_series_is_degenerate,
    test_engle_granger_misaligned_input,
    test_johansen_selects_rank_one_for_cointegrated_pair,
    test_johansen_restricted_constant_on_driftless_pair,
    test_johansen_selects_rank_zero_for_independent_walks,
    test_johansen_selects_full_rank_for_stationary_pair,
    test_johansen_statistics_properties,
    test_johansen_preconditions,
    test_ecm_exact_recovery_without_noise,
    test_ecm_recovery_from_engle_granger_residuals,
    test_ecm_pruning_drops_insignificant_terms,
    test_ecm_residual_length_checked,
    test_adf_battery_rows,
]


def main():
    return run_suite("VOLTLAB - COINTEGRATION TESTS", ALL_TESTS)


if __name__ == "__main__":
    sys.exit(main())
