#!/usr/bin/env python3
"""Checks against real CSI 300 spot and futures closes.

Runs only when VOLTLAB_SPOT_FILE and VOLTLAB_FUTURES_FILE point at existing
files; every test is skipped otherwise.
"""
import os
import sys
from pathlib import Path

import numpy as np
from dotenv import load_dotenv

from causality import granger_scan
from cointegration import engle_granger, fit_ecm_pruned
from report import StudyConfig, StudyRunner
from utils import run_suite
from volatility import VolModelSpec, fit


def _files():
    load_dotenv()
    spot, futures = os.getenv("VOLTLAB_SPOT_FILE"), os.getenv("VOLTLAB_FUTURES_FILE")
    if not spot or not futures or not Path(spot).is_file() or not Path(futures).is_file():
        return None
    return Path(spot), Path(futures)


def _runner():
    files = _files()
    if files is None:
        print("  SKIP: VOLTLAB_SPOT_FILE / VOLTLAB_FUTURES_FILE not set")
        return None
    runner = StudyRunner(StudyConfig(spot_file=files[0], futures_file=files[1], formats=("json",)))
    runner.load_spot()
    runner.load_futures()
    return runner


def test_return_volatility_falls_after_the_event():
    runner = _runner()
    if runner is None:
        return
    assert abs(np.std(runner.returns["pre"].values, ddof=1) - 2.4603) < 0.01
    assert abs(np.std(runner.returns["post"].values, ddof=1) - 1.4171) < 0.01


def test_full_sample_garch_persistence():
    runner = _runner()
    if runner is None:
        return
    f = fit(VolModelSpec("GARCH", mean_lags=(4,)), runner.returns["full"])
    assert abs(f.persistence - 0.9939) < 0.01, f.persistence


def test_cointegrating_regression_and_ecm():
    runner = _runner()
    if runner is None:
        return
    pair = runner._coint_pair()
    eg = engle_granger(pair.y, pair.x)
    assert abs(eg.slope - 1.0066) < 0.02, eg.slope
    _, pruned = fit_ecm_pruned(pair.y, pair.x, eg.residuals)
    assert abs(pruned.adjustment_coef + 0.2014) < 0.02, pruned.adjustment_coef
    assert abs(pruned.b1 - 0.8278) < 0.02, pruned.b1


def test_granger_sign_pattern():
    runner = _runner()
    if runner is None:
        return
    pair = runner._coint_pair()
    rows = granger_scan(np.diff(pair.y), np.diff(pair.x), 10)
    assert all(r.p_x_to_y < 0.05 for r in rows)
    assert all(r.p_y_to_x > 0.05 for r in rows[:2])
    assert all(r.p_y_to_x < 0.05 for r in rows[2:])


ALL_TESTS = [
    test_return_volatility_falls_after_the_event,
    test_full_sample_garch_persistence,
    test_cointegrating_regression_and_ecm,
    test_granger_sign_pattern,
]


def main():
    return run_suite("VOLTLAB - REFERENCE DATA CHECKS", ALL_TESTS)


if __name__ == "__main__":
    sys.exit(main())
