#!/usr/bin/env python3
import math
import sys
import tempfile
from pathlib import Path

import numpy as np

from numerics import fd_gradient
from utils import DegenerateDataError, SampleSizeError, SimulationError, run_suite
from volatility import (
    LOG_2PI, VolModelSpec, arch_lm_test, fit, log_likelihood, mean_residuals, n_likelihood_terms,
    news_impact, news_impact_curve, params_from_mapping, simulate, standardized_residuals,
    variance_recursion, write_news_impact_csv, write_variance_csv,
)

GARCH = VolModelSpec("GARCH")
TGARCH = VolModelSpec("TGARCH")
GARCH_ZERO_MEAN = VolModelSpec("GARCH", include_mean_constant=False)
TGARCH_ZERO_MEAN = VolModelSpec("TGARCH", include_mean_constant=False)


def _garch(alpha0=0.05, alpha=0.05, beta=0.90):
    return params_from_mapping(GARCH, {"alpha0": alpha0, "alpha": alpha, "beta": beta})


def _tgarch(alpha0=0.02, alpha=0.03, gamma=0.10, beta=0.90):
    return params_from_mapping(TGARCH, {"alpha0": alpha0, "alpha": alpha, "gamma": gamma,
                                        "beta": beta})


def test_spec_names_and_validation():
    assert GARCH.names == ("mean_const", "alpha0", "alpha[1]", "beta[1]")
    spec = VolModelSpec("tgarch", mean_lags=(4,))
    assert spec.family == "TGARCH"
    assert spec.names == ("mean_const", "ar[4]", "alpha0", "alpha[1]", "gamma[1]", "beta[1]")
    assert spec.burn == 4
    assert VolModelSpec("ARCH").q == 0
    for kwargs in ({"family": "EGARCH"}, {"family": "ARCH", "q": 1}, {"p": 0}):
        try:
            VolModelSpec(**kwargs)
        except ValueError:
            continue
        raise AssertionError(f"accepted {kwargs}")


def test_garch_recursion_step():
    s0 = 1.9 / 0.7  # makes sigma2[0] == 2
    s2 = variance_recursion(GARCH_ZERO_MEAN, [0.1, 0.2, 0.5], [1.0, 0.0], s0)
    assert abs(s2[0] - 2.0) < 1e-12
    assert abs(s2[1] - 1.3) < 1e-12


def test_tgarch_recursion_step():
    s0 = 1.9 / 0.85  # pre-sample indicator 1/2
    s2 = variance_recursion(TGARCH_ZERO_MEAN, [0.1, 0.2, 0.3, 0.5], [-1.0, 0.0], s0)
    assert abs(s2[0] - 2.0) < 1e-12
    assert abs(s2[1] - 1.6) < 1e-12


def test_tgarch_without_gamma_matches_garch_bitwise():
    e = np.random.default_rng(0).standard_normal(500)
    g = variance_recursion(GARCH_ZERO_MEAN, [0.05, 0.1, 0.85], e, 1.0)
    t = variance_recursion(TGARCH_ZERO_MEAN, [0.05, 0.1, 0.0, 0.85], e, 1.0)
    assert np.array_equal(g, t)


def test_mean_residuals_with_sparse_ar_lag():
    spec = VolModelSpec("GARCH", mean_lags=(2,))
    r = np.array([1.0, 2.0, 3.0, 5.0])
    eps = mean_residuals(spec, [0.5, 0.1, 0.05, 0.05, 0.9], r)
    assert np.allclose(eps, [3.0 - 0.5 - 0.1, 5.0 - 0.5 - 0.2])


def test_likelihood_of_unit_variance_noise():
    e = np.random.default_rng(1).standard_normal(10_000)
    L = log_likelihood(GARCH_ZERO_MEAN, [1.0, 0.0, 0.0], e)
    T = n_likelihood_terms(GARCH_ZERO_MEAN, len(e))
    assert T == 9999
    assert abs(L - (-0.5 * (T * LOG_2PI + np.sum(e[1:] ** 2)))) < 1e-6
    assert abs(L / T + 0.5 * (LOG_2PI + 1.0)) < 0.02


def test_likelihood_negative_variance_is_rejected():
    e = np.random.default_rng(2).standard_normal(200)
    assert log_likelihood(GARCH_ZERO_MEAN, [-1.0, 0.0, 0.0], e) == -math.inf


def test_likelihood_prefers_true_alpha():
    truth = params_from_mapping(GARCH, {"alpha0": 0.1, "alpha": 0.2, "beta": 0.7})
    wins = 0
    for seed in range(40):
        r = simulate(GARCH, truth, 5000, seed=seed)
        base = log_likelihood(GARCH, truth, r)
        for shift in (-0.1, 0.1):
            moved = truth.copy()
            moved[2] += shift
            wins += base >= log_likelihood(GARCH, moved, r)
    assert wins >= 76, wins


def test_likelihood_ignores_dates():
    r = simulate(GARCH, _garch(), 300, seed=3)
    assert log_likelihood(GARCH, _garch(), r) == log_likelihood(GARCH, _garch(), r.values.copy())


def test_simulate_is_deterministic_and_matches_unconditional_variance():
    a = simulate(GARCH, _garch(), 1000, seed=4)
    b = simulate(GARCH, _garch(), 1000, seed=4)
    assert np.array_equal(a.values, b.values)
    big = simulate(GARCH, _garch(), 100_000, seed=5)
    assert abs(np.var(big.values) - 1.0) < 0.05


def test_simulated_tgarch_shows_leverage():
    params = params_from_mapping(TGARCH_ZERO_MEAN, {"alpha0": 0.02, "alpha": 0.03, "gamma": 0.10,
                                                    "beta": 0.90})
    r = simulate(TGARCH_ZERO_MEAN, params, 100_000, seed=6).values
    s2 = variance_recursion(TGARCH_ZERO_MEAN, params, r, 1.0)
    assert np.corrcoef(r[:-1], s2[1:])[0, 1] < 0


def test_simulate_refuses_nonstationary_parameters():
    for params in (_garch(alpha=0.1, beta=0.9), _garch(alpha0=-0.1)):
        try:
            simulate(GARCH, params, 100)
        except SimulationError:
            continue
        raise AssertionError(f"simulated with {params}")


def test_garch_parameter_recovery():
    truth = {"alpha0": 0.05, "alpha[1]": 0.05, "beta[1]": 0.90}
    errors = {k: [] for k in truth}
    for seed in range(20):
        f = fit(GARCH, simulate(GARCH, _garch(), 5000, seed=100 + seed))
        for k, v in truth.items():
            errors[k].append(abs(f.param(k) - v))
    for k, errs in errors.items():
        assert np.mean(errs) <= 0.03, f"{k}: {np.mean(errs):.4f}"


def test_tgarch_gamma_recovery():
    estimates = [fit(TGARCH, simulate(TGARCH, _tgarch(), 5000, seed=200 + s)).param("gamma[1]")
                 for s in range(20)]
    assert abs(np.mean(estimates) - 0.10) <= 0.04, np.mean(estimates)


def test_tgarch_on_symmetric_data_finds_no_asymmetry():
    estimates = [fit(TGARCH, simulate(GARCH, _garch(), 5000, seed=300 + s)).param("gamma[1]")
                 for s in range(20)]
    assert abs(np.mean(estimates)) <= 0.03, np.mean(estimates)


def test_fits_converge_to_a_stationary_point():
    for spec, params, base in ((GARCH, _garch(), 400), (TGARCH, _tgarch(), 500)):
        fits = [(fit(spec, r), r) for r in (simulate(spec, params, 5000, seed=base + s)
                                            for s in range(20))]
        assert all(f.converged for f, _ in fits), [f.gradient_norm for f, _ in fits]
        for f, r in fits:
            assert f.gradient_norm <= 1e-3 and f.iterations > 0, (f.gradient_norm, f.iterations)
            assert f.to_dict()["iterations"] == f.iterations
            g = fd_gradient(lambda v: -log_likelihood(spec, v, r), f.params)
            assert np.max(np.abs(g)) <= 2e-3, g


def test_fit_is_self_consistent():
    r = simulate(GARCH, _garch(0.1, 0.1, 0.8), 3000, seed=7)
    f = fit(GARCH, r)
    assert abs(log_likelihood(GARCH, f.params, r) - f.log_likelihood) < 1e-8
    assert np.all(f.variance_path > 0)
    assert abs(f.persistence - (f.param("alpha[1]") + f.param("beta[1]"))) < 1e-12
    assert len(f.dates) == len(f.variance_path) == 3000
    if f.converged and 0.0 < f.persistence < 0.999:
        g = fd_gradient(lambda v: -log_likelihood(GARCH, v, r), f.params)
        assert np.max(np.abs(g)) <= 1e-3, g
    d = f.to_dict()
    assert set(d["params"]) == set(GARCH.names)
    assert d["persistence_rule"] == "sum(alpha) + sum(beta)"


def test_likelihood_scaling_identity():
    r = simulate(GARCH, _garch(0.1, 0.1, 0.8), 2000, seed=8).values
    f1 = fit(GARCH, r)
    f10 = fit(GARCH, 10.0 * r)
    shift = -f1.n_obs * math.log(10.0)
    assert abs((f10.log_likelihood - f1.log_likelihood) - shift) <= 1e-4 * abs(f1.log_likelihood)


def test_fit_preconditions():
    for r, err in ((np.random.default_rng(9).standard_normal(50), SampleSizeError),
                   (np.zeros(200), DegenerateDataError)):
        try:
            fit(GARCH, r)
        except err:
            continue
        raise AssertionError(f"fit did not raise {err.__name__}")


def test_arch_lm_size_and_power():
    rng = np.random.default_rng(10)
    size = sum(arch_lm_test(rng.standard_normal(1000), 3).lm_pvalue < 0.05 for _ in range(500))
    assert 0.02 <= size / 500 <= 0.09, size
    arch = VolModelSpec("ARCH", include_mean_constant=False)
    power = sum(arch_lm_test(simulate(arch, [0.5, 0.5], 1000, seed=s).values, 3).lm_pvalue < 0.05
                for s in range(200))
    assert power / 200 >= 0.95, power


def test_arch_lm_fields_and_preconditions():
    res = arch_lm_test(np.random.default_rng(11).standard_normal(400), 2)
    assert res.n_obs == 398 and res.lags == 2
    assert 0.0 <= res.f_pvalue <= 1.0 and 0.0 <= res.lm_pvalue <= 1.0
    try:
        arch_lm_test(np.ones(100), 1)
    except DegenerateDataError:
        return
    raise AssertionError("constant residuals accepted")


def test_standardized_residuals_remove_arch_effects():
    r = simulate(GARCH, _garch(0.1, 0.15, 0.8), 3000, seed=12)
    f = fit(GARCH, r)
    assert arch_lm_test(f.residual_path, 1).lm_pvalue < 0.01
    assert arch_lm_test(standardized_residuals(f), 1).lm_pvalue > 0.01


def test_news_impact_shapes():
    grid = np.array([-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
    sym = news_impact(GARCH, _garch(), grid, 1.0).sigma2
    assert np.array_equal(sym, sym[::-1])
    asym = news_impact(TGARCH, _tgarch(), grid, 1.0).sigma2
    assert np.all(asym[:3] > asym[4:][::-1])
    assert asym[3] == news_impact(TGARCH, _tgarch(), [0.0], 1.0).sigma2[0]
    assert asym[3] == 0.02 + 0.90


def test_outputs_from_fit():
    f = fit(GARCH, simulate(GARCH, _garch(), 500, seed=13))
    curve = news_impact_curve(f)
    assert len(curve.epsilon) == 201
    assert abs(curve.sigma2_bar - f.alpha0 / (1.0 - f.persistence)) < 1e-12
    with tempfile.TemporaryDirectory() as tmp:
        vp = write_variance_csv(f, Path(tmp) / "var.csv")
        nic = write_news_impact_csv(curve, Path(tmp) / "nic.csv")
        v_lines = vp.read_text(encoding="utf-8").splitlines()
        n_lines = nic.read_text(encoding="utf-8").splitlines()
    assert v_lines[0] == "date,sigma2" and len(v_lines) == 501
    assert v_lines[1].startswith("2000-01-03,")
    assert n_lines[0] == "epsilon,sigma2" and len(n_lines) == 202


ALL_TESTS = [
    test_spec_names_and_validation,
    test_garch_recursion_step,
    test_tgarch_recursion_step,
    test_tgarch_without_gamma_matches_garch_bitwise,
    test_mean_residuals_with_sparse_ar_lag,
    test_likelihood_of_unit_variance_noise,
    test_likelihood_negative_variance_is_rejected,
    test_likelihood_prefers_true_alpha,
    test_likelihood_ignores_dates,
    test_simulate_is_deterministic_and_matches_unconditional_variance,
    test_simulated_tgarch_shows_leverage,
    test_simulate_refuses_nonstationary_parameters,
    test_garch_parameter_recovery,
    test_tgarch_gamma_recovery,
    test_tgarch_on_symmetric_data_finds_no_asymmetry,
    test_fits_converge_to_a_stationary_point,
    test_fit_is_self_consistent,
    test_likelihood_scaling_identity,
    test_fit_preconditions,
    test_arch_lm_size_and_power,
    test_arch_lm_fields_and_preconditions,
    test_standardized_residuals_remove_arch_effects,
    test_news_impact_shapes,
    test_outputs_from_fit,
]


def main():
    return run_suite("VOLTLAB - VOLATILITY MODEL TESTS", ALL_TESTS)


if __name__ == "__main__":
    sys.exit(main())
