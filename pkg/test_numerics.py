#!/usr/bin/env python3
import math
import sys

import numpy as np

from numerics import (
    dist_cdf, dist_ppf, dist_sf, fd_gradient, fd_hessian, gen_eigen_sym, minimize, ols,
)
from utils import NonFiniteObjectiveError, NotPositiveDefiniteError, RankDeficientError, run_suite


def test_ols_exact_line():
    x = np.arange(10.0)
    fit = ols(np.column_stack([np.ones(10), x]), 1.0 + 2.0 * x, ["const", "slope"])
    assert np.allclose(fit.coefficients, [1.0, 2.0], atol=1e-12)
    assert abs(fit.r_squared - 1.0) < 1e-12
    assert fit.coef("slope") == fit.coefficients[1]


def test_ols_standard_errors_match_closed_form():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(200)
    y = 0.5 + 1.5 * x + rng.standard_normal(200)
    fit = ols(np.column_stack([np.ones(200), x]), y)
    s2 = fit.rss / (200 - 2)
    se_slope = math.sqrt(s2 / np.sum((x - x.mean()) ** 2))
    assert abs(fit.std_errors[1] - se_slope) < 1e-10
    assert abs(fit.t_stats[1] - fit.coefficients[1] / se_slope) < 1e-8
    assert np.all((fit.p_values() >= 0) & (fit.p_values() <= 1))


def test_ols_names_dependent_column():
    x = np.arange(20.0)
    X = np.column_stack([np.ones(20), x, 2.0 * x])
    try:
        ols(X, x ** 2, ["const", "x", "twice_x"])
    except RankDeficientError as e:
        assert e.column == "twice_x"
        return
    raise AssertionError("collinear design accepted")


def test_chi2_cdf_at_tabulated_quantile():
    assert abs(dist_cdf("chi2", 49.7658, 35) - 0.95) < 5e-4


def test_distribution_identities():
    assert abs(dist_sf("normal", 1.959963984540054) - 0.025) < 1e-12
    t, d = 2.0, 10
    assert abs(dist_cdf("f", t * t, 1, d) - (1.0 - 2.0 * dist_sf("t", t, d))) < 1e-12
    assert abs(dist_cdf("t", 0.0, 7) - 0.5) < 1e-12
    assert abs(dist_cdf("chi2", 3.0, 2) - (1.0 - math.exp(-1.5))) < 1e-12
    assert abs(dist_cdf("f", 2.5, 3, 40) + dist_sf("f", 2.5, 3, 40) - 1.0) < 1e-12


def test_ppf_inverts_cdf():
    for kind, dfs in (("normal", ()), ("chi2", (35,)), ("f", (3, 50))):
        q = dist_ppf(kind, 0.95, *dfs)
        assert abs(dist_cdf(kind, q, *dfs) - 0.95) < 1e-10


def test_bad_degrees_of_freedom_rejected():
    for args in (("chi2", 1.0, 0), ("f", 1.0, 3)):
        try:
            dist_cdf(*args)
        except ValueError:
            continue
        raise AssertionError(f"accepted {args}")


def test_fd_gradient_and_hessian_of_quadratic():
    A = np.array([[4.0, 1.0], [1.0, 3.0]])
    f = lambda v: 0.5 * v @ A @ v
    x = np.array([0.7, -1.3])
    assert np.allclose(fd_gradient(f, x), A @ x, atol=1e-6)
    assert np.allclose(fd_hessian(f, x), A, atol=1e-4)


def test_minimize_quadratic():
    opt = minimize(lambda v: (v[0] - 1.0) ** 2 + 10.0 * (v[1] + 2.0) ** 2, [0.0, 0.0])
    assert np.allclose(opt.point, [1.0, -2.0], atol=1e-5)
    assert opt.converged
    assert opt.gradient_norm <= 1e-6


def test_minimize_rosenbrock():
    rosen = lambda v: (1.0 - v[0]) ** 2 + 100.0 * (v[1] - v[0] ** 2) ** 2
    opt = minimize(rosen, [-1.2, 1.0])
    assert np.allclose(opt.point, [1.0, 1.0], atol=1e-3)


def test_minimize_treats_inf_as_rejection():
    f = lambda v: (v[0] - 2.0) ** 2 if v[0] > 0 else math.inf
    opt = minimize(f, [1.0])
    assert abs(opt.point[0] - 2.0) < 1e-4


def test_minimize_rejects_nan_start():
    try:
        minimize(lambda v: math.nan, [1.0])
    except NonFiniteObjectiveError as e:
        assert math.isnan(e.value)
        return
    raise AssertionError("NaN objective accepted")


def test_generalized_eigenproblem():
    res = gen_eigen_sym(np.diag([2.0, 3.0]), np.eye(2))
    assert np.allclose(res.values, [3.0, 2.0])
    b = np.array([[2.0, 0.5], [0.5, 1.0]])
    a = np.array([[1.0, 0.2], [0.2, 0.5]])
    res = gen_eigen_sym(a, b)
    for lam, v in zip(res.values, res.vectors.T):
        assert np.allclose(a @ v, lam * b @ v, atol=1e-10)
    try:
        gen_eigen_sym(np.eye(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    except NotPositiveDefiniteError:
        return
    raise AssertionError("indefinite right-hand side accepted")


ALL_TESTS = [
    test_ols_exact_line,
    test_ols_standard_errors_match_closed_form,
    test_ols_names_dependent_column,
    test_chi2_cdf_at_tabulated_quantile,
    test_distribution_identities,
    test_ppf_inverts_cdf,
    test_bad_degrees_of_freedom_rejected,
    test_fd_gradient_and_hessian_of_quadratic,
    test_minimize_quadratic,
    test_minimize_rosenbrock,
    test_minimize_treats_inf_as_rejection,
    test_minimize_rejects_nan_start,
    test_generalized_eigenproblem,
]


def main():
    return run_suite("VOLTLAB - NUMERICS TESTS", ALL_TESTS)


if __name__ == "__main__":
    sys.exit(main())
