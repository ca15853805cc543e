from __future__ import annotations
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator

from numerics import OlsFit, dist_cdf, dist_ppf, ols
from utils import DegenerateDataError, SampleSizeError, as_values

log = logging.getLogger("voltlab.unitroot")

DETERMINISTIC = ("none", "constant", "constant+trend")
CRITERIA = ("AIC", "BIC")
LEVELS = (0.01, 0.05, 0.10)

# Finite-sample response surfaces cv(n) = b0 + b1/n + b2/n^2 + b3/n^3, from
# MacKinnon, "Critical Values for Cointegration Tests" (Queen's University
# working paper 1227, 2010), tables for the tau statistics. The "eg" rows are
# the residual-based (Engle-Granger) distributions with a constant in the
# cointegrating regression, indexed by the number of variables.
_SURFACE: Dict[Tuple[str, int], Dict[float, Tuple[float, float, float, float]]] = {
    ("none", 1): {
        0.01: (-2.56574, -2.2358, -3.627, 0.0),
        0.05: (-1.94100, -0.2686, -3.365, 31.223),
        0.10: (-1.61682, 0.2656, -2.714, 25.364),
    },
    ("constant", 1): {
        0.01: (-3.43035, -6.5393, -16.786, -79.433),
        0.05: (-2.86154, -2.8903, -4.234, -40.040),
        0.10: (-2.56677, -1.5384, -2.809, 0.0),
    },
    ("constant+trend", 1): {
        0.01: (-3.95877, -9.0531, -28.428, -134.155),
        0.05: (-3.41049, -4.3904, -9.036, -45.374),
        0.10: (-3.12705, -2.5856, -3.925, -22.380),
    },
    ("eg", 2): {
        0.01: (-3.89644, -10.9519, -33.527, 0.0),
        0.05: (-3.33613, -6.1101, -6.823, 0.0),
        0.10: (-3.04445, -4.2412, -2.720, 0.0),
    },
    ("eg", 3): {
        0.01: (-4.29374, -14.4354, -33.195, 47.433),
        0.05: (-3.74066, -8.5631, -10.852, 27.982),
        0.10: (-3.45218, -6.2143, -3.718, 0.0),
    },
    ("eg", 4): {
        0.01: (-4.64332, -18.1031, -37.972, 0.0),
        0.05: (-4.09600, -11.2349, -11.175, 0.0),
        0.10: (-3.80889, -8.3931, -4.137, 0.0),
    },
    ("eg", 5): {
        0.01: (-4.95756, -21.8883, -45.142, 0.0),
        0.05: (-4.41519, -14.0405, -12.575, 0.0),
        0.10: (-4.13157, -10.7417, -3.784, 0.0),
    },
    ("eg", 6): {
        0.01: (-5.24568, -25.6688, -57.737, 88.639),
        0.05: (-4.70693, -16.9178, -17.492, 60.007),
        0.10: (-4.42501, -13.1875, -5.104, 27.877),
    },
}

# Asymptotic Dickey-Fuller quantiles (Fuller, Introduction to Statistical
# Time Series, 1976/1996, table 10.A.2) used to extend the surfaces into the
# body and right tail of the distribution for p-values.
_ASYMPTOTIC: Dict[str, Dict[float, float]] = {
    "none": {0.01: -2.58, 0.025: -2.23, 0.05: -1.95, 0.10: -1.62,
             0.90: 0.89, 0.95: 1.28, 0.975: 1.62, 0.99: 2.00},
    "constant": {0.01: -3.43, 0.025: -3.12, 0.05: -2.86, 0.10: -2.57,
                 0.90: -0.44, 0.95: -0.07, 0.975: 0.23, 0.99: 0.60},
    "constant+trend": {0.01: -3.96, 0.025: -3.66, 0.05: -3.41, 0.10: -3.12,
                       0.90: -1.25, 0.95: -0.94, 0.975: -0.66, 0.99: -0.33},
}

P_MIN, P_MAX = 1e-4, 0.9999


@dataclass(frozen=True)
class AdfSpec:
    deterministic: str = "constant+trend"
    lag_order: Optional[int] = None
    max_lag: Optional[int] = None
    criterion: str = "BIC"

    def __post_init__(self):
        if self.deterministic not in DETERMINISTIC:
            raise ValueError(f"deterministic must be one of {DETERMINISTIC}")
        if self.criterion.upper() not in CRITERIA:
            raise ValueError(f"criterion must be one of {CRITERIA}")
        if self.lag_order is not None and self.lag_order < 0:
            raise ValueError("lag_order must be non-negative")


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    n_obs: int
    critical_values: Tuple[float, float, float]
    p_value: float
    stationary_at_5pct: bool
    deterministic: str
    critical_case: str
    degenerate: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["critical_values"] = {"1%": self.critical_values[0], "5%": self.critical_values[1],
                                "10%": self.critical_values[2]}
        if math.isinf(self.statistic):
            d["statistic"] = None
        return d


def schwert_max_lag(n: int) -> int:
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def _surface_key(case: str, n_vars: int) -> Tuple[str, int]:
    if case == "eg":
        if not 2 <= n_vars <= 6:
            raise ValueError(f"residual-based critical values cover 2..6 variables, got {n_vars}")
        return case, n_vars
    if case not in DETERMINISTIC:
        raise ValueError(f"unknown critical-value case '{case}'")
    return case, 1


def adf_critical_values(case: str, n: int, n_vars: int = 1) -> Tuple[float, float, float]:
    """1%, 5%, 10% critical values at sample size n.

    case is a deterministic spec ("none", "constant", "constant+trend") or
    "eg" for cointegration residuals of n_vars variables.
    """
    key = _surface_key(case, n_vars)
    if n < 20:
        raise SampleSizeError(f"critical values need n >= 20, got {n}")
    surface = _SURFACE[key]
    return tuple(float(np.polyval(surface[lv][::-1], 1.0 / n)) for lv in LEVELS)


def _quantile_knots(case: str, n: int, n_vars: int):
    cv = dict(zip(LEVELS, adf_critical_values(case, n, n_vars)))
    if case == "eg":
        base = _ASYMPTOTIC["constant"]
        b = (cv[0.10] - cv[0.01]) / (base[0.10] - base[0.01])
        a = cv[0.01] - b * base[0.01]
        knots = {p: a + b * q for p, q in base.items()}
    else:
        base = _ASYMPTOTIC[case]
        low_shift = 0.5 * ((cv[0.01] - base[0.01]) + (cv[0.05] - base[0.05]))
        high_shift = cv[0.10] - base[0.10]
        knots = {p: q + (low_shift if p < 0.10 else high_shift) for p, q in base.items()}
    knots.update(cv)
    probs = sorted(knots)
    return np.array([knots[p] for p in probs]), np.array(probs)


def adf_pvalue(statistic: float, case: str, n: int, n_vars: int = 1) -> float:
    """Approximate p-value: monotone cubic (PCHIP) interpolation of the
    quantile knots in probit space, linear beyond the outer knots, clamped
    to [1e-4, 0.9999]."""
    if math.isnan(statistic):
        return math.nan
    if statistic == -math.inf:
        return P_MIN
    xs, probs = _quantile_knots(case, n, n_vars)
    ys = np.array([dist_ppf("normal", p) for p in probs])
    if statistic < xs[0]:
        y = ys[0] + (ys[1] - ys[0]) / (xs[1] - xs[0]) * (statistic - xs[0])
    elif statistic > xs[-1]:
        y = ys[-1] + (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]) * (statistic - xs[-1])
    else:
        y = float(PchipInterpolator(xs, ys)(statistic))
    return min(P_MAX, max(P_MIN, dist_cdf("normal", y)))


def _adf_design(v: np.ndarray, lags: int, deterministic: str, start: int):
    dv = np.diff(v)
    idx = np.arange(start, len(dv))
    cols, names = [], []
    if deterministic in ("constant", "constant+trend"):
        cols.append(np.ones(len(idx)))
        names.append("const")
    if deterministic == "constant+trend":
        cols.append(idx + 1.0)
        names.append("trend")
    cols.append(v[idx])
    names.append("level_lag1")
    for j in range(1, lags + 1):
        cols.append(dv[idx - j])
        names.append(f"diff_lag{j}")
    return np.column_stack(cols), dv[idx], names


def _adf_regression(v: np.ndarray, lags: int, deterministic: str,
                    start: Optional[int] = None) -> OlsFit:
    X, y, names = _adf_design(v, lags, deterministic, lags if start is None else start)
    return ols(X, y, names)


def _information_criterion(fit: OlsFit, criterion: str) -> float:
    n = fit.n_obs
    penalty = math.log(n) if criterion.upper() == "BIC" else 2.0
    return n * math.log(fit.rss / n) + penalty * fit.n_params


def _check_variation(v: np.ndarray):
    if len(v) < 2 or not np.any(np.diff(v)):
        raise DegenerateDataError("ADF test needs a series with variation")


def select_lag(x, max_lag: int, criterion: str = "BIC",
               deterministic: str = "constant+trend") -> int:
    """Lag minimising AIC/BIC over 0..max_lag on a common estimation sample"""
    v = as_values(x)
    n = len(v)
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if not max_lag < n / 3:
        raise SampleSizeError(f"max_lag {max_lag} must be below n/3 = {n / 3:g}")
    _check_variation(v)
    if max_lag == 0:
        return 0
    ics = [_information_criterion(_adf_regression(v, p, deterministic, start=max_lag), criterion)
           for p in range(max_lag + 1)]
    best = int(np.argmin(ics))
    log.debug("select_lag: %s over 0..%d -> %d", criterion, max_lag, best)
    return best


def _auto_max_lag(n: int) -> int:
    max_lag = schwert_max_lag(n)
    while max_lag > 0 and (max_lag >= n / 3 or n < 20 + max_lag):
        max_lag -= 1
    return max_lag


def adf_test(x, spec: Optional[AdfSpec] = None, *, critical_case: Optional[str] = None,
             n_vars: int = 1) -> AdfResult:
    """Augmented Dickey-Fuller t-test on the lagged level coefficient.

    Lag order is fixed by spec.lag_order or chosen by select_lag (Schwert
    maximum unless spec.max_lag is set); the final regression uses every
    observation the chosen lag allows.
    """
    spec = spec or AdfSpec()
    v = as_values(x)
    n = len(v)
    _check_variation(v)
    if spec.lag_order is None:
        if spec.max_lag is None:
            max_lag = _auto_max_lag(n)
        else:
            max_lag = spec.max_lag
        lags = select_lag(v, max_lag, spec.criterion, spec.deterministic)
    else:
        lags = spec.lag_order
    if n < 20 + lags:
        raise SampleSizeError(f"ADF with {lags} lags needs at least {20 + lags} observations, got {n}")

    fit = _adf_regression(v, lags, spec.deterministic)
    stat = float(fit.t_stats[fit.index("level_lag1")])
    case = critical_case or spec.deterministic
    cv = adf_critical_values(case, fit.n_obs, n_vars)
    return AdfResult(stat, lags, fit.n_obs, cv, adf_pvalue(stat, case, fit.n_obs, n_vars),
                     stat < cv[1], spec.deterministic, case)


def degenerate_stationary(n: int, case: str, n_vars: int = 1,
                          deterministic: str = "none") -> AdfResult:
    """Result for an identically zero residual series: trivially stationary"""
    cv = adf_critical_values(case, max(n, 20), n_vars)
    return AdfResult(-math.inf, 0, n, cv, P_MIN, True, deterministic, case, degenerate=True)
