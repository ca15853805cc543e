from __future__ import annotations
import logging
from dataclasses import dataclass, field
from datetime import date
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from numerics import OlsFit, gen_eigen_sym, ols
from series_core import DatedSeries, PriceSeries, align_many, difference, to_log, to_returns
from unitroot import AdfResult, AdfSpec, adf_test, degenerate_stationary
from utils import (
    AlignmentError, DataError, NotPositiveDefiniteError, SampleSizeError, as_values, json_float,
)

log = logging.getLogger("voltlab.cointegration")

# Johansen critical values (90%, 95%, 99%) indexed by k - r, the number of
# common trends under the null. "none" and "constant" are the MacKinnon, Haug
# & Michelis (1996) values tabulated in statsmodels' coint_tables;
# "restricted" (constant confined to the cointegrating relation) is
# Osterwald-Lenum (1992), the table behind urca's ecdet="const".
_TRACE_CV = {
    "restricted": np.array([
        [7.52, 9.24, 12.97],
        [17.85, 19.96, 24.60],
        [32.00, 34.91, 41.07],
        [49.65, 53.12, 60.16],
    ]),
    "none": np.array([
        [2.9762, 4.1296, 6.9406],
        [10.4741, 12.3212, 16.3640],
        [21.7781, 24.2761, 29.5147],
        [37.0339, 40.1749, 46.5716],
    ]),
    "constant": np.array([
        [2.7055, 3.8415, 6.6349],
        [13.4294, 15.4943, 19.9349],
        [27.0669, 29.7961, 35.4628],
        [44.4929, 47.8545, 54.6815],
    ]),
}
_MAX_EIG_CV = {
    "restricted": np.array([
        [7.52, 9.24, 12.97],
        [13.75, 15.67, 20.20],
        [19.77, 22.00, 26.81],
        [25.56, 28.14, 33.24],
    ]),
    "none": np.array([
        [2.9762, 4.1296, 6.9406],
        [9.4748, 11.2246, 15.0923],
        [15.7175, 17.7961, 22.2519],
        [21.8370, 24.1592, 29.0609],
    ]),
    "constant": np.array([
        [2.7055, 3.8415, 6.6349],
        [12.2971, 14.2639, 18.5200],
        [18.8928, 21.1314, 25.8650],
        [25.1236, 27.5858, 32.7172],
    ]),
}
JOHANSEN_CASES = tuple(_TRACE_CV)
ECM_TERMS = ("const", "dx", "dy_lag1", "u_lag1")
OPTIONAL_ECM_TERMS = ("const", "dy_lag1")


def _pair_values(y, x) -> Tuple[np.ndarray, np.ndarray, Tuple[date, ...]]:
    yv, xv = as_values(y), as_values(x)
    if len(yv) != len(xv):
        raise AlignmentError(f"series lengths differ ({len(yv)} vs {len(xv)}); align them first")
    dy, dx = getattr(y, "dates", None), getattr(x, "dates", None)
    if dy is not None and dx is not None and tuple(dy) != tuple(dx):
        raise AlignmentError("series carry different dates; align them first")
    return yv, xv, tuple(dy or dx or ())


@dataclass(frozen=True, eq=False)
class EgResult:
    static_fit: OlsFit
    residual_adf: AdfResult
    cointegrated_at_5pct: bool
    residuals: np.ndarray
    dates: Tuple[date, ...] = ()
    y_label: str = "y"
    x_label: str = "x"
    # level ADF of each leg (y, x); None when the leg could not be tested
    leg_adf: Tuple[Optional[AdfResult], Optional[AdfResult]] = (None, None)

    @property
    def intercept(self) -> float:
        return self.static_fit.coef("const")

    @property
    def slope(self) -> float:
        return self.static_fit.coef("slope")

    @property
    def legs_i1(self) -> Tuple[Optional[bool], Optional[bool]]:
        """Whether each leg keeps its unit root at 5%; recorded, never enforced"""
        return tuple(None if a is None else not a.stationary_at_5pct for a in self.leg_adf)

    def equation(self) -> str:
        sign = "-" if self.intercept < 0 else "+"
        return (f"{self.y_label} = {self.slope:.4f} {self.x_label} {sign} {abs(self.intercept):.4f}")

    def to_dict(self) -> dict:
        legs = []
        for label, adf, i1 in zip((self.y_label, self.x_label), self.leg_adf, self.legs_i1):
            legs.append({"series": label, "i1_at_5pct": i1,
                         "statistic": None if adf is None else json_float(adf.statistic),
                         "p_value": None if adf is None else json_float(adf.p_value)})
        return {
            "y": self.y_label,
            "x": self.x_label,
            "static_regression": self.static_fit.to_dict(),
            "intercept": self.intercept,
            "slope": self.slope,
            "residual_adf": self.residual_adf.to_dict(),
            "cointegrated_at_5pct": self.cointegrated_at_5pct,
            "legs": legs,
        }


def _leg_adf(values: np.ndarray, label: str, spec: Optional[AdfSpec]) -> Optional[AdfResult]:
    try:
        res = adf_test(values, spec)
    except DataError as e:
        log.warning("Engle-Granger: unit-root check on %s skipped: %s", label, e)
        return None
    if res.stationary_at_5pct:
        log.warning("Engle-Granger: %s rejects a unit root at 5%% (p=%.4f); it may not be I(1)",
                    label, res.p_value)
    return res


def engle_granger(y, x, adf_spec: Optional[AdfSpec] = None) -> EgResult:
    """Two-step test: OLS of y on (1, x), then ADF without deterministics on
    the residuals against the two-variable residual-based critical values.

    Each leg's level ADF is recorded on the result; an I(0) leg only logs a
    warning.
    """
    yv, xv, dates = _pair_values(y, x)
    y_label = getattr(y, "label", "") or "y"
    x_label = getattr(x, "label", "") or "x"
    legs = (_leg_adf(yv, y_label, adf_spec), _leg_adf(xv, x_label, adf_spec))
    fit = ols(np.column_stack([np.ones(len(xv)), xv]), yv, ["const", "slope"])
    resid = fit.residuals
    scale = 1.0 + float(np.max(np.abs(yv)))
    if float(np.max(np.abs(resid))) <= 1e-12 * scale:
        log.info("Engle-Granger residuals are identically zero: degenerate-stationary")
        adf = degenerate_stationary(len(resid), "eg", 2)
    else:
        base = adf_spec or AdfSpec()
        spec = AdfSpec("none", base.lag_order, base.max_lag, base.criterion)
        adf = adf_test(resid, spec, critical_case="eg", n_vars=2)
    result = EgResult(fit, adf, adf.statistic < adf.critical_values[1], resid, dates,
                      y_label, x_label, legs)
    log.info("Engle-Granger: slope=%.4f tau=%.4f cointegrated=%s", result.slope,
             adf.statistic, result.cointegrated_at_5pct)
    return result


@dataclass(frozen=True, eq=False)
class JohansenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    trace_stats: np.ndarray
    max_eig_stats: np.ndarray
    trace_cv: np.ndarray
    max_eig_cv: np.ndarray
    selected_rank: int
    n_obs: int
    var_lags: int
    det_case: str
    labels: Tuple[str, ...] = ()

    @property
    def critical_values_5pct(self) -> dict:
        return {"trace": self.trace_cv[:, 1].copy(), "max_eig": self.max_eig_cv[:, 1].copy()}

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    def max_eig_rank(self) -> int:
        """Smallest r whose max-eigenvalue test fails to reject at 5%"""
        for r in range(self.k):
            if self.max_eig_stats[r] < self.max_eig_cv[r, 1]:
                return r
        return self.k

    def summary_sentence(self) -> str:
        rank = self.selected_rank
        eig_rank = self.max_eig_rank()
        if rank == eig_rank:
            n = "no" if rank == 0 else str(rank)
            s = "" if rank == 1 else "s"
            return (f"Both trace and max-eigenvalue tests indicate {n} cointegrating "
                    f"equation{s} at the 0.05 level.")
        return (f"Trace test indicates {rank} and max-eigenvalue test indicates {eig_rank} "
                f"cointegrating equation(s) at the 0.05 level.")

    def to_dict(self) -> dict:
        rows = []
        for r in range(self.k):
            rows.append({
                "rank_null": r,
                "eigenvalue": float(self.eigenvalues[r]),
                "trace_stat": float(self.trace_stats[r]),
                "trace_cv_5pct": float(self.trace_cv[r, 1]),
                "max_eig_stat": float(self.max_eig_stats[r]),
                "max_eig_cv_5pct": float(self.max_eig_cv[r, 1]),
            })
        return {
            "variables": list(self.labels),
            "det_case": self.det_case,
            "var_lags": self.var_lags,
            "n_obs": self.n_obs,
            "ranks": rows,
            "selected_rank": self.selected_rank,
            "max_eig_rank": self.max_eig_rank(),
            "summary": self.summary_sentence(),
        }


def _partial_out(M: np.ndarray, W: Optional[np.ndarray]) -> np.ndarray:
    if W is None:
        return M
    coef, *_ = np.linalg.lstsq(W, M, rcond=None)
    return M - W @ coef


def johansen(z: Union[np.ndarray, Sequence[DatedSeries]], var_lags: int = 2,
             det_case: str = "restricted") -> JohansenResult:
    """Johansen reduced-rank test with trace and max-eigenvalue statistics.

    var_lags counts the lagged differences in the VECM. det_case "restricted"
    puts the constant inside the cointegrating relation (no drift in the
    levels), "constant" is the unrestricted drift case, "none" has no
    deterministics. In the restricted case the eigenvectors carry the
    constant's loading in their last row.
    """
    if det_case not in JOHANSEN_CASES:
        raise ValueError(f"det_case must be one of {JOHANSEN_CASES}, got '{det_case}'")
    if var_lags < 0:
        raise ValueError(f"var_lags must be non-negative, got {var_lags}")
    labels: Tuple[str, ...] = ()
    if isinstance(z, np.ndarray):
        Z = np.asarray(z, dtype=float)
    else:
        labels = tuple(getattr(s, "label", "") or f"z{i}" for i, s in enumerate(z))
        _, Z = align_many(list(z))
    if Z.ndim != 2:
        raise ValueError("johansen expects a T x k matrix")
    T, k = Z.shape
    labels = labels or tuple(f"z{i}" for i in range(k))
    if k not in (2, 3, 4):
        raise ValueError(f"johansen supports 2 to 4 variables, got {k}")
    if not T > 10 * k * max(var_lags, 1):
        raise SampleSizeError(f"johansen with k={k}, var_lags={var_lags} needs more than "
                              f"{10 * k * max(var_lags, 1)} observations, got {T}")

    dZ = np.diff(Z, axis=0)
    rows = np.arange(var_lags, len(dZ))
    R0 = dZ[rows]
    R1 = Z[rows]
    if det_case == "restricted":
        R1 = np.hstack([R1, np.ones((len(rows), 1))])
    cols = []
    if det_case == "constant":
        cols.append(np.ones((len(rows), 1)))
    for j in range(1, var_lags + 1):
        cols.append(dZ[rows - j])
    W = np.hstack(cols) if cols else None
    R0 = _partial_out(R0, W)
    R1 = _partial_out(R1, W)

    n = len(rows)
    S00 = R0.T @ R0 / n
    S11 = R1.T @ R1 / n
    S01 = R0.T @ R1 / n
    try:
        c00 = linalg.cho_factor(S00)
    except linalg.LinAlgError:
        raise NotPositiveDefiniteError("S00 (residual moment of differences) is singular")
    if np.linalg.cond(S00) > 1e12:
        raise NotPositiveDefiniteError("S00 (residual moment of differences) is singular")
    A = S01.T @ linalg.cho_solve(c00, S01)
    A = 0.5 * (A + A.T)
    eig = gen_eigen_sym(A, S11)
    lam = np.clip(eig.values[:k], 0.0, 1.0 - 1e-15)
    vectors = eig.vectors[:, :k]

    logs = np.log1p(-lam)
    trace = -n * np.cumsum(logs[::-1])[::-1]
    max_eig = -n * logs
    trace_cv = _TRACE_CV[det_case][k - 1::-1]
    max_eig_cv = _MAX_EIG_CV[det_case][k - 1::-1]
    rank = next((r for r in range(k) if trace[r] < trace_cv[r, 1]), k)
    log.info("Johansen (k=%d, lags=%d, %s): trace=%s selected rank %d", k, var_lags, det_case,
             np.round(trace, 4).tolist(), rank)
    return JohansenResult(lam, vectors, trace, max_eig, trace_cv.copy(), max_eig_cv.copy(),
                          rank, n, var_lags, det_case, labels)


@dataclass(frozen=True, eq=False)
class EcmFit:
    adjustment_coef: float
    b1: float
    a0: Optional[float]
    included_terms: Tuple[str, ...]
    fit: OlsFit
    dates: Tuple[date, ...] = field(default=())

    @property
    def pi(self) -> float:
        return -self.adjustment_coef

    def to_dict(self) -> dict:
        p = self.fit.p_values()
        return {
            "included_terms": list(self.included_terms),
            "adjustment_coef": self.adjustment_coef,
            "pi": self.pi,
            "b1": self.b1,
            "a0": json_float(self.a0),
            "coefficients": {n: float(c) for n, c in zip(self.fit.names, self.fit.coefficients)},
            "std_errors": {n: float(s) for n, s in zip(self.fit.names, self.fit.std_errors)},
            "t_stats": {n: json_float(t) for n, t in zip(self.fit.names, self.fit.t_stats)},
            "p_values": {n: json_float(v) for n, v in zip(self.fit.names, p)},
            "r_squared": self.fit.r_squared,
            "n_obs": self.fit.n_obs,
        }


def fit_ecm(y, x, residuals, include_constant: bool = True,
            include_lagged_dy: bool = False) -> EcmFit:
    """OLS of dy_t on [const], dx_t, [dy_{t-1}] and u_{t-1}.

    The coefficient on u_{t-1} is reported signed as adjustment_coef
    (negative when the system error-corrects); pi is its negation.
    """
    yv, xv, dates = _pair_values(y, x)
    u = as_values(residuals)
    if len(u) != len(yv):
        raise AlignmentError(f"residuals have {len(u)} points but the series have {len(yv)}")
    rdates = getattr(residuals, "dates", None)
    if rdates is not None and dates and tuple(rdates) != dates:
        raise AlignmentError("residual dates differ from the series dates")
    dy, dx = np.diff(yv), np.diff(xv)
    start = 1 if include_lagged_dy else 0
    idx = np.arange(start, len(dy))
    cols, names = [], []
    if include_constant:
        cols.append(np.ones(len(idx)))
        names.append("const")
    cols.append(dx[idx])
    names.append("dx")
    if include_lagged_dy:
        cols.append(dy[idx - 1])
        names.append("dy_lag1")
    cols.append(u[idx])
    names.append("u_lag1")
    reg = ols(np.column_stack(cols), dy[idx], names)
    fit_dates = dates[start + 1:] if dates else ()
    return EcmFit(reg.coef("u_lag1"), reg.coef("dx"),
                  reg.coef("const") if include_constant else None, tuple(names), reg, fit_dates)


def fit_ecm_pruned(y, x, residuals, alpha: float = 0.05) -> Tuple[EcmFit, EcmFit]:
    """Full ECM and the refit without its insignificant optional terms"""
    full = fit_ecm(y, x, residuals, include_constant=True, include_lagged_dy=True)
    p = dict(zip(full.fit.names, full.fit.p_values()))
    drop = [t for t in OPTIONAL_ECM_TERMS if not p[t] < alpha]
    if not drop:
        return full, full
    log.info("ECM: dropping insignificant terms %s", drop)
    pruned = fit_ecm(y, x, residuals, include_constant="const" not in drop,
                     include_lagged_dy="dy_lag1" not in drop)
    return full, pruned


@dataclass(frozen=True)
class AdfBatteryRow:
    series: str
    transform: str
    result: AdfResult

    def to_dict(self) -> dict:
        return {"series": self.series, "transform": self.transform, **self.result.to_dict()}


def adf_battery(prices: Sequence[PriceSeries], spec: Optional[AdfSpec] = None) -> List[AdfBatteryRow]:
    """ADF on log levels, returns and first differences of each price series"""
    rows = []
    for p in prices:
        logs = to_log(p)
        name = p.label or "series"
        for transform, series in (("log level", logs), ("return", to_returns(p)),
                                  ("first difference", difference(logs))):
            rows.append(AdfBatteryRow(name, transform, adf_test(series, spec)))
    return rows


