from __future__ import annotations
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from numerics import dist_ppf, dist_sf
from utils import DegenerateDataError, SampleSizeError, as_values

log = logging.getLogger("voltlab.descriptive")


@dataclass(frozen=True)
class SummaryStats:
    n_obs: int
    mean: float
    std_dev: float
    min: float
    max: float
    skewness: Optional[float]
    kurtosis_raw: Optional[float]
    kurtosis_excess: Optional[float]
    geo_mean_rate: float

    @property
    def degenerate(self) -> bool:
        return self.skewness is None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["degenerate"] = self.degenerate
        return d


@dataclass(frozen=True)
class CorrelogramRow:
    lag: int
    ac: float
    pac: float
    q_stat: float
    q_pvalue: float


@dataclass(frozen=True, eq=False)
class HistogramData:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def n_obs(self) -> int:
        return int(self.counts.sum())

    def rows(self):
        for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
            yield float(lo), float(hi), int(c)


def _central_moments(x: np.ndarray):
    d = x - x.mean()
    return float(np.mean(d ** 2)), float(np.mean(d ** 3)), float(np.mean(d ** 4))


def summary(r) -> SummaryStats:
    """Moment summary of a return series.

    Skewness and kurtosis use the biased (denominator n) central moments;
    for a constant series they are undefined and reported as None.
    The geometric mean rate of log returns is their arithmetic mean.
    """
    x = as_values(r)
    n = len(x)
    if n < 2:
        raise SampleSizeError(f"summary needs at least 2 observations, got {n}")
    mean = float(x.mean())
    std = float(x.std(ddof=1))
    m2, m3, m4 = _central_moments(x)
    if m2 > 0:
        skew = m3 / m2 ** 1.5
        kurt = m4 / m2 ** 2
        excess = kurt - 3.0
    else:
        skew = kurt = excess = None
    return SummaryStats(n, mean, std, float(x.min()), float(x.max()), skew, kurt, excess, mean)


def _demeaned(x, max_lag: int) -> np.ndarray:
    v = as_values(x)
    n = len(v)
    if max_lag < 0:
        raise ValueError(f"max_lag must be non-negative, got {max_lag}")
    if not max_lag < n / 2:
        raise SampleSizeError(f"max_lag {max_lag} must be below n/2 = {n / 2:g}")
    d = v - v.mean()
    if not np.any(d):
        raise DegenerateDataError("autocorrelation of a zero-variance series is undefined")
    return d


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations r_0..r_max_lag (r_0 = 1)"""
    d = _demeaned(x, max_lag)
    denom = float(d @ d)
    n = len(d)
    return np.array([1.0] + [float(d[:n - k] @ d[k:]) / denom for k in range(1, max_lag + 1)])


def pacf_from_acf(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson recursion on an autocorrelation vector (r[0] = 1)"""
    max_lag = len(r) - 1
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if max_lag == 0:
        return out
    phi = np.array([r[1]])
    out[1] = r[1]
    v = 1.0 - r[1] ** 2
    for k in range(2, max_lag + 1):
        if v <= 0:
            break
        a = (r[k] - phi @ r[k - 1:0:-1]) / v
        phi = np.append(phi - a * phi[::-1], a)
        v *= 1.0 - a * a
        out[k] = a
    return out


def pacf(x, max_lag: int) -> np.ndarray:
    return pacf_from_acf(acf(x, max_lag))


def ljung_box(x, max_lag: int) -> List[CorrelogramRow]:
    """Correlogram rows 1..max_lag with cumulative Ljung-Box Q and chi2(k) p-values"""
    n = len(as_values(x))
    if not max_lag < n / 4:
        raise SampleSizeError(f"Ljung-Box max_lag {max_lag} must be below n/4 = {n / 4:g}")
    if max_lag < 1:
        raise ValueError("Ljung-Box needs max_lag >= 1")
    r = acf(x, max_lag)
    p = pacf_from_acf(r)
    rows = []
    q = 0.0
    for k in range(1, max_lag + 1):
        q += r[k] ** 2 / (n - k)
        stat = n * (n + 2) * q
        rows.append(CorrelogramRow(k, float(r[k]), float(p[k]), float(stat),
                                   dist_sf("chi2", stat, k)))
    return rows


def _shape_stats(v: np.ndarray) -> dict:
    m2, m3, m4 = _central_moments(v)
    return {
        "min": float(v.min()),
        "max": float(v.max()),
        "mean": float(v.mean()),
        "std_dev": float(v.std(ddof=1)),
        "skewness": m3 / m2 ** 1.5 if m2 > 0 else None,
        "kurtosis_excess": m4 / m2 ** 2 - 3.0 if m2 > 0 else None,
    }


def correlogram_summary(rows: Sequence[CorrelogramRow]) -> dict:
    """Distribution of the AC and PAC coefficients across lags.

    The chi-square reference uses k - 1 degrees of freedom for k lags.
    """
    if len(rows) < 2:
        raise SampleSizeError("correlogram summary needs at least 2 lags")
    ac = np.array([r.ac for r in rows])
    pac = np.array([r.pac for r in rows])
    df = len(rows) - 1
    return {
        "lags": len(rows),
        "ac": _shape_stats(ac),
        "pac": _shape_stats(pac),
        "q_stat": rows[-1].q_stat,
        "q_pvalue": rows[-1].q_pvalue,
        "chi2_df": df,
        "chi2_crit_5pct": dist_ppf("chi2", 0.95, df),
    }


def histogram(x, n_bins: Optional[int] = None, bin_width: Optional[float] = None) -> HistogramData:
    """Equal-width bins over [min, max]; the last bin is closed on both ends"""
    v = as_values(x)
    if len(v) < 1:
        raise SampleSizeError("histogram needs at least one observation")
    if n_bins is None and bin_width is None:
        n_bins = max(1, int(math.ceil(math.sqrt(len(v)))))
    lo, hi = float(v.min()), float(v.max())
    if bin_width is not None:
        if bin_width <= 0:
            raise ValueError(f"bin_width must be positive, got {bin_width}")
        n_bins = max(1, int(math.ceil((hi - lo) / bin_width)))
        edges = lo + bin_width * np.arange(n_bins + 1)
        if edges[-1] < hi:
            edges = np.append(edges, edges[-1] + bin_width)
    else:
        if n_bins < 1:
            raise ValueError(f"n_bins must be at least 1, got {n_bins}")
        if hi == lo:
            edges = np.array([lo - 0.5, lo + 0.5])
        else:
            edges = np.linspace(lo, hi, n_bins + 1)
    if hi == lo and bin_width is not None:
        edges = np.array([lo, lo + bin_width])
    counts, _ = np.histogram(v, bins=edges)
    return HistogramData(edges, counts.astype(int))


def write_histogram_csv(h: HistogramData, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(h.rows()), columns=["bin_edge_lo", "bin_edge_hi", "count"]).to_csv(
        path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def write_correlogram_csv(rows: Sequence[CorrelogramRow], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame({"lag": [r.lag for r in rows], "ac": [r.ac for r in rows],
                          "pac": [r.pac for r in rows], "q": [r.q_stat for r in rows],
                          "p": [r.q_pvalue for r in rows]})
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path
