from __future__ import annotations
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Sequence

import numpy as np

from numerics import dist_sf, ols
from utils import AlignmentError, SampleSizeError, as_values, fmt_p, fmt_stat, json_float

log = logging.getLogger("voltlab.causality")


@dataclass(frozen=True)
class GrangerResult:
    lag: int
    f_x_to_y: float
    p_x_to_y: float
    f_y_to_x: float
    p_y_to_x: float
    n_effective: int

    def to_dict(self) -> dict:
        return {k: json_float(v) if isinstance(v, float) else v for k, v in asdict(self).items()}


def _lag_matrix(v: np.ndarray, lag: int) -> np.ndarray:
    """Columns v_{t-1} .. v_{t-lag} for t = lag .. n-1"""
    n = len(v)
    return np.column_stack([v[lag - j:n - j] for j in range(1, lag + 1)])


def _direction(target: np.ndarray, cause: np.ndarray, lag: int):
    """F test that lags of `cause` add nothing to an AR(lag) with constant for `target`"""
    n = len(target)
    y = target[lag:]
    own = _lag_matrix(target, lag)
    cross = _lag_matrix(cause, lag)
    const = np.ones((n - lag, 1))
    own_names = [f"own_lag{j}" for j in range(1, lag + 1)]
    cross_names = [f"cross_lag{j}" for j in range(1, lag + 1)]
    unrestricted = ols(np.hstack([const, own, cross]), y, ["const"] + own_names + cross_names)
    restricted = ols(np.hstack([const, own]), y, ["const"] + own_names)
    t_eff = n - lag
    df2 = t_eff - 2 * lag - 1
    gain = max(restricted.rss - unrestricted.rss, 0.0)
    f = (gain / lag) / (unrestricted.rss / df2)
    return f, dist_sf("f", f, lag, df2), t_eff


def granger_test(y, x, lag: int) -> GrangerResult:
    """Bidirectional Granger causality F tests at a common lag.

    Both directions use the effective sample starting at index `lag`, so the
    restricted and unrestricted regressions compare identical observations.
    """
    yv, xv = as_values(y), as_values(x)
    if len(yv) != len(xv):
        raise AlignmentError(f"series lengths differ ({len(yv)} vs {len(xv)}); align them first")
    dy, dx = getattr(y, "dates", None), getattr(x, "dates", None)
    if dy is not None and dx is not None and tuple(dy) != tuple(dx):
        raise AlignmentError("series carry different dates; align them first")
    if lag < 1:
        raise ValueError(f"lag must be >= 1, got {lag}")
    n = len(yv)
    if not n > 3 * lag + 2:
        raise SampleSizeError(f"Granger test at lag {lag} needs more than {3 * lag + 2} "
                              f"observations, got {n}")
    f_xy, p_xy, t_eff = _direction(yv, xv, lag)
    f_yx, p_yx, _ = _direction(xv, yv, lag)
    return GrangerResult(lag, float(f_xy), float(p_xy), float(f_yx), float(p_yx), t_eff)


def granger_scan(y, x, max_lag: int, parallel: bool = False,
                 max_workers: int = 4) -> List[GrangerResult]:
    """granger_test for lags 1..max_lag; rows are independent and may run in threads"""
    if max_lag < 1:
        raise ValueError(f"max_lag must be >= 1, got {max_lag}")
    n = len(as_values(y))
    if not n > 3 * max_lag + 2:
        raise SampleSizeError(f"Granger scan to lag {max_lag} needs more than "
                              f"{3 * max_lag + 2} observations, got {n}")
    lags = range(1, max_lag + 1)
    if parallel:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(lambda k: granger_test(y, x, k), lags))
    else:
        rows = [granger_test(y, x, k) for k in lags]
    log.info("Granger scan to lag %d on %d observations done", max_lag, n)
    return rows


def granger_table_markdown(rows: Sequence[dict], x_name: str = "X", y_name: str = "Y") -> str:
    """Lag / F / p table in both directions from serialized rows"""
    lines = [
        f"| Lag | F ({x_name} -> {y_name}) | p | F ({y_name} -> {x_name}) | p |",
        "|---:|---:|---:|---:|---:|",
    ]
    for r in rows:
        lines.append(f"| {r['lag']} | {fmt_stat(r['f_x_to_y'])} | {fmt_p(r['p_x_to_y'])} | "
                     f"{fmt_stat(r['f_y_to_x'])} | {fmt_p(r['p_y_to_x'])} |")
    return "\n".join(lines)
