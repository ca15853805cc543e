"""Deterministic data generators with known answers.

Every generator takes an explicit seed and builds its own
numpy Generator, so two calls with the same arguments return identical data.
"""
from __future__ import annotations
import logging
from datetime import date
from typing import Tuple

import numpy as np

from series_core import PriceSeries, ReturnSeries, business_days, previous_business_day
from utils import SimulationError
from volatility import VolModelSpec, simulate

log = logging.getLogger("voltlab.simulation")


def random_walk(T: int, seed: int = 0, sigma: float = 1.0, start: float = 0.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return start + np.cumsum(sigma * rng.standard_normal(T))


def ar1(T: int, phi: float, seed: int = 0, sigma: float = 1.0, burn_in: int = 100) -> np.ndarray:
    if abs(phi) >= 1:
        raise SimulationError(f"AR(1) coefficient {phi} is not stationary")
    rng = np.random.default_rng(seed)
    e = sigma * rng.standard_normal(T + burn_in)
    x = np.empty(T + burn_in)
    x[0] = e[0] / np.sqrt(1.0 - phi * phi)
    for t in range(1, T + burn_in):
        x[t] = phi * x[t - 1] + e[t]
    return x[burn_in:]


def cointegrated_pair(T: int, beta: float = 2.0, phi: float = 0.5, seed: int = 0,
                      intercept: float = 0.0, noise_sd: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """(y, x): x a random walk, y = intercept + beta x + AR(phi) noise"""
    x = random_walk(T, seed)
    u = ar1(T, phi, seed + 1_000_003, sigma=noise_sd)
    return intercept + beta * x + u, x


def ecm_pair(T: int, b: float = 0.8, c: float = -0.2, beta: float = 1.0, intercept: float = 0.0,
             seed: int = 0, noise_sd: float = 1.0) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(y, x, u) with dy_t = b dx_t + c u_{t-1} + e_t and u = y - intercept - beta x.

    noise_sd = 0 gives the exact linear system.
    """
    if not -2.0 < c < 0.0:
        raise SimulationError(f"adjustment {c} does not error-correct")
    rng = np.random.default_rng(seed)
    dx = rng.standard_normal(T)
    e = noise_sd * rng.standard_normal(T)
    x = np.cumsum(dx)
    y = np.empty(T)
    u = np.empty(T)
    y[0] = intercept + beta * x[0] + e[0]
    u[0] = y[0] - intercept - beta * x[0]
    for t in range(1, T):
        y[t] = y[t - 1] + b * dx[t] + c * u[t - 1] + e[t]
        u[t] = y[t] - intercept - beta * x[t]
    return y, x, u


def planted_var(T: int, lag: int = 1, x_to_y: float = 0.8, y_to_x: float = 0.0, seed: int = 0,
                burn_in: int = 200) -> Tuple[np.ndarray, np.ndarray]:
    """(y, x) with y_t = x_to_y x_{t-lag} + e_t and x_t = y_to_x y_{t-lag} + v_t"""
    if abs(x_to_y * y_to_x) >= 1:
        raise SimulationError("feedback coefficients give a non-stationary system")
    rng = np.random.default_rng(seed)
    n = T + burn_in
    e = rng.standard_normal((n, 2))
    y = np.zeros(n)
    x = np.zeros(n)
    for t in range(n):
        y[t] = e[t, 0] + (x_to_y * x[t - lag] if t >= lag else 0.0)
        x[t] = e[t, 1] + (y_to_x * y[t - lag] if t >= lag else 0.0)
    return y[burn_in:], x[burn_in:]


def prices_from_returns(r: ReturnSeries, p0: float = 100.0, label: str = "") -> PriceSeries:
    """P_t = p0 exp(sum r / 100), with p0 dated the business day before the first return"""
    if len(r) == 0:
        raise SimulationError("no returns to compound")
    logp = np.log(p0) + np.concatenate(([0.0], np.cumsum(r.values) / 100.0))
    dates = (previous_business_day(r.dates[0]),) + tuple(r.dates)
    return PriceSeries(dates, np.exp(logp), label or r.label)


def futures_from_spot(spot: PriceSeries, phi: float = 0.5, basis_sd: float = 0.002,
                      seed: int = 0, label: str = "futures") -> PriceSeries:
    """Futures whose log price is the spot log price plus a stationary AR(phi) basis"""
    u = ar1(len(spot), phi, seed, sigma=basis_sd)
    return PriceSeries(spot.dates, spot.values * np.exp(u), label)


def regime_returns(spec: VolModelSpec, params_pre, params_post, T_pre: int, T_post: int,
                   seed: int = 0, start: date = date(2000, 1, 3),
                   label: str = "simulated") -> Tuple[ReturnSeries, date]:
    """Returns drawn from one parameter set, then another; also the first post date"""
    pre = simulate(spec, params_pre, T_pre, seed=seed, start=start)
    post_start = business_days(pre.dates[-1], 2)[1]
    post = simulate(spec, params_post, T_post, seed=seed + 1, start=post_start)
    log.debug("regime_returns: %d + %d returns, switch on %s", T_pre, T_post, post_start)
    return (ReturnSeries(pre.dates + post.dates, np.concatenate([pre.values, post.values]), label),
            post_start)
