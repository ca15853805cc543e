from __future__ import annotations
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import signal

from numerics import dist_sf, fd_gradient, fd_hessian, minimize, ols
from series_core import ReturnSeries, business_days
from utils import (
    DataError, DegenerateDataError, NonFiniteObjectiveError, SampleSizeError, SimulationError,
    VarianceRecursionError, as_values, json_float,
)

log = logging.getLogger("voltlab.volatility")

FAMILIES = ("ARCH", "GARCH", "TGARCH")
LOG_2PI = math.log(2.0 * math.pi)

MIN_OBS = 100
WARN_OBS = 250
STATIONARITY_EDGE = 0.999
PENALTY_SCALE = 1e3
PRE_SAMPLE_INDICATOR = 0.5


@dataclass(frozen=True)
class VolModelSpec:
    family: str = "GARCH"
    p: int = 1
    q: Optional[int] = None
    mean_lags: Tuple[int, ...] = ()
    include_mean_constant: bool = True
    constrained: bool = True

    def __post_init__(self):
        family = self.family.upper()
        if family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got '{self.family}'")
        q = self.q if self.q is not None else (0 if family == "ARCH" else 1)
        if family == "ARCH" and q != 0:
            raise ValueError("ARCH models have no GARCH terms (q must be 0)")
        if self.p < 1:
            raise ValueError(f"ARCH order p must be >= 1, got {self.p}")
        if q < 0:
            raise ValueError(f"GARCH order q must be >= 0, got {q}")
        lags = tuple(sorted(set(int(k) for k in self.mean_lags)))
        if any(k < 1 for k in lags):
            raise ValueError(f"mean lags must be >= 1, got {lags}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "mean_lags", lags)

    @property
    def asymmetric(self) -> bool:
        return self.family == "TGARCH"

    @property
    def max_mean_lag(self) -> int:
        return max(self.mean_lags, default=0)

    @property
    def burn(self) -> int:
        """Leading observations excluded from the likelihood sum"""
        return max(self.max_mean_lag, self.p, self.q)

    @property
    def n_mean(self) -> int:
        return int(self.include_mean_constant) + len(self.mean_lags)

    @property
    def names(self) -> Tuple[str, ...]:
        names = ["mean_const"] if self.include_mean_constant else []
        names += [f"ar[{k}]" for k in self.mean_lags]
        names.append("alpha0")
        names += [f"alpha[{i}]" for i in range(1, self.p + 1)]
        if self.asymmetric:
            names += [f"gamma[{i}]" for i in range(1, self.p + 1)]
        names += [f"beta[{j}]" for j in range(1, self.q + 1)]
        return tuple(names)

    @property
    def n_params(self) -> int:
        return len(self.names)

    def label(self) -> str:
        mean = "+".join((["c"] if self.include_mean_constant else [])
                        + [f"ar{k}" for k in self.mean_lags]) or "zero"
        order = f"({self.p})" if self.family == "ARCH" else f"({self.p},{self.q})"
        return f"{self.family}{order} mean={mean}"


@dataclass(frozen=True, eq=False)
class VolParams:
    mean_const: float
    ar: np.ndarray
    alpha0: float
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray

    @property
    def persistence(self) -> float:
        return float(np.sum(self.alpha) + 0.5 * np.sum(self.gamma) + np.sum(self.beta))

    def to_vector(self, spec: VolModelSpec) -> np.ndarray:
        parts = [[self.mean_const]] if spec.include_mean_constant else []
        parts += [self.ar, [self.alpha0], self.alpha]
        if spec.asymmetric:
            parts.append(self.gamma)
        parts.append(self.beta)
        return np.concatenate([np.asarray(p, dtype=float) for p in parts])


def unpack(spec: VolModelSpec, params: Union[VolParams, Mapping[str, float], Sequence[float]]) -> VolParams:
    if isinstance(params, VolParams):
        return params
    if isinstance(params, Mapping):
        missing = [n for n in spec.names if n not in params and not n.startswith("mean_const")]
        if missing:
            raise ValueError(f"missing parameters {missing} for {spec.label()}")
        vec = np.array([float(params.get(n, 0.0)) for n in spec.names])
    else:
        vec = np.asarray(params, dtype=float)
    if len(vec) != spec.n_params:
        raise ValueError(f"{spec.label()} takes {spec.n_params} parameters, got {len(vec)}")
    i = 0
    const = 0.0
    if spec.include_mean_constant:
        const = float(vec[0])
        i = 1
    ar = vec[i:i + len(spec.mean_lags)]
    i += len(spec.mean_lags)
    alpha0 = float(vec[i])
    i += 1
    alpha = vec[i:i + spec.p]
    i += spec.p
    if spec.asymmetric:
        gamma = vec[i:i + spec.p]
        i += spec.p
    else:
        gamma = np.zeros(spec.p)
    beta = vec[i:i + spec.q]
    return VolParams(const, ar, alpha0, alpha, gamma, beta)


def mean_residuals(spec: VolModelSpec, params, returns) -> np.ndarray:
    """eps_t = r_t - c - sum_k ar_k r_{t-k}, for t >= max mean lag"""
    vp = unpack(spec, params)
    r = as_values(returns)
    L = spec.max_mean_lag
    n = len(r)
    eps = r[L:] - vp.mean_const
    for k, phi in zip(spec.mean_lags, vp.ar):
        eps = eps - phi * r[L - k:n - k]
    return eps


def variance_recursion(spec: VolModelSpec, params, residuals, sigma0_sq: float) -> np.ndarray:
    """sigma2_t = alpha0 + sum_i (alpha_i + gamma_i N_{t-i}) eps2_{t-i} + sum_j beta_j sigma2_{t-j}

    N is 1 for strictly negative lagged residuals. Pre-sample eps2 and
    sigma2 equal sigma0_sq; the pre-sample indicator is 1/2.
    """
    if not sigma0_sq > 0:
        raise ValueError(f"sigma0_sq must be positive, got {sigma0_sq}")
    vp = unpack(spec, params)
    e = np.asarray(residuals, dtype=float)
    n = len(e)
    e2 = e * e
    neg = (e < 0).astype(float)
    u = np.full(n, vp.alpha0)
    for i in range(1, spec.p + 1):
        k = min(i, n)
        lag_e2 = np.empty(n)
        lag_e2[:k] = sigma0_sq
        lag_e2[k:] = e2[:n - k]
        lag_neg = np.empty(n)
        lag_neg[:k] = PRE_SAMPLE_INDICATOR
        lag_neg[k:] = neg[:n - k]
        u += (vp.alpha[i - 1] + vp.gamma[i - 1] * lag_neg) * lag_e2
    if spec.q == 0:
        sigma2 = u
    else:
        a = np.concatenate(([1.0], -np.asarray(vp.beta, dtype=float)))
        zi = signal.lfiltic([1.0], a, y=np.full(spec.q, sigma0_sq))
        sigma2, _ = signal.lfilter([1.0], a, u, zi=zi)
    bad = ~np.isfinite(sigma2)
    if np.any(bad):
        raise VarianceRecursionError(int(np.argmax(bad)))
    return sigma2


def default_sigma0(returns) -> float:
    return float(np.var(as_values(returns)))


def log_likelihood(spec: VolModelSpec, params, returns, sigma0_sq: Optional[float] = None) -> float:
    """Gaussian log-likelihood; -inf when any conditional variance is not positive"""
    r = as_values(returns)
    s0 = default_sigma0(r) if sigma0_sq is None else sigma0_sq
    eps = mean_residuals(spec, params, r)
    try:
        s2 = variance_recursion(spec, params, eps, s0)
    except VarianceRecursionError:
        return -math.inf
    if np.any(s2 <= 0):
        return -math.inf
    skip = spec.burn - spec.max_mean_lag
    e, s = eps[skip:], s2[skip:]
    return float(-0.5 * (len(e) * LOG_2PI + np.sum(np.log(s)) + np.sum(e * e / s)))


def n_likelihood_terms(spec: VolModelSpec, n: int) -> int:
    return n - spec.burn


@dataclass(frozen=True, eq=False)
class VolModelFit:
    spec: VolModelSpec
    mean_params: np.ndarray
    alpha0: float
    alpha: np.ndarray
    gamma: np.ndarray
    beta: np.ndarray
    log_likelihood: float
    std_errors: np.ndarray
    p_values: np.ndarray
    variance_path: np.ndarray
    residual_path: np.ndarray
    persistence: float
    converged: bool
    iterations: int
    gradient_norm: float
    sigma0_sq: float
    n_obs: int
    dates: Tuple[date, ...] = field(default=())
    label: str = ""

    @property
    def names(self) -> Tuple[str, ...]:
        return self.spec.names

    @property
    def params(self) -> np.ndarray:
        return self.vol_params.to_vector(self.spec)

    @property
    def vol_params(self) -> VolParams:
        const = float(self.mean_params[0]) if self.spec.include_mean_constant else 0.0
        ar = self.mean_params[int(self.spec.include_mean_constant):]
        return VolParams(const, ar, self.alpha0, self.alpha, self.gamma, self.beta)

    @property
    def aic(self) -> float:
        return 2.0 * self.spec.n_params - 2.0 * self.log_likelihood

    @property
    def bic(self) -> float:
        return self.spec.n_params * math.log(self.n_obs) - 2.0 * self.log_likelihood

    def param(self, name: str) -> float:
        return float(self.params[self.names.index(name)])

    def to_dict(self) -> dict:
        return {
            "model": self.spec.label(),
            "family": self.spec.family,
            "p": self.spec.p,
            "q": self.spec.q,
            "mean_lags": list(self.spec.mean_lags),
            "constrained": self.spec.constrained,
            "params": {n: json_float(v) for n, v in zip(self.names, self.params)},
            "std_errors": {n: json_float(v) for n, v in zip(self.names, self.std_errors)},
            "p_values": {n: json_float(v) for n, v in zip(self.names, self.p_values)},
            "persistence": json_float(self.persistence),
            "persistence_rule": ("sum(alpha) + sum(beta) + 0.5*sum(gamma)" if self.spec.asymmetric
                                 else "sum(alpha) + sum(beta)"),
            "log_likelihood": json_float(self.log_likelihood),
            "aic": json_float(self.aic),
            "bic": json_float(self.bic),
            "n_obs": self.n_obs,
            "converged": self.converged,
            "iterations": self.iterations,
            "gradient_norm": json_float(self.gradient_norm),
            "sigma0_sq": json_float(self.sigma0_sq),
        }


def _softplus(x):
    return np.logaddexp(0.0, x)


def _softplus_inv(v):
    v = np.maximum(np.asarray(v, dtype=float), 1e-8)
    return v + np.log(-np.expm1(-v))


def _positive_slice(spec: VolModelSpec) -> slice:
    """Positions of alpha, gamma and beta in the parameter vector"""
    start = spec.n_mean + 1
    return slice(start, spec.n_params)


def _to_theta(spec: VolModelSpec, x: np.ndarray) -> np.ndarray:
    th = np.array(x, dtype=float)
    th[spec.n_mean] = math.log(x[spec.n_mean])
    ps = _positive_slice(spec)
    th[ps] = _softplus_inv(x[ps])
    return th


def _from_theta(spec: VolModelSpec, th: np.ndarray) -> np.ndarray:
    x = np.array(th, dtype=float)
    x[spec.n_mean] = math.exp(min(th[spec.n_mean], 700.0))
    ps = _positive_slice(spec)
    x[ps] = _softplus(th[ps])
    return x


def _penalty(spec: VolModelSpec, x: np.ndarray, n: int) -> float:
    excess = unpack(spec, x).persistence - STATIONARITY_EDGE
    return PENALTY_SCALE * n * excess * excess if excess > 0 else 0.0


def _feasible(spec: VolModelSpec, x: np.ndarray) -> bool:
    return x[spec.n_mean] > 0 and bool(np.all(x[_positive_slice(spec)] >= 0))


def _is_interior(spec: VolModelSpec, x: np.ndarray, margin: float = 1e-4) -> bool:
    vp = unpack(spec, x)
    return (vp.alpha0 > margin * 1e-2 and bool(np.all(x[_positive_slice(spec)] > margin))
            and vp.persistence < STATIONARITY_EDGE)


def _starting_values(spec: VolModelSpec, r: np.ndarray, s0: float) -> np.ndarray:
    alpha_grid = (0.05, 0.1, 0.2) if spec.q else (0.1, 0.3, 0.5)
    beta_grid = (0.6, 0.8, 0.9) if spec.q else (0.0,)
    gamma_total = 0.05 if spec.asymmetric else 0.0
    mean = [float(r.mean())] if spec.include_mean_constant else []
    mean += [0.0] * len(spec.mean_lags)
    best, best_ll = None, -math.inf
    for a in alpha_grid:
        for b in beta_grid:
            pers = a + b + 0.5 * gamma_total
            if pers >= 0.99:
                continue
            x = np.array(mean + [s0 * (1.0 - pers)] + [a / spec.p] * spec.p
                         + ([gamma_total / spec.p] * spec.p if spec.asymmetric else [])
                         + [b / max(spec.q, 1)] * spec.q)
            ll = log_likelihood(spec, x, r, s0)
            if ll > best_ll:
                best, best_ll = x, ll
    if best is None:
        raise DegenerateDataError("no admissible starting values")
    return best


def _hessian_std_errors(spec: VolModelSpec, x: np.ndarray, r: np.ndarray, s0: float) -> np.ndarray:
    """Inverse observed information (numerical Hessian of -logL)"""
    nll = lambda v: -log_likelihood(spec, v, r, s0)
    try:
        H = fd_hessian(nll, x)
        cov = np.linalg.inv(H)
    except (NonFiniteObjectiveError, np.linalg.LinAlgError) as e:
        log.warning("%s: standard errors unavailable (%s)", spec.label(), e)
        return np.full(len(x), math.nan)
    d = np.diag(cov)
    return np.where(d > 0, np.sqrt(np.abs(d)), math.nan)


def _newton_polish(objective, x: np.ndarray, tol: float, max_steps: int = 8) -> Tuple[np.ndarray, int]:
    """Newton steps on central-difference derivatives until |g| <= tol. A step
    is kept when it lowers the objective, or stays within rounding of it and
    shrinks the gradient."""
    try:
        f0, g = objective(x), fd_gradient(objective, x)
    except NonFiniteObjectiveError:
        return x, 0
    steps = 0
    while steps < max_steps and np.max(np.abs(g)) > tol:
        try:
            cand = x - np.linalg.solve(fd_hessian(objective, x), g)
            f1, g1 = objective(cand), fd_gradient(objective, cand)
        except (NonFiniteObjectiveError, np.linalg.LinAlgError):
            break
        slack = 1e-10 * max(1.0, abs(f0))
        if not (f1 <= f0 or (f1 <= f0 + slack and np.max(np.abs(g1)) < np.max(np.abs(g)))):
            break
        x, f0, g = cand, f1, g1
        steps += 1
    return x, steps


def _max_abs_gradient(objective, x: np.ndarray) -> float:
    try:
        return float(np.max(np.abs(fd_gradient(objective, x))))
    except NonFiniteObjectiveError:
        return math.inf


def fit(spec: VolModelSpec, returns, tol: float = 1e-3, max_iter: int = 500) -> VolModelFit:
    """Gaussian maximum likelihood for an (T)GARCH model with AR mean lags.

    The optimiser works on the per-observation negative log-likelihood;
    tol bounds the max-norm gradient of the summed one. Constrained fits
    optimise over exp/softplus-transformed parameters with a smooth penalty
    once persistence passes 0.999, then polish in natural coordinates
    (BFGS, then Newton) when the optimum is interior.
    """
    r = as_values(returns)
    n = len(r)
    if n < MIN_OBS:
        raise SampleSizeError(f"{spec.label()} needs at least {MIN_OBS} returns, got {n}")
    if not np.all(np.isfinite(r)):
        raise DataError("returns contain non-finite values")
    if n < WARN_OBS:
        log.warning("%s: only %d returns (below %d), estimates will be noisy",
                    spec.label(), n, WARN_OBS)
    s0 = default_sigma0(r)
    if s0 <= 0:
        raise DegenerateDataError("returns have zero variance")
    x0 = _starting_values(spec, r, s0)
    n_terms = n_likelihood_terms(spec, n)
    mean_tol = tol / n_terms

    def natural(x):
        if not spec.constrained:
            return -log_likelihood(spec, x, r, s0)
        if not _feasible(spec, x):
            return math.inf
        return -log_likelihood(spec, x, r, s0) + _penalty(spec, x, n_terms)

    if spec.constrained:
        def objective(th):
            x = _from_theta(spec, th)
            return (-log_likelihood(spec, x, r, s0) + _penalty(spec, x, n_terms)) / n_terms

        opt = minimize(objective, _to_theta(spec, x0), tol=mean_tol, max_iter=max_iter)
        iterations = opt.iterations
        x_hat = _from_theta(spec, opt.point)
        interior = _is_interior(spec, x_hat)
        if interior:
            polished = minimize(lambda x: natural(x) / n_terms, x_hat, tol=mean_tol,
                                max_iter=max_iter)
            iterations += polished.iterations
            if polished.value * n_terms <= natural(x_hat):
                x_hat = polished.point
    else:
        opt = minimize(lambda x: natural(x) / n_terms, x0, tol=mean_tol, max_iter=max_iter)
        iterations = opt.iterations
        x_hat = opt.point
        interior = True

    if interior:
        x_hat, newton_steps = _newton_polish(natural, x_hat, tol)
        iterations += newton_steps
        gnorm = _max_abs_gradient(natural, x_hat)
    else:
        # boundary optimum: stationarity holds in the transformed coordinates
        gnorm = n_terms * opt.gradient_norm
    converged = gnorm <= tol
    if not converged:
        log.warning("%s: optimizer did not converge (|g|=%.3g after %d iterations)",
                    spec.label(), gnorm, iterations)

    vp = unpack(spec, x_hat)
    eps = mean_residuals(spec, vp, r)
    s2 = variance_recursion(spec, vp, eps, s0)
    se = _hessian_std_errors(spec, x_hat, r, s0)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(x_hat / se)
    pv = np.array([2.0 * dist_sf("normal", v) if np.isfinite(v) else math.nan for v in z])
    dates = tuple(getattr(returns, "dates", ()))[spec.max_mean_lag:]
    mean_params = x_hat[:spec.n_mean]

    result = VolModelFit(
        spec=spec, mean_params=mean_params, alpha0=vp.alpha0, alpha=np.array(vp.alpha),
        gamma=np.array(vp.gamma), beta=np.array(vp.beta),
        log_likelihood=log_likelihood(spec, vp, r, s0), std_errors=se, p_values=pv,
        variance_path=s2, residual_path=eps, persistence=vp.persistence,
        converged=converged, iterations=iterations, gradient_norm=gnorm,
        sigma0_sq=s0, n_obs=n_terms, dates=dates, label=getattr(returns, "label", ""),
    )
    log.info("%s fitted on %d returns: logL=%.4f persistence=%.4f converged=%s",
             spec.label(), n, result.log_likelihood, result.persistence, result.converged)
    return result


def standardized_residuals(f: VolModelFit) -> np.ndarray:
    return f.residual_path / np.sqrt(f.variance_path)


@dataclass(frozen=True)
class ArchLmResult:
    lags: int
    f_stat: float
    f_pvalue: float
    lm_stat: float
    lm_pvalue: float
    n_obs: int

    def to_dict(self) -> dict:
        return {k: json_float(v) if isinstance(v, float) else v for k, v in self.__dict__.items()}


def arch_lm_test(residuals, lags: int = 1) -> ArchLmResult:
    """Engle's LM test: regress eps^2 on a constant and `lags` of its own lags"""
    e = as_values(residuals)
    n = len(e)
    if lags < 1:
        raise ValueError(f"lags must be >= 1, got {lags}")
    if not n > 3 * lags:
        raise SampleSizeError(f"ARCH-LM with {lags} lags needs more than {3 * lags} residuals")
    e2 = e * e
    if not np.any(e2 != e2[0]):
        raise DegenerateDataError("ARCH-LM test needs non-constant squared residuals")
    y = e2[lags:]
    X = np.column_stack([np.ones(n - lags)] + [e2[lags - i:n - i] for i in range(1, lags + 1)])
    reg = ols(X, y, ["const"] + [f"e2_lag{i}" for i in range(1, lags + 1)])
    N = reg.n_obs
    r2 = min(max(reg.r_squared, 0.0), 1.0)
    df2 = N - lags - 1
    f_stat = math.inf if r2 >= 1.0 else (r2 / lags) / ((1.0 - r2) / df2)
    lm = N * r2
    return ArchLmResult(lags, f_stat, dist_sf("f", f_stat, lags, df2), lm, dist_sf("chi2", lm, lags), N)


@dataclass(frozen=True, eq=False)
class NewsImpactCurve:
    epsilon: np.ndarray
    sigma2: np.ndarray
    sigma2_bar: float


def news_impact(spec: VolModelSpec, params, epsilon_grid, sigma2_bar: float) -> NewsImpactCurve:
    vp = unpack(spec, params)
    eps = np.asarray(epsilon_grid, dtype=float)
    base = vp.alpha0 + sigma2_bar * (np.sum(vp.alpha[1:]) + 0.5 * np.sum(vp.gamma[1:])
                                     + np.sum(vp.beta))
    sigma2 = base + (vp.alpha[0] + vp.gamma[0] * (eps < 0)) * eps * eps
    return NewsImpactCurve(eps, sigma2, sigma2_bar)


def news_impact_curve(f: VolModelFit, epsilon_grid=None) -> NewsImpactCurve:
    """sigma2 response to the lagged shock with lagged variance at its unconditional level"""
    if f.persistence < 1.0 and f.alpha0 > 0:
        sigma2_bar = f.alpha0 / (1.0 - f.persistence)
    else:
        sigma2_bar = f.sigma0_sq
    if epsilon_grid is None:
        half = 5.0 * math.sqrt(sigma2_bar)
        epsilon_grid = np.linspace(-half, half, 201)
    return news_impact(f.spec, f.vol_params, epsilon_grid, sigma2_bar)


def simulate(spec: VolModelSpec, params, T: int, burn_in: int = 500, seed: int = 0,
             start: date = date(2000, 1, 3), label: str = "simulated") -> ReturnSeries:
    """Draw T returns from the model with standard normal innovations.

    Refuses parameter sets outside the constrained region or with
    persistence >= 1 (no stationary distribution).
    """
    vp = unpack(spec, params)
    if T < 1 or burn_in < 0:
        raise ValueError("T must be positive and burn_in non-negative")
    if not vp.alpha0 > 0 or np.any(vp.alpha < 0) or np.any(vp.gamma < 0) or np.any(vp.beta < 0):
        raise SimulationError("simulation needs alpha0 > 0 and non-negative alpha, gamma, beta")
    if vp.persistence >= 1.0:
        raise SimulationError(f"persistence {vp.persistence:.4f} >= 1: no stationary distribution")
    if np.sum(np.abs(vp.ar)) >= 1.0:
        raise SimulationError("mean AR coefficients are not stationary")

    rng = np.random.default_rng(seed)
    z = rng.standard_normal(T + burn_in)
    m = spec.burn
    total = T + burn_in + m
    uncond = vp.alpha0 / (1.0 - vp.persistence)
    mu = vp.mean_const / (1.0 - float(np.sum(vp.ar)))
    e2 = [uncond] * total
    neg = [PRE_SAMPLE_INDICATOR] * total
    s2 = [uncond] * total
    r = [mu] * total
    alpha, gamma, beta = list(vp.alpha), list(vp.gamma), list(vp.beta)
    ar = list(zip(spec.mean_lags, vp.ar))
    for t in range(m, total):
        s = vp.alpha0
        for i in range(spec.p):
            s += (alpha[i] + gamma[i] * neg[t - 1 - i]) * e2[t - 1 - i]
        for j in range(spec.q):
            s += beta[j] * s2[t - 1 - j]
        s2[t] = s
        eps = math.sqrt(s) * z[t - m]
        e2[t] = eps * eps
        neg[t] = 1.0 if eps < 0 else 0.0
        mean = vp.mean_const
        for k, phi in ar:
            mean += phi * r[t - k]
        r[t] = mean + eps
    out = np.array(r[m + burn_in:])
    return ReturnSeries(business_days(start, T), out, label)


def write_variance_csv(f: VolModelFit, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dates = [d.isoformat() for d in f.dates] if f.dates else list(range(len(f.variance_path)))
    pd.DataFrame({"date": dates, "sigma2": f.variance_path}).to_csv(
        path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def write_news_impact_csv(curve: NewsImpactCurve, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"epsilon": curve.epsilon, "sigma2": curve.sigma2}).to_csv(
        path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def params_from_mapping(spec: VolModelSpec, values: Dict[str, float]) -> np.ndarray:
    """Vector from names such as alpha0, alpha[1] (alpha as shorthand for alpha[1])"""
    expanded = dict(values)
    for key in ("alpha", "gamma", "beta", "ar"):
        if key in expanded and f"{key}[1]" not in expanded:
            expanded[f"{key}[1]"] = expanded.pop(key)
    if "mean_const" not in expanded:
        expanded["mean_const"] = 0.0
    unknown = set(expanded) - set(spec.names) - {"mean_const"}
    if unknown:
        raise ValueError(f"unknown parameters {sorted(unknown)} for {spec.label()}")
    return unpack(spec, expanded).to_vector(spec)
