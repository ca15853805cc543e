from __future__ import annotations
import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import linalg, optimize, special

from utils import (
    NonFiniteObjectiveError, NotPositiveDefiniteError, RankDeficientError, SampleSizeError,
    json_floats,
)

log = logging.getLogger("voltlab.numerics")

Objective = Callable[[np.ndarray], float]

RANK_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class OlsFit:
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    residuals: np.ndarray
    rss: float
    r_squared: float
    n_obs: int
    n_params: int
    cov: np.ndarray
    names: tuple = ()

    @property
    def df_resid(self) -> int:
        return self.n_obs - self.n_params

    @property
    def sigma2(self) -> float:
        return self.rss / self.df_resid

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.names.index(name)])

    def index(self, name: str) -> int:
        return self.names.index(name)

    def p_values(self) -> np.ndarray:
        """Two-sided p-values from Student t with df_resid degrees of freedom"""
        t = np.abs(self.t_stats)
        return np.array([2.0 * dist_sf("t", v, self.df_resid) if np.isfinite(v) else math.nan
                         for v in t])

    def to_dict(self) -> dict:
        return {
            "names": list(self.names),
            "coefficients": json_floats(self.coefficients),
            "std_errors": json_floats(self.std_errors),
            "t_stats": json_floats(self.t_stats),
            "p_values": json_floats(self.p_values()),
            "rss": float(self.rss),
            "r_squared": float(self.r_squared),
            "n_obs": self.n_obs,
            "n_params": self.n_params,
        }


def _has_constant(design: np.ndarray) -> bool:
    return bool(np.any(np.all(design == design[:1, :], axis=0) & (design[0, :] != 0)))


def ols(design: np.ndarray, response: np.ndarray, names: Optional[Sequence[str]] = None) -> OlsFit:
    """Least squares via QR with an explicit rank check.

    A column is reported dependent when adding it drops the singular-value
    ratio of the leading columns below RANK_TOL.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float).ravel()
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    if len(y) != n:
        raise ValueError(f"design has {n} rows but response has {len(y)}")
    if n <= k:
        raise SampleSizeError(f"need more observations ({n}) than regressors ({k})")

    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= RANK_TOL * sv[0]:
        for j in range(k):
            s = np.linalg.svd(X[:, :j + 1], compute_uv=False)
            if s[-1] <= RANK_TOL * s[0]:
                raise RankDeficientError(names[j])
        raise RankDeficientError(names[-1])

    Q, R = np.linalg.qr(X)
    beta = linalg.solve_triangular(R, Q.T @ y)
    resid = y - X @ beta
    rss = float(resid @ resid)
    R_inv = linalg.solve_triangular(R, np.eye(k))
    xtx_inv = R_inv @ R_inv.T
    sigma2 = rss / (n - k)
    cov = sigma2 * xtx_inv
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / np.where(se > 0, se, 1.0), math.nan)

    centred = y - y.mean() if _has_constant(X) else y
    tss = float(centred @ centred)
    if tss > 0:
        r2 = 1.0 - rss / tss
    else:
        r2 = 1.0 if rss <= 1e-30 else 0.0
    return OlsFit(beta, se, t, resid, rss, r2, n, k, cov, names)


@dataclass(frozen=True, eq=False)
class Optimum:
    point: np.ndarray
    value: float
    converged: bool
    iterations: int
    gradient_norm: float
    message: str = ""


def _fd_steps(x: np.ndarray, h: Optional[float]) -> np.ndarray:
    if h is not None:
        return np.full(len(x), float(h))
    return np.maximum(1e-5, 1e-7 * np.abs(x))


def _checked(objective: Objective, x: np.ndarray) -> float:
    v = float(objective(x))
    if not math.isfinite(v):
        raise NonFiniteObjectiveError(x, v)
    return v


def fd_gradient(objective: Objective, x: Sequence[float], h: Optional[float] = None) -> np.ndarray:
    """Central-difference gradient, step max(1e-5, 1e-7|x_i|) unless h is given"""
    x = np.asarray(x, dtype=float)
    steps = _fd_steps(x, h)
    g = np.empty(len(x))
    for i, hi in enumerate(steps):
        e = np.zeros(len(x))
        e[i] = hi
        g[i] = (_checked(objective, x + e) - _checked(objective, x - e)) / (2.0 * hi)
    return g


def fd_hessian(objective: Objective, x: Sequence[float], h: Optional[float] = None) -> np.ndarray:
    """Central-difference Hessian, symmetric by construction.

    The default step is larger than the gradient step (eps**0.25 scale):
    second differences lose twice the digits to rounding.
    """
    x = np.asarray(x, dtype=float)
    k = len(x)
    steps = np.full(k, float(h)) if h is not None else 1e-4 * np.maximum(np.abs(x), 0.1)
    f0 = _checked(objective, x)
    H = np.empty((k, k))
    for i in range(k):
        ei = np.zeros(k)
        ei[i] = steps[i]
        H[i, i] = (_checked(objective, x + ei) - 2.0 * f0 + _checked(objective, x - ei)) / steps[i] ** 2
        for j in range(i + 1, k):
            ej = np.zeros(k)
            ej[j] = steps[j]
            v = (_checked(objective, x + ei + ej) - _checked(objective, x + ei - ej)
                 - _checked(objective, x - ei + ej) + _checked(objective, x - ei - ej))
            H[i, j] = H[j, i] = v / (4.0 * steps[i] * steps[j])
    return H


class _Tracked:
    """Objective wrapper: remembers the best finite point, rejects NaN/-inf.

    +inf is the rejection sentinel (infeasible point) and is passed through.
    """

    def __init__(self, objective: Objective):
        self.objective = objective
        self.best_x: Optional[np.ndarray] = None
        self.best_f = math.inf

    def __call__(self, x: np.ndarray) -> float:
        v = float(self.objective(x))
        if math.isnan(v) or v == -math.inf:
            raise NonFiniteObjectiveError(x, v)
        if v < self.best_f:
            self.best_f, self.best_x = v, np.array(x, dtype=float)
        return v

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return fd_gradient(self, x)


def _is_rejection(err: NonFiniteObjectiveError) -> bool:
    return err.value == math.inf


def minimize(objective: Objective, x0: Sequence[float], tol: float = 1e-6,
             max_iter: int = 500) -> Optimum:
    """Quasi-Newton (BFGS) on finite-difference gradients.

    When the line search gives up, or the gradient hits an infeasible (+inf)
    neighbourhood, a Nelder-Mead simplex restarts from the best point seen and
    BFGS is retried once from the simplex result.
    """
    x0 = np.asarray(x0, dtype=float)
    _checked(objective, x0)
    f = _Tracked(objective)
    iterations = 0
    message = ""

    def bfgs(start: np.ndarray):
        nonlocal iterations, message
        try:
            res = optimize.minimize(f, start, jac=f.gradient, method="BFGS",
                                    options={"gtol": tol, "maxiter": max_iter, "norm": np.inf})
            iterations += int(res.nit)
            message = str(res.message)
            return res.success
        except NonFiniteObjectiveError as e:
            if not _is_rejection(e):
                raise
            message = "gradient evaluation hit an infeasible point"
            return False

    ok = bfgs(x0)
    if not ok and iterations < max_iter:
        log.debug("BFGS stopped (%s); restarting with Nelder-Mead", message)
        start = f.best_x if f.best_x is not None else x0
        res = optimize.minimize(f, start, method="Nelder-Mead",
                                options={"maxiter": 200 * len(x0), "xatol": 1e-10,
                                         "fatol": 1e-12, "adaptive": len(x0) > 2})
        iterations += int(res.nit)
        if iterations < max_iter:
            bfgs(f.best_x)

    point = f.best_x if f.best_x is not None else x0
    value = f.best_f if f.best_x is not None else _checked(objective, x0)
    try:
        gnorm = float(np.max(np.abs(fd_gradient(objective, point)))) if len(point) else 0.0
    except NonFiniteObjectiveError:
        gnorm = math.inf
    converged = gnorm <= tol
    if not converged:
        log.debug("minimize: not converged after %d iterations, |g|=%.3g (%s)",
                  iterations, gnorm, message)
    return Optimum(point, float(value), converged, iterations, gnorm, message)


@dataclass(frozen=True, eq=False)
class GenEigen:
    values: np.ndarray
    vectors: np.ndarray


def gen_eigen_sym(a: np.ndarray, b: np.ndarray) -> GenEigen:
    """Solve a v = lambda b v for symmetric a and positive-definite b; descending order"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"need square matrices of equal shape, got {a.shape} and {b.shape}")
    a = 0.5 * (a + a.T)
    b = 0.5 * (b + b.T)
    try:
        np.linalg.cholesky(b)
    except np.linalg.LinAlgError:
        raise NotPositiveDefiniteError("right-hand matrix is not positive definite")
    values, vectors = linalg.eigh(a, b)
    order = np.argsort(values)[::-1]
    return GenEigen(values[order], vectors[:, order])


def _check_df(*dfs: float):
    if not dfs or any(not (d > 0 and math.isfinite(d)) for d in dfs):
        raise ValueError(f"degrees of freedom must be positive, got {dfs}")


def dist_cdf(kind: str, x: float, *dfs: float) -> float:
    """CDF of F(d1, d2), chi2(df), t(df) or the standard normal.

    F and t use the regularized incomplete beta function, chi2 the
    regularized lower incomplete gamma.
    """
    kind = kind.lower()
    if kind == "normal":
        return float(special.ndtr(x))
    if kind == "chi2":
        _check_df(*dfs[:1])
        return 0.0 if x <= 0 else float(special.gammainc(dfs[0] / 2.0, x / 2.0))
    if kind == "f":
        _check_df(*dfs[:2])
        if len(dfs) < 2:
            raise ValueError("F distribution needs two degrees of freedom")
        d1, d2 = dfs[0], dfs[1]
        if x <= 0:
            return 0.0
        if math.isinf(x):
            return 1.0
        return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))
    if kind == "t":
        _check_df(*dfs[:1])
        return 1.0 - dist_sf("t", x, dfs[0])
    raise ValueError(f"unknown distribution '{kind}'")


def dist_sf(kind: str, x: float, *dfs: float) -> float:
    """Upper tail 1 - CDF, computed directly to keep small p-values accurate"""
    kind = kind.lower()
    if kind == "normal":
        return float(special.ndtr(-x))
    if kind == "chi2":
        _check_df(*dfs[:1])
        return 1.0 if x <= 0 else float(special.gammaincc(dfs[0] / 2.0, x / 2.0))
    if kind == "f":
        if len(dfs) < 2:
            raise ValueError("F distribution needs two degrees of freedom")
        _check_df(*dfs[:2])
        d1, d2 = dfs[0], dfs[1]
        if x <= 0:
            return 1.0
        if math.isinf(x):
            return 0.0
        return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))
    if kind == "t":
        _check_df(*dfs[:1])
        df = dfs[0]
        tail = 0.5 * float(special.betainc(df / 2.0, 0.5, df / (df + x * x)))
        return tail if x >= 0 else 1.0 - tail
    raise ValueError(f"unknown distribution '{kind}'")


def dist_ppf(kind: str, q: float, *dfs: float) -> float:
    """Quantile function (inverse CDF)"""
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must be in (0, 1), got {q}")
    kind = kind.lower()
    if kind == "normal":
        return float(special.ndtri(q))
    if kind == "chi2":
        _check_df(*dfs[:1])
        return 2.0 * float(special.gammaincinv(dfs[0] / 2.0, q))
    if kind == "f":
        if len(dfs) < 2:
            raise ValueError("F distribution needs two degrees of freedom")
        _check_df(*dfs[:2])
        d1, d2 = dfs[0], dfs[1]
        z = float(special.betaincinv(d1 / 2.0, d2 / 2.0, q))
        return d2 * z / (d1 * (1.0 - z))
    raise ValueError(f"unknown distribution '{kind}'")
