from __future__ import annotations
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from causality import granger_scan, granger_table_markdown
from cointegration import adf_battery, engle_granger, fit_ecm_pruned, johansen
from descriptive import (
    correlogram_summary, histogram, ljung_box, summary, write_correlogram_csv, write_histogram_csv,
)
from numerics import ols
from series_core import (
    PriceSeries, ReturnSeries, align, load_prices, slice_by_date, to_log, to_returns,
)
from unitroot import adf_test
from utils import DataError, VoltlabError, fmt_p, fmt_stat
from volatility import (
    VolModelFit, VolModelSpec, arch_lm_test, fit, news_impact_curve, standardized_residuals,
    write_news_impact_csv, write_variance_csv,
)

log = logging.getLogger("voltlab.report")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2
WINDOWS = ("full", "pre", "post")
FIT_WINDOWS = ("pre", "post")

Window = Tuple[date, date]


class SkipBlock(Exception):
    pass


@dataclass
class StudyConfig:
    spot_file: Optional[Path]
    futures_file: Optional[Path] = None
    event_date: date = date(2010, 4, 16)
    full_window: Window = (date(2005, 4, 8), date(2016, 4, 8))
    pre_window: Window = (date(2007, 4, 16), date(2010, 4, 16))
    post_window: Window = (date(2010, 4, 16), date(2013, 4, 19))
    coint_window: Window = (date(2010, 4, 16), date(2016, 4, 8))
    family: str = "GARCH"
    p: int = 1
    q: int = 1
    mean_lags: Tuple[int, ...] = ()
    constrained: bool = True
    max_lag: int = 10
    corr_lags: int = 36
    arch_lags: int = 1
    var_lags: int = 2
    min_fit_obs: int = 250
    output_dir: Path = Path("out")
    formats: Tuple[str, ...] = ("md", "json", "csv")
    seed: int = 0
    parallel: bool = False

    def __post_init__(self):
        for name in ("full_window", "pre_window", "post_window", "coint_window"):
            start, end = getattr(self, name)
            if not start < end:
                raise ValueError(f"{name} is not well ordered: {start} .. {end}")
        if not self.pre_window[1] <= self.event_date <= self.post_window[0]:
            raise ValueError("windows must satisfy pre end <= event date <= post start")

    def window(self, name: str) -> Window:
        return getattr(self, f"{name}_window")

    def vol_spec(self, family: Optional[str] = None) -> VolModelSpec:
        return VolModelSpec(family or self.family, self.p, self.q, self.mean_lags,
                            constrained=self.constrained)

    def to_dict(self) -> dict:
        return {
            "spot_file": str(self.spot_file) if self.spot_file else None,
            "futures_file": str(self.futures_file) if self.futures_file else None,
            "event_date": self.event_date.isoformat(),
            "windows": {n: [self.window(n)[0].isoformat(), self.window(n)[1].isoformat()]
                        for n in WINDOWS + ("coint",)},
            "model": {"p": self.p, "q": self.q, "mean_lags": list(self.mean_lags),
                      "constrained": self.constrained},
            "max_lag": self.max_lag,
            "corr_lags": self.corr_lags,
            "arch_lags": self.arch_lags,
            "var_lags": self.var_lags,
            "seed": self.seed,
        }


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, NaN/inf to None, dates to ISO strings"""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) or math.isinf(v) else v
    if isinstance(obj, date):
        return obj.isoformat()
    return obj


# Source-table identifier shown with each block; exact keys win over key prefixes.
SOURCE_TABLES = {
    "describe": "Table 4.1",
    "correlogram": "Table 4.2",
    "adf.full": "Table 5.1.1",
    "adf": "Table 5.2.1",
    "arch_lm": "Table 5.2.2",
    "garch": "Table 5.2.3",
    "tgarch": "Table 5.2.4",
    "coint.adf_battery": "Table A.5.3.1",
    "coint.engle_granger": "Eq. A.5.3.1",
    "coint.johansen": "Table A.5.3.6",
    "coint.ecm": "Eq. 5.3.2",
    "granger": "Table 5.4.1",
}


def source_table(key: str) -> str:
    if key in SOURCE_TABLES:
        return SOURCE_TABLES[key]
    return SOURCE_TABLES.get(key.partition(".")[0], "")


@dataclass
class Block:
    key: str
    label: str
    status: str = "ok"
    reason: str = ""
    data: Dict[str, Any] = field(default_factory=dict)
    table: str = ""

    def __post_init__(self):
        self.table = self.table or source_table(self.key)

    def to_dict(self) -> dict:
        return {"key": self.key, "label": self.label, "table": self.table,
                "status": self.status, "reason": self.reason, "data": self.data}


@dataclass
class StudyReport:
    command: str
    config: Dict[str, Any]
    blocks: List[Block] = field(default_factory=list)

    def failed(self) -> List[str]:
        return [b.key for b in self.blocks if b.status == "failed"]

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failed() else EXIT_OK

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config,
                "blocks": [b.to_dict() for b in self.blocks], "failed_blocks": self.failed()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def run_block(key: str, label: str, fn: Callable[[], dict]) -> Block:
    """Run one block; errors are recorded on the block instead of propagating"""
    log.info("Block %s: %s", key, label)
    try:
        data = fn()
    except SkipBlock as e:
        log.warning("Block %s skipped: %s", key, e)
        return Block(key, label, "skipped", str(e))
    except (VoltlabError, ArithmeticError, ValueError) as e:
        log.warning("Block %s failed: %s", key, e)
        return Block(key, label, "failed", f"{type(e).__name__}: {e}")
    except Exception as e:
        log.error("Block %s crashed: %s", key, e, exc_info=True)
        return Block(key, label, "failed", f"{type(e).__name__}: {e}")
    return Block(key, label, "ok", "", _clean(data))


def compare_fits(pre: VolModelFit, post: VolModelFit) -> dict:
    """Post minus pre for every variance parameter both fits share, and persistence"""
    pre_p = dict(zip(pre.names, pre.params))
    post_p = dict(zip(post.names, post.params))
    shared = [n for n in post.names if n in pre_p and n.startswith(("alpha[", "gamma[", "beta["))]
    rows = [{"name": n, "pre": pre_p[n], "post": post_p[n], "delta": post_p[n] - pre_p[n]}
            for n in shared]
    rows.append({"name": "persistence", "pre": pre.persistence, "post": post.persistence,
                 "delta": post.persistence - pre.persistence})
    return {"rows": rows, "delta": {r["name"]: r["delta"] for r in rows}}


def _mean_residuals(r: np.ndarray, mean_lags: Sequence[int]) -> np.ndarray:
    if not mean_lags:
        return r - r.mean()
    L = max(mean_lags)
    X = np.column_stack([np.ones(len(r) - L)] + [r[L - k:len(r) - k] for k in mean_lags])
    return ols(X, r[L:], ["const"] + [f"ar{k}" for k in mean_lags]).residuals


class StudyRunner:
    """Loads the study data once and builds report blocks on demand"""

    def __init__(self, config: StudyConfig):
        self.config = config
        self.spot: Optional[PriceSeries] = None
        self.futures: Optional[PriceSeries] = None
        self.returns: Dict[str, ReturnSeries] = {}
        self.csv_dir: Optional[Path] = config.output_dir if "csv" in config.formats else None

    def load_spot(self) -> None:
        if self.config.spot_file is None:
            raise DataError("a spot price file is required (--spot)")
        self.spot = load_prices(self.config.spot_file, label="spot")
        all_returns = to_returns(self.spot)
        for name in WINDOWS:
            self.returns[name] = slice_by_date(all_returns, *self.config.window(name))
            log.info("%s window %s..%s: %d returns", name, *self.config.window(name),
                     len(self.returns[name]))

    def load_futures(self) -> None:
        if self.config.futures_file is None:
            raise DataError("a futures price file is required (--futures)")
        self.futures = load_prices(self.config.futures_file, label="futures")

    def _window_returns(self, name: str, minimum: int = 2) -> ReturnSeries:
        r = self.returns[name]
        if len(r) < minimum:
            raise SkipBlock(f"{name} window has {len(r)} returns (need at least {minimum})")
        return r

    def _csv(self, name: str) -> Optional[Path]:
        return self.csv_dir / name if self.csv_dir is not None else None

    def describe_blocks(self) -> List[Block]:
        blocks = []
        for name in WINDOWS:
            blocks.append(run_block(f"describe.{name}",
                                    f"Descriptive statistics of daily returns ({name} window)",
                                    lambda name=name: self._describe(name)))
        for name in WINDOWS:
            blocks.append(run_block(f"correlogram.{name}",
                                    f"Correlogram of daily returns with Ljung-Box Q ({name} window)",
                                    lambda name=name: self._correlogram(name)))
        return blocks

    def _describe(self, name: str) -> dict:
        r = self._window_returns(name)
        s = summary(r)
        h = histogram(r)
        path = self._csv(f"histogram_{name}.csv")
        if path is not None:
            write_histogram_csv(h, path)
        return {"window": self.config.window(name), "stats": s.to_dict(),
                "histogram": [{"lo": lo, "hi": hi, "count": c} for lo, hi, c in h.rows()]}

    def _correlogram(self, name: str) -> dict:
        r = self._window_returns(name)
        k = self.config.corr_lags
        if not np.any(r.values != r.values[0]):
            raise SkipBlock(f"{name} window returns are constant: autocorrelations undefined")
        if not k < len(r) / 4:
            raise SkipBlock(f"{name} window has {len(r)} returns, too few for {k} lags")
        rows = ljung_box(r, k)
        path = self._csv(f"correlogram_{name}.csv")
        if path is not None:
            write_correlogram_csv(rows, path)
        return {"window": self.config.window(name),
                "rows": [{"lag": x.lag, "ac": x.ac, "pac": x.pac, "q": x.q_stat, "p": x.q_pvalue}
                         for x in rows],
                "summary": correlogram_summary(rows)}

    def adf_blocks(self) -> List[Block]:
        return [run_block(f"adf.{name}", f"ADF unit-root test on daily returns ({name} window)",
                          lambda name=name: self._adf(name)) for name in WINDOWS]

    def _adf(self, name: str) -> dict:
        res = adf_test(self._window_returns(name, 25))
        return {"window": self.config.window(name), **res.to_dict(),
                "verdict": "stationary" if res.stationary_at_5pct else "unit root not rejected"}

    def arch_blocks(self) -> List[Block]:
        k = self.config.arch_lags
        return [run_block(f"arch_lm.{name}",
                          f"ARCH-LM test ({k} lag{'s' if k > 1 else ''}) on mean-equation "
                          f"residuals ({name} window)",
                          lambda name=name: self._arch(name)) for name in WINDOWS]

    def _arch(self, name: str) -> dict:
        r = self._window_returns(name, 3 * self.config.arch_lags + 2 + max(self.config.mean_lags,
                                                                             default=0))
        res = arch_lm_test(_mean_residuals(r.values, self.config.mean_lags), self.config.arch_lags)
        return {"window": self.config.window(name), **res.to_dict(),
                "verdict": "ARCH effects" if res.lm_pvalue < 0.05 else "no ARCH effects"}

    def _fit_all(self, spec: VolModelSpec, names: Sequence[str]) -> Dict[str, Any]:
        def one(name: str):
            r = self.returns[name]
            if len(r) < self.config.min_fit_obs:
                log.warning("%s window has %d returns, below the %d recommended for fitting",
                            name, len(r), self.config.min_fit_obs)
            try:
                return fit(spec, r)
            except Exception as e:
                return e

        if self.config.parallel and len(names) > 1:
            with ThreadPoolExecutor(max_workers=len(names)) as pool:
                results = list(pool.map(one, names))
        else:
            results = [one(n) for n in names]
        return dict(zip(names, results))

    def fit_blocks(self, family: str, names: Sequence[str] = FIT_WINDOWS) -> List[Block]:
        spec = self.config.vol_spec(family)
        fits = self._fit_all(spec, names)
        prefix = spec.family.lower()
        blocks = [run_block(f"{prefix}.{name}", f"{spec.label()} estimates ({name} window)",
                            lambda name=name: self._fit_data(name, fits[name]))
                  for name in names]

        def comparison() -> dict:
            pre, post = fits.get("pre"), fits.get("post")
            if not isinstance(pre, VolModelFit) or not isinstance(post, VolModelFit):
                raise SkipBlock("needs successful pre and post fits")
            return compare_fits(pre, post)

        if "pre" in names and "post" in names:
            blocks.append(run_block(f"{prefix}.compare",
                                    f"{spec.label()} estimates before and after the event",
                                    comparison))
        return blocks

    def _fit_data(self, name: str, f) -> dict:
        if isinstance(f, BaseException):
            raise f
        data = {"window": self.config.window(name), **f.to_dict()}
        if f.spec.asymmetric:
            data["alpha_plus_gamma"] = {f"alpha[{i + 1}]+gamma[{i + 1}]": a + g
                                        for i, (a, g) in enumerate(zip(f.alpha, f.gamma))}
        std = standardized_residuals(f)
        data["std_resid_arch_lm"] = arch_lm_test(std, self.config.arch_lags).to_dict()
        if self.csv_dir is not None:
            tag = f"{f.spec.family.lower()}_{name}"
            write_variance_csv(f, self._csv(f"variance_{tag}.csv"))
            write_news_impact_csv(news_impact_curve(f), self._csv(f"news_impact_{tag}.csv"))
        return data

    def _coint_pair(self):
        lo, hi = self.config.coint_window
        s = slice_by_date(to_log(self.spot), lo, hi)
        fu = slice_by_date(to_log(self.futures), lo, hi)
        pair = align(s, fu)
        if len(pair) < 50:
            raise DataError(f"only {len(pair)} common dates in the cointegration window")
        return pair

    def coint_blocks(self, pair=None) -> List[Block]:
        if pair is None:
            pair = self._coint_pair()
        lo, hi = self.config.coint_window
        state: Dict[str, Any] = {}

        def battery() -> dict:
            rows = adf_battery([slice_by_date(self.spot, lo, hi), slice_by_date(self.futures, lo, hi)])
            return {"rows": [r.to_dict() for r in rows]}

        def eg() -> dict:
            res = engle_granger(pair.y, pair.x)
            state["eg"] = res
            d = res.to_dict()
            for leg, name in zip(d["legs"], ("ln spot", "ln futures")):
                leg["series"] = name
            d.update(y="ln spot", x="ln futures", dates=[pair.dates[0], pair.dates[-1]],
                     n_obs=len(pair),
                     equation=f"ln spot = {res.intercept:.4f} + {res.slope:.4f} ln futures",
                     verdict="stationary residuals: cointegrated at 5%" if res.cointegrated_at_5pct
                     else "no cointegration at 5%")
            return d

        def joh() -> dict:
            res = johansen(np.column_stack([pair.y, pair.x]), self.config.var_lags)
            return res.to_dict()

        def ecm() -> dict:
            res = state.get("eg")
            if res is None:
                raise SkipBlock("Engle-Granger step failed")
            if not res.cointegrated_at_5pct:
                raise SkipBlock("no cointegration at 5%: error-correction model not estimated")
            if res.residual_adf.degenerate:
                raise SkipBlock("cointegrating residuals are identically zero")
            full, pruned = fit_ecm_pruned(pair.y, pair.x, res.residuals)
            out = {}
            for tag, m in (("full", full), ("pruned", pruned)):
                d = m.to_dict()
                d["adjustment_pct"] = 100.0 * abs(m.adjustment_coef)
                out[tag] = d
            return out

        return [
            run_block("coint.adf_battery", "Unit-root tests on log levels, returns and differences",
                      battery),
            run_block("coint.engle_granger", "Engle-Granger cointegrating regression", eg),
            run_block("coint.johansen", "Johansen trace and max-eigenvalue tests", joh),
            run_block("coint.ecm", "Error-correction model (full and pruned)", ecm),
        ]

    def granger_blocks(self, pair=None) -> List[Block]:
        if pair is None:
            pair = self._coint_pair()

        def scan() -> dict:
            dy, dx = np.diff(pair.y), np.diff(pair.x)
            rows = granger_scan(dy, dx, self.config.max_lag, parallel=self.config.parallel)
            return {"x": "futures", "y": "spot", "input": "first differences of log prices",
                    "n_obs": len(dy), "rows": [r.to_dict() for r in rows]}

        return [run_block("granger", "Bidirectional Granger causality scan", scan)]


def _failed_group(keys: Sequence[Tuple[str, str]], reason: str) -> List[Block]:
    return [Block(k, label, "failed", reason) for k, label in keys]


_COINT_KEYS = (("coint.adf_battery", "Unit-root tests on log levels, returns and differences"),
               ("coint.engle_granger", "Engle-Granger cointegrating regression"),
               ("coint.johansen", "Johansen trace and max-eigenvalue tests"),
               ("coint.ecm", "Error-correction model (full and pruned)"))
_GRANGER_KEYS = (("granger", "Bidirectional Granger causality scan"),)


def cmd_describe(config: StudyConfig) -> StudyReport:
    runner = StudyRunner(config)
    runner.load_spot()
    return StudyReport("describe", config.to_dict(), runner.describe_blocks())


def cmd_fit(config: StudyConfig, family: str) -> StudyReport:
    runner = StudyRunner(config)
    runner.load_spot()
    return StudyReport("fit", config.to_dict(), runner.fit_blocks(family))


def cmd_coint(config: StudyConfig) -> StudyReport:
    runner = StudyRunner(config)
    runner.load_spot()
    runner.load_futures()
    return StudyReport("coint", config.to_dict(), runner.coint_blocks(runner._coint_pair()))


def cmd_granger(config: StudyConfig) -> StudyReport:
    runner = StudyRunner(config)
    runner.load_spot()
    runner.load_futures()
    return StudyReport("granger", config.to_dict(), runner.granger_blocks(runner._coint_pair()))


def cmd_report(config: StudyConfig) -> StudyReport:
    """Full study in fixed block order; a failing block never stops the others"""
    runner = StudyRunner(config)
    runner.load_spot()
    blocks = runner.describe_blocks() + runner.adf_blocks() + runner.arch_blocks()
    blocks += runner.fit_blocks("GARCH", WINDOWS)
    blocks += runner.fit_blocks("TGARCH", FIT_WINDOWS)
    try:
        runner.load_futures()
        pair = runner._coint_pair()
    except (VoltlabError, OSError) as e:
        reason = f"{type(e).__name__}: {e}"
        log.warning("Cointegration and causality blocks unavailable: %s", reason)
        blocks += _failed_group(_COINT_KEYS, reason) + _failed_group(_GRANGER_KEYS, reason)
    else:
        blocks += runner.coint_blocks(pair) + runner.granger_blocks(pair)
    return StudyReport("report", config.to_dict(), blocks)


# Markdown rendering works from the serialized dict only.

def _params_table(d: dict) -> List[str]:
    lines = ["| Parameter | Estimate | Std. error | p-value |", "|---|---:|---:|---:|"]
    for name, v in d["params"].items():
        lines.append(f"| {name} | {fmt_stat(v)} | {fmt_stat(d['std_errors'][name])} | "
                     f"{fmt_p(d['p_values'][name])} |")
    return lines


def _render_fit(d: dict) -> List[str]:
    lines = [f"Window {d['window'][0]} .. {d['window'][1]}, {d['n_obs']} observations in the "
             f"likelihood.", ""]
    lines += _params_table(d)
    lines.append("")
    if "alpha_plus_gamma" in d:
        for name, v in d["alpha_plus_gamma"].items():
            lines.append(f"- {name}: {fmt_stat(v)}")
    lines += [
        f"- persistence ({d['persistence_rule']}): {fmt_stat(d['persistence'])}",
        f"- log-likelihood: {fmt_stat(d['log_likelihood'])}, AIC {fmt_stat(d['aic'])}, "
        f"BIC {fmt_stat(d['bic'])}",
        f"- converged: {'yes' if d['converged'] else 'no'} ({d['iterations']} iterations, "
        f"max |gradient| {fmt_stat(d['gradient_norm'])})",
        f"- ARCH-LM on standardized residuals: LM {fmt_stat(d['std_resid_arch_lm']['lm_stat'])}, "
        f"p {fmt_p(d['std_resid_arch_lm']['lm_pvalue'])}",
    ]
    return lines


def _render_describe(d: dict) -> List[str]:
    s = d["stats"]
    lines = [f"Window {d['window'][0]} .. {d['window'][1]}", "",
             "| Statistic | Value |", "|---|---:|"]
    for key, label in (("n_obs", "Observations"), ("mean", "Mean"), ("std_dev", "Std. dev."),
                       ("min", "Minimum"), ("max", "Maximum"), ("skewness", "Skewness"),
                       ("kurtosis_raw", "Kurtosis"), ("kurtosis_excess", "Excess kurtosis"),
                       ("geo_mean_rate", "Geometric mean rate")):
        v = s[key]
        lines.append(f"| {label} | {v if isinstance(v, int) else fmt_stat(v)} |")
    if s["degenerate"]:
        lines += ["", "_Constant returns: higher moments are undefined._"]
    return lines


def _render_correlogram(d: dict) -> List[str]:
    lines = ["| Lag | AC | PAC | Q | p |", "|---:|---:|---:|---:|---:|"]
    for r in d["rows"]:
        lines.append(f"| {r['lag']} | {fmt_stat(r['ac'])} | {fmt_stat(r['pac'])} | "
                     f"{fmt_stat(r['q'])} | {fmt_p(r['p'])} |")
    s = d["summary"]
    lines += ["", f"Q({s['lags']}) = {fmt_stat(s['q_stat'])}, p = {fmt_p(s['q_pvalue'])}; "
                  f"chi-square 5% critical value with {s['chi2_df']} df = "
                  f"{fmt_stat(s['chi2_crit_5pct'])}."]
    return lines


def _render_adf(d: dict) -> List[str]:
    cv = d["critical_values"]
    return [f"- ADF statistic {fmt_stat(d['statistic'])} ({d['deterministic']}, "
            f"{d['lags_used']} lags, n = {d['n_obs']}), p = {fmt_p(d['p_value'])}",
            f"- critical values: 1% {fmt_stat(cv['1%'])}, 5% {fmt_stat(cv['5%'])}, "
            f"10% {fmt_stat(cv['10%'])}",
            f"- verdict: {d['verdict']}"]


def _render_arch(d: dict) -> List[str]:
    return [f"- F = {fmt_stat(d['f_stat'])} (p = {fmt_p(d['f_pvalue'])})",
            f"- n·R² = {fmt_stat(d['lm_stat'])} (p = {fmt_p(d['lm_pvalue'])})",
            f"- verdict: {d['verdict']}"]


def _render_compare(d: dict) -> List[str]:
    lines = ["| Parameter | Before | After | Change |", "|---|---:|---:|---:|"]
    for r in d["rows"]:
        lines.append(f"| {r['name']} | {fmt_stat(r['pre'])} | {fmt_stat(r['post'])} | "
                     f"{fmt_stat(r['delta'])} |")
    return lines


def _render_battery(d: dict) -> List[str]:
    lines = ["| Series | Transform | ADF | Lags | 5% cv | p | Verdict |",
             "|---|---|---:|---:|---:|---:|---|"]
    for r in d["rows"]:
        verdict = "stationary" if r["stationary_at_5pct"] else "unit root"
        lines.append(f"| {r['series']} | {r['transform']} | {fmt_stat(r['statistic'])} | "
                     f"{r['lags_used']} | {fmt_stat(r['critical_values']['5%'])} | "
                     f"{fmt_p(r['p_value'])} | {verdict} |")
    return lines


def _render_eg(d: dict) -> List[str]:
    adf = d["residual_adf"]
    return [f"`{d['equation']}`", "",
            f"- sample {d['dates'][0]} .. {d['dates'][1]}, {d['n_obs']} observations, "
            f"R² {fmt_stat(d['static_regression']['r_squared'])}",
            f"- residual ADF {fmt_stat(adf['statistic'])} ({adf['lags_used']} lags), "
            f"5% critical value {fmt_stat(adf['critical_values']['5%'])}",
            *[f"- level ADF on {leg['series']}: {fmt_stat(leg['statistic'])} "
              f"(p {fmt_p(leg['p_value'])}), I(1) at 5%: "
              f"{'n/a' if leg['i1_at_5pct'] is None else ('yes' if leg['i1_at_5pct'] else 'no')}"
              for leg in d.get("legs", [])],
            f"- verdict: {d['verdict']}"]


def _render_johansen(d: dict) -> List[str]:
    lines = ["| Rank <= | Eigenvalue | Trace | 5% cv | Max-eig | 5% cv |",
             "|---:|---:|---:|---:|---:|---:|"]
    for r in d["ranks"]:
        lines.append(f"| {r['rank_null']} | {fmt_stat(r['eigenvalue'])} | "
                     f"{fmt_stat(r['trace_stat'])} | {fmt_stat(r['trace_cv_5pct'])} | "
                     f"{fmt_stat(r['max_eig_stat'])} | {fmt_stat(r['max_eig_cv_5pct'])} |")
    lines += ["", d["summary"]]
    return lines


def _render_ecm(d: dict) -> List[str]:
    lines = []
    for tag, title in (("full", "I. Full model"), ("pruned", "II. Without insignificant terms")):
        m = d[tag]
        lines += [f"**{title}**", "", "| Term | Coefficient | Std. error | t | p |",
                  "|---|---:|---:|---:|---:|"]
        for term in m["included_terms"]:
            lines.append(f"| {term} | {fmt_stat(m['coefficients'][term])} | "
                         f"{fmt_stat(m['std_errors'][term])} | {fmt_stat(m['t_stats'][term])} | "
                         f"{fmt_p(m['p_values'][term])} |")
        lines += ["", f"R² {fmt_stat(m['r_squared'])}, {m['n_obs']} observations; about "
                      f"{fmt_stat(m['adjustment_pct'])}% of the previous day's disequilibrium "
                      f"is corrected.", ""]
    return lines[:-1]


def _render_granger(d: dict) -> List[str]:
    return [f"Inputs: {d['input']}, {d['n_obs']} observations (X = {d['x']}, Y = {d['y']}).", "",
            granger_table_markdown(d["rows"], "X", "Y")]


_RENDERERS = {
    "describe": _render_describe,
    "correlogram": _render_correlogram,
    "adf": _render_adf,
    "arch_lm": _render_arch,
    "garch": _render_fit,
    "tgarch": _render_fit,
    "arch": _render_fit,
    "coint.adf_battery": _render_battery,
    "coint.engle_granger": _render_eg,
    "coint.johansen": _render_johansen,
    "coint.ecm": _render_ecm,
    "granger": _render_granger,
}


def _renderer(key: str):
    if key in _RENDERERS:
        return _RENDERERS[key]
    head, _, tail = key.partition(".")
    if tail == "compare":
        return _render_compare
    return _RENDERERS[head]


def render_markdown(report: dict) -> str:
    cfg = report["config"]
    lines = [f"# voltlab {report['command']}", ""]
    if cfg.get("spot_file"):
        lines.append(f"- spot: `{cfg['spot_file']}`")
    if cfg.get("futures_file"):
        lines.append(f"- futures: `{cfg['futures_file']}`")
    lines.append(f"- event date: {cfg['event_date']}")
    for name, (lo, hi) in cfg["windows"].items():
        lines.append(f"- {name} window: {lo} .. {hi}")
    for b in report["blocks"]:
        title = f"{b['table']}: {b['label']}" if b.get("table") else b["label"]
        lines += ["", f"## {title}", ""]
        if b["status"] == "ok":
            lines += _renderer(b["key"])(b["data"])
        else:
            lines.append(f"_{b['status'].capitalize()}: {b['reason']}_")
    if report["failed_blocks"]:
        lines += ["", "## Failed blocks", ""] + [f"- {k}" for k in report["failed_blocks"]]
    return "\n".join(lines) + "\n"


def write_outputs(report: StudyReport, out_dir: Path, formats: Sequence[str]) -> List[Path]:
    """JSON is the source of truth: markdown is rendered from the parsed JSON text"""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text = report.to_json()
    written = []
    if "json" in formats:
        path = out_dir / f"{report.command}.json"
        path.write_text(text, encoding="utf-8")
        written.append(path)
    if "md" in formats:
        path = out_dir / f"{report.command}.md"
        path.write_text(render_markdown(json.loads(text)), encoding="utf-8")
        written.append(path)
    for p in written:
        log.info("Wrote %s", p)
    return written
