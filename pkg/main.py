from __future__ import annotations
import argparse
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, List, Optional

from env_config import load_env_config, parse_formats, parse_lags, parse_window, validate_config
from report import (
    EXIT_FATAL, StudyConfig, cmd_coint, cmd_describe, cmd_fit, cmd_granger, cmd_report,
    write_outputs,
)
from series_core import parse_date, write_prices
from simulation import futures_from_spot, prices_from_returns
from utils import VoltlabError
from volatility import VolModelSpec, params_from_mapping, simulate

COMMANDS = ("describe", "fit", "coint", "granger", "simulate", "report")


def setup_logging(log_dir: str, level: str = "INFO"):
    Path(log_dir).mkdir(parents=True, exist_ok=True)
    fmt = logging.Formatter(
        "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
    )
    root = logging.getLogger()
    root.setLevel(getattr(logging, level.upper(), logging.INFO))

    fh = RotatingFileHandler(
        os.path.join(log_dir, "voltlab.log"),
        maxBytes=5_000_000, backupCount=5, encoding="utf-8"
    )
    fh.setFormatter(fmt)
    root.addHandler(fh)

    ch = logging.StreamHandler()
    ch.setFormatter(fmt)
    root.addHandler(ch)


def parse_params(text: str) -> Dict[str, float]:
    """'alpha0=0.05,alpha=0.05,beta=0.9' -> {'alpha0': 0.05, ...}"""
    out = {}
    for item in text.split(","):
        if not item.strip():
            continue
        name, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"parameter '{item}' must look like name=value")
        out[name.strip()] = float(value)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spot", help="spot price file (date,close)")
    common.add_argument("--futures", help="futures price file (date,close)")
    common.add_argument("--event-date", help="event date, YYYY-MM-DD")
    common.add_argument("--pre", help="pre-event window START:END")
    common.add_argument("--post", help="post-event window START:END")
    common.add_argument("--full", help="full-sample window START:END")
    common.add_argument("--coint-window", help="cointegration/causality window START:END")
    common.add_argument("--family", type=str.upper, choices=("GARCH", "TGARCH"),
                        help="volatility model family")
    common.add_argument("--p", type=int, help="ARCH order")
    common.add_argument("--q", type=int, help="GARCH order")
    common.add_argument("--mean-lags", help="comma separated AR lags in the mean equation, e.g. 4")
    common.add_argument("--unconstrained", action="store_true",
                        help="drop positivity and stationarity constraints")
    common.add_argument("--max-lag", type=int, help="largest Granger lag")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out-dir", help="output directory (default $VOLTLAB_OUT)")
    common.add_argument("--format", help="comma separated output formats: md,json,csv")
    common.add_argument("--parallel", action="store_true",
                        help="run independent blocks in worker threads")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(
        prog="voltlab",
        description="Volatility, unit-root, cointegration and causality study of a spot "
                    "market before and after a futures introduction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("describe", parents=[common], help="descriptive statistics and correlograms")
    sub.add_parser("fit", parents=[common], help="pre/post GARCH or TGARCH fits")
    sub.add_parser("coint", parents=[common], help="Engle-Granger, Johansen and ECM")
    sub.add_parser("granger", parents=[common], help="bidirectional Granger causality scan")
    sub.add_parser("report", parents=[common], help="full study")
    sim = sub.add_parser("simulate", parents=[common], help="write a synthetic price file")
    sim.add_argument("--params", required=True,
                     help="model parameters, e.g. alpha0=0.05,alpha=0.05,beta=0.9")
    sim.add_argument("--T", type=int, required=True, help="number of returns")
    sim.add_argument("--burn-in", type=int, default=500)
    sim.add_argument("--out", required=True, help="spot price CSV to write")
    sim.add_argument("--futures-out", help="also write a cointegrated futures price CSV")
    return parser


def merge_config(cfg: dict, args: argparse.Namespace) -> dict:
    """Command-line flags override environment values"""
    study, model, out = cfg["study"], cfg["model"], cfg["output"]
    if args.spot:
        study["spotFile"] = args.spot
    if args.futures:
        study["futuresFile"] = args.futures
    if args.event_date:
        study["eventDate"] = parse_date(args.event_date)
    for flag, key in (("pre", "preWindow"), ("post", "postWindow"), ("full", "fullWindow"),
                      ("coint_window", "cointWindow")):
        value = getattr(args, flag)
        if value:
            study[key] = parse_window(value)
    if args.family:
        model["family"] = args.family
    for flag, key in (("p", "p"), ("q", "q"), ("max_lag", "maxLag"), ("seed", "seed")):
        value = getattr(args, flag)
        if value is not None:
            model[key] = value
    if args.mean_lags is not None:
        model["meanLags"] = parse_lags(args.mean_lags)
    if args.unconstrained:
        model["constrained"] = False
    if args.out_dir:
        out["dir"] = args.out_dir
    if args.format:
        out["formats"] = parse_formats(args.format)
    if args.log_level:
        cfg["logging"]["level"] = args.log_level
    return cfg


def study_config(cfg: dict, parallel: bool = False) -> StudyConfig:
    study, model, out = cfg["study"], cfg["model"], cfg["output"]
    return StudyConfig(
        spot_file=Path(study["spotFile"]) if study["spotFile"] else None,
        futures_file=Path(study["futuresFile"]) if study["futuresFile"] else None,
        event_date=study["eventDate"],
        full_window=study["fullWindow"],
        pre_window=study["preWindow"],
        post_window=study["postWindow"],
        coint_window=study["cointWindow"],
        family=model["family"],
        p=model["p"],
        q=model["q"],
        mean_lags=model["meanLags"],
        constrained=model["constrained"],
        max_lag=model["maxLag"],
        corr_lags=model["corrLags"],
        arch_lags=model["archLags"],
        var_lags=model["varLags"],
        min_fit_obs=model["minFitObs"],
        output_dir=Path(out["dir"]),
        formats=out["formats"],
        seed=model["seed"],
        parallel=parallel,
    )


def run_simulate(cfg: dict, args: argparse.Namespace) -> List[Path]:
    model = cfg["model"]
    family = args.family or model["family"]
    spec = VolModelSpec(family, model["p"], model["q"], model["meanLags"])
    params = params_from_mapping(spec, parse_params(args.params))
    returns = simulate(spec, params, args.T, burn_in=args.burn_in, seed=model["seed"])
    spot = prices_from_returns(returns, 100.0, "spot")
    written = [write_prices(spot, args.out)]
    if args.futures_out:
        written.append(write_prices(futures_from_spot(spot, seed=model["seed"] + 1), args.futures_out))
    return written


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = merge_config(load_env_config(), args)
        validate_config(cfg)
        config = None if args.command == "simulate" else study_config(cfg, args.parallel)
    except (AssertionError, ValueError) as e:
        print(f"ERROR: Invalid configuration: {e}")
        return EXIT_FATAL

    setup_logging(cfg["logging"]["dir"], cfg["logging"]["level"])
    log = logging.getLogger("voltlab.main")
    log.info("=" * 70)
    log.info("voltlab %s", args.command)
    log.info("=" * 70)

    try:
        if args.command == "simulate":
            for path in run_simulate(cfg, args):
                log.info("Wrote %s", path)
            return 0
        if args.command == "describe":
            report = cmd_describe(config)
        elif args.command == "fit":
            report = cmd_fit(config, config.family)
        elif args.command == "coint":
            report = cmd_coint(config)
        elif args.command == "granger":
            report = cmd_granger(config)
        else:
            report = cmd_report(config)
    except (VoltlabError, ValueError, OSError) as e:
        log.error("%s failed: %s", args.command, e)
        return EXIT_FATAL

    write_outputs(report, config.output_dir, config.formats)
    failed = report.failed()
    if failed:
        log.warning("Finished with %d failed block(s): %s", len(failed), ", ".join(failed))
    else:
        log.info("Finished: %d blocks ok", len(report.blocks))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
