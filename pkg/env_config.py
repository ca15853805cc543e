from __future__ import annotations
import os
from datetime import date
from typing import Any, Dict, Tuple

from dotenv import load_dotenv

from series_core import parse_date

VALID_FORMATS = ("md", "json", "csv")
VALID_FAMILIES = ("GARCH", "TGARCH")
VALID_LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def str_to_bool(value: str) -> bool:
    return value.lower() in ('true', '1', 'yes', 'on')


def parse_window(value: str) -> Tuple[date, date]:
    """'YYYY-MM-DD:YYYY-MM-DD' (or DD/MM/YYYY on either side)"""
    start, sep, end = value.partition(":")
    if not sep:
        raise ValueError(f"window '{value}' must look like START:END")
    return parse_date(start), parse_date(end)


def parse_formats(value: str) -> Tuple[str, ...]:
    return tuple(f.strip().lower() for f in value.split(",") if f.strip())


def parse_lags(value: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in value.replace(";", ",").split(",") if v.strip())


def load_env_config() -> Dict[str, Any]:
    load_dotenv()

    def get_env(key: str, default: Any = None) -> str:
        value = os.getenv(key)
        if value is None:
            if default is not None:
                return str(default)
            raise ValueError(f"Missing: {key}")
        return value

    return {
        "output": {
            "dir": get_env("VOLTLAB_OUT", "out"),
            "formats": parse_formats(get_env("VOLTLAB_FORMATS", "md,json,csv")),
        },
        "study": {
            "eventDate": parse_date(get_env("VOLTLAB_EVENT_DATE", "2010-04-16")),
            "fullWindow": parse_window(get_env("VOLTLAB_FULL_WINDOW", "2005-04-08:2016-04-08")),
            "preWindow": parse_window(get_env("VOLTLAB_PRE_WINDOW", "2007-04-16:2010-04-16")),
            "postWindow": parse_window(get_env("VOLTLAB_POST_WINDOW", "2010-04-16:2013-04-19")),
            "cointWindow": parse_window(get_env("VOLTLAB_COINT_WINDOW", "2010-04-16:2016-04-08")),
            "spotFile": os.getenv("VOLTLAB_SPOT_FILE"),
            "futuresFile": os.getenv("VOLTLAB_FUTURES_FILE"),
        },
        "model": {
            "family": get_env("VOLTLAB_FAMILY", "GARCH").upper(),
            "p": int(get_env("VOLTLAB_P", "1")),
            "q": int(get_env("VOLTLAB_Q", "1")),
            "meanLags": parse_lags(os.getenv("VOLTLAB_MEAN_LAGS", "")),
            "constrained": str_to_bool(get_env("VOLTLAB_CONSTRAINED", "true")),
            "maxLag": int(get_env("VOLTLAB_MAX_LAG", "10")),
            "corrLags": int(get_env("VOLTLAB_CORR_LAGS", "36")),
            "archLags": int(get_env("VOLTLAB_ARCH_LAGS", "1")),
            "varLags": int(get_env("VOLTLAB_VAR_LAGS", "2")),
            "minFitObs": int(get_env("VOLTLAB_MIN_FIT_OBS", "250")),
            "seed": int(get_env("VOLTLAB_SEED", "0")),
        },
        "logging": {
            "level": get_env("VOLTLAB_LOG_LEVEL", "INFO"),
            "dir": get_env("VOLTLAB_LOG_DIR", "logs"),
        },
    }


def validate_config(config: Dict[str, Any]) -> bool:
    out = config["output"]
    study = config["study"]
    model = config["model"]

    assert out["formats"], "at least one output format is required"
    for f in out["formats"]:
        assert f in VALID_FORMATS, f"format must be one of: {', '.join(VALID_FORMATS)}"

    for name in ("fullWindow", "preWindow", "postWindow", "cointWindow"):
        start, end = study[name]
        assert start < end, f"{name} start must be before its end"
    assert study["preWindow"][1] <= study["eventDate"], "pre window must end on or before the event date"
    assert study["eventDate"] <= study["postWindow"][0], "post window must start on or after the event date"

    assert model["family"] in VALID_FAMILIES, f"family must be one of: {', '.join(VALID_FAMILIES)}"
    assert 1 <= model["p"] <= 5, "p must be 1-5"
    assert 0 <= model["q"] <= 5, "q must be 0-5"
    assert all(k >= 1 for k in model["meanLags"]), "mean lags must be >= 1"
    assert 1 <= model["maxLag"] <= 50, "maxLag must be 1-50"
    assert 2 <= model["corrLags"] <= 200, "corrLags must be 2-200"
    assert model["archLags"] >= 1, "archLags must be >= 1"
    assert 0 <= model["varLags"] <= 12, "varLags must be 0-12"
    assert model["minFitObs"] >= 100, "minFitObs must be >= 100"
    assert model["seed"] >= 0, "seed must be >= 0"

    assert config["logging"]["level"].upper() in VALID_LOG_LEVELS, \
        f"log level must be one of: {', '.join(VALID_LOG_LEVELS)}"

    return True
