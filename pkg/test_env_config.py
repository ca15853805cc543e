#!/usr/bin/env python3
import os
import sys
from datetime import date

from env_config import (
    load_env_config, parse_formats, parse_lags, parse_window, str_to_bool, validate_config,
)
from utils import run_suite


def _with_env(values, fn):
    saved = {k: os.environ.get(k) for k in values}
    os.environ.update(values)
    try:
        return fn()
    finally:
        for k, v in saved.items():
            if v is None:
                os.environ.pop(k, None)
            else:
                os.environ[k] = v


def test_parsers():
    assert parse_window("2007-04-16:2010-04-16") == (date(2007, 4, 16), date(2010, 4, 16))
    assert parse_window("16/04/2007:16/04/2010") == (date(2007, 4, 16), date(2010, 4, 16))
    assert parse_formats("MD, json") == ("md", "json")
    assert parse_lags("4") == (4,)
    assert parse_lags("1;4") == (1, 4)
    assert parse_lags("") == ()
    assert str_to_bool("Yes") and not str_to_bool("off")
    try:
        parse_window("2007-04-16")
    except ValueError:
        return
    raise AssertionError("window without separator accepted")


def test_environment_overrides_defaults():
    cfg = _with_env({"VOLTLAB_MAX_LAG": "6", "VOLTLAB_MEAN_LAGS": "4",
                     "VOLTLAB_CONSTRAINED": "false", "VOLTLAB_FORMATS": "json"},
                    load_env_config)
    assert cfg["model"]["maxLag"] == 6
    assert cfg["model"]["meanLags"] == (4,)
    assert cfg["model"]["constrained"] is False
    assert cfg["output"]["formats"] == ("json",)
    assert validate_config(cfg)


def test_validation_rejects_bad_values():
    for key, value in (("VOLTLAB_FORMATS", "pdf"), ("VOLTLAB_MAX_LAG", "0"),
                       ("VOLTLAB_EVENT_DATE", "2012-01-02"), ("VOLTLAB_LOG_LEVEL", "LOUD")):
        cfg = _with_env({key: value}, load_env_config)
        try:
            validate_config(cfg)
        except AssertionError:
            continue
        raise AssertionError(f"{key}={value} accepted")


ALL_TESTS = [
    test_parsers,
    test_environment_overrides_defaults,
    test_validation_rejects_bad_values,
]


def main():
    return run_suite("VOLTLAB - CONFIGURATION TESTS", ALL_TESTS)


if __name__ == "__main__":
    sys.exit(main())
