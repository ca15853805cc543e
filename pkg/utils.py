from __future__ import annotations
import math
from typing import Any, Callable, Optional, Sequence

import numpy as np


class VoltlabError(Exception):
    pass


class DataError(VoltlabError, ValueError):
    pass


class PriceParseError(DataError):
    def __init__(self, message: str, line_no: Optional[int] = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class DegenerateDataError(DataError):
    pass


class AlignmentError(DataError):
    pass


class SampleSizeError(DataError):
    pass


class NumericsError(VoltlabError, ArithmeticError):
    pass


class RankDeficientError(NumericsError):
    def __init__(self, column: str, message: Optional[str] = None):
        super().__init__(message or f"design is rank deficient: column '{column}' "
                                    f"is linearly dependent on earlier columns")
        self.column = column


class NonFiniteObjectiveError(NumericsError):
    def __init__(self, point: Sequence[float], value: float):
        self.point = np.array(point, dtype=float)
        self.value = value
        super().__init__(f"objective returned {value!r} at {self.point.tolist()}")


class NotPositiveDefiniteError(NumericsError):
    pass


class VarianceRecursionError(NumericsError):
    def __init__(self, index: int):
        super().__init__(f"conditional variance became non-finite at index {index}")
        self.index = index


class SimulationError(VoltlabError, ValueError):
    pass


def as_values(x: Any) -> np.ndarray:
    """Float array view of a series object or any 1-d sequence"""
    values = getattr(x, "values", x)
    return np.asarray(values, dtype=float)


def fmt_stat(x: Optional[float]) -> str:
    """Four decimals; undefined values print as n/a"""
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "n/a"
    return f"{x:.4f}"


def fmt_p(p: Optional[float]) -> str:
    """p-values below 1e-4 switch to scientific notation"""
    if p is None or (isinstance(p, float) and math.isnan(p)):
        return "n/a"
    if p < 1e-4:
        return f"{p:.1E}"
    return f"{p:.4f}"


def json_float(x: Any) -> Any:
    """JSON has no NaN/inf: map them to None"""
    if x is None:
        return None
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return None
    return x


def json_floats(xs: Any) -> list:
    return [json_float(v) for v in np.asarray(xs, dtype=float).ravel()]


def run_suite(title: str, tests: Sequence[Callable[[], None]]) -> int:
    """Run test functions as a script: PASS/FAIL per test, exit code 0 or 1"""
    print("\n" + title + "\n")
    failed = 0
    for test in tests:
        try:
            test()
        except AssertionError as e:
            failed += 1
            print(f"FAIL: {test.__name__} {e}")
        except Exception as e:
            failed += 1
            print(f"FAIL: {test.__name__} raised {type(e).__name__}: {e}")
        else:
            print(f"PASS: {test.__name__}")
    print("\n" + "=" * 70)
    if failed:
        print(f"SOME TESTS FAILED ({failed}/{len(tests)})")
        return 1
    print(f"ALL TESTS PASSED ({len(tests)})")
    return 0
