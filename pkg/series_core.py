from __future__ import annotations
import io
import logging
from dataclasses import dataclass, replace
from datetime import date
from pathlib import Path
from typing import Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd

from utils import AlignmentError, DataError, PriceParseError, SampleSizeError

log = logging.getLogger("voltlab.series")

DATE_FORMATS = ("%Y-%m-%d", "%d/%m/%Y")
INCLUSIVE_OPTIONS = ("both", "left", "right", "neither")


def detect_date_format(text: str) -> str:
    text = text.strip()
    for fmt in DATE_FORMATS:
        try:
            pd.to_datetime(text, format=fmt)
        except (ValueError, TypeError):
            continue
        return fmt
    raise ValueError(f"unrecognised date '{text}' (expected YYYY-MM-DD or DD/MM/YYYY)")


def parse_date(text: Union[str, date]) -> date:
    if isinstance(text, date):
        return text
    return pd.to_datetime(text.strip(), format=detect_date_format(text)).date()


def _is_date(text: str) -> bool:
    try:
        detect_date_format(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True, eq=False)
class DatedSeries:
    dates: Tuple[date, ...]
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dates", tuple(self.dates))
        if len(self.dates) != len(values):
            raise DataError(f"{self.label or type(self).__name__}: {len(self.dates)} dates "
                            f"but {len(values)} values")
        index = pd.DatetimeIndex(list(self.dates))
        if not (index.is_monotonic_increasing and index.is_unique):
            bad = int(np.flatnonzero(np.diff(index.asi8) <= 0)[0]) + 1
            raise DataError(f"{self.label or type(self).__name__}: dates not strictly "
                            f"increasing at {self.dates[bad].isoformat()}")
        self._check_values(values)

    def _check_values(self, values: np.ndarray):
        if not np.all(np.isfinite(values)):
            raise DataError(f"{self.label or type(self).__name__}: non-finite values")

    def __len__(self) -> int:
        return len(self.values)

    @property
    def start(self) -> Optional[date]:
        return self.dates[0] if self.dates else None

    @property
    def end(self) -> Optional[date]:
        return self.dates[-1] if self.dates else None

    def to_pandas(self) -> pd.Series:
        return pd.Series(self.values, index=pd.DatetimeIndex(list(self.dates), name="date"),
                         name=self.label or None)

    @classmethod
    def from_pandas(cls, s: pd.Series, label: Optional[str] = None):
        return cls(tuple(s.index.date), s.to_numpy(dtype=float),
                   label if label is not None else str(s.name or ""))


@dataclass(frozen=True, eq=False)
class PriceSeries(DatedSeries):
    def _check_values(self, values: np.ndarray):
        super()._check_values(values)
        if np.any(values <= 0):
            bad = int(np.argmax(values <= 0))
            raise DataError(f"{self.label or 'prices'}: non-positive price {values[bad]} "
                            f"on {self.dates[bad].isoformat()}")


@dataclass(frozen=True, eq=False)
class LogSeries(DatedSeries):
    pass


@dataclass(frozen=True, eq=False)
class ReturnSeries(DatedSeries):
    pass


S = TypeVar("S", bound=DatedSeries)


@dataclass(frozen=True, eq=False)
class AlignedPair:
    dates: Tuple[date, ...]
    y: np.ndarray
    x: np.ndarray
    y_label: str = ""
    x_label: str = ""

    def __len__(self) -> int:
        return len(self.dates)


@dataclass
class ColumnSpec:
    date_column: Union[str, int] = "date"
    close_column: Union[str, int] = "close"
    # None: the first row is a header unless its date field parses as a date
    has_header: Optional[bool] = None
    delimiter: Optional[str] = None


def _column_index(col: Union[str, int], names: Sequence[str], header_line: int) -> int:
    if isinstance(col, int):
        return col
    if col.lower() not in names:
        raise PriceParseError(f"missing column '{col}' in header {list(names)}", header_line)
    return names.index(col.lower())


def parse_prices(raw_text: str, fmt: Optional[ColumnSpec] = None, label: str = "") -> PriceSeries:
    """Parse delimited `date,close` text into a date-sorted PriceSeries.

    The delimiter (comma or tab) is taken from the first line and the date
    format from the first data row; every row must use that same format.
    Error messages carry the 1-based line number of the offending row.
    """
    fmt = fmt or ColumnSpec()
    text = raw_text.lstrip("\ufeff")
    lines = text.splitlines()
    first_line, first = next(((i, ln) for i, ln in enumerate(lines, 1) if ln.strip()), (0, None))
    if first is None:
        raise PriceParseError("no data rows")
    sep = fmt.delimiter or ("\t" if "\t" in first else ",")

    width = max(ln.count(sep) for ln in lines) + 1
    try:
        frame = pd.read_csv(io.StringIO(text), sep=sep, header=None, names=list(range(width)),
                            dtype=str, keep_default_na=False, skip_blank_lines=False,
                            skipinitialspace=True)
    except pd.errors.ParserError as e:
        raise PriceParseError(f"malformed delimited text: {e}")
    frame = frame.fillna("").apply(lambda col: col.str.strip())
    # row i of the frame is line i + 1 of the text
    frame.index = frame.index + 1
    frame = frame[(frame != "").any(axis=1).to_numpy()]

    has_header = fmt.has_header
    if has_header is None:
        di_guess = fmt.date_column if isinstance(fmt.date_column, int) else 0
        first_fields = first.split(sep)
        has_header = not (len(first_fields) > di_guess and _is_date(first_fields[di_guess]))

    if has_header:
        names = [str(c).lower() for c in frame.loc[first_line]]
        di = _column_index(fmt.date_column, names, first_line)
        ci = _column_index(fmt.close_column, names, first_line)
        frame = frame.loc[frame.index > first_line]
    else:
        di = fmt.date_column if isinstance(fmt.date_column, int) else 0
        ci = fmt.close_column if isinstance(fmt.close_column, int) else 1
    if frame.empty:
        raise PriceParseError("no data rows")
    if frame.shape[1] <= max(di, ci):
        raise PriceParseError(f"expected at least {max(di, ci) + 1} columns, got {frame.shape[1]}",
                              int(frame.index[0]))

    date_text, close_text = frame.iloc[:, di], frame.iloc[:, ci]
    try:
        date_fmt = detect_date_format(date_text.iloc[0])
    except ValueError:
        raise PriceParseError(f"unparseable date '{date_text.iloc[0]}'", int(frame.index[0]))
    dates = pd.to_datetime(date_text, format=date_fmt, errors="coerce")
    if dates.isna().any():
        line = _first_line(dates.isna())
        raise PriceParseError(f"unparseable date '{date_text.loc[line]}' (file uses {date_fmt})",
                              line)
    closes = pd.to_numeric(close_text, errors="coerce")
    if closes.isna().any():
        line = _first_line(closes.isna())
        raise PriceParseError(f"unparseable close '{close_text.loc[line]}'", line)
    bad = ~np.isfinite(closes) | (closes <= 0)
    if bad.any():
        line = _first_line(bad)
        raise PriceParseError(f"non-positive or non-finite close {close_text.loc[line]} on "
                              f"{dates.loc[line].date().isoformat()}", line)
    dup = dates.duplicated()
    if dup.any():
        line = _first_line(dup)
        seen = _first_line(dates == dates.loc[line])
        raise PriceParseError(f"duplicate date {dates.loc[line].date().isoformat()} (first seen on "
                              f"line {seen})", line)

    series = pd.Series(closes.to_numpy(dtype=float), index=pd.DatetimeIndex(dates)).sort_index()
    return PriceSeries.from_pandas(series, label)


def _first_line(mask: pd.Series) -> int:
    return int(mask.index[mask.to_numpy(dtype=bool)][0])


def load_prices(path: Union[str, Path], fmt: Optional[ColumnSpec] = None,
                label: Optional[str] = None) -> PriceSeries:
    path = Path(path)
    text = path.read_text(encoding="utf-8-sig")
    series = parse_prices(text, fmt, label if label is not None else path.stem)
    log.info("Loaded %d prices from %s (%s .. %s)", len(series), path,
             series.start.isoformat(), series.end.isoformat())
    return series


def write_prices(series: PriceSeries, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    series.to_pandas().rename("close").to_csv(path, index_label="date", date_format="%Y-%m-%d",
                                              lineterminator="\n", encoding="utf-8")
    return path


def to_returns(p: PriceSeries) -> ReturnSeries:
    """Percent log returns, dated at the later price of each pair"""
    if len(p) < 2:
        raise SampleSizeError(f"{p.label or 'prices'}: need at least 2 prices for returns, got {len(p)}")
    closes = p.to_pandas()
    r = 100.0 * np.log(closes).diff().dropna()
    return ReturnSeries.from_pandas(r, p.label)


def to_log(p: PriceSeries) -> LogSeries:
    return LogSeries(p.dates, np.log(p.values), p.label)


def difference(s: S, order: int = 1) -> S:
    if order < 1:
        raise ValueError(f"difference order must be positive, got {order}")
    if len(s) <= order:
        raise SampleSizeError(f"{s.label or 'series'}: length {len(s)} too short for "
                              f"order-{order} differences")
    return type(s)(s.dates[order:], np.diff(s.values, n=order), s.label)


def slice_by_date(s: S, start: Union[str, date], end: Union[str, date],
                  inclusive: str = "both") -> S:
    start, end = parse_date(start), parse_date(end)
    if start > end:
        raise ValueError(f"window start {start} is after end {end}")
    if inclusive not in INCLUSIVE_OPTIONS:
        raise ValueError(f"inclusive must be one of {INCLUSIVE_OPTIONS}")
    index = pd.DatetimeIndex(list(s.dates))
    mask = index.to_series().between(pd.Timestamp(start), pd.Timestamp(end), inclusive=inclusive)
    keep = np.flatnonzero(mask.to_numpy())
    return replace(s, dates=tuple(s.dates[i] for i in keep), values=s.values[keep])


def align(a: DatedSeries, b: DatedSeries) -> AlignedPair:
    """Inner join of two series on their dates"""
    ya, xb = a.to_pandas().align(b.to_pandas(), join="inner")
    if ya.empty:
        raise AlignmentError(f"'{a.label}' and '{b.label}' share no dates")
    dropped = len(a) + len(b) - 2 * len(ya)
    if dropped:
        log.debug("align dropped %d unmatched rows (%s vs %s)", dropped, a.label, b.label)
    return AlignedPair(tuple(ya.index.date), ya.to_numpy(dtype=float), xb.to_numpy(dtype=float),
                       a.label, b.label)


def align_many(series: Sequence[DatedSeries]) -> Tuple[Tuple[date, ...], np.ndarray]:
    """Intersect several series on their dates; returns (dates, T x k matrix)"""
    if not series:
        raise AlignmentError("no series to align")
    frame = pd.concat([s.to_pandas() for s in series], axis=1, join="inner",
                      keys=range(len(series))).sort_index()
    if frame.empty:
        raise AlignmentError("series share no dates")
    return tuple(frame.index.date), frame.to_numpy(dtype=float)


def business_days(start: date, n: int) -> Tuple[date, ...]:
    """n consecutive weekdays starting at (or after) start"""
    return tuple(pd.bdate_range(start=pd.Timestamp(start), periods=n).date)


def previous_business_day(d: date) -> date:
    return (pd.Timestamp(d) - pd.offsets.BDay(1)).date()
