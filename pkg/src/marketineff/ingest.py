"""Load daily closing-price CSVs, align them and build return series.

Standard deviations use the population convention (divide by N) throughout
the package: here for standardized returns, in :mod:`marketineff.pca` for the
windowed correlation matrix and in :mod:`marketineff.strategy` for the
performance moments.
"""

from __future__ import annotations

import configparser
import csv
import datetime as dt
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AlignmentError,
    DataError,
    DegenerateSeriesError,
    InsufficientDataError,
    IntegrityError,
    ParseError,
)

logger = logging.getLogger(__name__)

INTERSECTION = "intersection"
FORWARD_FILL = "forward_fill"
FILL_POLICIES = (INTERSECTION, FORWARD_FILL)


def _frozen(a, dtype=None) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class CsvSchema:
    date_column: str = "date"
    close_column: str = "close"
    date_format: str = "%Y-%m-%d"


@dataclass(frozen=True)
class PriceSeries:
    instrument_id: str
    dates: np.ndarray
    closes: np.ndarray

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        closes = _frozen(self.closes, float)
        if dates.shape != closes.shape or dates.ndim != 1:
            raise IntegrityError(f"{self.instrument_id}: dates and closes differ in length")
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise IntegrityError(f"{self.instrument_id}: dates not strictly increasing")
        if np.any(~(closes > 0)):
            raise IntegrityError(f"{self.instrument_id}: closes must be strictly positive")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "closes", closes)

    def __len__(self):
        return self.closes.size

    def between(self, start=None, end=None) -> "PriceSeries":
        mask = _date_mask(self.dates, start, end)
        return PriceSeries(self.instrument_id, self.dates[mask], self.closes[mask])

    def scaled(self, factor: float) -> "PriceSeries":
        return PriceSeries(self.instrument_id, self.dates, self.closes * factor)


@dataclass(frozen=True)
class AlignedPanel:
    """Closing values of K named series on one common trading calendar.

    ``values`` has shape (number of dates, K); column ``k`` belongs to
    ``names[k]``.
    """

    dates: np.ndarray
    names: tuple
    values: np.ndarray
    fill_policy: str = INTERSECTION

    def __post_init__(self):
        dates = _frozen(self.dates, "datetime64[D]")
        values = _frozen(self.values, float)
        names = tuple(self.names)
        if values.ndim != 2 or values.shape != (dates.size, len(names)):
            raise IntegrityError("panel values must have shape (len(dates), len(names))")
        if not names:
            raise IntegrityError("panel needs at least one column")
        if len(set(names)) != len(names):
            raise IntegrityError("duplicate column names in panel")
        if dates.size > 1 and np.any(np.diff(dates) <= np.timedelta64(0, "D")):
            raise IntegrityError("panel dates not strictly increasing")
        if np.isnan(values).any():
            raise IntegrityError("panel has missing values after alignment")
        if self.fill_policy not in FILL_POLICIES:
            raise ValueError(f"unknown fill policy {self.fill_policy!r}")
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)

    def __len__(self):
        return self.dates.size

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}; have {list(self.names)}") from None

    def column(self, name: str) -> PriceSeries:
        return PriceSeries(name, self.dates, self.values[:, self.index(name)])

    def between(self, start=None, end=None) -> "AlignedPanel":
        mask = _date_mask(self.dates, start, end)
        return AlignedPanel(self.dates[mask], self.names, self.values[mask], self.fill_policy)

    def select(self, names: Sequence[str]) -> "AlignedPanel":
        idx = [self.index(n) for n in names]
        return AlignedPanel(self.dates, tuple(names), self.values[:, idx], self.fill_policy)


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray
    dates: np.ndarray = None
    instrument_id: str = ""

    def __post_init__(self):
        values = _frozen(self.values, float)
        if values.ndim != 1:
            raise IntegrityError("returns must be one-dimensional")
        object.__setattr__(self, "values", values)
        if self.dates is not None:
            dates = _frozen(self.dates, "datetime64[D]")
            if dates.shape != values.shape:
                raise IntegrityError("return dates and values differ in length")
            object.__setattr__(self, "dates", dates)

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class ReducedSeries:
    """Standardized returns together with the moments used to produce them."""

    values: np.ndarray
    mean: float
    sigma: float
    dates: np.ndarray = None
    instrument_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, float))
        if self.dates is not None:
            object.__setattr__(self, "dates", _frozen(self.dates, "datetime64[D]"))
        if not self.sigma > 0:
            raise DegenerateSeriesError("sigma must be positive", self.instrument_id)

    def __len__(self):
        return self.values.size


@dataclass
class Manifest:
    """Instrument files plus the name of the target instrument."""

    series: dict
    target: str
    schema: CsvSchema = field(default_factory=CsvSchema)
    fill_policy: str = INTERSECTION

    def load_panel(self, start=None, end=None, names: Iterable[str] | None = None) -> AlignedPanel:
        names = list(self.series) if names is None else list(names)
        loaded = [load_csv(self.series[n], self.schema, instrument_id=n) for n in names]
        panel = align(loaded, self.fill_policy)
        return panel.between(start, end)


def _date_mask(dates, start, end):
    mask = np.ones(dates.shape, dtype=bool)
    if start is not None:
        mask &= dates >= np.datetime64(start, "D")
    if end is not None:
        mask &= dates <= np.datetime64(end, "D")
    return mask


def _parse_close(text: str, row: int) -> float | None:
    text = text.strip()
    if text == "" or text.lower() in ("nan", "na", "null"):
        return None
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"cannot parse close value {text!r}", row) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite close value {text!r}", row)
    return value


def load_csv(path, schema: CsvSchema | None = None, instrument_id: str | None = None) -> PriceSeries:
    """Read one instrument's closing prices from a CSV file.

    Rows are sorted by date. Blank close cells are gaps and the date is
    dropped; duplicate dates and non-positive closes are rejected. ``row``
    in parse errors counts data rows from 1 (the header is row 0).
    """
    schema = schema or CsvSchema()
    path = Path(path)
    if instrument_id is None:
        instrument_id = path.stem
    if not path.exists():
        raise DataError(f"no such file: {path}")

    dates, closes = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ParseError(f"{path}: empty file, header row required")
        for col in (schema.date_column, schema.close_column):
            if col not in reader.fieldnames:
                raise ParseError(f"{path}: missing column {col!r} (have {reader.fieldnames})")
        for row_idx, row in enumerate(reader, start=1):
            raw_date = (row[schema.date_column] or "").strip()
            try:
                day = dt.datetime.strptime(raw_date, schema.date_format).date()
            except ValueError:
                raise ParseError(f"{path}: cannot parse date {raw_date!r}", row_idx) from None
            close = _parse_close(row[schema.close_column] or "", row_idx)
            if close is None:
                continue
            if close <= 0:
                raise IntegrityError(f"{path}: row {row_idx}: non-positive close {close}")
            dates.append(day)
            closes.append(close)

    d = np.array(dates, dtype="datetime64[D]")
    c = np.array(closes, dtype=float)
    order = np.argsort(d, kind="stable")
    d, c = d[order], c[order]
    if d.size > 1:
        dup = np.flatnonzero(np.diff(d) == np.timedelta64(0, "D"))
        if dup.size:
            raise IntegrityError(f"{path}: duplicate date {d[dup[0]]}")
    return PriceSeries(instrument_id, d, c)


def write_csv(series: PriceSeries, path, schema: CsvSchema | None = None) -> None:
    schema = schema or CsvSchema()
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema.date_column, schema.close_column])
        for d, c in zip(series.dates, series.closes):
            day = d.astype(dt.date)
            w.writerow([day.strftime(schema.date_format), repr(float(c))])


def load_manifest(path) -> Manifest:
    """Parse an INI-style panel manifest.

    ::

        [panel]
        target = IBOV_FUT
        fill_policy = intersection

        [series]
        IBOV_FUT = ibov_fut.csv
        SP500 = sp500.csv

        [csv]            ; optional
        date_column = date
        close_column = close
        date_format = %Y-%m-%d

    Relative file paths resolve against the manifest's directory.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such manifest: {path}")
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # instrument ids are case-sensitive
    cp.read(path, encoding="utf-8")
    if not cp.has_section("series") or not cp["series"]:
        raise DataError(f"{path}: manifest needs a non-empty [series] section")
    series = {}
    for name, file in cp["series"].items():
        p = Path(file)
        series[name] = p if p.is_absolute() else path.parent / p
    target = cp.get("panel", "target", fallback=next(iter(series)))
    if target not in series:
        raise DataError(f"{path}: target {target!r} is not listed under [series]")
    fill_policy = cp.get("panel", "fill_policy", fallback=INTERSECTION)
    if fill_policy not in FILL_POLICIES:
        raise DataError(f"{path}: unknown fill_policy {fill_policy!r}")
    schema = CsvSchema()
    if cp.has_section("csv"):
        s = cp["csv"]
        schema = CsvSchema(
            s.get("date_column", schema.date_column),
            s.get("close_column", schema.close_column),
            s.get("date_format", schema.date_format),
        )
    return Manifest(series, target, schema, fill_policy)


def align(series: Sequence[PriceSeries], policy: str = INTERSECTION) -> AlignedPanel:
    """Put several price series on a common calendar.

    ``intersection`` keeps dates present in every series. ``forward_fill``
    keeps the union of dates from the latest first date onwards and carries
    each series' last known close forward.
    """
    if not series:
        raise AlignmentError("align needs at least one series")
    if policy not in FILL_POLICIES:
        raise ValueError(f"unknown fill policy {policy!r}")
    names = [s.instrument_id for s in series]

    if policy == INTERSECTION:
        common = series[0].dates
        for s in series[1:]:
            common = np.intersect1d(common, s.dates, assume_unique=True)
        if common.size == 0:
            raise AlignmentError(f"no common trading dates among {names}")
        cols = [s.closes[np.searchsorted(s.dates, common)] for s in series]
        return AlignedPanel(common, names, np.column_stack(cols), policy)

    if any(len(s) == 0 for s in series):
        raise AlignmentError("cannot forward-fill an empty series")
    start = max(s.dates[0] for s in series)
    union = np.unique(np.concatenate([s.dates for s in series]))
    union = union[union >= start]
    cols = []
    for s in series:
        # index of the last observation on or before each date
        pos = np.searchsorted(s.dates, union, side="right") - 1
        cols.append(s.closes[pos])
    return AlignedPanel(union, names, np.column_stack(cols), policy)


def log_returns(prices: PriceSeries) -> ReturnSeries:
    if len(prices) < 2:
        raise InsufficientDataError(f"{prices.instrument_id}: need at least 2 prices for a return")
    values = np.diff(np.log(prices.closes))
    return ReturnSeries(values, prices.dates[1:], prices.instrument_id)


def reduce(returns) -> ReducedSeries:
    """Standardize returns to zero mean and unit (population) deviation."""
    if isinstance(returns, ReturnSeries):
        y, dates, ident = returns.values, returns.dates, returns.instrument_id
    else:
        y, dates, ident = np.asarray(returns, dtype=float), None, ""
    if y.size == 0:
        raise InsufficientDataError("cannot reduce an empty series")
    mean = float(np.mean(y))
    centered = y - mean
    sigma = float(np.sqrt(np.mean(centered * centered)))
    scale = float(np.max(np.abs(y)))
    if sigma == 0.0 or sigma <= 1e-13 * scale:
        raise DegenerateSeriesError(f"series {ident or '<unnamed>'} has zero variance", ident)
    return ReducedSeries(centered / sigma, mean, sigma, dates, ident)
