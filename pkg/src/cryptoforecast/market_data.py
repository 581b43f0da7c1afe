"""Daily OHLCV series: CSV parsing, validation, date slicing, ordered splits.

Input CSVs carry a header row with the seven candle attributes
(Date, Open, High, Low, Close, Volume, MarketCap); volume and market cap
are optional so index data (cci30) parses without them. Rows may arrive
in descending date order (exchange export convention) and are re-sorted
ascending. Calendar gaps are reported as warnings, never filled.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import re
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import IO

import numpy as np

from .errors import (
    DataError,
    DuplicateDateError,
    EmptySliceError,
    InconsistentCandleError,
    ParseError,
)

log = logging.getLogger(__name__)

ATTRIBUTES = ("open", "high", "low", "close", "volume", "market_cap")
PRICE_ATTRIBUTES = ("open", "high", "low", "close")
REQUIRED_ATTRIBUTES = ("date", "open", "high", "low", "close")

DEFAULT_SCHEMA = {
    "date": "Date",
    "open": "Open",
    "high": "High",
    "low": "Low",
    "close": "Close",
    "volume": "Volume",
    "market_cap": "MarketCap",
}

# Plain decimals only: thousands separators, currency symbols, and
# underscore groupings are schema drift and must fail loudly.
_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_ISO_DATE_RE = re.compile(r"(\d{4})-(\d{1,2})-(\d{1,2})$")
_DOTTED_DATE_RE = re.compile(r"(\d{1,2})\.(\d{1,2})\.(\d{4})$")


@dataclass(frozen=True)
class OhlcvRecord:
    """One daily candle. volume/market_cap are None when absent (index data)."""

    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float | None = None
    market_cap: float | None = None

    def __post_init__(self) -> None:
        if self.low > self.high:
            raise InconsistentCandleError(
                f"{self.date.isoformat()}: low {self.low} > high {self.high}"
            )
        for name in PRICE_ATTRIBUTES:
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValueError(f"{self.date.isoformat()}: {name} must be a positive price, got {value}")
        for name in ("volume", "market_cap"):
            value = getattr(self, name)
            if value is not None and (not math.isfinite(value) or value < 0):
                raise ValueError(f"{self.date.isoformat()}: {name} must be nonnegative, got {value}")

    def value(self, attr: str) -> float | None:
        if attr not in ATTRIBUTES:
            raise ValueError(f"unknown attribute '{attr}'")
        return getattr(self, attr)


@dataclass(frozen=True)
class PriceSeries:
    """A nonempty, strictly date-ascending sequence of candles for one symbol."""

    records: tuple[OhlcvRecord, ...]
    symbol: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        if not self.records:
            raise ValueError(f"{self.symbol}: a price series cannot be empty")
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.date == prev.date:
                raise DuplicateDateError(f"{self.symbol}: duplicate date {cur.date.isoformat()}")
            if cur.date < prev.date:
                raise ValueError(f"{self.symbol}: records must be sorted ascending by date")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def first_date(self) -> date:
        return self.records[0].date

    @property
    def last_date(self) -> date:
        return self.records[-1].date

    def dates(self) -> tuple[date, ...]:
        return tuple(r.date for r in self.records)

    def available_attributes(self) -> tuple[str, ...]:
        """Attributes present on every record (cci30 lacks volume/market_cap)."""
        return tuple(
            attr for attr in ATTRIBUTES
            if all(getattr(r, attr) is not None for r in self.records)
        )

    def column(self, attr: str) -> np.ndarray:
        if attr not in ATTRIBUTES:
            raise ValueError(f"unknown attribute '{attr}'")
        values = [getattr(r, attr) for r in self.records]
        if any(v is None for v in values):
            raise ValueError(f"{self.symbol}: attribute '{attr}' is not available on every record")
        return np.asarray(values, dtype=float)

    def closes(self) -> np.ndarray:
        return self.column("close")

    def date_gaps(self) -> list[tuple[date, date]]:
        """Adjacent record pairs separated by more than one calendar day."""
        return [
            (prev.date, cur.date)
            for prev, cur in zip(self.records, self.records[1:])
            if (cur.date - prev.date) > timedelta(days=1)
        ]


def _read_text(source: str | Path | bytes | IO) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _parse_date(text: str, row: int) -> date:
    text = text.strip()
    m = _ISO_DATE_RE.match(text)
    if m:
        year, month, day = (int(g) for g in m.groups())
    else:
        m = _DOTTED_DATE_RE.match(text)
        if not m:
            raise ParseError(row, f"unparseable date '{text}'")
        day, month, year = (int(g) for g in m.groups())
    try:
        return date(year, month, day)
    except ValueError as exc:
        raise ParseError(row, f"invalid calendar date '{text}': {exc}") from None


def _parse_number(text: str, column: str, row: int, *, required: bool) -> float | None:
    text = text.strip()
    if not text:
        if required:
            raise ParseError(row, f"missing value for '{column}'")
        return None
    if not _NUMBER_RE.match(text):
        raise ParseError(row, f"non-numeric value '{text}' for '{column}'")
    return float(text)


def parse_csv(
    source: str | Path | bytes | IO,
    schema: dict[str, str] | None = None,
    *,
    symbol: str = "series",
) -> PriceSeries:
    """Parse header+rows CSV into a PriceSeries sorted ascending by date.

    ``schema`` remaps attribute names to CSV column headers (defaults in
    DEFAULT_SCHEMA); extra CSV columns are ignored. Accepted date formats:
    YYYY-MM-DD and DD.MM.YYYY.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise ValueError(f"unknown schema attribute(s): {', '.join(sorted(unknown))}")
        mapping.update(schema)

    rows = list(csv.reader(io.StringIO(_read_text(source))))
    if not rows:
        raise ParseError(1, "empty input: no header row")
    header = [cell.strip() for cell in rows[0]]
    positions: dict[str, int] = {}
    for attr, column_name in mapping.items():
        if column_name in header:
            positions[attr] = header.index(column_name)
        elif attr in REQUIRED_ATTRIBUTES:
            raise ParseError(1, f"missing required column '{column_name}' for '{attr}'")

    records = []
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if max(positions.values()) >= len(row):
            raise ParseError(line_no, f"expected at least {max(positions.values()) + 1} columns, got {len(row)}")
        day = _parse_date(row[positions["date"]], line_no)
        values: dict[str, float | None] = {}
        for attr in ATTRIBUTES:
            if attr in positions:
                values[attr] = _parse_number(
                    row[positions[attr]], mapping[attr], line_no,
                    required=attr in REQUIRED_ATTRIBUTES,
                )
            else:
                values[attr] = None
        try:
            records.append(OhlcvRecord(date=day, **values))  # type: ignore[arg-type]
        except InconsistentCandleError:
            raise
        except ValueError as exc:
            raise ParseError(line_no, str(exc)) from None

    if not records:
        raise DataError(f"{symbol}: no data rows")

    records.sort(key=lambda r: r.date)
    for prev, cur in zip(records, records[1:]):
        if cur.date == prev.date:
            raise DuplicateDateError(f"{symbol}: duplicate date {cur.date.isoformat()}")

    series = PriceSeries(records=tuple(records), symbol=symbol)
    gaps = series.date_gaps()
    if gaps:
        first = gaps[0]
        log.warning(
            "%s: %d calendar gap(s) in daily data (first: %s -> %s); gaps are kept, not filled",
            symbol, len(gaps), first[0].isoformat(), first[1].isoformat(),
        )
    return series


def to_csv(series: PriceSeries, destination: str | Path | IO | None = None) -> str:
    """Serialize with ISO dates and full-precision decimals; round-trips exactly."""

    def fmt(value: float | None) -> str:
        return "" if value is None else repr(value)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([DEFAULT_SCHEMA[a] for a in ("date",) + ATTRIBUTES])
    for r in series.records:
        writer.writerow([r.date.isoformat()] + [fmt(getattr(r, a)) for a in ATTRIBUTES])
    text = buf.getvalue()
    if destination is not None:
        if isinstance(destination, (str, Path)):
            Path(destination).write_text(text, encoding="utf-8")
        else:
            destination.write(text)
    return text


def slice_by_date(series: PriceSeries, start: date, end: date) -> PriceSeries:
    """Records with start <= date <= end; raising instead of returning empty."""
    if start > end:
        raise ValueError(f"slice start {start.isoformat()} is after end {end.isoformat()}")
    kept = tuple(r for r in series.records if start <= r.date <= end)
    if not kept:
        raise EmptySliceError(
            f"{series.symbol}: no records in [{start.isoformat()}, {end.isoformat()}]"
        )
    return PriceSeries(records=kept, symbol=series.symbol)


def split_linear(series: PriceSeries, ratio: float) -> tuple[PriceSeries, PriceSeries]:
    """Leading/trailing contiguous split: first floor(ratio*n) records, then the rest.

    Both parts are nonempty; concatenating them reproduces the input.
    """
    n = len(series)
    if n < 2:
        raise ValueError(f"{series.symbol}: need at least 2 records to split, have {n}")
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"split ratio must be in (0, 1), got {ratio}")
    head = min(max(math.floor(ratio * n), 1), n - 1)
    return (
        PriceSeries(records=series.records[:head], symbol=series.symbol),
        PriceSeries(records=series.records[head:], symbol=series.symbol),
    )
