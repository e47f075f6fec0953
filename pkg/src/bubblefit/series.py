"""Price-series data model: file parsing, calendar conversion, CPI deflation.

Time is carried as a decimal year: ``year + (day_of_year - 1) / days_in_year``
with the Gregorian leap rule. The first day of a year maps to the integer year
and December 31 maps to ``year + 364/365`` (non-leap). All samples are dated to
day granularity.
"""

from __future__ import annotations

import calendar
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from functools import cached_property
from typing import Iterable, Iterator, Literal, Mapping

import numpy as np

__all__ = [
    "Sample",
    "PriceSeries",
    "CpiSeries",
    "SeriesError",
    "ParseError",
    "CpiCoverageError",
    "days_in_year",
    "to_decimal_year",
    "from_decimal_year",
    "parse_series",
    "parse_cpi",
    "serialize_series",
    "deflate",
    "window",
]

DuplicatePolicy = Literal["reject", "last"]


class SeriesError(ValueError):
    """Invalid series data or an operation applied outside its domain."""


class ParseError(SeriesError):
    """Malformed price or CPI file content."""


class CpiCoverageError(SeriesError):
    """CPI table does not cover a month needed for deflation."""


def days_in_year(year: int) -> int:
    return 366 if calendar.isleap(year) else 365


def to_decimal_year(d: date) -> float:
    """Map a calendar date to ``year + (day_of_year - 1) / days_in_year``."""
    doy0 = d.toordinal() - date(d.year, 1, 1).toordinal()
    return d.year + doy0 / days_in_year(d.year)


# The exact fraction recovers day_of_year - 1 only in real arithmetic; the
# epsilon (about 9 ms of calendar time) absorbs float rounding so that
# from_decimal_year(to_decimal_year(d)) == d for every representable date.
_DAY_EPS = 1e-7


def from_decimal_year(t: float) -> date:
    """Inverse of :func:`to_decimal_year` at day resolution."""
    if not math.isfinite(t):
        raise SeriesError(f"decimal year must be finite, got {t!r}")
    year = math.floor(t)
    diy = days_in_year(year)
    doy0 = math.floor((t - year) * diy + _DAY_EPS)
    doy0 = min(max(doy0, 0), diy - 1)
    try:
        return date(year, 1, 1) + timedelta(days=doy0)
    except (ValueError, OverflowError) as exc:
        raise SeriesError(f"decimal year {t!r} is outside the calendar range") from exc


@dataclass(frozen=True)
class Sample:
    """One (decimal year, price) observation."""

    t: float
    price: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.t):
            raise SeriesError(f"sample time must be finite, got {self.t!r}")
        if not math.isfinite(self.price) or self.price <= 0.0:
            raise SeriesError(
                f"sample price must be finite and strictly positive, got {self.price!r}"
            )

    @property
    def date(self) -> date:
        return from_decimal_year(self.t)


@dataclass(frozen=True)
class PriceSeries:
    """Ordered price observations, strictly increasing in time."""

    samples: tuple[Sample, ...]
    label: str = ""
    unit: str = ""

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        object.__setattr__(self, "samples", samples)
        for prev, cur in zip(samples, samples[1:]):
            if cur.t <= prev.t:
                raise SeriesError(
                    f"sample times must be strictly increasing: {prev.t!r} then {cur.t!r}"
                )

    @classmethod
    def from_arrays(
        cls,
        t: Iterable[float],
        price: Iterable[float],
        label: str = "",
        unit: str = "",
    ) -> "PriceSeries":
        samples = tuple(Sample(float(a), float(b)) for a, b in zip(t, price, strict=True))
        return cls(samples, label=label, unit=unit)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self) -> Iterator[Sample]:
        return iter(self.samples)

    @cached_property
    def t(self) -> np.ndarray:
        arr = np.array([s.t for s in self.samples], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def price(self) -> np.ndarray:
        arr = np.array([s.price for s in self.samples], dtype=float)
        arr.setflags(write=False)
        return arr

    def window(self, t_start: float, t_end: float) -> "PriceSeries":
        return window(self, t_start, t_end)


@dataclass(frozen=True)
class CpiSeries:
    """Monthly price-index values keyed by (year, month), contiguous months."""

    entries: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        entries = dict(self.entries)
        object.__setattr__(self, "entries", entries)
        for (year, month), value in entries.items():
            if not 1 <= month <= 12:
                raise SeriesError(f"invalid CPI month {year}-{month:02d}")
            if not math.isfinite(value) or value <= 0.0:
                raise SeriesError(
                    f"CPI value for {year}-{month:02d} must be finite and positive, got {value!r}"
                )
        keys = sorted(entries)
        for (y0, m0), (y1, m1) in zip(keys, keys[1:]):
            expected = (y0, m0 + 1) if m0 < 12 else (y0 + 1, 1)
            if (y1, m1) != expected:
                raise SeriesError(
                    f"CPI months must be contiguous; gap between "
                    f"{y0}-{m0:02d} and {y1}-{m1:02d}"
                )

    def value(self, year: int, month: int) -> float:
        try:
            return self.entries[(year, month)]
        except KeyError:
            raise CpiCoverageError(f"CPI table has no entry for {year}-{month:02d}") from None

    def __len__(self) -> int:
        return len(self.entries)


def _iter_records(text: str | Iterable[str]) -> Iterator[tuple[int, str]]:
    lines = text.splitlines() if isinstance(text, str) else text
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line


def _split_record(line: str, lineno: int) -> tuple[str, str]:
    parts = [p.strip() for p in line.split(",")]
    if len(parts) != 2:
        raise ParseError(f"line {lineno}: expected 2 comma-separated fields, got {len(parts)}")
    return parts[0], parts[1]


def _is_numeric(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def parse_series(
    text: str | Iterable[str],
    duplicates: DuplicatePolicy = "reject",
    label: str = "",
    unit: str = "",
) -> PriceSeries:
    """Parse ``YYYY-MM-DD,price`` records into a PriceSeries sorted by time.

    ``#`` lines are comments. A single leading header line is skipped when its
    second field is non-numeric. Duplicate dates are an error under the
    default ``reject`` policy; under ``last`` the last occurrence wins.
    """
    if duplicates not in ("reject", "last"):
        raise ValueError(f"unknown duplicate policy {duplicates!r}")
    by_date: dict[date, float] = {}
    first_record = True
    for lineno, line in _iter_records(text):
        datefield, pricefield = _split_record(line, lineno)
        if first_record:
            first_record = False
            if not _is_numeric(pricefield):
                continue  # header
        try:
            d = date.fromisoformat(datefield)
        except ValueError:
            raise ParseError(f"line {lineno}: malformed date {datefield!r}") from None
        try:
            price = float(pricefield)
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric price {pricefield!r}") from None
        if not math.isfinite(price) or price <= 0.0:
            raise ParseError(f"line {lineno}: price must be finite and positive, got {price!r}")
        if d in by_date and duplicates == "reject":
            raise ParseError(f"line {lineno}: duplicate date {d.isoformat()}")
        by_date[d] = price
    samples = tuple(
        Sample(to_decimal_year(d), by_date[d]) for d in sorted(by_date)
    )
    return PriceSeries(samples, label=label, unit=unit)


def parse_cpi(text: str | Iterable[str]) -> CpiSeries:
    """Parse ``YYYY-MM,index`` records; same comment and header rules as prices."""
    entries: dict[tuple[int, int], float] = {}
    first_record = True
    for lineno, line in _iter_records(text):
        monthfield, valuefield = _split_record(line, lineno)
        if first_record:
            first_record = False
            if not _is_numeric(valuefield):
                continue
        parts = monthfield.split("-")
        if len(parts) != 2 or not all(p.isdigit() for p in parts):
            raise ParseError(f"line {lineno}: malformed month {monthfield!r}, expected YYYY-MM")
        year, month = int(parts[0]), int(parts[1])
        if not 1 <= month <= 12:
            raise ParseError(f"line {lineno}: month out of range in {monthfield!r}")
        try:
            value = float(valuefield)
        except ValueError:
            raise ParseError(f"line {lineno}: non-numeric index {valuefield!r}") from None
        if (year, month) in entries:
            raise ParseError(f"line {lineno}: duplicate month {monthfield}")
        entries[(year, month)] = value
    try:
        return CpiSeries(entries)
    except SeriesError as exc:
        raise ParseError(str(exc)) from None


def serialize_series(series: PriceSeries, comments: Iterable[str] = ()) -> str:
    """Render a series in the input file format; prices round-trip exactly."""
    lines = [f"# {c}" for c in comments]
    lines.append("date,price")
    for s in series:
        lines.append(f"{from_decimal_year(s.t).isoformat()},{s.price!r}")
    return "\n".join(lines) + "\n"


def deflate(
    series: PriceSeries,
    cpi: CpiSeries,
    reference: tuple[int, int],
) -> PriceSeries:
    """Rescale prices to reference-month currency: price * cpi[ref] / cpi[month]."""
    ref_value = cpi.value(*reference)
    samples = []
    for s in series:
        d = from_decimal_year(s.t)
        samples.append(Sample(s.t, s.price * ref_value / cpi.value(d.year, d.month)))
    return PriceSeries(tuple(samples), label=series.label, unit=series.unit)


def window(series: PriceSeries, t_start: float, t_end: float) -> PriceSeries:
    """Samples with t_start <= t <= t_end, order preserved. May be empty."""
    if t_start > t_end:
        raise SeriesError(f"window start {t_start!r} exceeds end {t_end!r}")
    kept = tuple(s for s in series if t_start <= s.t <= t_end)
    return PriceSeries(kept, label=series.label, unit=series.unit)
