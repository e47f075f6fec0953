"""Decision artifacts derived from a fit: calendar crash window, drawdowns,
and post-hoc burst verification against realized prices."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .fit import ProfilePoint
from .series import PriceSeries, Sample, from_decimal_year, to_decimal_year

__all__ = [
    "ForecastError",
    "CriticalWindow",
    "DrawdownReport",
    "BurstReport",
    "critical_window",
    "drawdown",
    "verify_burst",
]


class ForecastError(ValueError):
    pass


@dataclass(frozen=True)
class CriticalWindow:
    """Calendar window for the critical time, from the sse profile."""

    t_c: float
    point: date
    interval: tuple[date, date]
    profile_threshold: float

    def __post_init__(self) -> None:
        lo, hi = self.interval
        if not lo <= self.point <= hi:
            raise ForecastError(
                f"window interval [{lo}, {hi}] does not contain the point {self.point}"
            )


@dataclass(frozen=True)
class DrawdownReport:
    """Peak and the lowest price at or after it within a window."""

    peak: Sample
    trough: Sample
    drop_fraction: float


@dataclass(frozen=True)
class BurstReport:
    burst: bool
    drawdown: DrawdownReport
    lag_days: int
    threshold: float
    horizon_days: int
    window_start: date


def critical_window(
    profile: Sequence[ProfilePoint], slack: float = 0.05
) -> CriticalWindow:
    """Point estimate at the profile minimum; interval spans every candidate
    t_c whose sse is within (1 + slack) of the minimum."""
    if slack <= 0.0:
        raise ForecastError(f"slack must be positive, got {slack!r}")
    usable = [p for p in profile if np.isfinite(p.sse)]
    if not usable:
        raise ForecastError("profile is empty or has no finite sse")
    best = min(usable, key=lambda p: (p.sse, p.t_c))
    cutoff = (1.0 + slack) * best.sse
    kept = [p.t_c for p in usable if p.sse <= cutoff]
    return CriticalWindow(
        t_c=best.t_c,
        point=from_decimal_year(best.t_c),
        interval=(from_decimal_year(min(kept)), from_decimal_year(max(kept))),
        profile_threshold=slack,
    )


def drawdown(series: PriceSeries, t_from: float, t_to: float) -> DrawdownReport:
    """Largest peak-to-later-trough decline inside [t_from, t_to]."""
    win = series.window(t_from, t_to)
    if len(win) < 2:
        raise ForecastError(
            f"drawdown needs at least 2 samples in [{t_from!r}, {t_to!r}], got {len(win)}"
        )
    prices = win.price
    peak_idx = int(np.argmax(prices))
    after = prices[peak_idx:]
    trough_idx = peak_idx + int(np.argmin(after))
    peak = win.samples[peak_idx]
    trough = win.samples[trough_idx]
    return DrawdownReport(
        peak=peak,
        trough=trough,
        drop_fraction=1.0 - trough.price / peak.price,
    )


def verify_burst(
    series: PriceSeries,
    window: CriticalWindow | date,
    threshold: float = 0.15,
    horizon_days: int = 30,
) -> BurstReport:
    """Did prices collapse after the window opened?

    The horizon covers ``horizon_days`` calendar days starting at the window
    start (its interval start for a CriticalWindow), so the series must reach
    at least ``start + horizon_days - 1``. Burst means the realized drawdown
    over the horizon is a genuine decline at or above the threshold.
    """
    if threshold < 0.0:
        raise ForecastError(f"threshold must be nonnegative, got {threshold!r}")
    if horizon_days < 1:
        raise ForecastError(f"horizon must be at least 1 day, got {horizon_days!r}")
    start = window.interval[0] if isinstance(window, CriticalWindow) else window
    required = start + timedelta(days=horizon_days - 1)
    if len(series) == 0 or from_decimal_year(float(series.t[-1])) < required:
        raise ForecastError(
            f"series must extend through {required.isoformat()} to cover a "
            f"{horizon_days}-day horizon from {start.isoformat()}"
        )
    t_start = to_decimal_year(start)
    t_end = to_decimal_year(start + timedelta(days=horizon_days))
    dd = drawdown(series, t_start, t_end)
    burst = dd.drop_fraction > 0.0 and dd.drop_fraction >= threshold
    lag = (from_decimal_year(dd.peak.t) - start).days
    return BurstReport(
        burst=burst,
        drawdown=dd,
        lag_days=lag,
        threshold=threshold,
        horizon_days=horizon_days,
        window_start=start,
    )
