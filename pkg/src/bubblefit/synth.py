"""Synthetic data generation and a brute-force reference fitter.

``generate`` turns a parameter set into a calendar-aligned daily (or coarser)
series, optionally with seeded noise, so estimator behavior can be measured
against known ground truth. ``oracle_fit`` is the slow, transparent reference
the main fitter is validated against: an exhaustive sweep plus a single local
grid-halving pass, nothing clever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import timedelta
from enum import Enum
from typing import Sequence

import numpy as np

from .fit import (
    FitConfig,
    FitError,
    FitResult,
    GridCandidate,
    fit,
    fit_linear,
)
from .model import EvalDomainError, LpplParams, Regime, evaluate, from_linearized
from .series import PriceSeries, Sample, from_decimal_year, to_decimal_year

__all__ = [
    "NoiseKind",
    "NoiseSpec",
    "NO_NOISE",
    "GenerationError",
    "BudgetExceededError",
    "generate",
    "oracle_fit",
    "RecoveryRow",
    "recovery_experiment",
]

MAX_NOISE_RETRIES = 100


class GenerationError(ValueError):
    pass


class BudgetExceededError(ValueError):
    """Oracle grid too large for the configured cost bound."""


class NoiseKind(str, Enum):
    NONE = "none"
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise applied to model prices.

    sigma is in currency units for additive noise and a dimensionless
    fraction for multiplicative noise.
    """

    kind: NoiseKind = NoiseKind.NONE
    sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not math.isfinite(self.sigma) or self.sigma < 0.0:
            raise ValueError(f"sigma must be finite and nonnegative, got {self.sigma!r}")
        if self.kind is NoiseKind.NONE and self.sigma != 0.0:
            raise ValueError("noise kind 'none' requires sigma = 0")


NO_NOISE = NoiseSpec()


def _calendar_times(t_start: float, t_end: float, step_days: int) -> list[float]:
    if step_days < 1:
        raise GenerationError(f"step must be at least 1 day, got {step_days!r}")
    if t_start > t_end:
        raise GenerationError(f"window start {t_start!r} exceeds end {t_end!r}")
    d = from_decimal_year(t_start)
    if to_decimal_year(d) < t_start:
        d += timedelta(days=1)
    times = []
    t = to_decimal_year(d)
    while t <= t_end:
        times.append(t)
        d += timedelta(days=step_days)
        t = to_decimal_year(d)
    return times


def generate(
    params: LpplParams,
    t_start: float,
    t_end: float,
    step_days: int = 1,
    noise: NoiseSpec = NO_NOISE,
    label: str = "",
    unit: str = "",
) -> PriceSeries:
    """Model prices at calendar-aligned times every ``step_days`` days.

    Samples land on calendar dates inside [t_start, t_end], so emitted files
    re-parse cleanly. Noisy prices that come out nonpositive are resampled up
    to MAX_NOISE_RETRIES times. Deterministic given the noise seed.
    """
    times = _calendar_times(t_start, t_end, step_days)
    try:
        base = np.array([evaluate(params, t) for t in times])
    except EvalDomainError as exc:
        raise GenerationError(f"window crosses the critical time: {exc}") from exc
    if base.size and base.min() <= 0.0:
        raise GenerationError(
            f"model price is nonpositive inside the window (min {base.min():.6g}); "
            "cannot form a price series"
        )
    prices = base.copy()
    if noise.kind is not NoiseKind.NONE and base.size:
        rng = np.random.default_rng(noise.seed)
        draw = rng.normal(0.0, noise.sigma, size=base.size) if noise.sigma > 0 else np.zeros(base.size)
        if noise.kind is NoiseKind.ADDITIVE:
            prices = base + draw
        else:
            prices = base * (1.0 + draw)
        for _ in range(MAX_NOISE_RETRIES):
            bad = np.flatnonzero(prices <= 0.0)
            if bad.size == 0:
                break
            redraw = rng.normal(0.0, noise.sigma, size=bad.size)
            if noise.kind is NoiseKind.ADDITIVE:
                prices[bad] = base[bad] + redraw
            else:
                prices[bad] = base[bad] * (1.0 + redraw)
        else:
            raise GenerationError(
                f"could not draw positive prices after {MAX_NOISE_RETRIES} retries "
                f"(sigma={noise.sigma!r})"
            )
    samples = tuple(Sample(t, float(p)) for t, p in zip(times, prices))
    return PriceSeries(samples, label=label, unit=unit)


GridSpec = tuple[float, float, int]


def _grid(spec: GridSpec | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(spec, tuple) and len(spec) == 3 and isinstance(spec[2], int):
        lo, hi, count = spec
        if count < 1 or (count > 1 and lo >= hi):
            raise ValueError(f"bad grid spec {spec!r}")
        return np.linspace(lo, hi, count) if count > 1 else np.array([float(lo)])
    return np.asarray(spec, dtype=float)


def _oracle_best(
    series: PriceSeries,
    tc_values: np.ndarray,
    a_values: np.ndarray,
    w_values: np.ndarray,
    regime: Regime,
) -> tuple[GridCandidate | None, int]:
    best: GridCandidate | None = None
    evaluated = 0
    for t_c in tc_values:
        for a in a_values:
            for w in w_values:
                try:
                    _, cell_sse = fit_linear(series, float(t_c), float(a), float(w), regime)
                except FitError:
                    continue
                except EvalDomainError:
                    continue
                evaluated += 1
                cand = GridCandidate(float(t_c), float(a), float(w), cell_sse)
                if best is None or cand.key() < best.key():
                    best = cand
    return best, evaluated


def oracle_fit(
    series: PriceSeries,
    tc: GridSpec | Sequence[float],
    a: GridSpec | Sequence[float],
    omega: GridSpec | Sequence[float],
    regime: Regime = Regime.BUBBLE,
    max_cost: float = 5e7,
) -> FitResult:
    """Exhaustive reference fit over a dense grid.

    Cost is bounded by grid cells times series length (default 5e7); the only
    refinement is one pass on a locally halved grid around the best cell.
    """
    tc_values, a_values, w_values = _grid(tc), _grid(a), _grid(omega)
    cells = tc_values.size * a_values.size * w_values.size
    cost = cells * max(1, len(series))
    if cost > max_cost:
        raise BudgetExceededError(
            f"oracle grid cost {cost:.3g} exceeds budget {max_cost:.3g} "
            f"({cells} cells x {len(series)} samples)"
        )
    best, evaluated = _oracle_best(series, tc_values, a_values, w_values, regime)
    if best is None:
        raise FitError("oracle grid contains no solvable cell")

    def halved(values: np.ndarray, center: float) -> np.ndarray:
        if values.size < 2:
            return np.array([center])
        h = (values[-1] - values[0]) / (values.size - 1)
        local = np.array([center - h / 2.0, center, center + h / 2.0])
        return local[(local >= values[0]) & (local <= values[-1])]

    local_best, local_evals = _oracle_best(
        series,
        halved(tc_values, best.t_c),
        halved(a_values, best.a),
        halved(w_values, best.omega),
        regime,
    )
    if local_best is not None and local_best.key() < best.key():
        best = local_best
    lin, final_sse = fit_linear(series, best.t_c, best.a, best.omega, regime)
    params = from_linearized(lin)
    n = len(series)
    return FitResult(
        params=params,
        sse=final_sse,
        rmse=float(np.sqrt(final_sse / n)),
        n=n,
        converged=True,
        iterations=0,
        grid_evaluations=evaluated + local_evals,
        top_candidates=(best,),
        boundary_flags=tuple(params.invariant_violations()),
    )


@dataclass(frozen=True)
class RecoveryRow:
    """Recovery accuracy at one noise level."""

    sigma: float
    median_abs_tc_error: float
    iqr: float
    failures: int
    repetitions: int


def recovery_experiment(
    params: LpplParams,
    t_start: float,
    t_end: float,
    noise_levels: Sequence[float],
    repetitions: int,
    config: FitConfig,
    step_days: int = 1,
    kind: NoiseKind = NoiseKind.MULTIPLICATIVE,
    threads: int = 1,
) -> list[RecoveryRow]:
    """Generate-and-refit sweep over noise levels.

    Repetition i uses seed config.seed + i, so rows are individually
    reproducible. Fit failures count as failures, never aborts.
    """
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions!r}")
    rows = []
    for sigma in noise_levels:
        errors = []
        failures = 0
        for i in range(repetitions):
            noise = NoiseSpec(kind=kind if sigma > 0 else NoiseKind.NONE,
                              sigma=float(sigma) if sigma > 0 else 0.0,
                              seed=config.seed + i)
            try:
                sample = generate(params, t_start, t_end, step_days, noise)
                result = fit(sample, config, threads=threads)
                errors.append(abs(result.params.t_c - params.t_c))
            except (FitError, GenerationError, EvalDomainError):
                failures += 1
        if errors:
            arr = np.array(errors)
            median = float(np.median(arr))
            iqr = float(np.percentile(arr, 75) - np.percentile(arr, 25))
        else:
            median = float("nan")
            iqr = float("nan")
        rows.append(
            RecoveryRow(
                sigma=float(sigma),
                median_abs_tc_error=median,
                iqr=iqr,
                failures=failures,
                repetitions=repetitions,
            )
        )
    return rows
