"""Least-squares estimation of the log-periodic power-law parameters.

The seven-parameter problem is reduced to a three-dimensional search over the
nonlinear trio (t_c, a, omega): for any fixed trio the model is linear in
(A, B, C1, C2) and that subproblem is solved exactly by an orthogonal
factorization (SVD least squares, never normal equations). Stage one sweeps a
full grid over the trio; stage two refines the best cells with a derivative-
free Nelder-Mead simplex in scaled coordinates, re-solving the linear
subproblem at every probe. The result is deterministic for fixed inputs:
grid cells are independent, and the merge uses a total tie-break order
(sse, then earlier t_c, then smaller omega, then smaller a), so parallel and
sequential sweeps agree bitwise.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .model import (
    TAU_MIN,
    LinearizedParams,
    LpplParams,
    Regime,
    design_columns,
    from_linearized,
)
from .series import PriceSeries

__all__ = [
    "FitError",
    "FitConfigError",
    "InsufficientDataError",
    "RankDeficientError",
    "FitConfig",
    "GridCandidate",
    "FitResult",
    "ProfilePoint",
    "fit_linear",
    "fit",
    "profile_tc",
    "fit_antibubble",
    "DAY",
]

# One day in decimal years, used for data-relative default ranges.
DAY = 1.0 / 365.25


class FitError(ValueError):
    """Estimation failed."""


class FitConfigError(FitError):
    """Invalid search-space specification."""


class InsufficientDataError(FitError):
    """Too few samples for the requested operation."""


class RankDeficientError(FitError):
    """Design matrix numerically rank deficient."""

    def __init__(self, message: str, condition: float):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


def _check_range(name: str, rng: tuple[float, float]) -> tuple[float, float]:
    lo, hi = float(rng[0]), float(rng[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
        raise FitConfigError(f"{name} range must be finite and ordered, got ({lo!r}, {hi!r})")
    return lo, hi


@dataclass(frozen=True)
class FitConfig:
    """Search space and refinement settings.

    A ``tc_range`` of None resolves, at fit time, to one day through one year
    past the last sample (mirrored before the first sample for antibubbles).
    ``seed`` is recorded for reproducibility metadata; the default pipeline
    draws nothing and is deterministic outright.
    """

    tc_range: tuple[float, float] | None = None
    tc_count: int = 60
    a_range: tuple[float, float] = (0.01, 0.99)
    a_count: int = 25
    omega_range: tuple[float, float] = (2.0, 25.0)
    omega_count: int = 40
    refine_top_k: int = 10
    simplex_tol: float = 1e-8
    max_iterations: int = 2000
    regime: Regime = Regime.BUBBLE
    seed: int = 0
    min_samples: int = 20

    def __post_init__(self) -> None:
        if self.tc_range is not None:
            object.__setattr__(self, "tc_range", _check_range("t_c", self.tc_range))
        a_lo, a_hi = _check_range("a", self.a_range)
        if a_lo <= 0.0 or a_hi >= 1.0:
            raise FitConfigError(f"a range must lie inside (0, 1), got ({a_lo!r}, {a_hi!r})")
        object.__setattr__(self, "a_range", (a_lo, a_hi))
        w_lo, w_hi = _check_range("omega", self.omega_range)
        if w_lo <= 0.0:
            raise FitConfigError(f"omega range must be positive, got ({w_lo!r}, {w_hi!r})")
        object.__setattr__(self, "omega_range", (w_lo, w_hi))
        for name in ("tc_count", "a_count", "omega_count"):
            if getattr(self, name) < 1:
                raise FitConfigError(f"{name} must be >= 1")
        if self.refine_top_k < 1:
            raise FitConfigError("refine_top_k must be >= 1")
        if self.simplex_tol <= 0.0:
            raise FitConfigError("simplex_tol must be positive")
        if self.max_iterations < 1:
            raise FitConfigError("max_iterations must be >= 1")
        if self.min_samples < 5:
            raise FitConfigError("min_samples must be >= 5")
        object.__setattr__(self, "regime", Regime(self.regime))

    def resolved_tc_range(self, series: PriceSeries) -> tuple[float, float]:
        if self.tc_range is not None:
            return self.tc_range
        if len(series) == 0:
            raise InsufficientDataError("cannot derive a default t_c range from an empty series")
        if self.regime is Regime.BUBBLE:
            last = float(series.t[-1])
            return (last + DAY, last + 1.0)
        first = float(series.t[0])
        return (first - 1.0, first - DAY)


@dataclass(frozen=True)
class GridCandidate:
    t_c: float
    a: float
    omega: float
    sse: float

    def key(self) -> tuple[float, float, float, float]:
        return (self.sse, self.t_c, self.omega, self.a)


@dataclass(frozen=True)
class FitResult:
    params: LpplParams
    sse: float
    rmse: float
    n: int
    converged: bool
    iterations: int
    grid_evaluations: int
    top_candidates: tuple[GridCandidate, ...]
    boundary_flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProfilePoint:
    """Best achievable fit at one fixed candidate critical time."""

    t_c: float
    sse: float
    params: LpplParams | None


def _solve_cell(M: np.ndarray, price: np.ndarray) -> tuple[np.ndarray, float, int, np.ndarray]:
    """SVD least squares plus explicit residual; shared by every solve path."""
    coef, _, rank, sv = np.linalg.lstsq(M, price, rcond=None)
    r = price - M @ coef
    return coef, float(r @ r), int(rank), sv


def fit_linear(
    series: PriceSeries,
    t_c: float,
    a: float,
    omega: float,
    regime: Regime = Regime.BUBBLE,
) -> tuple[LinearizedParams, float]:
    """Exact minimizer of the sum of squares over (A, B, C1, C2).

    The nonlinear trio is held fixed; the solve is deterministic. Raises
    RankDeficientError when the design matrix has numerical rank below 4.
    """
    if len(series) < 5:
        raise InsufficientDataError(
            f"linear subproblem needs at least 5 samples, got {len(series)}"
        )
    M = design_columns(t_c, a, omega, regime, series.t)
    coef, cell_sse, rank, sv = _solve_cell(M, series.price)
    if rank < 4:
        smallest = sv[-1] if sv.size else 0.0
        cond = float(sv[0] / smallest) if smallest > 0.0 else float("inf")
        raise RankDeficientError(
            f"design matrix rank {rank} < 4 at t_c={t_c!r}, a={a!r}, omega={omega!r}",
            condition=cond,
        )
    lin = LinearizedParams(
        A=float(coef[0]), B=float(coef[1]), C1=float(coef[2]), C2=float(coef[3]),
        t_c=t_c, a=a, omega=omega, regime=regime,
    )
    return lin, cell_sse


def _grids(series: PriceSeries, config: FitConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    tc_lo, tc_hi = config.resolved_tc_range(series)
    return (
        np.linspace(tc_lo, tc_hi, config.tc_count),
        np.linspace(*config.a_range, config.a_count),
        np.linspace(*config.omega_range, config.omega_count),
    )


def _tc_valid(t: np.ndarray, t_c: float, regime: Regime) -> bool:
    tau_min = (t_c - t[-1]) if regime is Regime.BUBBLE else (t[0] - t_c)
    return tau_min >= TAU_MIN


def _sweep_one_tc(
    t: np.ndarray,
    price: np.ndarray,
    t_c: float,
    a_grid: np.ndarray,
    w_grid: np.ndarray,
    regime: Regime,
) -> np.ndarray:
    """SSE over the (a, omega) plane at one t_c; +inf marks unsolvable cells.

    Numerically identical to fit_linear cell by cell (same design build and
    solve), which keeps grid values, refinement probes, and the final solve
    mutually consistent.
    """
    out = np.full((a_grid.size, w_grid.size), np.inf)
    if not _tc_valid(t, t_c, regime):
        return out
    for ia, a in enumerate(a_grid):
        for iw, w in enumerate(w_grid):
            M = design_columns(t_c, float(a), float(w), regime, t)
            _, cell_sse, rank, _ = _solve_cell(M, price)
            if rank == 4:
                out[ia, iw] = cell_sse
    return out


def _sse_cube(
    series: PriceSeries,
    tc_grid: np.ndarray,
    a_grid: np.ndarray,
    w_grid: np.ndarray,
    regime: Regime,
    threads: int,
) -> np.ndarray:
    t, price = series.t, series.price
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            slices = list(
                pool.map(
                    lambda t_c: _sweep_one_tc(t, price, float(t_c), a_grid, w_grid, regime),
                    tc_grid,
                )
            )
    else:
        slices = [
            _sweep_one_tc(t, price, float(t_c), a_grid, w_grid, regime) for t_c in tc_grid
        ]
    return np.stack(slices, axis=0)


def _rank_cells(
    cube: np.ndarray,
    tc_grid: np.ndarray,
    a_grid: np.ndarray,
    w_grid: np.ndarray,
) -> list[GridCandidate]:
    """All solvable cells ordered by (sse, t_c, omega, a)."""
    itc, ia, iw = np.unravel_index(np.arange(cube.size), cube.shape)
    sse_flat = cube.ravel()
    finite = np.isfinite(sse_flat)
    order = np.lexsort(
        (a_grid[ia[finite]], w_grid[iw[finite]], tc_grid[itc[finite]], sse_flat[finite])
    )
    keep_tc = tc_grid[itc[finite]][order]
    keep_a = a_grid[ia[finite]][order]
    keep_w = w_grid[iw[finite]][order]
    keep_sse = sse_flat[finite][order]
    return [
        GridCandidate(float(tc), float(a), float(w), float(s))
        for tc, a, w, s in zip(keep_tc, keep_a, keep_w, keep_sse)
    ]


class _ScaledObjective:
    """SSE as a function of box-scaled free coordinates, clipping to bounds.

    ``free`` selects which of (t_c, a, omega) vary; the rest stay fixed, which
    lets the t_c profile reuse the same machinery with a 2-d simplex.
    """

    def __init__(
        self,
        series: PriceSeries,
        regime: Regime,
        bounds: Sequence[tuple[float, float]],
        fixed: tuple[float, float, float],
        free: tuple[int, ...],
    ):
        self.series = series
        self.regime = regime
        self.bounds = bounds
        self.fixed = fixed
        self.free = free
        self.evaluations = 0

    def to_scaled(self, theta: Sequence[float]) -> np.ndarray:
        return np.array(
            [
                (theta[j] - self.bounds[j][0]) / (self.bounds[j][1] - self.bounds[j][0])
                for j in self.free
            ]
        )

    def to_theta(self, u: np.ndarray) -> tuple[float, float, float]:
        theta = list(self.fixed)
        for pos, j in enumerate(self.free):
            lo, hi = self.bounds[j]
            frac = min(max(float(u[pos]), 0.0), 1.0)
            theta[j] = lo + frac * (hi - lo)
        return tuple(theta)

    def __call__(self, u: np.ndarray) -> float:
        t_c, a, omega = self.to_theta(u)
        self.evaluations += 1
        if not _tc_valid(self.series.t, t_c, self.regime):
            return float("inf")
        M = design_columns(t_c, a, omega, self.regime, self.series.t)
        _, cell_sse, rank, _ = _solve_cell(M, self.series.price)
        return cell_sse if rank == 4 else float("inf")


def _refine(
    series: PriceSeries,
    config: FitConfig,
    bounds: Sequence[tuple[float, float]],
    start: tuple[float, float, float],
    start_sse: float,
    free: tuple[int, ...],
) -> tuple[tuple[float, float, float], float, bool, int]:
    """Nelder-Mead from one grid cell; never returns worse than the start."""
    objective = _ScaledObjective(series, config.regime, bounds, start, free)
    result = minimize(
        objective,
        objective.to_scaled(start),
        method="Nelder-Mead",
        options={
            "xatol": config.simplex_tol,
            "fatol": 1e-10 * max(1.0, start_sse),
            "maxiter": config.max_iterations,
            "maxfev": 4 * config.max_iterations,
        },
    )
    theta = objective.to_theta(result.x)
    refined_sse = float(result.fun)
    if not np.isfinite(refined_sse) or refined_sse > start_sse:
        return start, start_sse, bool(result.success), int(result.nit)
    return theta, refined_sse, bool(result.success), int(result.nit)


def _boundary_flags(
    theta: tuple[float, float, float],
    bounds: Sequence[tuple[float, float]],
) -> list[str]:
    names = ("t_c", "a", "omega")
    flags = []
    for name, value, (lo, hi) in zip(names, theta, bounds):
        if min(value - lo, hi - value) <= 1e-6 * (hi - lo):
            flags.append(f"{name}={value:g} on search-range boundary [{lo:g}, {hi:g}]")
    return flags


def _result_from_theta(
    series: PriceSeries,
    config: FitConfig,
    bounds: Sequence[tuple[float, float]],
    theta: tuple[float, float, float],
    converged: bool,
    iterations: int,
    grid_evaluations: int,
    top: Sequence[GridCandidate],
) -> FitResult:
    lin, final_sse = fit_linear(series, *theta, regime=config.regime)
    params = from_linearized(lin)
    flags = _boundary_flags(theta, bounds)
    if not lin.trend_sign_ok:
        flags.append("linear solution is not bubble shaped (nonpositive amplitude m)")
    flags.extend(params.invariant_violations())
    n = len(series)
    return FitResult(
        params=params,
        sse=final_sse,
        rmse=float(np.sqrt(final_sse / n)),
        n=n,
        converged=converged,
        iterations=iterations,
        grid_evaluations=grid_evaluations,
        top_candidates=tuple(top),
        boundary_flags=tuple(dict.fromkeys(flags)),
    )


def _prepare(series: PriceSeries, config: FitConfig):
    if len(series) < config.min_samples:
        raise InsufficientDataError(
            f"fit needs at least {config.min_samples} samples, got {len(series)}"
        )
    tc_grid, a_grid, w_grid = _grids(series, config)
    bounds = (
        (float(tc_grid[0]), float(tc_grid[-1])),
        config.a_range,
        config.omega_range,
    )
    return tc_grid, a_grid, w_grid, bounds


def fit(series: PriceSeries, config: FitConfig = FitConfig(), threads: int = 1) -> FitResult:
    """Two-stage estimate: full grid sweep, then simplex refinement of the
    best ``refine_top_k`` cells. Deterministic given (series, config)."""
    tc_grid, a_grid, w_grid, bounds = _prepare(series, config)
    cube = _sse_cube(series, tc_grid, a_grid, w_grid, config.regime, max(1, threads))
    grid_evaluations = int(np.isfinite(cube).sum())
    ranked = _rank_cells(cube, tc_grid, a_grid, w_grid)
    if not ranked:
        raise FitError(
            "no valid grid cell: the t_c range lies at or across the data "
            f"(range {bounds[0]}, data span [{series.t[0]:.6f}, {series.t[-1]:.6f}])"
        )
    top = ranked[: config.refine_top_k]

    best_theta: tuple[float, float, float] | None = None
    best_sse = float("inf")
    best_converged = False
    total_iterations = 0
    for cand in top:
        theta0 = (cand.t_c, cand.a, cand.omega)
        theta, refined_sse, success, nit = _refine(
            series, config, bounds, theta0, cand.sse, free=(0, 1, 2)
        )
        total_iterations += nit
        key = (refined_sse, theta[0], theta[2], theta[1])
        if best_theta is None or key < (best_sse, best_theta[0], best_theta[2], best_theta[1]):
            best_theta, best_sse = theta, refined_sse
            best_converged = success
    assert best_theta is not None
    return _result_from_theta(
        series,
        config,
        bounds,
        best_theta,
        converged=best_converged,
        iterations=total_iterations,
        grid_evaluations=grid_evaluations,
        top=top,
    )


def profile_tc(
    series: PriceSeries, config: FitConfig = FitConfig(), threads: int = 1
) -> tuple[ProfilePoint, ...]:
    """Per-t_c best fit: for each grid t_c, sweep (a, omega), refine the best
    cell with t_c held fixed. Ordered by t_c; one point per grid value."""
    tc_grid, a_grid, w_grid, bounds = _prepare(series, config)
    cube = _sse_cube(series, tc_grid, a_grid, w_grid, config.regime, max(1, threads))
    points = []
    for itc, t_c in enumerate(tc_grid):
        plane = cube[itc]
        if not np.isfinite(plane).any():
            points.append(ProfilePoint(float(t_c), float("inf"), None))
            continue
        flat = plane.ravel()
        ia, iw = np.unravel_index(np.arange(flat.size), plane.shape)
        finite = np.isfinite(flat)
        order = np.lexsort((a_grid[ia[finite]], w_grid[iw[finite]], flat[finite]))
        best = np.flatnonzero(finite)[order[0]]
        start = (
            float(t_c),
            float(a_grid[ia[best]]),
            float(w_grid[iw[best]]),
        )
        theta, refined_sse, _, _ = _refine(
            series, config, bounds, start, float(flat[best]), free=(1, 2)
        )
        lin, point_sse = fit_linear(series, *theta, regime=config.regime)
        points.append(ProfilePoint(float(t_c), point_sse, from_linearized(lin)))
    return tuple(points)


def fit_antibubble(
    series: PriceSeries, config: FitConfig = FitConfig(), threads: int = 1
) -> FitResult:
    """Mirrored-time fit; the t_c range must lie entirely before the data."""
    config = replace(config, regime=Regime.ANTIBUBBLE)
    if len(series) == 0:
        raise InsufficientDataError("cannot fit an empty series")
    tc_lo, tc_hi = config.resolved_tc_range(series)
    first = float(series.t[0])
    if tc_hi >= first:
        raise FitConfigError(
            f"antibubble t_c range ({tc_lo!r}, {tc_hi!r}) must end before the "
            f"first sample at t={first!r}"
        )
    return fit(series, config, threads=threads)
