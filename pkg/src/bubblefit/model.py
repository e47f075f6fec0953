"""Log-periodic power-law price model.

The bubble form is

    p(t) = A - m * tau**a * (1 + C * cos(omega * ln(tau) + phi)),  tau = t_c - t > 0,

a power-law approach to the level ``A`` decorated with oscillations whose
period shrinks geometrically toward the critical time ``t_c``. The antibubble
form mirrors time after the peak:

    p(t) = A + m * tau**a * (1 + C * cos(omega * ln(tau) + phi)),  tau = t - t_c > 0.

For fixed (t_c, a, omega) either form is linear in four coefficients,

    p(t) = A + B*tau**a + C1*tau**a*cos(omega*ln tau) + C2*tau**a*sin(omega*ln tau),

which is the exact rewriting used by the fitter's conditional linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Regime",
    "LpplParams",
    "LinearizedParams",
    "EvalDomainError",
    "TAU_MIN",
    "evaluate",
    "evaluate_series",
    "residuals",
    "sse",
    "gradient_sse",
    "to_linearized",
    "from_linearized",
    "design_columns",
    "evaluate_linearized",
]

# Evaluation closer to the critical time than this (in years) is an error,
# never a clamp: silent clamping corrupts fits.
TAU_MIN = 1e-9


class EvalDomainError(ValueError):
    """Evaluation at or across the critical time."""


class Regime(str, Enum):
    BUBBLE = "bubble"
    ANTIBUBBLE = "antibubble"


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"parameter {name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class LpplParams:
    """The seven model constants plus the regime flag.

    A: asymptotic price level at the critical time (currency units)
    m: trend amplitude (currency units)
    a: power-law exponent, 0 < a < 1 for a finite price with diverging slope
    C: relative oscillation amplitude, |C| < 1
    omega: log-frequency (radians per unit of ln tau)
    phi: phase (radians)
    t_c: critical time (decimal year)
    """

    A: float
    m: float
    a: float
    C: float
    omega: float
    phi: float
    t_c: float
    regime: Regime = Regime.BUBBLE

    def __post_init__(self) -> None:
        for name in ("A", "m", "a", "C", "omega", "phi", "t_c"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "regime", Regime(self.regime))

    def invariant_violations(self) -> list[str]:
        """Soft invariants; fitted parameters may violate them and are flagged."""
        problems = []
        if not 0.0 < self.a < 1.0:
            problems.append(f"exponent a={self.a:g} outside (0, 1)")
        if abs(self.C) >= 1.0:
            problems.append(f"|C|={abs(self.C):g} not below 1")
        if self.m < 0.0:
            problems.append(f"amplitude m={self.m:g} is negative")
        if self.omega <= 0.0:
            problems.append(f"omega={self.omega:g} not positive")
        return problems

    def tau(self, t: float) -> float:
        return self.t_c - t if self.regime is Regime.BUBBLE else t - self.t_c

    def with_regime(self, regime: Regime) -> "LpplParams":
        return replace(self, regime=Regime(regime))


def _tau_or_raise(params: LpplParams, t: float) -> float:
    tau = params.tau(t)
    if tau < TAU_MIN:
        raise EvalDomainError(
            f"t={t!r} is at or across the critical time {params.t_c!r} "
            f"for regime {params.regime.value} (tau={tau:.3e})"
        )
    return tau


def evaluate(params: LpplParams, t: float) -> float:
    """Model price at one time point."""
    tau = _tau_or_raise(params, float(t))
    trend = params.m * tau**params.a
    osc = 1.0 + params.C * math.cos(params.omega * math.log(tau) + params.phi)
    if params.regime is Regime.BUBBLE:
        return params.A - trend * osc
    return params.A + trend * osc


def evaluate_series(params: LpplParams, times: Iterable[float]) -> np.ndarray:
    """Pointwise :func:`evaluate` over a time grid."""
    return np.array([evaluate(params, t) for t in times], dtype=float)


def residuals(params: LpplParams, series) -> np.ndarray:
    """Observed minus model price, in series order."""
    fitted = evaluate_series(params, series.t)
    return series.price - fitted


def sse(params: LpplParams, series) -> float:
    r = residuals(params, series)
    return float(r @ r)


def gradient_sse(params: LpplParams, series) -> np.ndarray:
    """Analytic gradient of the sum of squared residuals.

    Component order: (A, m, a, C, omega, phi, t_c). Matches central finite
    differences away from tau -> 0.
    """
    t = np.asarray(series.t, dtype=float)
    if params.regime is Regime.BUBBLE:
        tau = params.t_c - t
        dtau_dtc = 1.0
        sgn = -1.0
    else:
        tau = t - params.t_c
        dtau_dtc = -1.0
        sgn = 1.0
    if tau.size and tau.min() < TAU_MIN:
        raise EvalDomainError(
            f"series crosses the critical time {params.t_c!r} (min tau {tau.min():.3e})"
        )
    lntau = np.log(tau)
    pa = tau**params.a
    theta = params.omega * lntau + params.phi
    cth = np.cos(theta)
    sth = np.sin(theta)
    g = 1.0 + params.C * cth

    f = params.A + sgn * params.m * pa * g
    r = series.price - f

    df = np.empty((7, t.size), dtype=float)
    df[0] = 1.0
    df[1] = sgn * pa * g
    df[2] = sgn * params.m * pa * lntau * g
    df[3] = sgn * params.m * pa * cth
    df[4] = -sgn * params.m * pa * params.C * sth * lntau
    df[5] = -sgn * params.m * pa * params.C * sth
    df[6] = dtau_dtc * sgn * params.m * pa / tau * (params.a * g - params.C * params.omega * sth)
    return -2.0 * (df @ r)


@dataclass(frozen=True)
class LinearizedParams:
    """Coefficients of the conditional linear form with their nonlinear companions.

    For the bubble regime B = -m, C1 = -m*C*cos(phi), C2 = +m*C*sin(phi);
    the antibubble regime flips the three signs so that the linear form always
    equals the model price.
    """

    A: float
    B: float
    C1: float
    C2: float
    t_c: float
    a: float
    omega: float
    regime: Regime = Regime.BUBBLE

    def __post_init__(self) -> None:
        for name in ("A", "B", "C1", "C2", "t_c", "a", "omega"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        object.__setattr__(self, "regime", Regime(self.regime))

    @property
    def trend_sign_ok(self) -> bool:
        """True when the linear solution has bubble-shaped amplitude (m > 0)."""
        return (self.B < 0.0) if self.regime is Regime.BUBBLE else (self.B > 0.0)


def to_linearized(params: LpplParams) -> LinearizedParams:
    sign = -1.0 if params.regime is Regime.BUBBLE else 1.0
    return LinearizedParams(
        A=params.A,
        B=sign * params.m,
        C1=sign * params.m * params.C * math.cos(params.phi),
        C2=-sign * params.m * params.C * math.sin(params.phi),
        t_c=params.t_c,
        a=params.a,
        omega=params.omega,
        regime=params.regime,
    )


def from_linearized(lin: LinearizedParams) -> LpplParams:
    """Recover (m, C, phi) from (B, C1, C2).

    Canonical output: C >= 0 and phi in (-pi, pi]. A solution with B on the
    wrong side of zero (m <= 0) is returned as-is; callers inspect
    ``trend_sign_ok`` / ``invariant_violations`` rather than crash.
    """
    sign = -1.0 if lin.regime is Regime.BUBBLE else 1.0
    m = sign * lin.B
    if lin.B == 0.0 or (lin.C1 == 0.0 and lin.C2 == 0.0):
        # No oscillation recoverable; (C, phi) = (0, 0) by convention.
        c, phi = 0.0, 0.0
    else:
        ccos = lin.C1 / lin.B
        csin = -lin.C2 / lin.B
        c = math.hypot(ccos, csin)
        phi = math.atan2(csin, ccos)
        if phi == -math.pi:
            phi = math.pi
    return LpplParams(
        A=lin.A, m=m, a=lin.a, C=c, omega=lin.omega, phi=phi,
        t_c=lin.t_c, regime=lin.regime,
    )


def design_columns(
    t_c: float,
    a: float,
    omega: float,
    regime: Regime,
    times: Sequence[float] | np.ndarray,
) -> np.ndarray:
    """Design matrix [1, tau**a, tau**a cos(w ln tau), tau**a sin(w ln tau)].

    Shape (n, 4), one row per time point.
    """
    t = np.asarray(times, dtype=float)
    tau = (t_c - t) if Regime(regime) is Regime.BUBBLE else (t - t_c)
    if t.size and tau.min() < TAU_MIN:
        raise EvalDomainError(
            f"nonpositive tau for t_c={t_c!r}: min tau {tau.min():.3e}"
        )
    lntau = np.log(tau)
    pa = tau**a
    angle = omega * lntau
    cols = np.empty((t.size, 4), dtype=float)
    cols[:, 0] = 1.0
    cols[:, 1] = pa
    cols[:, 2] = pa * np.cos(angle)
    cols[:, 3] = pa * np.sin(angle)
    return cols


def evaluate_linearized(lin: LinearizedParams, times: Sequence[float] | np.ndarray) -> np.ndarray:
    """Linear-form prices: design_columns @ (A, B, C1, C2)."""
    cols = design_columns(lin.t_c, lin.a, lin.omega, lin.regime, times)
    return cols @ np.array([lin.A, lin.B, lin.C1, lin.C2])
