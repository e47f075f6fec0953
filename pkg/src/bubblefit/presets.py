"""Built-in parameter sets for the 2011 precious-metal run-ups.

These are published least-squares fits shipped verbatim so that the model
curves they describe are reproducible objects: they seed synthetic-data
experiments and serve as CLI presets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import LpplParams, Regime

__all__ = ["Preset", "PRESETS", "get_preset"]


@dataclass(frozen=True)
class Preset:
    name: str
    params: LpplParams
    fit_window: tuple[float, float]
    source: str
    deflation: str


PRESETS: dict[str, Preset] = {
    "silver-2011": Preset(
        name="silver-2011",
        params=LpplParams(
            A=277.73, m=259.3, a=0.032, C=-0.0069, omega=4.59, phi=4.237,
            t_c=2011.336, regime=Regime.BUBBLE,
        ),
        # Daily silver, October 21, 2008 through April 19, 2011.
        fit_window=(2008.80281, 2011.29589),
        source=(
            "least-squares fit of daily US-dollar silver prices from the "
            "2008-2011 run-up, published ahead of the May 2011 collapse"
        ),
        deflation="nominal US dollars per troy ounce",
    ),
    "gold-2011": Preset(
        name="gold-2011",
        params=LpplParams(
            A=1978.2, m=734.8, a=0.36, C=0.024, omega=16.5, phi=-36.3,
            t_c=2011.573, regime=Regime.BUBBLE,
        ),
        # Daily gold, November 2003 through May 26, 2011.
        fit_window=(2003.85205, 2011.39726),
        source=(
            "least-squares fit of daily US-dollar gold prices from the "
            "2003-2011 run-up, pointing at a late-July 2011 critical time"
        ),
        deflation="inflation adjusted to March 2011 US dollars per troy ounce",
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        known = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {known}") from None
