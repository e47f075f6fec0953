"""Log-periodic power-law bubble fitting and crash-window forecasting."""

from .series import (
    CpiSeries,
    ParseError,
    PriceSeries,
    Sample,
    SeriesError,
    deflate,
    from_decimal_year,
    parse_cpi,
    parse_series,
    serialize_series,
    to_decimal_year,
    window,
)
from .model import (
    EvalDomainError,
    LinearizedParams,
    LpplParams,
    Regime,
    design_columns,
    evaluate,
    evaluate_linearized,
    evaluate_series,
    from_linearized,
    gradient_sse,
    residuals,
    sse,
    to_linearized,
)
from .fit import (
    FitConfig,
    FitConfigError,
    FitError,
    FitResult,
    GridCandidate,
    InsufficientDataError,
    ProfilePoint,
    RankDeficientError,
    fit,
    fit_antibubble,
    fit_linear,
    profile_tc,
)
from .forecast import (
    BurstReport,
    CriticalWindow,
    DrawdownReport,
    ForecastError,
    critical_window,
    drawdown,
    verify_burst,
)
from .synth import (
    BudgetExceededError,
    GenerationError,
    NO_NOISE,
    NoiseKind,
    NoiseSpec,
    RecoveryRow,
    generate,
    oracle_fit,
    recovery_experiment,
)
from .presets import PRESETS, Preset, get_preset

__version__ = "0.1.0"
