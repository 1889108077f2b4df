"""Treatment-effect estimation for recurring rare events in panel time
series where no untreated control is ever observed during the event."""

from .ar import (
    ARModelFit,
    CounterfactualPanel,
    TreatmentEffectEstimate,
    average_effects,
    confidence_intervals,
    effect_covariance,
    estimate_effect,
    fit_ar1_ols,
    forecast_counterfactual,
)
from .baselines import (
    DecompositionResult,
    centered_moving_average,
    direct_forecast,
    seasonal_decompose,
)
from .dataio import (
    CalendarEntry,
    bind_calendar,
    load_calendar,
    load_panel_csv,
    write_calendar_csv,
    write_panel_csv,
)
from .errors import TrainingDivergedError, ValidationError
from .evaluation import EvaluationReport, SeriesEventResult, evaluate_panel
from .forecaster import (
    AdaptiveLossConfig,
    ForecasterArch,
    RollingWindowConfig,
    SyntheticControlSeries,
    TrainConfig,
    TrainedForecaster,
    TrainingSample,
    adaptive_loss,
    build_rolling_windows,
    extract_effect,
    gradient_check,
    insample_forecast,
    load_model,
    parameter_count,
    save_model,
    train,
    training_loss,
)
from .impact import (
    ImpactRatioModel,
    evaluate_mape,
    impact_ratio,
    model_from_estimates,
    predict_effect,
    year_scale,
)
from .montecarlo import (
    ComponentStats,
    MCConfig,
    MonteCarloReport,
    NormalityCheck,
    NormalityThresholds,
    RatePair,
    RateReport,
    check_normality,
    crosscov_oracle,
    finite_horizon_variances,
    mix_seed,
    rate_check_phi,
    run_replications,
)
from .panel import (
    ARProcessSpec,
    EventCalendar,
    EventWindow,
    PanelSeries,
    as_effect_vector,
    inject_treatment,
    simulate_ar1_panel,
    stationary_variance,
)

__version__ = "0.1.0"

__all__ = [
    "ARModelFit",
    "ARProcessSpec",
    "AdaptiveLossConfig",
    "CalendarEntry",
    "ComponentStats",
    "CounterfactualPanel",
    "DecompositionResult",
    "EvaluationReport",
    "EventCalendar",
    "EventWindow",
    "ForecasterArch",
    "ImpactRatioModel",
    "MCConfig",
    "MonteCarloReport",
    "NormalityCheck",
    "NormalityThresholds",
    "PanelSeries",
    "RatePair",
    "RateReport",
    "RollingWindowConfig",
    "SeriesEventResult",
    "SyntheticControlSeries",
    "TrainConfig",
    "TrainedForecaster",
    "TrainingDivergedError",
    "TrainingSample",
    "TreatmentEffectEstimate",
    "ValidationError",
    "adaptive_loss",
    "as_effect_vector",
    "average_effects",
    "bind_calendar",
    "build_rolling_windows",
    "centered_moving_average",
    "check_normality",
    "confidence_intervals",
    "crosscov_oracle",
    "direct_forecast",
    "effect_covariance",
    "estimate_effect",
    "evaluate_mape",
    "evaluate_panel",
    "extract_effect",
    "finite_horizon_variances",
    "fit_ar1_ols",
    "forecast_counterfactual",
    "gradient_check",
    "impact_ratio",
    "inject_treatment",
    "insample_forecast",
    "load_calendar",
    "load_model",
    "load_panel_csv",
    "mix_seed",
    "model_from_estimates",
    "parameter_count",
    "predict_effect",
    "rate_check_phi",
    "run_replications",
    "save_model",
    "seasonal_decompose",
    "simulate_ar1_panel",
    "stationary_variance",
    "train",
    "training_loss",
    "write_calendar_csv",
    "write_panel_csv",
    "year_scale",
]
