"""End-to-end comparison of the adaptive pipeline against both baselines.

For each series (department) and each recurring event, the last occurrence
is the prediction target and all earlier ones are training years:

* ours: train the adaptively weighted forecaster once per series on the full
  history, take the in-sample synthetic control, turn the training years'
  observed-minus-control gaps into impact ratios, and predict the target
  effect as (mean ratio) x (target year's pre-event scale).  The predicted
  total is control + predicted effect.
* DF: train a uniform-weight forecaster on data up to the target window only
  and use its out-of-sample forecast as the predicted total.
* SD: decompose the series (weekly + annual by default); the fitted values
  including the annual component are the predicted total.

Each method's MAPE against the observed window fills one Table-style row
(department, event, SD, DF, ours).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import direct_forecast, seasonal_decompose
from .errors import ValidationError
from .forecaster import (
    AdaptiveLossConfig,
    ForecasterArch,
    RollingWindowConfig,
    TrainConfig,
    build_rolling_windows,
    extract_effect,
    insample_forecast,
    train,
)
from .impact import (
    ImpactRatioModel,
    evaluate_mape,
    model_from_estimates,
    predict_effect,
    year_scale,
)
from .montecarlo import mix_seed
from .panel import EventCalendar, PanelSeries

__all__ = ["SeriesEventResult", "EvaluationReport", "evaluate_panel"]


@dataclass
class SeriesEventResult:
    series_id: str
    event: str
    mape_sd: float
    mape_df: float
    mape_ours: float
    predicted_effect: np.ndarray
    observed: np.ndarray
    control_ours: np.ndarray
    target_window: object
    impact_model: ImpactRatioModel


@dataclass
class EvaluationReport:
    results: list[SeriesEventResult] = field(default_factory=list)

    def mape_rows(self) -> list[tuple]:
        return [
            (r.series_id, r.event, r.mape_sd, r.mape_df, r.mape_ours)
            for r in self.results
        ]

    def mean_mape(self) -> dict[str, float]:
        if not self.results:
            raise ValidationError("no results to aggregate")
        return {
            "SD": float(np.mean([r.mape_sd for r in self.results])),
            "DF": float(np.mean([r.mape_df for r in self.results])),
            "ours": float(np.mean([r.mape_ours for r in self.results])),
        }

    def impact_models(self) -> list[ImpactRatioModel]:
        return [r.impact_model for r in self.results]


def evaluate_panel(
    panel: PanelSeries,
    calendar: EventCalendar,
    event_names: list[str] | None = None,
    fw_config: RollingWindowConfig | None = None,
    arch: ForecasterArch | None = None,
    loss_cfg: AdaptiveLossConfig | None = None,
    train_cfg: TrainConfig | None = None,
    periods: list[int] | None = None,
    scale_mode: str = "pre_event_month",
) -> EvaluationReport:
    """Run all three methods on every (series, event) pair.

    Events need at least two occurrences (training years plus the target).
    The per-series training seed is derived from ``train_cfg.seed`` so runs
    are reproducible end to end.
    """
    fw_config = fw_config or RollingWindowConfig()
    arch = arch or ForecasterArch()
    loss_cfg = loss_cfg or AdaptiveLossConfig()
    train_cfg = train_cfg or TrainConfig()
    periods = periods or [7, 365]
    names = event_names if event_names is not None else sorted(calendar.events)
    for name in names:
        if len(calendar.occurrences(name)) < 2:
            raise ValidationError(
                f"event {name!r} needs >= 2 occurrences (training years + target)"
            )

    report = EvaluationReport()
    for i, sid in enumerate(panel.series_ids):
        series = panel.series(i)
        samples = build_rolling_windows(series, fw_config, calendar)
        series_cfg = TrainConfig(
            epochs=train_cfg.epochs,
            batch_size=train_cfg.batch_size,
            learning_rate=train_cfg.learning_rate,
            final_learning_rate=train_cfg.final_learning_rate,
            seed=mix_seed(train_cfg.seed, i) % (2**32),
        )
        model = train(samples, arch, loss_cfg, series_cfg)
        control = insample_forecast(model, series, fw_config)

        for name in names:
            occurrences = calendar.occurrences(name)
            target = occurrences[-1]
            training_years = occurrences[:-1]

            per_year = {}
            for year, w in enumerate(training_years):
                est = extract_effect(control, series, w)
                scale = year_scale(series, w, mode=scale_mode, time_index=panel.time_index)
                per_year[year] = (est, scale)
            impact_model = model_from_estimates(name, per_year)
            target_scale = year_scale(
                series, target, mode=scale_mode, time_index=panel.time_index
            )
            predicted = predict_effect(impact_model, target_scale)

            idx = np.array(list(target.indices))
            observed = series[idx]
            control_window = control.values[idx]
            missing = control.missing(idx)
            if missing:
                raise ValidationError(
                    f"series {sid!r}: in-sample control does not cover indices {missing}"
                )
            mape_ours = evaluate_mape(control_window + predicted, observed)

            df_cfg = TrainConfig(
                epochs=train_cfg.epochs,
                batch_size=train_cfg.batch_size,
                learning_rate=train_cfg.learning_rate,
                final_learning_rate=train_cfg.final_learning_rate,
                seed=mix_seed(train_cfg.seed, 7919 + i) % (2**32),
            )
            df = direct_forecast(series, target, fw_config, arch, df_cfg)
            mape_df = evaluate_mape(df.values[idx], observed)

            decomposition, _ = seasonal_decompose(series, periods, target)
            mape_sd = evaluate_mape(decomposition.fitted_total[idx], observed)

            report.results.append(
                SeriesEventResult(
                    series_id=sid,
                    event=name,
                    mape_sd=mape_sd,
                    mape_df=mape_df,
                    mape_ours=mape_ours,
                    predicted_effect=predicted,
                    observed=observed,
                    control_ours=control_window,
                    target_window=target,
                    impact_model=impact_model,
                )
            )
    return report
