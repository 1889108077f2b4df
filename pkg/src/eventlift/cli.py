"""Command-line surface.

Each subcommand validates its flags into typed configs, dispatches to the
owning module, writes its artifacts under --out, and prints a one-line
summary.  Exit codes: 0 success, 2 validation problem (bad flags, bad input
files), 1 runtime failure.  All randomness is controlled by --seed, so a
repeated command writes byte-identical files.
"""

from __future__ import annotations

import argparse
import datetime
import sys
from pathlib import Path

import numpy as np

from . import ar, baselines, dataio, evaluation, forecaster, impact, montecarlo, reports
from .errors import ValidationError
from .panel import (
    ARProcessSpec,
    EventWindow,
    PanelSeries,
    inject_treatment,
    simulate_ar1_panel,
)

__all__ = ["run_command", "main"]


def _floats(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in raw.split(",") if v != "")
    except ValueError as exc:
        raise ValidationError(f"bad numeric list {raw!r}: {exc}") from exc


def _ints(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in raw.split(",") if v != "")
    except ValueError as exc:
        raise ValidationError(f"bad integer list {raw!r}: {exc}") from exc


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spec_from(args) -> ARProcessSpec:
    return ARProcessSpec(
        phi=args.phi,
        sigma=args.sigma,
        initial_mode=args.init_mode,
        initial_value=args.init_value,
    )


def _load_bound(args):
    panel = dataio.load_panel_csv(args.panel)
    entries = dataio.load_calendar(args.calendar)
    calendar = dataio.bind_calendar(entries, panel)
    return panel, calendar


def _series_row(panel: PanelSeries, sid: str) -> np.ndarray:
    if sid not in panel.series_ids:
        raise ValidationError(
            f"unknown series {sid!r}; panel has {', '.join(panel.series_ids)}"
        )
    return panel.series(panel.series_ids.index(sid))


def _occurrence(calendar, event: str, index: int) -> EventWindow:
    occ = calendar.occurrences(event)
    if index < -len(occ) or index >= len(occ):
        raise ValidationError(
            f"event {event!r} has {len(occ)} occurrences; index {index} is out of range"
        )
    return occ[index]


def _fw_config(args) -> forecaster.RollingWindowConfig:
    return forecaster.RollingWindowConfig(
        lookback=args.lookback, horizon=args.horizon, stride=args.stride
    )


def _arch(args) -> forecaster.ForecasterArch:
    return forecaster.ForecasterArch(
        hidden_sizes=_ints(args.hidden), activation=args.activation
    )


def _loss_cfg(args) -> forecaster.AdaptiveLossConfig:
    return forecaster.AdaptiveLossConfig(
        rare_weight=args.rare_weight,
        nonrare_weight=args.nonrare_weight,
        distance=args.distance,
        adaptation=args.adaptation,
    )


def _train_cfg(args) -> forecaster.TrainConfig:
    return forecaster.TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.lr,
        final_learning_rate=args.lr_final,
        seed=args.seed,
    )


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--phi", type=float, required=True, help="autoregressive coefficient")
    p.add_argument("--sigma", type=float, required=True, help="innovation standard deviation")
    p.add_argument(
        "--init-mode",
        choices=["stationary_draw", "fixed"],
        default="stationary_draw",
        help="how each series starts",
    )
    p.add_argument("--init-value", type=float, default=0.0)


def _add_training_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lookback", type=int, default=90)
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--hidden", default="64,64", help="hidden layer sizes, e.g. 64,64")
    p.add_argument("--activation", choices=["relu", "tanh"], default="relu")
    p.add_argument("--rare-weight", type=float, default=0.1)
    p.add_argument("--nonrare-weight", type=float, default=1.0)
    p.add_argument("--distance", choices=["absolute", "squared"], default="absolute")
    p.add_argument(
        "--adaptation", choices=["fixed", "residual_inverse"], default="fixed"
    )
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-final", type=float, default=None)


# ---------------------------------------------------------------------------
# handlers


def _cmd_simulate(args) -> int:
    out = _out_dir(args)
    spec = _spec_from(args)
    window = EventWindow(t0=args.t0, d=args.d)
    delta = _floats(args.delta)
    horizon = args.t0 + args.d + args.extra_days
    panel = simulate_ar1_panel(spec, args.n, horizon, args.seed)
    treated = inject_treatment(panel, window, delta)
    start = datetime.date.fromisoformat(args.start_date)
    dates = tuple(start + datetime.timedelta(days=i) for i in range(horizon + 1))
    dated = PanelSeries(
        values=treated.values, time_index=dates, series_ids=treated.series_ids
    )
    dataio.write_panel_csv(out / "panel.csv", dated)
    entry = dataio.CalendarEntry(
        event=args.event_name,
        start=dates[window.t0 + 1],
        end=dates[window.t0 + window.d],
    )
    dataio.write_calendar_csv(out / "calendar.csv", [entry])
    print(
        f"simulated {args.n} series x {horizon + 1} days with effect on "
        f"{entry.start}..{entry.end}; wrote {out / 'panel.csv'} and {out / 'calendar.csv'}"
    )
    return 0


def _cmd_fit_ar(args) -> int:
    out = _out_dir(args)
    panel = dataio.load_panel_csv(args.panel)
    fit = ar.fit_ar1_ols(panel, args.t0)
    path = out / "ar_fit.csv"
    import csv as _csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["phi_hat", "sigma2_hat", "n_pairs"])
        writer.writerow([repr(fit.phi_hat), repr(fit.sigma2_hat), fit.n_pairs])
    print(
        f"fit phi_hat={fit.phi_hat:.6f} sigma2_hat={fit.sigma2_hat:.6f} "
        f"on {fit.n_pairs} pairs; wrote {path}"
    )
    return 0


def _cmd_estimate(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    window = _occurrence(calendar, args.event, args.occurrence)
    t0_fit = args.fit_t0 if args.fit_t0 is not None else window.t0
    fit = ar.fit_ar1_ols(panel, t0_fit)
    cf = ar.forecast_counterfactual(fit, panel, window)
    est = ar.estimate_effect(panel, cf, window)
    cov = ar.effect_covariance(fit, window, panel.n_series, args.variance_mode)
    cis = ar.confidence_intervals(est, cov, args.level)
    reports.write_effect_csv(out / "effect.csv", est, cis)

    context = max(0, window.t0 - 5 * window.d - 10)
    stop = window.t0 + window.d + 1
    observed_mean = panel.values.mean(axis=0)[context:stop]
    cf_mean = np.full(stop - context, np.nan)
    cf_mean[window.t0 + 1 - context :] = cf.values.mean(axis=0)
    reports.svg_line_plot(
        out / "effect_plot.svg",
        {"observed mean": observed_mean, "counterfactual mean": cf_mean},
        x=np.arange(context, stop),
        shaded=(window.t0 + 1, window.t0 + window.d),
        title=f"{args.event}: observed vs counterfactual",
    )
    summary = ", ".join(f"{v:.4f}" for v in est.delta_hat)
    print(
        f"effect on {args.event} (t0={window.t0}, d={window.d}): [{summary}]; "
        f"wrote {out / 'effect.csv'} and {out / 'effect_plot.svg'}"
    )
    return 0


def _cmd_mc_validate(args) -> int:
    out = _out_dir(args)
    spec = _spec_from(args)
    window = EventWindow(t0=args.t0, d=args.d)
    config = montecarlo.MCConfig(
        spec=spec,
        n_series=args.n,
        t0=args.t0,
        window=window,
        delta=_floats(args.delta),
        replications=args.reps,
        master_seed=args.seed,
        ci_level=args.level,
        variance_mode=args.variance_mode,
        standardize=args.standardize,
    )
    report = montecarlo.run_replications(config, n_jobs=args.jobs)
    reports.write_mc_report_csv(out / "mc_report.csv", report)
    reports.write_crosscov_csv(out / "mc_crosscov.csv", report)
    reports.write_notes(out / "mc_notes.txt", report.notes)
    reports.svg_histogram(
        out / "mc_report.svg",
        report.standardized_errors[:, 0],
        title="standardized effect error, window day 1",
    )
    for k, comp in enumerate(report.per_component):
        print(
            f"day {k + 1}: bias={comp.mean_bias:+.4f} "
            f"var={comp.empirical_var_scaled:.4f} "
            f"(finite {comp.theoretical_var_finite:.4f}, "
            f"asymptotic {comp.theoretical_var_asymptotic:.4f}) "
            f"coverage={comp.ci_coverage:.4f}"
        )
    for note in report.notes:
        print(f"note: {note}")
    print(f"wrote mc_report.csv, mc_crosscov.csv, mc_notes.txt, mc_report.svg in {out}")
    return 0


def _cmd_rate_check(args) -> int:
    out = _out_dir(args)
    spec = _spec_from(args)
    report = montecarlo.rate_check_phi(
        spec, args.t0, _ints(args.grid), args.reps, args.seed
    )
    reports.write_rate_csv(out / "rate_report.csv", report)
    for pair in report.pairs:
        print(
            f"N={pair.n_small} -> N={pair.n_large}: sd ratio {pair.ratio:.3f} "
            f"(root-N reference {pair.expected_ratio:.3f})"
        )
    print(f"wrote {out / 'rate_report.csv'}")
    return 0


def _cmd_train(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    series = _series_row(panel, args.series)
    config = _fw_config(args)
    samples = forecaster.build_rolling_windows(series, config, calendar)
    model = forecaster.train(samples, _arch(args), _loss_cfg(args), _train_cfg(args))
    model_path = out / f"model_{args.series}.json"
    forecaster.save_model(model, model_path)
    import csv as _csv

    with open(out / "training_log.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for epoch, loss in enumerate(model.loss_history):
            writer.writerow([epoch, repr(loss)])
    print(
        f"trained on {len(samples)} windows; final epoch loss "
        f"{model.loss_history[-1]:.6f}; wrote {model_path}"
    )
    return 0


def _cmd_extract(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    series = _series_row(panel, args.series)
    model = forecaster.load_model(args.model)
    config = forecaster.RollingWindowConfig(
        lookback=model.lookback, horizon=model.horizon, stride=args.stride
    )
    window = _occurrence(calendar, args.event, args.occurrence)
    synthetic = forecaster.insample_forecast(model, series, config, aggregate=args.aggregate)
    est = forecaster.extract_effect(synthetic, series, window)
    reports.write_effect_csv(out / "effect.csv", est)
    context = max(0, window.t0 - 5 * window.d - 10)
    stop = min(len(series), window.t0 + window.d + 1 + window.d)
    reports.svg_line_plot(
        out / "synthetic_plot.svg",
        {
            "observed": series[context:stop],
            "synthetic control": synthetic.values[context:stop],
        },
        x=np.arange(context, stop),
        shaded=(window.t0 + 1, window.t0 + window.d),
        title=f"{args.series}: observed vs synthetic control ({args.event})",
    )
    summary = ", ".join(f"{v:.4f}" for v in est.delta_hat)
    print(
        f"extracted effect for {args.event} on {args.series}: [{summary}]; "
        f"wrote {out / 'effect.csv'} and {out / 'synthetic_plot.svg'}"
    )
    return 0


def _cmd_baseline_df(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    series = _series_row(panel, args.series)
    window = _occurrence(calendar, args.event, args.occurrence)
    control = baselines.direct_forecast(
        series,
        window,
        _fw_config(args),
        arch=_arch(args),
        train_cfg=_train_cfg(args),
        predictor=args.predictor,
    )
    est = forecaster.extract_effect(control, series, window)
    reports.write_effect_csv(out / "df_effect.csv", est)
    import csv as _csv

    with open(out / "df_control.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "value"])
        for t in control.support:
            writer.writerow([int(t), repr(float(control.values[t]))])
    summary = ", ".join(f"{v:.4f}" for v in est.delta_hat)
    print(
        f"direct-forecast ({args.predictor}) effect for {args.event} on "
        f"{args.series}: [{summary}]; wrote {out / 'df_effect.csv'} and "
        f"{out / 'df_control.csv'}"
    )
    return 0


def _cmd_baseline_sd(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    series = _series_row(panel, args.series)
    window = _occurrence(calendar, args.event, args.occurrence)
    periods = list(_ints(args.periods))
    decomposition, control = baselines.seasonal_decompose(series, periods, window)
    import csv as _csv

    with open(out / "sd_control.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "control", "total"])
        for t in window.indices:
            writer.writerow(
                [
                    t,
                    repr(float(control.values[t])),
                    repr(float(decomposition.fitted_total[t])),
                ]
            )
    ordered = sorted(periods)
    with open(out / "decomposition.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["t", "trend"]
            + [f"seasonal_{p}" for p in ordered]
            + ["remainder"]
        )
        for t in range(len(series)):
            writer.writerow(
                [t, repr(float(decomposition.trend[t]))]
                + [repr(float(decomposition.seasonal_components[p][t])) for p in ordered]
                + [repr(float(decomposition.remainder[t]))]
            )
    est = forecaster.extract_effect(control, series, window)
    summary = ", ".join(f"{v:.4f}" for v in est.delta_hat)
    print(
        f"seasonal-decomposition effect for {args.event} on {args.series}: "
        f"[{summary}]; wrote {out / 'sd_control.csv'} and {out / 'decomposition.csv'}"
    )
    return 0


def _cmd_impact(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    series = _series_row(panel, args.series)
    occurrences = calendar.occurrences(args.event)
    if len(occurrences) < 2:
        raise ValidationError(
            f"event {args.event!r} needs >= 2 occurrences (training years + target)"
        )
    target = occurrences[-1]
    training_years = occurrences[:-1]

    if args.method == "model":
        if args.model is None:
            raise ValidationError("--method model needs --model")
        model = forecaster.load_model(args.model)
        config = forecaster.RollingWindowConfig(
            lookback=model.lookback, horizon=model.horizon, stride=args.stride
        )
        synthetic = forecaster.insample_forecast(model, series, config)

        def estimate(window):
            return forecaster.extract_effect(synthetic, series, window)

    else:

        def estimate(window):
            fit = ar.fit_ar1_ols(PanelSeries(series[None, :]), window.t0)
            cf = ar.forecast_counterfactual(fit, PanelSeries(series[None, :]), window)
            return ar.estimate_effect(PanelSeries(series[None, :]), cf, window)

    per_year = {}
    for year, window in enumerate(training_years):
        est = estimate(window)
        scale = impact.year_scale(
            series, window, mode=args.scale_mode, time_index=panel.time_index
        )
        per_year[year] = (est, scale)
    model_ratio = impact.model_from_estimates(args.event, per_year)
    target_scale = impact.year_scale(
        series, target, mode=args.scale_mode, time_index=panel.time_index
    )
    predicted = impact.predict_effect(model_ratio, target_scale)

    reports.write_impact_csv(out / "impact.csv", [model_ratio])
    import csv as _csv

    with open(out / "prediction.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "predicted_effect"])
        for k, value in enumerate(predicted):
            writer.writerow([k + 1, repr(float(value))])
    summary = ", ".join(f"{v:.4f}" for v in predicted)
    print(
        f"predicted {args.event} effect for the target year (scale "
        f"{target_scale:.4f}): [{summary}]; wrote {out / 'impact.csv'} and "
        f"{out / 'prediction.csv'}"
    )
    return 0


def _cmd_evaluate(args) -> int:
    out = _out_dir(args)
    panel, calendar = _load_bound(args)
    names = args.events.split(",") if args.events else None
    report = evaluation.evaluate_panel(
        panel,
        calendar,
        event_names=names,
        fw_config=_fw_config(args),
        arch=_arch(args),
        loss_cfg=_loss_cfg(args),
        train_cfg=_train_cfg(args),
        periods=list(_ints(args.periods)),
        scale_mode=args.scale_mode,
    )
    reports.write_mape_csv(out / "mape.csv", report.mape_rows())
    labeled = []
    for r in report.results:
        model = impact.ImpactRatioModel(
            event_name=f"{r.series_id}/{r.event}", per_year=dict(r.impact_model.per_year)
        )
        labeled.append(model)
    reports.write_impact_csv(out / "impact.csv", labeled)
    import csv as _csv

    with open(out / "predictions.csv", "w", encoding="utf-8", newline="") as fh:
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(["department", "event", "k", "predicted_effect", "control", "observed"])
        for r in report.results:
            for k in range(len(r.predicted_effect)):
                writer.writerow(
                    [
                        r.series_id,
                        r.event,
                        k + 1,
                        repr(float(r.predicted_effect[k])),
                        repr(float(r.control_ours[k])),
                        repr(float(r.observed[k])),
                    ]
                )
    means = report.mean_mape()
    print(
        f"mean MAPE over {len(report.results)} (series, event) pairs: "
        f"SD={means['SD']:.2f} DF={means['DF']:.2f} ours={means['ours']:.2f}; "
        f"wrote mape.csv, impact.csv, predictions.csv in {out}"
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eventlift",
        description="Estimate effects of recurring rare events in panel time series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a panel with an injected event effect")
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True, help="number of series")
    p.add_argument("--t0", type=int, required=True, help="last pre-event index")
    p.add_argument("--d", type=int, required=True, help="event window length")
    p.add_argument("--delta", required=True, help="per-day effects, e.g. 2,-1,0.5")
    p.add_argument("--extra-days", type=int, default=0, help="days to simulate past the window")
    p.add_argument("--start-date", default="2013-01-01")
    p.add_argument("--event-name", default="event")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_simulate)

    p = sub.add_parser("fit-ar", help="fit the autoregressive model on pre-event data")
    p.add_argument("--panel", required=True)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_fit_ar)

    p = sub.add_parser("estimate", help="recursive-counterfactual effect estimate with CIs")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--occurrence", type=int, default=0)
    p.add_argument("--fit-t0", type=int, default=None, help="override the fit range")
    p.add_argument(
        "--variance-mode",
        choices=["finite_horizon", "asymptotic_diagonal"],
        default="finite_horizon",
    )
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_estimate)

    p = sub.add_parser("mc-validate", help="replication study of the estimator")
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument(
        "--variance-mode",
        choices=["finite_horizon", "asymptotic_diagonal"],
        default="finite_horizon",
    )
    p.add_argument("--standardize", choices=["oracle", "estimated"], default="oracle")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_mc_validate)

    p = sub.add_parser("rate-check", help="root-N convergence check for the AR fit")
    _add_spec_flags(p)
    p.add_argument("--t0", type=int, required=True)
    p.add_argument("--grid", required=True, help="panel widths, e.g. 250,1000")
    p.add_argument("--reps", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_rate_check)

    p = sub.add_parser("train", help="train the adaptively weighted forecaster")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--series", required=True)
    _add_training_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_train)

    p = sub.add_parser("extract", help="in-sample synthetic control and effect")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--occurrence", type=int, default=-1)
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--aggregate", choices=["mean", "median"], default="mean")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_extract)

    p = sub.add_parser("baseline-df", help="direct out-of-sample forecast baseline")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--occurrence", type=int, default=-1)
    p.add_argument("--predictor", choices=["mlp", "ar1"], default="mlp")
    _add_training_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_baseline_df)

    p = sub.add_parser("baseline-sd", help="seasonal-decomposition baseline")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--occurrence", type=int, default=-1)
    p.add_argument("--periods", default="7,365")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_baseline_sd)

    p = sub.add_parser("impact", help="impact ratios and next-occurrence prediction")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--event", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--method", choices=["ar", "model"], default="ar")
    p.add_argument("--model", default=None, help="model file for --method model")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument(
        "--scale-mode",
        choices=["pre_event_month", "calendar_month"],
        default="pre_event_month",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_impact)

    p = sub.add_parser("evaluate", help="compare ours vs DF vs SD on every series")
    p.add_argument("--panel", required=True)
    p.add_argument("--calendar", required=True)
    p.add_argument("--events", default=None, help="comma-separated subset of events")
    _add_training_flags(p)
    p.add_argument("--periods", default="7,365")
    p.add_argument(
        "--scale-mode",
        choices=["pre_event_month", "calendar_month"],
        default="pre_event_month",
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=_cmd_evaluate)

    return parser


def run_command(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if exc.code is not None else 0
        return code if isinstance(code, int) else 2
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
