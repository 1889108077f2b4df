"""Forecaster pipeline: rolling windows, weighted loss, a small net, and
in-sample synthetic-control extraction.

The idea: train a forecaster on the full series with forecast errors inside
rare-event windows down-weighted, so the model learns the routine signal
(trend, seasonality) but not the event spikes.  Re-forecasting the training
range in-sample then yields a synthetic control; the observed-minus-control
gap on an event window is the effect estimate.

The forecaster itself is a small fully connected net implemented directly on
numpy arrays: parameters live in one flat vector, gradients come from manual
backpropagation, and training is plain mini-batch gradient descent with a
seeded shuffle.  Everything is deterministic given the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import TrainingDivergedError, ValidationError
from .panel import EventCalendar, EventWindow
from .ar import TreatmentEffectEstimate

__all__ = [
    "RollingWindowConfig",
    "TrainingSample",
    "AdaptiveLossConfig",
    "ForecasterArch",
    "TrainConfig",
    "TrainedForecaster",
    "SyntheticControlSeries",
    "build_rolling_windows",
    "adaptive_loss",
    "train",
    "training_loss",
    "insample_forecast",
    "extract_effect",
    "gradient_check",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class RollingWindowConfig:
    """Sliding-window layout: ``lookback`` input steps predict the next
    ``horizon`` steps; consecutive windows start ``stride`` apart."""

    lookback: int = 90
    horizon: int = 30
    stride: int = 1

    def __post_init__(self):
        if self.lookback < 1:
            raise ValidationError(f"lookback must be >= 1, got {self.lookback}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be >= 1, got {self.horizon}")
        if self.stride < 1:
            raise ValidationError(f"stride must be >= 1, got {self.stride}")


@dataclass
class TrainingSample:
    """One window: ``input`` covers ``lookback`` steps ending right before
    ``label_start``; ``label`` covers the following ``horizon`` steps.
    ``rare_mask[k]`` is true when label step ``label_start + k`` falls inside
    any event window."""

    input: np.ndarray
    label: np.ndarray
    label_start: int
    rare_mask: np.ndarray

    def __post_init__(self):
        self.input = np.asarray(self.input, dtype=float)
        self.label = np.asarray(self.label, dtype=float)
        self.rare_mask = np.asarray(self.rare_mask, dtype=bool)
        if self.input.ndim != 1 or self.label.ndim != 1:
            raise ValidationError("sample input and label must be 1-D")
        if self.rare_mask.shape != self.label.shape:
            raise ValidationError("rare_mask length must match label length")


@dataclass(frozen=True)
class AdaptiveLossConfig:
    """Weights for forecast errors inside vs outside rare-event windows.

    ``rare_weight`` < ``nonrare_weight`` makes the model under-fit events so
    their signal stays in the residuals.  ``distance`` picks the per-step
    error (absolute or squared).  ``adaptation`` is either ``fixed`` or
    ``residual_inverse``, which rescales each sample's rare weight by the
    inverse of its current rare-window residual once per epoch (renormalized
    so the mean rare weight stays at ``rare_weight``).
    """

    rare_weight: float = 0.1
    nonrare_weight: float = 1.0
    distance: str = "absolute"
    adaptation: str = "fixed"
    adaptation_floor: float = 1e-3

    def __post_init__(self):
        if self.rare_weight < 0 or self.nonrare_weight < 0:
            raise ValidationError("loss weights must be >= 0")
        if self.rare_weight + self.nonrare_weight <= 0:
            raise ValidationError("at least one loss weight must be positive")
        if self.distance not in ("absolute", "squared"):
            raise ValidationError(f"distance must be 'absolute' or 'squared', got {self.distance!r}")
        if self.adaptation not in ("fixed", "residual_inverse"):
            raise ValidationError(
                f"adaptation must be 'fixed' or 'residual_inverse', got {self.adaptation!r}"
            )
        if self.adaptation_floor <= 0:
            raise ValidationError("adaptation_floor must be > 0")


@dataclass(frozen=True)
class ForecasterArch:
    hidden_sizes: tuple[int, ...] = (64, 64)
    activation: str = "relu"

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.hidden_sizes or any(h < 1 for h in self.hidden_sizes):
            raise ValidationError(f"hidden sizes must be positive, got {self.hidden_sizes}")
        if self.activation not in ("relu", "tanh"):
            raise ValidationError(f"activation must be 'relu' or 'tanh', got {self.activation!r}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 200
    batch_size: int = 32
    learning_rate: float = 0.01
    final_learning_rate: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValidationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.final_learning_rate is not None and self.final_learning_rate <= 0:
            raise ValidationError("final_learning_rate must be > 0 when set")


def _layer_shapes(layer_sizes: Sequence[int]) -> list[tuple[int, int]]:
    return [(layer_sizes[i], layer_sizes[i + 1]) for i in range(len(layer_sizes) - 1)]


def parameter_count(layer_sizes: Sequence[int]) -> int:
    return sum((fi + 1) * fo for fi, fo in _layer_shapes(layer_sizes))


def _unpack(theta: np.ndarray, layer_sizes: Sequence[int]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split the flat parameter vector into (weights, bias) views per layer."""
    out = []
    pos = 0
    for fi, fo in _layer_shapes(layer_sizes):
        W = theta[pos : pos + fi * fo].reshape(fi, fo)
        pos += fi * fo
        b = theta[pos : pos + fo]
        pos += fo
        out.append((W, b))
    return out


@dataclass
class TrainedForecaster:
    """Immutable result of training: architecture, flat parameters, and the
    per-series normalization (shift, scale) recorded at train time."""

    layer_sizes: tuple[int, ...]
    theta: np.ndarray
    activation: str
    shift: float
    scale: float
    loss_history: tuple[float, ...] = ()

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValidationError(f"bad layer sizes {self.layer_sizes}")
        if self.activation not in ("relu", "tanh"):
            raise ValidationError(f"bad activation {self.activation!r}")
        theta = np.asarray(self.theta, dtype=float)
        expected = parameter_count(self.layer_sizes)
        if theta.shape != (expected,):
            raise ValidationError(
                f"parameter vector has {theta.size} entries, layout needs {expected}"
            )
        if not np.all(np.isfinite(theta)):
            raise ValidationError("parameters must all be finite")
        if self.scale <= 0:
            raise ValidationError(f"normalization scale must be > 0, got {self.scale}")
        theta = theta.copy()
        theta.setflags(write=False)
        self.theta = theta

    @property
    def lookback(self) -> int:
        return self.layer_sizes[0]

    @property
    def horizon(self) -> int:
        return self.layer_sizes[-1]

    def predict(self, inputs: np.ndarray) -> np.ndarray:
        """Forecast from raw (unnormalized) inputs; shape (M,) or (B, M)."""
        x = np.asarray(inputs, dtype=float)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.shape[1] != self.lookback:
            raise ValidationError(
                f"input width {x.shape[1]} != model lookback {self.lookback}"
            )
        z = (x - self.shift) / self.scale
        acts, _ = _forward(self.theta, self.layer_sizes, self.activation, z)
        pred = acts[-1] * self.scale + self.shift
        return pred[0] if single else pred


def _forward(theta, layer_sizes, activation, X):
    """Return (activations, preactivations); the final layer is linear."""
    layers = _unpack(theta, layer_sizes)
    acts = [X]
    pres = []
    a = X
    for li, (W, b) in enumerate(layers):
        z = a @ W + b
        pres.append(z)
        if li < len(layers) - 1:
            a = np.maximum(z, 0.0) if activation == "relu" else np.tanh(z)
        else:
            a = z
        acts.append(a)
    return acts, pres


def _backward(theta, layer_sizes, activation, acts, pres, dpred):
    """Flat gradient of the loss given d(loss)/d(prediction)."""
    layers = _unpack(theta, layer_sizes)
    n_layers = len(layers)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * n_layers  # type: ignore
    delta = dpred
    for li in reversed(range(n_layers)):
        if li < n_layers - 1:
            if activation == "relu":
                delta = delta * (pres[li] > 0)
            else:
                delta = delta * (1.0 - acts[li + 1] ** 2)
        W, _ = layers[li]
        grads[li] = (acts[li].T @ delta, delta.sum(axis=0))
        if li > 0:
            delta = delta @ W.T
    return np.concatenate([np.concatenate([gW.ravel(), gb]) for gW, gb in grads])


def build_rolling_windows(
    series: np.ndarray,
    config: RollingWindowConfig,
    calendar: EventCalendar | None = None,
) -> list[TrainingSample]:
    """Slice one series into overlapping (input, label) windows.

    Sample i covers input indices [i*s, i*s+M) and label indices
    [i*s+M, i*s+M+H); i runs to ((len-M-H) // s).  Rare masks are set from
    the calendar (no calendar means all-false masks).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValidationError("build_rolling_windows expects a single 1-D series")
    M, H, s = config.lookback, config.horizon, config.stride
    if len(x) < M + H:
        raise ValidationError(
            f"series length {len(x)} < lookback + horizon = {M + H}"
        )
    event_idx = calendar.window_indices() if calendar is not None else frozenset()
    samples = []
    for start in range(0, len(x) - M - H + 1, s):
        label_start = start + M
        mask = np.array(
            [(label_start + k) in event_idx for k in range(H)], dtype=bool
        )
        samples.append(
            TrainingSample(
                input=x[start : start + M].copy(),
                label=x[label_start : label_start + H].copy(),
                label_start=label_start,
                rare_mask=mask,
            )
        )
    return samples


def _eta_and_grad(diff: np.ndarray, distance: str):
    if distance == "absolute":
        return np.abs(diff), np.sign(diff)
    return diff**2, 2.0 * diff


def adaptive_loss(
    pred: np.ndarray,
    label: np.ndarray,
    mask: np.ndarray,
    cfg: AdaptiveLossConfig,
) -> tuple[float, np.ndarray]:
    """Weighted per-window loss for one sample.

    Returns (rare_weight * sum of rare-step errors + nonrare_weight * sum of
    the rest, unweighted per-step errors).  Averaging over a batch of samples
    is the caller's job.
    """
    p = np.asarray(pred, dtype=float)
    y = np.asarray(label, dtype=float)
    m = np.asarray(mask, dtype=bool)
    if p.shape != y.shape or p.shape != m.shape or p.ndim != 1:
        raise ValidationError(
            f"pred/label/mask must be equal-length vectors, got {p.shape}, {y.shape}, {m.shape}"
        )
    eta, _ = _eta_and_grad(p - y, cfg.distance)
    loss = cfg.rare_weight * eta[m].sum() + cfg.nonrare_weight * eta[~m].sum()
    return float(loss), eta


def _stack_samples(samples: Sequence[TrainingSample]):
    if not samples:
        raise ValidationError("need at least one training sample")
    M = samples[0].input.size
    H = samples[0].label.size
    for s in samples:
        if s.input.size != M or s.label.size != H:
            raise ValidationError("all samples must share input and label widths")
    X = np.stack([s.input for s in samples])
    Y = np.stack([s.label for s in samples])
    mask = np.stack([s.rare_mask for s in samples])
    return X, Y, mask


def _normalization(X: np.ndarray, Y: np.ndarray) -> tuple[float, float]:
    """Median shift and interquartile-range scale over all training values.

    Robust to the event spikes themselves; a degenerate (constant) series
    falls back to scale 1.0.
    """
    vals = np.concatenate([X.ravel(), Y.ravel()])
    shift = float(np.median(vals))
    q75, q25 = np.percentile(vals, [75.0, 25.0])
    scale = float(q75 - q25)
    if scale <= 0:
        scale = 1.0
    return shift, scale


def _rare_weights(
    theta, layer_sizes, activation, X, Y, mask, cfg: AdaptiveLossConfig
) -> np.ndarray:
    """Per-sample rare weights for the residual_inverse adaptation mode."""
    B = X.shape[0]
    base = np.full(B, cfg.rare_weight)
    if cfg.adaptation != "residual_inverse":
        return base
    acts, _ = _forward(theta, layer_sizes, activation, X)
    eta, _ = _eta_and_grad(acts[-1] - Y, cfg.distance)
    rare_resid = (eta * mask).sum(axis=1)
    has_rare = mask.any(axis=1)
    if not has_rare.any():
        return base
    raw = 1.0 / (cfg.adaptation_floor + rare_resid)
    out = base.copy()
    out[has_rare] = cfg.rare_weight * raw[has_rare] / raw[has_rare].mean()
    return out


def train(
    samples: Sequence[TrainingSample],
    arch: ForecasterArch,
    loss_cfg: AdaptiveLossConfig,
    train_cfg: TrainConfig,
) -> TrainedForecaster:
    """Mini-batch gradient descent on the batch-mean adaptive loss.

    Inputs and labels are normalized by the robust per-series (shift, scale)
    before training; the pair is recorded on the model for exact
    denormalization.  Identical samples, configs, and seed give bit-identical
    parameters.  A non-finite loss aborts with the offending epoch.
    """
    X_raw, Y_raw, mask = _stack_samples(samples)
    shift, scale = _normalization(X_raw, Y_raw)
    X = (X_raw - shift) / scale
    Y = (Y_raw - shift) / scale
    layer_sizes = (X.shape[1], *arch.hidden_sizes, Y.shape[1])

    rng = np.random.default_rng(train_cfg.seed)
    parts = []
    for fi, fo in _layer_shapes(layer_sizes):
        bound = 1.0 / np.sqrt(fi)
        parts.append(rng.uniform(-bound, bound, size=fi * fo))
        parts.append(rng.uniform(-bound, bound, size=fo))
    theta = np.concatenate(parts)

    B = X.shape[0]
    lr0 = train_cfg.learning_rate
    lr1 = train_cfg.final_learning_rate if train_cfg.final_learning_rate is not None else lr0
    history = []
    for epoch in range(train_cfg.epochs):
        frac = epoch / max(train_cfg.epochs - 1, 1)
        lr = lr0 + (lr1 - lr0) * frac
        w1 = _rare_weights(theta, layer_sizes, arch.activation, X, Y, mask, loss_cfg)
        perm = rng.permutation(B)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, B, train_cfg.batch_size):
            idx = perm[start : start + train_cfg.batch_size]
            acts, pres = _forward(theta, layer_sizes, arch.activation, X[idx])
            diff = acts[-1] - Y[idx]
            eta, deta = _eta_and_grad(diff, loss_cfg.distance)
            wv = np.where(mask[idx], w1[idx][:, None], loss_cfg.nonrare_weight)
            batch_loss = float((wv * eta).sum(axis=1).mean())
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(epoch, batch_loss)
            grad = _backward(
                theta, layer_sizes, arch.activation, acts, pres, wv * deta / len(idx)
            )
            theta = theta - lr * grad
            epoch_loss += batch_loss
            n_batches += 1
        history.append(epoch_loss / n_batches)

    return TrainedForecaster(
        layer_sizes=layer_sizes,
        theta=theta,
        activation=arch.activation,
        shift=shift,
        scale=scale,
        loss_history=tuple(history),
    )


def training_loss(
    model: TrainedForecaster,
    samples: Sequence[TrainingSample],
    loss_cfg: AdaptiveLossConfig,
) -> float:
    """Batch-mean adaptive loss of a model on samples, in normalized units.

    Uses fixed weights (the adaptation mode, if any, applies only inside the
    training loop).
    """
    X_raw, Y_raw, mask = _stack_samples(samples)
    X = (X_raw - model.shift) / model.scale
    Y = (Y_raw - model.shift) / model.scale
    acts, _ = _forward(model.theta, model.layer_sizes, model.activation, X)
    eta, _ = _eta_and_grad(acts[-1] - Y, loss_cfg.distance)
    wv = np.where(mask, loss_cfg.rare_weight, loss_cfg.nonrare_weight)
    return float((wv * eta).sum(axis=1).mean())


@dataclass
class SyntheticControlSeries:
    """Aggregated in-sample forecasts along one series.

    ``values[t]`` is the mean of every horizon prediction covering index t
    (NaN where no window covers it); ``counts[t]`` is how many predictions
    were averaged.  The support is exactly the indices with counts >= 1;
    the first ``lookback`` indices are never supported.
    """

    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        if self.values.shape != self.counts.shape or self.values.ndim != 1:
            raise ValidationError("values and counts must be equal-length vectors")
        on = self.counts >= 1
        if not np.all(np.isfinite(self.values[on])):
            raise ValidationError("values must be finite on the supported indices")

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.counts >= 1)

    def missing(self, indices) -> list[int]:
        return [int(t) for t in indices if t < 0 or t >= len(self.counts) or self.counts[t] < 1]


def insample_forecast(
    model: TrainedForecaster,
    series: np.ndarray,
    config: RollingWindowConfig,
    aggregate: str = "mean",
) -> SyntheticControlSeries:
    """Re-forecast every rolling window and combine overlapping predictions.

    Each supported index t gets the mean (or median) of all horizon
    predictions that land on it, denormalized back to the series scale.
    """
    if config.lookback != model.lookback or config.horizon != model.horizon:
        raise ValidationError(
            f"config (M={config.lookback}, H={config.horizon}) does not match "
            f"model (M={model.lookback}, H={model.horizon})"
        )
    if aggregate not in ("mean", "median"):
        raise ValidationError(f"aggregate must be 'mean' or 'median', got {aggregate!r}")
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValidationError("insample_forecast expects a single 1-D series")
    M, H, s = config.lookback, config.horizon, config.stride
    if len(x) < M + H:
        raise ValidationError(f"series length {len(x)} < lookback + horizon = {M + H}")
    starts = range(0, len(x) - M - H + 1, s)
    inputs = np.stack([x[i : i + M] for i in starts])
    preds = model.predict(inputs)
    counts = np.zeros(len(x), dtype=int)
    for i in starts:
        counts[i + M : i + M + H] += 1
    values = np.full(len(x), np.nan)
    on = counts >= 1
    if aggregate == "mean":
        sums = np.zeros(len(x))
        for row, i in enumerate(starts):
            sums[i + M : i + M + H] += preds[row]
        values[on] = sums[on] / counts[on]
    else:
        stacked = np.full((len(inputs), len(x)), np.nan)
        for row, i in enumerate(starts):
            stacked[row, i + M : i + M + H] = preds[row]
        values[on] = np.nanmedian(stacked[:, on], axis=0)
    return SyntheticControlSeries(values=values, counts=counts)


def extract_effect(
    synthetic: SyntheticControlSeries,
    series: np.ndarray,
    window: EventWindow,
) -> TreatmentEffectEstimate:
    """Observed minus synthetic control on the event window, one series.

    Covariance stays unset: the net has no closed-form sampling variance.
    Cross-series pooling is done by averaging the per-series estimates.
    """
    x = np.asarray(series, dtype=float)
    window.check_fits(len(x) - 1)
    idx = list(window.indices)
    missing = synthetic.missing(idx)
    if missing:
        raise ValidationError(
            f"synthetic control does not cover window indices {missing}"
        )
    delta = x[idx] - synthetic.values[idx]
    return TreatmentEffectEstimate(window=window, delta_hat=delta, n_series=1)


def gradient_check(
    model: TrainedForecaster,
    sample: TrainingSample,
    loss_cfg: AdaptiveLossConfig,
    epsilon: float = 1e-6,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Each parameter is perturbed by +/- epsilon.  Perturbations that flip a
    relu preactivation sign or an absolute-error residual sign straddle a
    kink where the two-sided difference is meaningless, so those parameters
    are skipped.  Errors below 1e-8 in magnitude are compared absolutely.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    X = ((np.asarray(sample.input, dtype=float) - model.shift) / model.scale)[None, :]
    Y = ((np.asarray(sample.label, dtype=float) - model.shift) / model.scale)[None, :]
    mask = np.asarray(sample.rare_mask, dtype=bool)[None, :]
    wv = np.where(mask, loss_cfg.rare_weight, loss_cfg.nonrare_weight)
    sizes = model.layer_sizes
    act = model.activation

    def evaluate(theta):
        acts, pres = _forward(theta, sizes, act, X)
        diff = acts[-1] - Y
        eta, deta = _eta_and_grad(diff, loss_cfg.distance)
        loss = float((wv * eta).sum())
        return loss, diff, pres, acts, deta

    theta0 = model.theta.astype(float).copy()
    _, _, pres0, acts0, deta0 = evaluate(theta0)
    analytic = _backward(theta0, sizes, act, acts0, pres0, wv * deta0)

    def signature(diff, pres):
        hidden = [p > 0 for p in pres[:-1]] if act == "relu" else []
        resid = [np.sign(diff)] if loss_cfg.distance == "absolute" else []
        return hidden, resid

    max_err = 0.0
    for j in range(theta0.size):
        tp = theta0.copy()
        tp[j] += epsilon
        tm = theta0.copy()
        tm[j] -= epsilon
        lp, dp, pp, _, _ = evaluate(tp)
        lm, dm, pm, _, _ = evaluate(tm)
        hp, rp = signature(dp, pp)
        hm, rm = signature(dm, pm)
        if any(not np.array_equal(a, b) for a, b in zip(hp, hm)):
            continue
        if any(not np.array_equal(a, b) for a, b in zip(rp, rm)):
            continue
        numeric = (lp - lm) / (2.0 * epsilon)
        a = analytic[j]
        denom = max(abs(a), abs(numeric))
        err = abs(a - numeric) if denom < 1e-8 else abs(a - numeric) / denom
        max_err = max(max_err, err)
    return max_err


def save_model(model: TrainedForecaster, path) -> None:
    """Write the model as versioned JSON; floats round-trip exactly."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "shift": model.shift,
        "scale": model.scale,
        "theta": [float(v) for v in model.theta],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path) -> TrainedForecaster:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ValidationError(
            f"unsupported model format version {version!r} (expected {MODEL_FORMAT_VERSION})"
        )
    return TrainedForecaster(
        layer_sizes=tuple(payload["layer_sizes"]),
        theta=np.array(payload["theta"], dtype=float),
        activation=payload["activation"],
        shift=float(payload["shift"]),
        scale=float(payload["scale"]),
    )
