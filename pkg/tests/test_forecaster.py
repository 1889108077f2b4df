import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import eventlift as el
from eventlift import TrainingDivergedError, ValidationError


def constant_model(outputs, lookback=1, activation="relu"):
    """Forecaster that ignores its input and predicts ``outputs`` verbatim.

    All weights are zero, so only the final-layer biases reach the output.
    """
    outputs = np.asarray(outputs, dtype=float)
    layer_sizes = (lookback, 1, len(outputs))
    theta = np.zeros(el.parameter_count(layer_sizes))
    theta[-len(outputs) :] = outputs
    return el.TrainedForecaster(
        layer_sizes=layer_sizes,
        theta=theta,
        activation=activation,
        shift=0.0,
        scale=1.0,
    )


def quick_train(seed=0, epochs=30):
    rng = np.random.default_rng(4)
    x = rng.normal(10.0, 1.0, size=40)
    cfg = el.RollingWindowConfig(lookback=8, horizon=3, stride=1)
    samples = el.build_rolling_windows(x, cfg)
    model = el.train(
        samples,
        el.ForecasterArch(hidden_sizes=(8,), activation="relu"),
        el.AdaptiveLossConfig(),
        el.TrainConfig(epochs=epochs, batch_size=16, learning_rate=0.01, seed=seed),
    )
    return model, samples, x, cfg


class TestRollingWindows:
    def test_window_count_and_indices(self):
        x = np.arange(10.0)
        cfg = el.RollingWindowConfig(lookback=4, horizon=2, stride=1)
        samples = el.build_rolling_windows(x, cfg)
        assert len(samples) == 5
        assert samples[0].input.tolist() == [0.0, 1.0, 2.0, 3.0]
        assert samples[0].label.tolist() == [4.0, 5.0]
        assert samples[0].label_start == 4
        assert samples[-1].label.tolist() == [8.0, 9.0]

    def test_stride_consuming_series_gives_one_sample(self):
        x = np.arange(10.0)
        cfg = el.RollingWindowConfig(lookback=4, horizon=2, stride=5)
        samples = el.build_rolling_windows(x, cfg)
        assert len(samples) == 1

    def test_rare_mask_from_calendar(self):
        x = np.arange(12.0)
        cfg = el.RollingWindowConfig(lookback=4, horizon=2, stride=1)
        calendar = el.EventCalendar({"e": [el.EventWindow(t0=3, d=2)]})
        samples = el.build_rolling_windows(x, cfg, calendar)
        # event occupies indices 4 and 5
        assert samples[0].rare_mask.tolist() == [True, True]
        assert samples[2].rare_mask.tolist() == [False, False]

    def test_rare_mask_partial_overlap(self):
        x = np.arange(12.0)
        cfg = el.RollingWindowConfig(lookback=4, horizon=2, stride=1)
        calendar = el.EventCalendar({"e": [el.EventWindow(t0=4, d=2)]})
        samples = el.build_rolling_windows(x, cfg, calendar)
        # event occupies indices 5 and 6; sample 0 labels indices 4 and 5
        assert samples[0].rare_mask.tolist() == [False, True]

    def test_no_calendar_means_all_false(self):
        x = np.arange(10.0)
        samples = el.build_rolling_windows(
            x, el.RollingWindowConfig(lookback=4, horizon=2)
        )
        assert not any(s.rare_mask.any() for s in samples)

    def test_short_series_rejected(self):
        with pytest.raises(ValidationError):
            el.build_rolling_windows(
                np.arange(5.0), el.RollingWindowConfig(lookback=4, horizon=2)
            )


@settings(max_examples=200, deadline=None)
@given(
    length=st.integers(min_value=3, max_value=60),
    lookback=st.integers(min_value=1, max_value=20),
    horizon=st.integers(min_value=1, max_value=10),
    stride=st.integers(min_value=1, max_value=5),
)
def test_rolling_window_index_arithmetic(length, lookback, horizon, stride):
    if length < lookback + horizon:
        return
    x = np.arange(float(length))
    cfg = el.RollingWindowConfig(lookback=lookback, horizon=horizon, stride=stride)
    samples = el.build_rolling_windows(x, cfg)
    assert len(samples) == (length - lookback - horizon) // stride + 1
    for i, s in enumerate(samples):
        assert s.label_start == i * stride + lookback
        assert s.input[0] == i * stride
        assert s.label[0] == s.label_start
    if stride == 1:
        covered = set()
        for s in samples:
            covered.update(range(s.label_start, s.label_start + horizon))
        assert covered == set(range(lookback, length))


class TestAdaptiveLoss:
    def test_hand_computed(self):
        cfg = el.AdaptiveLossConfig(rare_weight=0.5, nonrare_weight=1.0)
        loss, per_step = el.adaptive_loss(
            np.zeros(3), np.array([2.0, 1.0, 1.0]), np.array([True, False, False]), cfg
        )
        assert loss == 3.0
        assert per_step.tolist() == [2.0, 1.0, 1.0]

    def test_perfect_prediction_is_free(self):
        cfg = el.AdaptiveLossConfig(rare_weight=3.0, nonrare_weight=7.0)
        label = np.array([1.0, -2.0])
        loss, _ = el.adaptive_loss(label, label, np.array([True, False]), cfg)
        assert loss == 0.0

    def test_unit_weights_give_total_distance(self):
        cfg = el.AdaptiveLossConfig(rare_weight=1.0, nonrare_weight=1.0)
        pred = np.array([1.0, 2.0, 3.0])
        label = np.array([0.0, 4.0, 3.5])
        loss, _ = el.adaptive_loss(pred, label, np.array([True, False, True]), cfg)
        assert loss == pytest.approx(3.5)

    def test_squared_distance(self):
        cfg = el.AdaptiveLossConfig(
            rare_weight=1.0, nonrare_weight=1.0, distance="squared"
        )
        loss, per_step = el.adaptive_loss(
            np.array([0.0, 0.0]), np.array([2.0, -3.0]), np.array([False, False]), cfg
        )
        assert loss == 13.0
        assert per_step.tolist() == [4.0, 9.0]

    def test_length_mismatch_rejected(self):
        cfg = el.AdaptiveLossConfig()
        with pytest.raises(ValidationError):
            el.adaptive_loss(np.zeros(3), np.zeros(2), np.zeros(3, dtype=bool), cfg)

    def test_weight_validation(self):
        with pytest.raises(ValidationError):
            el.AdaptiveLossConfig(rare_weight=-0.1)
        with pytest.raises(ValidationError):
            el.AdaptiveLossConfig(rare_weight=0.0, nonrare_weight=0.0)
        with pytest.raises(ValidationError):
            el.AdaptiveLossConfig(distance="huber")


@settings(max_examples=200, deadline=None)
@given(
    data=st.data(),
    h=st.integers(min_value=1, max_value=8),
    w1=st.floats(min_value=0.0, max_value=10.0, allow_nan=False),
    w2=st.floats(min_value=0.1, max_value=10.0, allow_nan=False),
    distance=st.sampled_from(["absolute", "squared"]),
)
def test_loss_decomposes_into_weighted_masked_sums(data, h, w1, w2, distance):
    finite = st.floats(min_value=-100, max_value=100, allow_nan=False)
    pred = np.array(data.draw(st.lists(finite, min_size=h, max_size=h)))
    label = np.array(data.draw(st.lists(finite, min_size=h, max_size=h)))
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=h, max_size=h)))
    cfg = el.AdaptiveLossConfig(rare_weight=w1, nonrare_weight=w2, distance=distance)
    loss, per_step = el.adaptive_loss(pred, label, mask, cfg)
    assert loss == w1 * per_step[mask].sum() + w2 * per_step[~mask].sum()


@settings(max_examples=200, deadline=None)
@given(
    data=st.data(),
    h=st.integers(min_value=1, max_value=8),
    w1_low=st.floats(min_value=0.0, max_value=5.0, allow_nan=False),
    bump=st.floats(min_value=0.0, max_value=5.0, allow_nan=False),
)
def test_loss_never_decreases_in_rare_weight(data, h, w1_low, bump):
    finite = st.floats(min_value=-100, max_value=100, allow_nan=False)
    pred = np.array(data.draw(st.lists(finite, min_size=h, max_size=h)))
    label = np.array(data.draw(st.lists(finite, min_size=h, max_size=h)))
    mask = np.array(data.draw(st.lists(st.booleans(), min_size=h, max_size=h)))
    low, _ = el.adaptive_loss(
        pred, label, mask, el.AdaptiveLossConfig(rare_weight=w1_low)
    )
    high, _ = el.adaptive_loss(
        pred, label, mask, el.AdaptiveLossConfig(rare_weight=w1_low + bump)
    )
    assert high >= low


class TestTrain:
    def test_constant_series_learned(self):
        x = np.full(40, 5.0)
        cfg = el.RollingWindowConfig(lookback=8, horizon=3, stride=1)
        samples = el.build_rolling_windows(x, cfg)
        model = el.train(
            samples,
            el.ForecasterArch(hidden_sizes=(16,), activation="relu"),
            el.AdaptiveLossConfig(),
            el.TrainConfig(epochs=200, batch_size=16, learning_rate=0.01, seed=0),
        )
        preds = model.predict(np.stack([s.input for s in samples]))
        assert np.all(np.abs(preds - 5.0) / 5.0 < 0.01)

    def test_training_is_deterministic(self):
        a, _, _, _ = quick_train(seed=7)
        b, _, _, _ = quick_train(seed=7)
        c, _, _, _ = quick_train(seed=8)
        assert np.array_equal(a.theta, b.theta)
        assert a.loss_history == b.loss_history
        assert not np.array_equal(a.theta, c.theta)

    def test_loss_history_improves(self):
        model, _, _, _ = quick_train(epochs=60)
        assert model.loss_history[-1] <= model.loss_history[0]

    def test_sinusoid_fit_in_sample(self):
        t = np.arange(160)
        x = 5.0 + np.sin(2 * np.pi * t / 20.0)
        cfg = el.RollingWindowConfig(lookback=40, horizon=10, stride=1)
        samples = el.build_rolling_windows(x, cfg)
        model = el.train(
            samples,
            el.ForecasterArch(hidden_sizes=(64,), activation="tanh"),
            el.AdaptiveLossConfig(
                rare_weight=1.0, nonrare_weight=1.0, distance="squared"
            ),
            el.TrainConfig(
                epochs=2000,
                batch_size=32,
                learning_rate=0.05,
                final_learning_rate=0.005,
                seed=3,
            ),
        )
        ctrl = el.insample_forecast(model, x, cfg)
        sup = ctrl.support
        mape = 100.0 * np.mean(np.abs(x[sup] - ctrl.values[sup]) / np.abs(x[sup]))
        assert mape < 5.0

    def test_zero_rare_weight_leaves_spike_in_residuals(self):
        t = np.arange(200)
        x = 5.0 + np.sin(2 * np.pi * t / 20.0)
        x[130] += 3.0
        window = el.EventWindow(t0=129, d=1)
        calendar = el.EventCalendar({"spike": [window]})
        cfg = el.RollingWindowConfig(lookback=40, horizon=10, stride=1)
        samples = el.build_rolling_windows(x, cfg, calendar)
        model = el.train(
            samples,
            el.ForecasterArch(hidden_sizes=(64,), activation="tanh"),
            el.AdaptiveLossConfig(
                rare_weight=0.0, nonrare_weight=1.0, distance="squared"
            ),
            el.TrainConfig(
                epochs=2000,
                batch_size=32,
                learning_rate=0.05,
                final_learning_rate=0.005,
                seed=3,
            ),
        )
        ctrl = el.insample_forecast(model, x, cfg)
        est = el.extract_effect(ctrl, x, window)
        assert 2.4 <= est.delta_hat[0] <= 3.6

    def test_divergence_names_the_epoch(self):
        x = np.linspace(0.0, 100.0, 40)
        cfg = el.RollingWindowConfig(lookback=8, horizon=3, stride=1)
        samples = el.build_rolling_windows(x, cfg)
        with pytest.raises(TrainingDivergedError) as info, np.errstate(all="ignore"):
            el.train(
                samples,
                el.ForecasterArch(hidden_sizes=(16,), activation="relu"),
                el.AdaptiveLossConfig(
                    rare_weight=1.0, nonrare_weight=1.0, distance="squared"
                ),
                el.TrainConfig(epochs=50, batch_size=16, learning_rate=1e12, seed=0),
            )
        assert info.value.epoch >= 0

    def test_empty_samples_rejected(self):
        with pytest.raises(ValidationError):
            el.train(
                [],
                el.ForecasterArch(),
                el.AdaptiveLossConfig(),
                el.TrainConfig(),
            )

    def test_residual_inverse_adaptation_trains(self):
        rng = np.random.default_rng(2)
        x = rng.normal(10.0, 1.0, size=60)
        calendar = el.EventCalendar({"e": [el.EventWindow(t0=30, d=3)]})
        cfg = el.RollingWindowConfig(lookback=8, horizon=4, stride=1)
        samples = el.build_rolling_windows(x, cfg, calendar)
        model = el.train(
            samples,
            el.ForecasterArch(hidden_sizes=(8,), activation="relu"),
            el.AdaptiveLossConfig(adaptation="residual_inverse"),
            el.TrainConfig(epochs=40, batch_size=16, learning_rate=0.01, seed=1),
        )
        assert np.all(np.isfinite(model.theta))


class TestTrainingLossInvariance:
    def test_rare_labels_are_invisible_at_zero_weight(self):
        model, samples, x, cfg = quick_train()
        calendar = el.EventCalendar({"e": [el.EventWindow(t0=20, d=3)]})
        masked = el.build_rolling_windows(x, cfg, calendar)
        loss_cfg = el.AdaptiveLossConfig(rare_weight=0.0, nonrare_weight=1.0)
        base = el.training_loss(model, masked, loss_cfg)
        perturbed = []
        for s in masked:
            label = s.label.copy()
            label[s.rare_mask] += 1e6
            perturbed.append(
                el.TrainingSample(
                    input=s.input,
                    label=label,
                    label_start=s.label_start,
                    rare_mask=s.rare_mask,
                )
            )
        assert el.training_loss(model, perturbed, loss_cfg) == base

    def test_nonrare_labels_do_move_the_loss(self):
        model, samples, x, cfg = quick_train()
        loss_cfg = el.AdaptiveLossConfig(rare_weight=0.0, nonrare_weight=1.0)
        base = el.training_loss(model, samples, loss_cfg)
        bumped = [
            el.TrainingSample(
                input=s.input,
                label=s.label + 1.0,
                label_start=s.label_start,
                rare_mask=s.rare_mask,
            )
            for s in samples
        ]
        assert el.training_loss(model, bumped, loss_cfg) != base


class TestInsampleForecast:
    def test_overlap_mean(self):
        model = constant_model([4.0, 4.2])
        x = np.zeros(4)
        cfg = el.RollingWindowConfig(lookback=1, horizon=2, stride=1)
        ctrl = el.insample_forecast(model, x, cfg)
        assert ctrl.values[2] == pytest.approx(4.1)
        assert ctrl.counts[2] == 2

    def test_single_cover_counts_one(self):
        model = constant_model([4.0, 4.2])
        x = np.zeros(4)
        cfg = el.RollingWindowConfig(lookback=1, horizon=2, stride=1)
        ctrl = el.insample_forecast(model, x, cfg)
        assert ctrl.values[1] == pytest.approx(4.0)
        assert ctrl.counts[1] == 1
        assert ctrl.values[3] == pytest.approx(4.2)
        assert ctrl.counts[3] == 1

    def test_lookback_prefix_unsupported(self):
        model = constant_model([1.0], lookback=3)
        x = np.zeros(8)
        cfg = el.RollingWindowConfig(lookback=3, horizon=1, stride=1)
        ctrl = el.insample_forecast(model, x, cfg)
        assert ctrl.missing([0, 1, 2]) == [0, 1, 2]
        assert np.isnan(ctrl.values[:3]).all()

    def test_unit_horizon_never_overlaps(self):
        model = constant_model([1.0], lookback=2)
        x = np.zeros(10)
        cfg = el.RollingWindowConfig(lookback=2, horizon=1, stride=1)
        ctrl = el.insample_forecast(model, x, cfg)
        assert np.all(ctrl.counts[ctrl.support] == 1)

    def test_median_aggregation(self):
        model = constant_model([1.0, 2.0, 6.0])
        x = np.zeros(10)
        cfg = el.RollingWindowConfig(lookback=1, horizon=3, stride=1)
        mean_ctrl = el.insample_forecast(model, x, cfg)
        med_ctrl = el.insample_forecast(model, x, cfg, aggregate="median")
        # interior indices see {1, 2, 6}: mean 3, median 2
        assert mean_ctrl.values[4] == pytest.approx(3.0)
        assert med_ctrl.values[4] == pytest.approx(2.0)

    def test_unknown_aggregate_rejected(self):
        model = constant_model([1.0])
        with pytest.raises(ValidationError):
            el.insample_forecast(
                model, np.zeros(5), el.RollingWindowConfig(lookback=1, horizon=1),
                aggregate="mode",
            )

    def test_config_mismatch_rejected(self):
        model = constant_model([1.0, 2.0])
        with pytest.raises(ValidationError):
            el.insample_forecast(
                model, np.zeros(10), el.RollingWindowConfig(lookback=1, horizon=3)
            )


class TestExtractEffect:
    def test_hand_subtraction(self):
        values = np.full(6, np.nan)
        counts = np.zeros(6, dtype=int)
        values[3] = 4.1
        counts[3] = 2
        ctrl = el.SyntheticControlSeries(values=values, counts=counts)
        x = np.zeros(6)
        x[3] = 6.1
        est = el.extract_effect(ctrl, x, el.EventWindow(t0=2, d=1))
        assert est.delta_hat[0] == pytest.approx(2.0)
        assert est.covariance is None
        assert est.n_series == 1

    def test_perfect_reconstruction_gives_zero(self):
        x = np.arange(8.0)
        counts = np.ones(8, dtype=int)
        ctrl = el.SyntheticControlSeries(values=x.copy(), counts=counts)
        est = el.extract_effect(ctrl, x, el.EventWindow(t0=3, d=2))
        assert est.delta_hat.tolist() == [0.0, 0.0]

    def test_uncovered_window_lists_missing_indices(self):
        values = np.full(8, np.nan)
        counts = np.zeros(8, dtype=int)
        values[4] = 1.0
        counts[4] = 1
        ctrl = el.SyntheticControlSeries(values=values, counts=counts)
        with pytest.raises(ValidationError, match=r"\[5\]"):
            el.extract_effect(ctrl, np.zeros(8), el.EventWindow(t0=3, d=2))


class TestGradientCheck:
    def test_smooth_model_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        layer_sizes = (6, 8, 3)
        model = el.TrainedForecaster(
            layer_sizes=layer_sizes,
            theta=rng.normal(0, 0.5, size=el.parameter_count(layer_sizes)),
            activation="tanh",
            shift=0.0,
            scale=1.0,
        )
        sample = el.TrainingSample(
            input=rng.normal(size=6),
            label=rng.normal(size=3),
            label_start=6,
            rare_mask=np.array([True, False, False]),
        )
        cfg = el.AdaptiveLossConfig(
            rare_weight=0.3, nonrare_weight=1.0, distance="squared"
        )
        assert el.gradient_check(model, sample, cfg) < 1e-4

    def test_relu_and_absolute_distance_with_kink_filter(self):
        rng = np.random.default_rng(1)
        layer_sizes = (5, 7, 2)
        model = el.TrainedForecaster(
            layer_sizes=layer_sizes,
            theta=rng.normal(0, 0.5, size=el.parameter_count(layer_sizes)),
            activation="relu",
            shift=0.0,
            scale=1.0,
        )
        sample = el.TrainingSample(
            input=rng.normal(size=5),
            label=rng.normal(size=2),
            label_start=5,
            rare_mask=np.array([False, True]),
        )
        cfg = el.AdaptiveLossConfig(rare_weight=0.5, nonrare_weight=1.0)
        assert el.gradient_check(model, sample, cfg) < 1e-4

    def test_zero_gradient_at_perfect_fit(self):
        model = constant_model([2.0, 3.0], lookback=2)
        sample = el.TrainingSample(
            input=np.zeros(2),
            label=np.array([2.0, 3.0]),
            label_start=2,
            rare_mask=np.array([False, False]),
        )
        cfg = el.AdaptiveLossConfig(
            rare_weight=1.0, nonrare_weight=1.0, distance="squared"
        )
        assert el.gradient_check(model, sample, cfg) < 1e-6

    def test_epsilon_must_be_positive(self):
        model = constant_model([1.0])
        sample = el.TrainingSample(
            input=np.zeros(1),
            label=np.zeros(1),
            label_start=1,
            rare_mask=np.array([False]),
        )
        with pytest.raises(ValidationError):
            el.gradient_check(model, sample, el.AdaptiveLossConfig(), epsilon=0.0)


class TestModelSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        model, _, _, _ = quick_train()
        path = tmp_path / "model.json"
        el.save_model(model, path)
        loaded = el.load_model(path)
        assert np.array_equal(loaded.theta, model.theta)
        assert loaded.layer_sizes == model.layer_sizes
        assert loaded.shift == model.shift
        assert loaded.scale == model.scale
        assert loaded.activation == model.activation

    def test_round_trip_predictions_identical(self, tmp_path):
        model, samples, _, _ = quick_train()
        path = tmp_path / "model.json"
        el.save_model(model, path)
        loaded = el.load_model(path)
        X = np.stack([s.input for s in samples])
        assert np.array_equal(loaded.predict(X), model.predict(X))

    def test_version_mismatch_rejected(self, tmp_path):
        import json

        model, _, _, _ = quick_train()
        path = tmp_path / "model.json"
        el.save_model(model, path)
        payload = json.loads(path.read_text())
        payload["format_version"] = 999
        path.write_text(json.dumps(payload))
        with pytest.raises(ValidationError, match="format version"):
            el.load_model(path)


class TestTrainedForecaster:
    def test_parameter_count_enforced(self):
        with pytest.raises(ValidationError):
            el.TrainedForecaster(
                layer_sizes=(2, 3, 1),
                theta=np.zeros(5),
                activation="relu",
                shift=0.0,
                scale=1.0,
            )

    def test_parameter_count_formula(self):
        assert el.parameter_count((2, 3, 1)) == (2 + 1) * 3 + (3 + 1) * 1

    def test_scale_must_be_positive(self):
        with pytest.raises(ValidationError):
            el.TrainedForecaster(
                layer_sizes=(1, 1, 1),
                theta=np.zeros(el.parameter_count((1, 1, 1))),
                activation="relu",
                shift=0.0,
                scale=0.0,
            )

    def test_predict_denormalizes(self):
        # zero weights predict the shift itself whatever the input
        layer_sizes = (1, 1, 1)
        model = el.TrainedForecaster(
            layer_sizes=layer_sizes,
            theta=np.zeros(el.parameter_count(layer_sizes)),
            activation="relu",
            shift=7.0,
            scale=3.0,
        )
        assert model.predict(np.array([[123.0]]))[0, 0] == 7.0
