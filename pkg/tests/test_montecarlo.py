import numpy as np
import pytest

import eventlift as el
from eventlift import ValidationError


def small_config(**overrides):
    base = dict(
        spec=el.ARProcessSpec(phi=0.5, sigma=1.0),
        n_series=400,
        t0=50,
        window=el.EventWindow(t0=50, d=3),
        delta=(2.0, -1.0, 0.5),
        replications=60,
        master_seed=7,
    )
    base.update(overrides)
    return el.MCConfig(**base)


class TestMixSeed:
    def test_deterministic(self):
        assert el.mix_seed(123, 5) == el.mix_seed(123, 5)

    def test_distinct_across_indices(self):
        seeds = {el.mix_seed(99, i) for i in range(1000)}
        assert len(seeds) == 1000

    def test_distinct_across_masters(self):
        assert el.mix_seed(1, 0) != el.mix_seed(2, 0)

    def test_64_bit_range(self):
        for i in range(100):
            s = el.mix_seed(2**63, i)
            assert 0 <= s < 2**64


class TestMCConfig:
    def test_fit_range_cannot_cross_event(self):
        with pytest.raises(ValidationError):
            small_config(t0=51)

    def test_fit_range_may_end_at_window_t0(self):
        cfg = small_config(t0=50)
        assert cfg.t0 == 50

    def test_delta_length_enforced(self):
        with pytest.raises(ValidationError):
            small_config(delta=(1.0, 2.0))

    def test_bad_standardize(self):
        with pytest.raises(ValidationError):
            small_config(standardize="exact")

    def test_bad_variance_mode(self):
        with pytest.raises(ValidationError):
            small_config(variance_mode="bootstrap")


class TestOracles:
    def test_finite_horizon_variances_hand_values(self):
        # phi = 0.5, sigma = 1: partial sums of 4^-j are 1, 1.25, 1.3125
        vars_ = el.finite_horizon_variances(0.5, 1.0, 3)
        assert vars_.tolist() == [1.0, 1.25, 1.3125]

    def test_variances_scale_with_sigma_squared(self):
        np.testing.assert_allclose(
            el.finite_horizon_variances(0.5, 2.0, 3),
            4.0 * el.finite_horizon_variances(0.5, 1.0, 3),
        )

    def test_crosscov_diagonal_matches_variances(self):
        cov = el.crosscov_oracle(0.7, 1.3, 5)
        np.testing.assert_allclose(
            np.diag(cov), el.finite_horizon_variances(0.7, 1.3, 5)
        )

    def test_crosscov_hand_value(self):
        # lag-1 covariance at the shallowest pair is sigma^2 * phi
        cov = el.crosscov_oracle(0.5, 1.0, 3)
        assert cov[0, 1] == 0.5
        assert cov[1, 0] == 0.5

    def test_crosscov_symmetric(self):
        cov = el.crosscov_oracle(0.8, 1.0, 6)
        np.testing.assert_array_equal(cov, cov.T)

    def test_crosscov_off_diagonal_does_not_vanish(self):
        cov = el.crosscov_oracle(0.5, 1.0, 3)
        assert abs(cov[0, 1]) > 0.1


class TestRunReplications:
    def test_report_shapes(self):
        report = el.run_replications(small_config())
        assert len(report.per_component) == 3
        assert report.cross_cov_scaled.shape == (3, 3)
        assert report.cross_cov_oracle.shape == (3, 3)
        assert report.standardized_errors.shape == (60, 3)
        assert report.replications == 60
        assert report.n_series == 400

    def test_phi_recovered(self):
        report = el.run_replications(small_config())
        assert report.phi_hat_mean == pytest.approx(0.5, abs=0.02)
        assert report.phi_hat_sd < 0.02

    def test_bias_small(self):
        # mean_bias is on the root-N error scale; bound it by 3 sd / sqrt(R)
        report = el.run_replications(small_config())
        for stats in report.per_component:
            limit = 3.0 * np.sqrt(stats.theoretical_var_finite / report.replications)
            assert abs(stats.mean_bias) < limit

    def test_notes_flag_off_diagonal_dependence(self):
        report = el.run_replications(small_config())
        assert any("off-diagonal" in note for note in report.notes)

    def test_thread_count_does_not_change_results(self):
        cfg = small_config()
        serial = el.run_replications(cfg, n_jobs=1)
        threaded = el.run_replications(cfg, n_jobs=4)
        np.testing.assert_array_equal(
            serial.standardized_errors, threaded.standardized_errors
        )
        np.testing.assert_array_equal(
            serial.cross_cov_scaled, threaded.cross_cov_scaled
        )
        assert serial.phi_hat_mean == threaded.phi_hat_mean
        for a, b in zip(serial.per_component, threaded.per_component):
            assert a == b

    def test_estimated_standardization_runs(self):
        report = el.run_replications(small_config(standardize="estimated"))
        assert np.all(np.isfinite(report.standardized_errors))

    def test_replication_failures_carry_the_index(self):
        # an all-zero panel makes the OLS fit degenerate in replication 0
        cfg = small_config(
            spec=el.ARProcessSpec(phi=0.5, sigma=0.0),
            n_series=50,
            replications=2,
        )
        with pytest.raises(ValidationError, match="replication 0:"):
            el.run_replications(cfg)


class TestCheckNormality:
    def test_needs_enough_replications(self):
        report = el.run_replications(small_config())
        with pytest.raises(ValidationError):
            el.check_normality(report)

    def test_passes_when_model_is_well_specified(self):
        cfg = small_config(
            n_series=500, t0=60, window=el.EventWindow(t0=60, d=2),
            delta=(1.0, -0.5), replications=1500, master_seed=314,
        )
        check = el.check_normality(el.run_replications(cfg, n_jobs=4))
        assert check.passed, check.messages

    def test_flags_overcoverage_of_too_wide_intervals(self):
        # at phi = 0.9 the asymptotic variance is ~5x the one-step variance,
        # so shallow-depth intervals are far too wide
        cfg = small_config(
            spec=el.ARProcessSpec(phi=0.9, sigma=1.0),
            n_series=300,
            t0=60,
            window=el.EventWindow(t0=60, d=2),
            delta=(1.0, 1.0),
            replications=600,
            variance_mode="asymptotic_diagonal",
            master_seed=11,
        )
        check = el.check_normality(el.run_replications(cfg, n_jobs=4))
        assert not check.passed
        assert any("coverage" in msg for msg in check.messages)


class TestRateCheck:
    def test_validations(self):
        spec = el.ARProcessSpec(phi=0.5, sigma=1.0)
        with pytest.raises(ValidationError):
            el.rate_check_phi(spec, t0=20, n_grid=[100], reps=5, master_seed=0)
        with pytest.raises(ValidationError):
            el.rate_check_phi(spec, t0=20, n_grid=[10, 100], reps=5, master_seed=0)
        with pytest.raises(ValidationError):
            el.rate_check_phi(spec, t0=20, n_grid=[100, 400], reps=1, master_seed=0)

    def test_expected_ratio_is_root_n(self):
        spec = el.ARProcessSpec(phi=0.5, sigma=1.0)
        report = el.rate_check_phi(
            spec, t0=20, n_grid=[100, 400], reps=30, master_seed=5
        )
        assert report.pairs[0].expected_ratio == pytest.approx(2.0)

    def test_noise_free_grid_degenerates_to_zero_spread(self):
        spec = el.ARProcessSpec(
            phi=0.5, sigma=0.0, initial_mode="fixed", initial_value=1.0
        )
        report = el.rate_check_phi(
            spec, t0=20, n_grid=[50, 200], reps=3, master_seed=0
        )
        assert report.entries[0][1] == 0.0
        assert report.pairs[0].ratio == 0.0
