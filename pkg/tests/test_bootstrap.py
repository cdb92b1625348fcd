"""
Tests for the random-weighting bootstrap and Wald tests.

Tests that:
- multipliers have mean one and variance one and replay from their stream
- unit multipliers reproduce the original estimate exactly
- rows with zero multiplier drop out of the replication objective
- replications are deterministic across worker counts
- too many failed replications raise an aggregate error
- Wald statistics match hand calculations
"""

import json
import math

import numpy as np
import pytest
from scipy import stats

import bootstrap.replicate as replicate_module
from bias_oracle import ParametricNoiseModel, asymptotic_variances
from bootstrap import (
    bootstrap_two_step,
    confidence_intervals,
    draw_multipliers,
    replicate_once,
    wald_tau,
    wald_theta,
    write_bootstrap_json,
    write_draws_csv,
)
from common.errors import (
    AggregateFailureError,
    InvalidInputError,
    RankDeficientError,
    SingularMatrixError,
)
from common.models import (
    BootstrapConfig,
    CiMethod,
    EstimationConfig,
    HypothesisSpec,
    OracleConfig,
    TauGrid,
)
from common.rng import stream
from dgp import get_dgp, simulate_from_spec
from qreg import eval_weights, weighted_objective
from sqe import estimate_path
from taustep import MomentWeightFamily, two_step

COARSE = EstimationConfig(grid=TauGrid(epsilon=0.05, step=0.05))


@pytest.fixture
def estimate(asymmetric_series):
    return two_step(asymmetric_series, 1, COARSE)


class TestMultipliers:
    """Test the {0, 2} multiplier draws."""

    def test_moments(self):
        draws = draw_multipliers(1_000_000, stream(3, 0))
        assert set(np.unique(draws)) == {0.0, 2.0}
        assert 0.995 <= draws.mean() <= 1.005
        assert 0.99 <= draws.var() <= 1.01

    def test_same_stream_same_draws(self):
        assert np.array_equal(draw_multipliers(500, stream(9, 4)), draw_multipliers(500, stream(9, 4)))

    def test_different_replications_differ(self):
        assert not np.array_equal(draw_multipliers(500, stream(9, 4)), draw_multipliers(500, stream(9, 5)))

    def test_needs_positive_length(self):
        with pytest.raises(InvalidInputError):
            draw_multipliers(0, stream(1))


class TestReplication:
    """Test a single replication."""

    def test_unit_multipliers_reproduce_estimate(self, asymmetric_series, estimate):
        config = BootstrapConfig(replications=3, unit_multipliers=True)
        summary = bootstrap_two_step(asymmetric_series, estimate, config, COARSE)
        for draw in summary.draws:
            assert draw.tau_star == estimate.tau_hat
            assert np.allclose(draw.theta_star, estimate.theta_hat, rtol=0, atol=1e-12)
        assert summary.gamma1_sq_hat == pytest.approx(0.0, abs=1e-18)
        assert np.allclose(summary.Gamma1_hat, 0.0, atol=1e-18)

    def test_dropped_rows_contribute_nothing(self, estimate):
        config = BootstrapConfig(seed=5)
        design = estimate.design
        multipliers = draw_multipliers(design.row_count, stream(config.seed, 2))
        kept = multipliers > 0
        full_weights = multipliers * eval_weights(COARSE.weights, design)
        survivors = design.subset(kept)
        path = estimate_path(survivors, COARSE.weights, estimate.path.grid, weights=full_weights[kept])
        for tau, solution in path.estimates.items():
            on_survivors = solution.objective * survivors.row_count
            on_full = weighted_objective(design, full_weights, tau, solution.theta_hat) * design.row_count
            assert on_survivors == pytest.approx(on_full, rel=1e-10)

    def test_replication_matches_manual_rebuild(self, estimate):
        config = BootstrapConfig(seed=5)
        draw = replicate_once(2, estimate, COARSE, config)
        multipliers = draw_multipliers(estimate.design.row_count, stream(config.seed, 2))
        assert draw.kept_rows == int((multipliers > 0).sum())
        assert COARSE.grid.lower <= draw.tau_star <= COARSE.grid.upper

    def test_rejects_foreign_estimate(self, estimate):
        with pytest.raises(InvalidInputError):
            bootstrap_two_step(np.zeros(50), estimate, BootstrapConfig(replications=2), COARSE)


class TestBootstrapSummary:
    """Test the aggregation across replications."""

    def test_deterministic_across_workers(self, asymmetric_series, estimate):
        serial = bootstrap_two_step(
            asymmetric_series, estimate, BootstrapConfig(replications=6, seed=1), COARSE
        )
        parallel = bootstrap_two_step(
            asymmetric_series, estimate, BootstrapConfig(replications=6, seed=1, parallel_chunks=2), COARSE
        )
        assert np.array_equal(serial.tau_draws, parallel.tau_draws)
        assert np.array_equal(serial.theta_draws, parallel.theta_draws)
        assert np.array_equal(serial.Gamma1_hat, parallel.Gamma1_hat)

    def test_covariance_shape(self, asymmetric_series, estimate):
        summary = bootstrap_two_step(
            asymmetric_series, estimate, BootstrapConfig(replications=8, seed=2), COARSE
        )
        assert summary.Gamma1_hat.shape == (2, 2)
        assert np.allclose(summary.Gamma1_hat, summary.Gamma1_hat.T)
        assert np.all(np.linalg.eigvalsh(summary.Gamma1_hat) >= -1e-10)
        assert summary.gamma1_sq_hat >= 0.0
        assert set(summary.ci) == {"tau", "mu", "phi_1"}
        for levels in summary.ci.values():
            assert set(levels) == {0.90, 0.95}
            assert levels[0.95][0] <= levels[0.90][0] <= levels[0.90][1] <= levels[0.95][1]

    def test_small_j_warns(self, asymmetric_series, estimate, caplog):
        with caplog.at_level("WARNING"):
            bootstrap_two_step(asymmetric_series, estimate, BootstrapConfig(replications=2), COARSE)
        assert any("replications is below" in r.message for r in caplog.records)

    def test_too_many_failures(self, asymmetric_series, estimate, monkeypatch):
        def failing(j, *args):
            raise RankDeficientError([1], rank=1)

        monkeypatch.setattr(replicate_module, "replicate_once", failing)
        with pytest.raises(AggregateFailureError) as info:
            bootstrap_two_step(asymmetric_series, estimate, BootstrapConfig(replications=4), COARSE)
        assert info.value.failed == 4

    def test_outputs(self, asymmetric_series, estimate, tmp_path):
        summary = bootstrap_two_step(
            asymmetric_series, estimate, BootstrapConfig(replications=3, seed=4), COARSE
        )
        record = json.loads(write_bootstrap_json(summary, tmp_path / "boot.json").read_text())
        assert record["completed"] == 3
        assert record["ci_method"] == "normal-with-bootstrap-SE"
        header = write_draws_csv(summary, tmp_path / "draws.csv").read_text().splitlines()[0]
        assert header == "j,tau_star,theta_star_0,theta_star_1"


class TestConfidenceIntervals:
    """Test interval construction."""

    def test_normal_interval(self):
        ci = confidence_intervals({"x": 1.0}, {"x": 4.0}, {"x": np.zeros(3)}, 100, CiMethod.NORMAL, (0.95,))
        lower, upper = ci["x"][0.95]
        half = stats.norm.ppf(0.975) * 0.2
        assert lower == pytest.approx(1.0 - half)
        assert upper == pytest.approx(1.0 + half)

    def test_percentile_interval_reflects_deviations(self):
        draws = 1.0 + np.array([0.0, 0.1, 0.2, 0.3, 0.4])
        ci = confidence_intervals({"x": 1.0}, {"x": 0.0}, {"x": draws}, 10, CiMethod.PERCENTILE, (0.5,))
        lower, upper = ci["x"][0.5]
        assert lower == pytest.approx(1.0 - 0.3)
        assert upper == pytest.approx(1.0 - 0.1)


class TestWald:
    """Test the Wald statistics."""

    def test_theta_hand_value(self):
        hyp = HypothesisSpec(A=[[0.0, 1.0]], a=[0.5])
        result = wald_theta([0.0, 0.6], np.diag([1.0, 0.04]), hyp, 100)
        assert result.statistic == pytest.approx(25.0)
        assert result.df == 1
        assert result.p_value == pytest.approx(stats.chi2.sf(25.0, 1))

    def test_theta_exact_restriction(self):
        hyp = HypothesisSpec(A=[[1.0, 0.0], [0.0, 1.0]], a=[0.25, 0.5])
        result = wald_theta([0.25, 0.5], np.eye(2), hyp, 50)
        assert result.statistic == 0.0
        assert result.p_value == 1.0

    def test_theta_rank_deficient(self):
        hyp = HypothesisSpec(A=[[0.0, 1.0], [0.0, 2.0]], a=[0.5, 1.0])
        with pytest.raises(InvalidInputError):
            wald_theta([0.0, 0.6], np.eye(2), hyp, 100)

    def test_theta_singular_covariance(self):
        hyp = HypothesisSpec(A=[[0.0, 1.0]], a=[0.5])
        with pytest.raises(SingularMatrixError):
            wald_theta([0.0, 0.6], np.zeros((2, 2)), hyp, 100)

    def test_theta_width_mismatch(self):
        hyp = HypothesisSpec(A=[[0.0, 1.0, 0.0]], a=[0.5])
        with pytest.raises(InvalidInputError):
            wald_theta([0.0, 0.6], np.eye(2), hyp, 100)

    def test_tau_hand_value(self):
        result = wald_tau(0.6, 1.0, 0.5, 400)
        assert result.statistic == pytest.approx(4.0)
        assert result.p_value == pytest.approx(0.0455, abs=1e-4)

    def test_tau_at_null(self):
        assert wald_tau(0.5, 2.0, 0.5, 100).statistic == 0.0

    def test_tau_zero_variance(self):
        with pytest.raises(SingularMatrixError):
            wald_tau(0.6, 0.0, 0.5, 100)


class TestCalibration:
    """Monte Carlo checks of bootstrap validity."""

    @pytest.mark.slow
    def test_draws_centered(self, asymmetric_series, estimate):
        summary = bootstrap_two_step(
            asymmetric_series, estimate, BootstrapConfig(replications=100, seed=21), COARSE
        )
        deviations = summary.theta_draws - estimate.theta_hat
        se = deviations.std(axis=0, ddof=1) / math.sqrt(deviations.shape[0])
        assert np.all(np.abs(deviations.mean(axis=0)) <= 4 * se)

    @pytest.mark.slow
    def test_interval_coverage(self):
        spec = get_dgp("asymmetric_arch")
        truths = {"tau": 1 - math.exp(-1), "mu": spec.theta.intercept, "phi_1": spec.theta.ar_coeffs[0]}
        covered = dict.fromkeys(truths, 0)
        gamma1_sq_hats = []
        for r in range(200):
            series = simulate_from_spec(spec, n=1000, seed=3000 + r)
            fit = two_step(series, 1)
            summary = bootstrap_two_step(series, fit, BootstrapConfig(replications=199, seed=r))
            gamma1_sq_hats.append(summary.gamma1_sq_hat)
            for name, truth in truths.items():
                lower, upper = summary.ci[name][0.95]
                covered[name] += lower <= truth <= upper
        for name in truths:
            assert 0.88 <= covered[name] / 200 <= 0.99, name

        config = EstimationConfig()
        family = MomentWeightFamily.describe(config.family_base_weights(), config.d0, config.family_lags(1))
        oracle = asymptotic_variances(
            ParametricNoiseModel.from_spec(spec), family, OracleConfig(mc_paths=100_000, seed=9)
        )
        ratio = math.sqrt(np.mean(gamma1_sq_hats)) / math.sqrt(oracle.gamma1_sq)
        assert 0.5 <= ratio <= 2.0

    @pytest.mark.slow
    def test_tau_test_power(self):
        spec = get_dgp("asymmetric_arch")
        rejected = 0
        for r in range(200):
            series = simulate_from_spec(spec, n=2000, seed=4000 + r)
            fit = two_step(series, 1)
            summary = bootstrap_two_step(series, fit, BootstrapConfig(replications=199, seed=r))
            rejected += wald_tau(fit.tau_hat, summary.gamma1_sq_hat, 0.5, fit.n).p_value < 0.05
        assert rejected / 200 >= 0.6


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
