"""
Tests for the second step.

Tests that:
- the moment family enumerates and bounds its members
- residual moments follow the psi convention
- tau selection minimizes over every probe and breaks ties to the left
- the two-step runner tags failures with their stage
"""

import json
import math

import numpy as np
import pytest

from common.errors import InvalidInputError, StageError
from common.models import EstimationConfig, TauGrid, WeightSpec
from dgp import get_dgp, innovation_tau0, simulate_from_spec
from qreg import build_design
from sqe import estimate_path
from taustep import (
    MomentWeightFamily,
    bounded_transform,
    build_moment_family,
    enumerate_exponents,
    estimate_tau,
    golden_section,
    minimum_rows,
    oracle_estimate,
    residual_moments,
    two_step,
    write_objective_curve_csv,
    write_two_step_json,
)

COARSE = EstimationConfig(grid=TauGrid(epsilon=0.05, step=0.05))


@pytest.fixture
def asymmetric_design(asymmetric_series):
    return build_design(asymmetric_series, p=1, intercept_mode=True)


class TestMomentFamily:
    """Test family construction."""

    def test_two_members_for_degree_one(self, asymmetric_design):
        family = build_moment_family(asymmetric_design, WeightSpec(), d0=1, p_tilde=1)
        assert family.members == [(0,), (1,)]
        assert family.values.shape == (asymmetric_design.row_count, 2)

    def test_total_degree_ordering(self):
        assert enumerate_exponents(2, 2) == [(0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0)]

    def test_transform_value(self):
        assert bounded_transform(3.0) == pytest.approx(3 / math.sqrt(10))
        assert bounded_transform(3.0) == pytest.approx(0.94868, abs=1e-5)

    def test_members_bounded_by_one(self, asymmetric_design):
        family = build_moment_family(asymmetric_design, WeightSpec(k=2.0), d0=2, p_tilde=1)
        assert np.all(np.abs(family.values) <= 1.0)

    def test_first_member_is_base_weight(self, asymmetric_design):
        from qreg import eval_weights
        family = build_moment_family(asymmetric_design, WeightSpec(), d0=2, p_tilde=1)
        assert np.allclose(family.values[:, 0], eval_weights(WeightSpec(), asymmetric_design))

    def test_invalid_parameters(self, asymmetric_design):
        with pytest.raises(InvalidInputError):
            build_moment_family(asymmetric_design, WeightSpec(), d0=0, p_tilde=1)
        with pytest.raises(InvalidInputError):
            build_moment_family(asymmetric_design, WeightSpec(), d0=1, p_tilde=2)


class TestResidualMoments:
    """Test the moment vector m(tau)."""

    def test_all_positive_residuals(self, asymmetric_design):
        family = build_moment_family(asymmetric_design, WeightSpec(), d0=1, p_tilde=1)
        theta = np.array([-1e6, 0.0])
        m = residual_moments(asymmetric_design, family, theta, 0.3)
        expected = 0.3 * family.values.sum(axis=0) / asymmetric_design.row_count
        assert np.allclose(m, expected, rtol=1e-12)

    def test_base_only_family(self, asymmetric_design):
        family = MomentWeightFamily.describe(WeightSpec(), 1, 1)
        family.members = [(0,)]
        family.values = family.evaluate(asymmetric_design.lags)
        m = residual_moments(asymmetric_design, family, np.array([0.1, 0.5]), 0.5)
        assert m.shape == (1,)

    def test_true_parameters_give_small_moments(self):
        spec = get_dgp("asymmetric_arch")
        series = simulate_from_spec(spec, n=100_000, seed=5)
        design = build_design(series, p=1, intercept_mode=True)
        family = build_moment_family(design, WeightSpec(), d0=2, p_tilde=1)
        tau0 = innovation_tau0(spec.innovation)
        m = residual_moments(design, family, spec.theta.as_array(), tau0)
        assert np.all(np.abs(m) < 3 / math.sqrt(design.row_count))

    def test_multipliers_zero_drop_rows(self, asymmetric_design):
        family = build_moment_family(asymmetric_design, WeightSpec(), d0=1, p_tilde=1)
        theta = np.array([0.1, 0.5])
        zeros = np.zeros(asymmetric_design.row_count)
        assert np.all(residual_moments(asymmetric_design, family, theta, 0.5, zeros) == 0.0)


class TestGoldenSection:
    """Test the bracketed search."""

    def test_quadratic(self):
        a, b, evaluations = golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0, 1e-6)
        assert a <= 0.3 <= b
        assert b - a < 1e-6
        assert evaluations > 2

    def test_narrow_bracket_skips(self):
        assert golden_section(lambda x: x, 0.5, 0.5 + 1e-6, 1e-4) == (0.5, 0.5 + 1e-6, 0)


class TestEstimateTau:
    """Test the grid search and refinement."""

    @pytest.fixture
    def path_and_family(self, asymmetric_design):
        path = estimate_path(asymmetric_design, WeightSpec(), COARSE.grid)
        family = build_moment_family(asymmetric_design, WeightSpec(), d0=2, p_tilde=1)
        return path, family

    def test_minimum_over_all_probes(self, asymmetric_design, path_and_family):
        path, family = path_and_family
        selection = estimate_tau(asymmetric_design, family, path, 1e-4)
        values = [q for _, q in selection.objective_curve]
        assert selection.objective <= min(values) + 1e-12
        assert len(values) == len(path.levels) + selection.refine_iterations

    def test_constant_objective_picks_smallest_tau(self, asymmetric_design, path_and_family):
        path, family = path_and_family
        family.values = np.zeros_like(family.values)
        selection = estimate_tau(asymmetric_design, family, path, 1e-4)
        assert selection.tau_hat == pytest.approx(0.05)
        assert selection.boundary_flag
        assert selection.warnings == ["TAU_AT_BOUNDARY"]

    def test_scaling_family_keeps_argmin(self, asymmetric_design, path_and_family):
        path, family = path_and_family
        base = estimate_tau(asymmetric_design, family, path, 1e-4)
        scaled = estimate_tau(asymmetric_design, family.scaled(4.0), path, 1e-4)
        assert scaled.tau_hat == base.tau_hat

    def test_scale_must_be_positive(self, path_and_family):
        _, family = path_and_family
        with pytest.raises(InvalidInputError):
            family.scaled(0.0)


class TestTwoStep:
    """Test the full two-step runner."""

    def test_result_shape(self, asymmetric_series):
        estimate = two_step(asymmetric_series, 1, COARSE)
        assert COARSE.grid.lower <= estimate.tau_hat <= COARSE.grid.upper
        assert estimate.theta_hat.shape == (2,)
        assert estimate.parameter_names == ["mu", "phi_1"]
        assert estimate.solution.certificate_margin >= 0

    def test_deterministic(self, asymmetric_series):
        first = two_step(asymmetric_series, 1, COARSE)
        second = two_step(asymmetric_series, 1, COARSE)
        assert first.tau_hat == second.tau_hat
        assert np.array_equal(first.theta_hat, second.theta_hat)

    def test_short_series_tagged(self):
        with pytest.raises(StageError) as info:
            two_step(np.arange(10.0), 1, EstimationConfig())
        assert info.value.stage == "build_design"
        assert isinstance(info.value.__cause__, InvalidInputError)

    def test_minimum_rows(self):
        assert minimum_rows(1, 0.05) == 40
        assert minimum_rows(3, 0.4) == 10

    def test_outputs(self, asymmetric_series, tmp_path):
        estimate = two_step(asymmetric_series, 1, COARSE)
        json_path = write_two_step_json(estimate, tmp_path / "estimate.json")
        record = json.loads(json_path.read_text())
        assert record["tau_hat"] == estimate.tau_hat
        assert set(record) >= {"tau_hat", "theta_hat", "objective_curve", "boundary_flag"}
        csv_path = write_objective_curve_csv(estimate, tmp_path / "curve.csv")
        assert csv_path.read_text().splitlines()[0] == "tau,objective"

    def test_oracle_estimate(self, asymmetric_series):
        solution = oracle_estimate(asymmetric_series, 1, COARSE, 1 - math.exp(-1))
        assert solution.tau == pytest.approx(1 - math.exp(-1))
        with pytest.raises(InvalidInputError):
            oracle_estimate(asymmetric_series, 1, COARSE, 1.0)

    @pytest.mark.slow
    def test_tau_consistency(self):
        tau0 = 1 - math.exp(-1)
        spec = get_dgp("asymmetric_arch")
        errors = [
            abs(two_step(simulate_from_spec(spec, n=2000, seed=1000 + r), 1).tau_hat - tau0)
            for r in range(200)
        ]
        assert np.mean(errors) < 0.05

    @pytest.mark.slow
    def test_symmetric_matches_median(self):
        from sqe import path_at
        spec = get_dgp("symmetric_garch")
        config = EstimationConfig(intercept=False)
        close = 0
        for r in range(100):
            estimate = two_step(simulate_from_spec(spec, n=2000, seed=2000 + r), 1, config)
            median = path_at(estimate.path, 0.5)
            close += np.max(np.abs(estimate.theta_hat - median)) < 0.1
        assert close >= 90

    @pytest.mark.slow
    def test_grid_excluding_tau0_flags_boundary(self):
        """With tau_0 near 0.632 outside [0.4, 0.6], tau_hat sticks to the upper edge."""
        spec = get_dgp("asymmetric_arch")
        config = EstimationConfig(grid=TauGrid(epsilon=0.4, step=0.05))
        assert innovation_tau0(spec.innovation) > config.grid.upper
        flagged = 0
        for r in range(20):
            estimate = two_step(simulate_from_spec(spec, n=2000, seed=7000 + r), 1, config)
            flagged += estimate.boundary_flag
            if estimate.boundary_flag:
                assert estimate.warnings == ["TAU_AT_BOUNDARY"]
        assert flagged > 10

    @pytest.mark.slow
    def test_objective_separates_away_from_tau0(self):
        tau0 = 1 - math.exp(-1)
        series = simulate_from_spec(get_dgp("asymmetric_arch"), n=20_000, seed=8)
        estimate = two_step(series, 1, COARSE)
        curve = np.array(estimate.objective_curve)
        far = curve[np.abs(curve[:, 0] - tau0) >= 0.1, 1]
        assert far.min() > estimate.objective


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
