"""
Tests for the weighted quantile regression solver.

Tests that:
- pinball / psi follow the I(x <= 0) convention
- the lagged design and weights are built as documented
- the solver matches a brute-force search over interpolating fits
- every solution passes the subgradient certificate
"""

from itertools import combinations

import numpy as np
import pytest

from common.errors import InvalidInputError, RankDeficientError
from common.models import SolverOptions, WeightFamily, WeightSpec
from qreg import (
    LaggedDesign,
    build_design,
    empirical_score,
    eval_weights,
    pinball,
    psi,
    solve_wqr,
    subgradient_certificate,
    weighted_objective,
)


def generic_design(rows, responses):
    rows = np.asarray(rows, dtype=float)
    if rows.ndim == 1:
        rows = rows[:, None]
    return LaggedDesign(
        rows=rows, responses=np.asarray(responses, dtype=float),
        p=1, intercept_mode=True, n=len(responses) + 1,
    )


def brute_force_minimum(design, weights, tau):
    """Smallest objective over all k-row interpolating fits."""
    k = design.n_params
    best = np.inf
    for subset in combinations(range(design.row_count), k):
        idx = list(subset)
        block = design.rows[idx]
        if abs(np.linalg.det(block)) < 1e-12:
            continue
        theta = np.linalg.solve(block, design.responses[idx])
        best = min(best, weighted_objective(design, weights, tau, theta))
    return best


def random_instance(rng, p):
    rows = int(rng.integers(2 * p + 4, 26))
    y = rng.standard_t(3.0, rows + p)
    design = build_design(y, p=p, intercept_mode=True)
    weights = rng.uniform(0.1, 1.0, design.row_count)
    tau = float(rng.choice(np.round(np.arange(0.1, 0.91, 0.1), 2)))
    return design, weights, tau


class TestPinballAndPsi:
    """Test the loss and its derivative."""

    def test_pinball_values(self):
        assert pinball(0.5, 1.0) == pytest.approx(0.5)
        assert pinball(0.3, -1.0) == pytest.approx(0.7)

    @pytest.mark.parametrize("tau", [0.1, 0.5, 0.9])
    def test_pinball_zero_at_kink(self, tau):
        assert pinball(tau, 0.0) == 0.0

    def test_pinball_nonnegative(self):
        x = np.linspace(-3, 3, 61)
        assert np.all(pinball(0.2, x) >= 0)

    def test_psi_values(self):
        assert psi(0.3, -1.0) == pytest.approx(-0.7)
        assert psi(0.3, 2.0) == pytest.approx(0.3)

    def test_psi_zero_uses_left_branch(self):
        assert psi(0.3, 0.0) == pytest.approx(-0.7)


class TestBuildDesign:
    """Test lagged design construction."""

    def test_intercept_rows(self):
        design = build_design(np.array([1.0, 2.0, 3.0, 4.0]), p=1, intercept_mode=True)
        np.testing.assert_array_equal(design.rows, [[1, 1], [1, 2], [1, 3]])
        np.testing.assert_array_equal(design.responses, [2, 3, 4])

    def test_intercept_free_rows(self):
        design = build_design(np.array([1.0, 2.0, 3.0, 4.0]), p=1, intercept_mode=False)
        np.testing.assert_array_equal(design.rows, [[1], [2], [3]])

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            build_design(np.arange(5.0), p=4, intercept_mode=True)

    def test_rows_are_lag_windows(self):
        y = np.random.default_rng(0).standard_normal(30)
        design = build_design(y, p=3, intercept_mode=True)
        for i in range(design.row_count):
            t = i + 3
            np.testing.assert_array_equal(design.rows[i, 1:], [y[t - 1], y[t - 2], y[t - 3]])
            assert design.responses[i] == y[t]

    def test_non_finite_rejected(self):
        with pytest.raises(InvalidInputError):
            build_design(np.array([1.0, np.inf, 2.0, 3.0, 4.0]), p=1, intercept_mode=True)


class TestEvalWeights:
    """Test self-weights."""

    def test_unit(self):
        design = build_design(np.arange(8.0), p=2, intercept_mode=True)
        np.testing.assert_array_equal(eval_weights(WeightSpec(family=WeightFamily.UNIT), design), 1.0)

    def test_power_at_zero_lag(self):
        design = build_design(np.array([0.0, 5.0, 1.0, 2.0]), p=1, intercept_mode=True)
        assert eval_weights(WeightSpec(k=2.0), design)[0] == pytest.approx(1.0)

    def test_power_lag_three(self):
        design = build_design(np.array([3.0, 5.0, 1.0, 2.0]), p=1, intercept_mode=True)
        assert eval_weights(WeightSpec(k=2.0), design)[0] == pytest.approx(0.1)

    @pytest.mark.parametrize("family", [WeightFamily.POWER, WeightFamily.EXP_POWER])
    def test_bounded_and_sign_symmetric(self, family):
        y = np.random.default_rng(1).standard_t(1.5, 200)
        spec = WeightSpec(family=family, k=1.0)
        w = eval_weights(spec, build_design(y, p=2, intercept_mode=True))
        w_flipped = eval_weights(spec, build_design(-y, p=2, intercept_mode=True))
        assert np.all((w > 0) & (w <= 1))
        np.testing.assert_allclose(w, w_flipped)

    def test_exp_power_at_zero(self):
        design = build_design(np.array([0.0, 0.0, 1.0, 2.0, 3.0, 4.0]), p=2, intercept_mode=True)
        assert eval_weights(WeightSpec(family=WeightFamily.EXP_POWER, k=2.0), design)[0] == pytest.approx(0.25)


class TestSolveWqr:
    """Test the solver on small instances with known answers."""

    def test_median_of_five(self):
        design = generic_design(np.ones(5), [1, 2, 3, 4, 5])
        solution = solve_wqr(design, np.ones(5), 0.5)
        assert solution.theta_hat[0] == pytest.approx(3.0, abs=1e-9)

    def test_lower_quartile_objective(self):
        design = generic_design(np.ones(4), [1, 2, 3, 4])
        solution = solve_wqr(design, np.ones(4), 0.25)
        candidates = [weighted_objective(design, np.ones(4), 0.25, [c]) for c in (1, 2, 3, 4)]
        assert solution.objective == pytest.approx(min(candidates), abs=1e-10)

    def test_exact_interpolation(self):
        rng = np.random.default_rng(2)
        rows = np.column_stack([np.ones(20), rng.standard_normal((20, 2))])
        theta_star = np.array([0.3, -1.2, 0.7])
        design = generic_design(rows, rows @ theta_star)
        solution = solve_wqr(design, rng.uniform(0.2, 1.0, 20), 0.4)
        np.testing.assert_allclose(solution.theta_hat, theta_star, atol=1e-8)
        assert solution.objective == pytest.approx(0.0, abs=1e-10)

    def test_convergence_flag_follows_interior_point(self):
        design = generic_design(np.ones(5), [1, 2, 3, 4, 5])
        assert solve_wqr(design, np.ones(5), 0.5).converged
        capped = solve_wqr(design, np.ones(5), 0.5, SolverOptions(max_iter=1))
        assert not capped.converged
        assert capped.iterations == 1
        assert capped.theta_hat[0] == pytest.approx(3.0, abs=1e-9)
        assert capped.certificate_margin >= 0

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_brute_force(self, seed):
        rng = np.random.default_rng(seed)
        design, weights, tau = random_instance(rng, p=1 + seed % 2)
        solution = solve_wqr(design, weights, tau)
        assert solution.objective == pytest.approx(brute_force_minimum(design, weights, tau), abs=1e-8)

    @pytest.mark.slow
    def test_matches_brute_force_many(self):
        rng = np.random.default_rng(1000)
        for _ in range(200):
            design, weights, tau = random_instance(rng, p=int(rng.integers(1, 3)))
            solution = solve_wqr(design, weights, tau)
            assert solution.objective == pytest.approx(brute_force_minimum(design, weights, tau), abs=1e-8)

    def test_certificate_holds(self):
        rng = np.random.default_rng(3)
        design, weights, tau = random_instance(rng, p=2)
        solution = solve_wqr(design, weights, tau)
        cert = subgradient_certificate(design, weights, tau, solution.theta_hat, SolverOptions())
        assert cert.ok
        assert solution.certificate_margin >= 0

    def test_no_improving_perturbation(self):
        rng = np.random.default_rng(4)
        y = rng.standard_t(2.0, 300)
        design = build_design(y, p=2, intercept_mode=True)
        weights = eval_weights(WeightSpec(), design)
        solution = solve_wqr(design, weights, 0.3)
        for _ in range(64):
            delta = rng.standard_normal(design.n_params)
            delta *= 1e-4 / np.linalg.norm(delta)
            perturbed = weighted_objective(design, weights, 0.3, solution.theta_hat + delta)
            assert solution.objective <= perturbed + 1e-14

    def test_weight_scaling_leaves_argmin(self):
        rng = np.random.default_rng(5)
        design = build_design(rng.standard_normal(200), p=1, intercept_mode=True)
        weights = rng.uniform(0.1, 1.0, design.row_count)
        a = solve_wqr(design, weights, 0.6)
        b = solve_wqr(design, 7.5 * weights, 0.6)
        np.testing.assert_allclose(a.theta_hat, b.theta_hat, atol=1e-8)

    def test_warm_start_same_objective(self):
        rng = np.random.default_rng(6)
        design = build_design(rng.standard_t(3.0, 400), p=2, intercept_mode=True)
        weights = eval_weights(WeightSpec(), design)
        cold = solve_wqr(design, weights, 0.7)
        warm = solve_wqr(design, weights, 0.7, theta_start=solve_wqr(design, weights, 0.68).theta_hat)
        assert warm.objective == pytest.approx(cold.objective, abs=1e-9)

    def test_solution_is_basic(self):
        rng = np.random.default_rng(7)
        design = build_design(rng.standard_normal(150), p=1, intercept_mode=True)
        solution = solve_wqr(design, np.ones(design.row_count), 0.5)
        assert solution.polished
        assert solution.active_count >= design.n_params

    def test_rank_deficient(self):
        rows = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
        design = generic_design(rows, np.arange(10.0))
        with pytest.raises(RankDeficientError) as info:
            solve_wqr(design, np.ones(10), 0.5)
        assert info.value.dependent_columns

    def test_non_positive_weights_rejected(self):
        design = generic_design(np.ones(4), [1, 2, 3, 4])
        with pytest.raises(InvalidInputError):
            solve_wqr(design, np.array([1.0, 0.0, 1.0, 1.0]), 0.5)

    def test_tau_out_of_range(self):
        design = generic_design(np.ones(4), [1, 2, 3, 4])
        with pytest.raises(InvalidInputError):
            solve_wqr(design, np.ones(4), 1.0)

    def test_deterministic(self):
        rng = np.random.default_rng(8)
        design, weights, tau = random_instance(rng, p=2)
        a = solve_wqr(design, weights, tau)
        b = solve_wqr(design, weights, tau)
        assert np.array_equal(a.theta_hat, b.theta_hat)


class TestObjectiveProperties:
    """Test the objective and its score."""

    def test_objective_convex_along_segments(self):
        rng = np.random.default_rng(9)
        design = build_design(rng.standard_normal(100), p=2, intercept_mode=True)
        weights = rng.uniform(0.1, 1.0, design.row_count)
        for _ in range(50):
            t1, t2 = rng.standard_normal((2, design.n_params))
            lam = rng.uniform()
            lhs = weighted_objective(design, weights, 0.3, lam * t1 + (1 - lam) * t2)
            rhs = lam * weighted_objective(design, weights, 0.3, t1) + (1 - lam) * weighted_objective(design, weights, 0.3, t2)
            assert lhs <= rhs + 1e-12

    def test_empirical_score_is_gradient(self):
        rng = np.random.default_rng(10)
        design = build_design(rng.standard_normal(80), p=1, intercept_mode=True)
        weights = rng.uniform(0.1, 1.0, design.row_count)
        theta, h = np.array([0.123, 0.456]), 1e-7
        score = empirical_score(design, weights, theta, 0.4)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            numeric = (weighted_objective(design, weights, 0.4, theta + e)
                       - weighted_objective(design, weights, 0.4, theta - e)) / (2 * h)
            assert score[j] == pytest.approx(numeric, abs=1e-6)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
