"""
Tests for the Monte Carlo experiment runner.

Tests that:
- a small experiment produces one row per (dgp, n, parameter)
- RMSE, bias and SD satisfy RMSE^2 = bias^2 + SD^2
- results do not depend on the worker count
- failed replications are counted and too many of them abort the run
"""

import numpy as np
import pandas as pd
import pytest

import harness.experiment as experiment_module
from common.errors import AggregateFailureError, InvalidInputError, NumericalError
from common.models import BootstrapConfig, EstimationConfig, ExperimentSpec, TauGrid
from dgp import get_dgp
from harness import (
    METRIC_COLUMNS,
    rate_ratios,
    run_experiment,
    run_replication,
    summarize_estimates,
    true_parameters,
    write_experiment_outputs,
)

COARSE = EstimationConfig(grid=TauGrid(epsilon=0.05, step=0.05))


def smoke_spec(**overrides) -> ExperimentSpec:
    fields = dict(
        dgp_ids=["asymmetric_arch"],
        sample_sizes=[300, 600],
        replications=4,
        estimation=COARSE,
        master_seed=17,
    )
    fields.update(overrides)
    return ExperimentSpec(**fields)


class TestSummaries:
    """Test the per-cell statistics."""

    def test_hand_values(self):
        stats = summarize_estimates(np.array([1.0, 2.0, 3.0]), truth=1.5)
        assert stats["mean"] == pytest.approx(2.0)
        assert stats["bias"] == pytest.approx(0.5)
        assert stats["sd"] == pytest.approx(np.sqrt(2.0 / 3.0))
        assert stats["rmse"] == pytest.approx(np.sqrt((0.25 + 0.25 + 2.25) / 3))

    def test_empty_sample(self):
        assert np.isnan(summarize_estimates(np.array([]), 0.0)["rmse"])

    def test_rate_ratios(self):
        metrics = pd.DataFrame({
            "dgp": ["d", "d", "d"],
            "parameter": ["tau", "tau", "tau"],
            "n": [2000, 500, 1000],
            "rmse": [0.01, 0.02, 0.015],
        })
        ratios = rate_ratios(metrics)
        row = ratios[(ratios["n_small"] == 500) & (ratios["n_large"] == 2000)].iloc[0]
        assert row["rmse_ratio"] == pytest.approx(2.0)
        assert row["sqrt_n_ratio"] == pytest.approx(2.0)
        assert len(ratios) == 3


class TestTrueParameters:
    """Test the truth vector."""

    def test_with_intercept(self):
        assert np.allclose(true_parameters(get_dgp("asymmetric_arch"), True), [0.1, 0.5])

    def test_zero_intercept_added(self):
        assert np.allclose(true_parameters(get_dgp("symmetric_garch"), True), [0.0, 0.5])

    def test_intercept_free_mismatch(self):
        with pytest.raises(InvalidInputError):
            true_parameters(get_dgp("asymmetric_arch"), False)


class TestRunExperiment:
    """Test the runner end to end on small experiments."""

    def test_smoke(self):
        table = run_experiment(smoke_spec())
        assert list(table.metrics.columns) == METRIC_COLUMNS
        assert len(table.metrics) == 1 * 2 * 3
        assert set(table.metrics["parameter"]) == {"tau", "mu", "phi_1"}
        assert len(table.raw) == 8
        assert len(table.seeds) == len(set(table.seeds)) == 8

    def test_rmse_identity(self):
        metrics = run_experiment(smoke_spec()).metrics
        lhs = metrics["rmse"] ** 2
        rhs = metrics["bias"] ** 2 + metrics["sd"] ** 2
        assert np.allclose(lhs, rhs, rtol=1e-10, atol=0)

    def test_reproducible_across_workers(self):
        serial = run_experiment(smoke_spec())
        parallel = run_experiment(smoke_spec(n_jobs=2))
        pd.testing.assert_frame_equal(serial.metrics, parallel.metrics)
        pd.testing.assert_frame_equal(serial.raw, parallel.raw)

    def test_oracle_rows(self):
        table = run_experiment(smoke_spec(sample_sizes=[300], metrics=["theta", "oracle"]))
        assert set(table.metrics["parameter"]) == {"mu", "phi_1", "mu_oracle", "phi_1_oracle"}

    def test_outputs(self, tmp_path):
        paths = write_experiment_outputs(run_experiment(smoke_spec(sample_sizes=[300])), tmp_path)
        assert [p.name for p in paths] == ["metrics.csv", "rate_ratios.csv", "raw.csv"]
        assert paths[0].read_text().splitlines()[0] == ",".join(METRIC_COLUMNS)

    def test_failure_accounting(self, monkeypatch):
        original = experiment_module.two_step
        calls = {"count": 0}

        def flaky(series, p, config):
            calls["count"] += 1
            if calls["count"] == 1:
                raise NumericalError("solver blew up")
            return original(series, p, config)

        monkeypatch.setattr(experiment_module, "two_step", flaky)
        table = run_experiment(smoke_spec(sample_sizes=[300], replications=20))
        assert table.failed_reps == 1
        assert set(table.metrics["failed_reps"]) == {1}
        assert set(table.metrics["replications"]) == {19}

    def test_too_many_failures(self, monkeypatch):
        def broken(series, p, config):
            raise NumericalError("solver blew up")

        monkeypatch.setattr(experiment_module, "two_step", broken)
        with pytest.raises(AggregateFailureError):
            run_experiment(smoke_spec())


class TestReplication:
    """Test one replication with bootstrap metrics."""

    def test_coverage_and_wald_columns(self):
        spec = smoke_spec(
            replications=50,
            metrics=["theta", "tau", "coverage", "wald"],
            bootstrap=BootstrapConfig(replications=5),
        )
        row = run_replication(spec, "asymmetric_arch", 300, 0, seed=3)
        assert row["ok"]
        for name in ("tau", "mu", "phi_1"):
            assert f"cover_95_{name}" in row
            assert f"reject_{name}" in row
        assert row["gamma1_sq_hat"] >= 0.0


class TestRates:
    """Monte Carlo rate checks."""

    @pytest.mark.slow
    def test_root_n_rate(self):
        table = run_experiment(smoke_spec(
            sample_sizes=[500, 2000], replications=200, estimation=EstimationConfig(), n_jobs=4,
            metrics=["theta", "tau", "oracle"],
        ))
        ratios = table.rate_ratios.set_index("parameter")["rmse_ratio"]
        assert 1.4 <= ratios["tau"] <= 2.8
        for name in ("mu", "phi_1"):
            assert 1.3 <= ratios[name] <= 3.0
            assert 1.4 <= ratios[f"{name}_oracle"] <= 2.8

    @pytest.mark.slow
    def test_wald_size(self):
        table = run_experiment(smoke_spec(
            sample_sizes=[1000],
            replications=200,
            metrics=["theta", "tau", "wald"],
            bootstrap=BootstrapConfig(replications=199),
            estimation=EstimationConfig(),
            n_jobs=4,
        ))
        phi = table.metrics.set_index("parameter").loc["phi_1"]
        assert 0.01 <= phi["reject_rate"] <= 0.12


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
