"""
Monte Carlo experiment runner.

Replicates simulate -> two_step (-> bootstrap) over a menu of DGPs and
sample sizes, and aggregates bias, SD, RMSE, coverage and rejection rates.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from common.errors import AggregateFailureError, InvalidInputError, NumericalError
from common.io_utils import write_csv
from common.logging_config import get_logger
from common.metrics import record_replication_failure, timer
from common.models import ExperimentSpec, HypothesisSpec, SimulationSpec, coefficient_names
from common.rng import derive_seed
from config import MAX_SKIP_FRACTION
from bootstrap import bootstrap_two_step, wald_tau, wald_theta
from dgp import get_dgp, innovation_tau0, simulate_from_spec
from taustep import oracle_estimate, two_step

logger = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "dgp", "n", "parameter", "truth", "mean", "bias", "sd", "rmse",
    "coverage_90", "coverage_95", "reject_rate", "replications", "failed_reps",
]


@dataclass
class MetricsTable:
    """Aggregated metrics, rate ratios and the raw per-replication records."""
    metrics: pd.DataFrame
    rate_ratios: pd.DataFrame
    raw: pd.DataFrame
    seeds: List[int]

    @property
    def failed_reps(self) -> int:
        return int((~self.raw["ok"]).sum()) if len(self.raw) else 0


def true_parameters(spec: SimulationSpec, intercept_mode: bool) -> np.ndarray:
    """
    theta_0 in the estimator's column order.

    Raises:
        InvalidInputError: If an intercept-free fit is asked of a DGP with a
            non-zero intercept
    """
    ar = [float(c) for c in spec.theta.ar_coeffs]
    intercept = spec.theta.intercept or 0.0
    if intercept_mode:
        return np.array([intercept] + ar)
    if intercept != 0.0:
        raise InvalidInputError("intercept-free estimation needs a DGP without intercept")
    return np.array(ar)


def _interval_hits(summary, names, truths) -> Dict[str, bool]:
    hits = {}
    for name, truth in zip(names, truths):
        for level in (0.90, 0.95):
            bounds = summary.ci.get(name, {}).get(level)
            if bounds is not None:
                hits[f"cover_{int(round(level * 100))}_{name}"] = bounds[0] <= truth <= bounds[1]
    return hits


def _wald_rejections(summary, fit, names, theta_true, spec: ExperimentSpec) -> Dict[str, bool]:
    rejections = {}
    k = len(theta_true)
    for i, name in enumerate(names):
        row = np.zeros(k)
        row[i] = 1.0
        hyp = HypothesisSpec(A=[row.tolist()], a=[float(theta_true[i])])
        result = wald_theta(fit.theta_hat, summary.Gamma1_hat, hyp, fit.n)
        rejections[f"reject_{name}"] = result.p_value < spec.test_size
    result = wald_tau(fit.tau_hat, summary.gamma1_sq_hat, spec.tau_null, fit.n)
    rejections["reject_tau"] = result.p_value < spec.test_size
    return rejections


def run_replication(
    spec: ExperimentSpec,
    dgp_id: str,
    n: int,
    rep: int,
    seed: int,
) -> Dict[str, Any]:
    """
    One outer replication. Numerical failures are recorded in the row
    (ok=False) rather than raised.
    """
    log = get_logger(__name__).with_context(dgp=dgp_id, n=n, replication=rep)
    dgp = get_dgp(dgp_id)
    p = dgp.theta.p
    intercept = spec.estimation.intercept
    names = coefficient_names(p, intercept)
    theta_true = true_parameters(dgp, intercept)
    tau_true = innovation_tau0(dgp.innovation)
    row: Dict[str, Any] = {"dgp": dgp_id, "n": n, "rep": rep, "seed": seed, "ok": True, "error": ""}

    try:
        with timer("harness.replication"):
            series = simulate_from_spec(dgp, n=n, seed=seed)
            fit = two_step(series, p, spec.estimation)
            row["tau_hat"] = fit.tau_hat
            row["boundary_flag"] = fit.boundary_flag
            row.update({f"{name}_hat": float(v) for name, v in zip(names, fit.theta_hat)})

            if "oracle" in spec.metrics:
                oracle = oracle_estimate(series, p, spec.estimation, tau_true)
                row.update({f"{name}_oracle": float(v) for name, v in zip(names, oracle.theta_hat)})

            if spec.bootstrap is not None and {"coverage", "wald"} & set(spec.metrics):
                boot_config = spec.bootstrap.model_copy(update={"seed": seed})
                summary = bootstrap_two_step(series, fit, boot_config, spec.estimation)
                row["gamma1_sq_hat"] = summary.gamma1_sq_hat
                if "coverage" in spec.metrics:
                    row.update(_interval_hits(summary, ["tau"] + names, [tau_true, *theta_true]))
                if "wald" in spec.metrics:
                    row.update(_wald_rejections(summary, fit, names, theta_true, spec))
    except NumericalError as e:
        log.warning(f"replication failed: {e}")
        record_replication_failure("harness")
        row["ok"] = False
        row["error"] = type(e).__name__
    return row


def _replication_plan(spec: ExperimentSpec) -> List[Tuple[str, int, int, int]]:
    plan = []
    for d, dgp_id in enumerate(spec.dgp_ids):
        for s, n in enumerate(spec.sample_sizes):
            for r in range(spec.replications):
                plan.append((dgp_id, n, r, derive_seed(spec.master_seed, d, s, r)))
    return plan


def summarize_estimates(estimates: np.ndarray, truth: float) -> Dict[str, float]:
    """
    Bias, SD and RMSE of a sample of estimates.

    SD uses the 1/R normaliser so that RMSE^2 = bias^2 + SD^2.
    """
    if estimates.size == 0:
        return {"mean": math.nan, "bias": math.nan, "sd": math.nan, "rmse": math.nan}
    mean = float(np.mean(estimates))
    bias = mean - truth
    sd = float(np.std(estimates))
    rmse = float(np.sqrt(np.mean((estimates - truth) ** 2)))
    return {"mean": mean, "bias": bias, "sd": sd, "rmse": rmse}


def _rate(raw: pd.DataFrame, column: str) -> float:
    if column not in raw:
        return math.nan
    values = raw[column].dropna()
    return float(values.astype(bool).mean()) if len(values) else math.nan


def aggregate(raw: pd.DataFrame, spec: ExperimentSpec) -> pd.DataFrame:
    """One row per (dgp, n, parameter)."""
    rows = []
    for dgp_id in spec.dgp_ids:
        dgp = get_dgp(dgp_id)
        names = coefficient_names(dgp.theta.p, spec.estimation.intercept)
        truths = {"tau": innovation_tau0(dgp.innovation)}
        truths.update(dict(zip(names, true_parameters(dgp, spec.estimation.intercept))))
        parameters = []
        if "tau" in spec.metrics:
            parameters.append(("tau", "tau_hat", "tau"))
        if "theta" in spec.metrics:
            parameters.extend((name, f"{name}_hat", name) for name in names)
        if "oracle" in spec.metrics:
            parameters.extend((f"{name}_oracle", f"{name}_oracle", name) for name in names)

        for n in spec.sample_sizes:
            cell = raw[(raw["dgp"] == dgp_id) & (raw["n"] == n)]
            ok = cell[cell["ok"]]
            failed = int(len(cell) - len(ok))
            for label, column, truth_key in parameters:
                estimates = ok[column].to_numpy(dtype=float) if column in ok else np.array([])
                row = {
                    "dgp": dgp_id,
                    "n": n,
                    "parameter": label,
                    "truth": truths[truth_key],
                    **summarize_estimates(estimates, truths[truth_key]),
                    "coverage_90": _rate(ok, f"cover_90_{label}"),
                    "coverage_95": _rate(ok, f"cover_95_{label}"),
                    "reject_rate": _rate(ok, f"reject_{label}"),
                    "replications": int(len(ok)),
                    "failed_reps": failed,
                }
                rows.append(row)
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def rate_ratios(metrics: pd.DataFrame) -> pd.DataFrame:
    """RMSE(n_small) / RMSE(n_large) for every pair of sample sizes."""
    rows = []
    for (dgp_id, parameter), group in metrics.groupby(["dgp", "parameter"], sort=False):
        by_n = group.set_index("n")["rmse"].sort_index()
        sizes = list(by_n.index)
        for i, small in enumerate(sizes):
            for large in sizes[i + 1:]:
                rows.append({
                    "dgp": dgp_id,
                    "parameter": parameter,
                    "n_small": int(small),
                    "n_large": int(large),
                    "rmse_ratio": float(by_n[small] / by_n[large]),
                    "sqrt_n_ratio": math.sqrt(large / small),
                })
    return pd.DataFrame(rows, columns=["dgp", "parameter", "n_small", "n_large", "rmse_ratio", "sqrt_n_ratio"])


def run_experiment(spec: ExperimentSpec) -> MetricsTable:
    """
    Run every (dgp, n, replication) and aggregate.

    Args:
        spec: Experiment definition; replication seeds derive from
            (master_seed, dgp index, size index, replication)

    Returns:
        MetricsTable; identical for a given master seed and any n_jobs

    Raises:
        InvalidInputError: Unknown DGP id or mismatched intercept mode
        AggregateFailureError: If more than 5% of replications fail
    """
    for dgp_id in spec.dgp_ids:
        true_parameters(get_dgp(dgp_id), spec.estimation.intercept)
    plan = _replication_plan(spec)
    logger.info(
        f"Running {len(plan)} replications over {len(spec.dgp_ids)} DGP(s) "
        f"and sizes {spec.sample_sizes}"
    )

    records = Parallel(n_jobs=spec.n_jobs)(
        delayed(run_replication)(spec, dgp_id, n, rep, seed) for dgp_id, n, rep, seed in plan
    )
    raw = pd.DataFrame(records)
    failed = int((~raw["ok"]).sum())
    if failed > MAX_SKIP_FRACTION * len(plan):
        raise AggregateFailureError("experiment", failed, len(plan))

    metrics = aggregate(raw, spec)
    ratios = rate_ratios(metrics)
    logger.info(f"Experiment finished: {len(plan) - failed}/{len(plan)} replications succeeded")
    return MetricsTable(metrics=metrics, rate_ratios=ratios, raw=raw, seeds=[seed for *_, seed in plan])


def write_experiment_outputs(table: MetricsTable, output_dir: Path) -> List[Path]:
    """metrics.csv, rate_ratios.csv and raw.csv under output_dir."""
    output_dir = Path(output_dir)
    return [
        write_csv(output_dir / "metrics.csv", table.metrics),
        write_csv(output_dir / "rate_ratios.csv", table.rate_ratios),
        write_csv(output_dir / "raw.csv", table.raw),
    ]
