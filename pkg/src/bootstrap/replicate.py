"""
Random-weighting bootstrap of the two-step estimator.

Each replication j draws i.i.d. multipliers w*_t in {0, 2} from stream(seed, j),
re-solves the SQE path on the surviving rows with weights w*_t w_t, re-selects
tau from the w*-weighted moments and solves at the new tau. The spread of
(tau*, theta*) around the original estimate estimates gamma_1^2 and Gamma_1.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from common.errors import AggregateFailureError, InvalidInputError, NumericalError
from common.io_utils import write_csv, write_json
from common.logging_config import get_logger
from common.metrics import get_metrics, timer
from common.models import BootstrapConfig, CiMethod, EstimationConfig
from common.rng import derive_seed, stream
from config import MAX_SKIP_FRACTION, MIN_BOOT_J_FOR_COVARIANCE
from qreg import eval_weights
from sqe import estimate_path, solution_at
from taustep import TwoStepEstimate, estimate_tau

logger = logging.getLogger(__name__)


@dataclass
class BootstrapDraw:
    """One replication (tau*, theta*)."""
    j: int
    tau_star: float
    theta_star: np.ndarray
    seed: int
    kept_rows: int


@dataclass
class BootstrapSummary:
    """Bootstrap covariances and confidence intervals around a two-step estimate."""
    draws: List[BootstrapDraw]
    tau_hat: float
    theta_hat: np.ndarray
    n: int
    gamma1_sq_hat: float
    Gamma1_hat: np.ndarray
    ci: Dict[str, Dict[float, Tuple[float, float]]]
    method: CiMethod
    replications: int
    skipped: List[int] = field(default_factory=list)
    parameter_names: List[str] = field(default_factory=list)

    @property
    def tau_draws(self) -> np.ndarray:
        return np.array([d.tau_star for d in self.draws])

    @property
    def theta_draws(self) -> np.ndarray:
        return np.vstack([d.theta_star for d in self.draws])

    def draws_frame(self) -> pd.DataFrame:
        """`j,tau_star,theta_star_0,...` table."""
        frame = pd.DataFrame({"j": [d.j for d in self.draws], "tau_star": self.tau_draws})
        thetas = self.theta_draws
        for i in range(thetas.shape[1]):
            frame[f"theta_star_{i}"] = thetas[:, i]
        return frame

    def to_record(self) -> Dict[str, Any]:
        return {
            "tau_hat": self.tau_hat,
            "theta_hat": self.theta_hat.tolist(),
            "parameter_names": list(self.parameter_names),
            "n": self.n,
            "replications": self.replications,
            "completed": len(self.draws),
            "skipped": list(self.skipped),
            "gamma1_sq_hat": self.gamma1_sq_hat,
            "Gamma1_hat": self.Gamma1_hat.tolist(),
            "ci_method": self.method.value,
            "ci": {
                name: {f"{level:g}": list(bounds) for level, bounds in levels.items()}
                for name, levels in self.ci.items()
            },
        }


def draw_multipliers(n: int, rng: np.random.Generator) -> np.ndarray:
    """
    n i.i.d. multipliers with P(0) = P(2) = 1/2 (mean 1, variance 1).

    Raises:
        InvalidInputError: If n < 1
    """
    if n < 1:
        raise InvalidInputError(f"need at least one multiplier, got n={n}")
    return 2.0 * rng.integers(0, 2, size=n).astype(float)


def replicate_once(
    j: int,
    estimate: TwoStepEstimate,
    estimation: EstimationConfig,
    config: BootstrapConfig,
) -> BootstrapDraw:
    """
    One bootstrap replication.

    Raises:
        NumericalError: From the solver (rank-deficient surviving design included)
    """
    design = estimate.design
    if config.unit_multipliers:
        multipliers = np.ones(design.row_count)
    else:
        multipliers = draw_multipliers(design.row_count, stream(config.seed, j))
    kept = multipliers > 0
    survivors = design.subset(kept)
    weights = (multipliers * eval_weights(estimation.weights, design))[kept]

    grid = estimate.path.grid if config.reuse_grid else estimation.grid
    path = estimate_path(
        survivors, estimation.weights, grid, estimation.solver,
        warm_start=estimation.warm_start, n_jobs=1, weights=weights,
    )
    selection = estimate_tau(design, estimate.family, path, estimation.refine_tol, multipliers)
    theta_star = solution_at(path, selection.tau_hat).theta_hat
    return BootstrapDraw(
        j=j,
        tau_star=selection.tau_hat,
        theta_star=theta_star,
        seed=derive_seed(config.seed, j),
        kept_rows=int(kept.sum()),
    )


def _replicate_or_skip(j, estimate, estimation, config) -> Optional[BootstrapDraw]:
    log = get_logger(__name__).with_context(replication=j)
    try:
        with timer("bootstrap.replicate"):
            return replicate_once(j, estimate, estimation, config)
    except NumericalError as e:
        log.warning(f"skipping replication: {e}")
        return None


def _normal_interval(center: float, variance: float, n: int, level: float) -> Tuple[float, float]:
    z = stats.norm.ppf(0.5 + level / 2.0)
    half = z * np.sqrt(max(variance, 0.0) / n)
    return (float(center - half), float(center + half))


def _centered_percentile_interval(center: float, draws: np.ndarray, level: float) -> Tuple[float, float]:
    deviations = draws - center
    lower_q, upper_q = np.quantile(deviations, [0.5 - level / 2.0, 0.5 + level / 2.0])
    return (float(center - upper_q), float(center - lower_q))


def confidence_intervals(
    summary_center: Dict[str, float],
    variances: Dict[str, float],
    draws: Dict[str, np.ndarray],
    n: int,
    method: CiMethod,
    levels,
) -> Dict[str, Dict[float, Tuple[float, float]]]:
    """Per-parameter intervals at each level for the chosen method."""
    intervals: Dict[str, Dict[float, Tuple[float, float]]] = {}
    for name, center in summary_center.items():
        intervals[name] = {}
        for level in levels:
            if method == CiMethod.NORMAL:
                intervals[name][level] = _normal_interval(center, variances[name], n, level)
            else:
                intervals[name][level] = _centered_percentile_interval(center, draws[name], level)
    return intervals


def bootstrap_two_step(
    series,
    estimate: TwoStepEstimate,
    config: BootstrapConfig,
    estimation: Optional[EstimationConfig] = None,
) -> BootstrapSummary:
    """
    Bootstrap the two-step estimator.

    Args:
        series: The series the estimate was computed from
        estimate: Output of two_step on the same series and configuration
        config: Replications, seed, workers and interval method
        estimation: The configuration two_step ran with

    Returns:
        BootstrapSummary with gamma1_sq_hat = J^-1 sum n (tau* - tau_hat)^2 and
        Gamma1_hat = J^-1 sum n (theta* - theta_hat)(theta* - theta_hat)'

    Raises:
        InvalidInputError: If the estimate does not belong to the series
        AggregateFailureError: If more than 5% of replications fail
    """
    estimation = estimation or EstimationConfig()
    values = getattr(series, "values", series)
    if estimate.design is None or len(values) != estimate.n:
        raise InvalidInputError("estimate was not produced from this series")
    if config.replications < MIN_BOOT_J_FOR_COVARIANCE:
        logger.warning(
            f"J={config.replications} replications is below {MIN_BOOT_J_FOR_COVARIANCE}; "
            f"covariance estimates will be noisy"
        )

    results = Parallel(n_jobs=config.parallel_chunks)(
        delayed(_replicate_or_skip)(j, estimate, estimation, config)
        for j in range(config.replications)
    )
    draws = [r for r in results if r is not None]
    skipped = [j for j, r in enumerate(results) if r is None]
    if skipped:
        get_metrics().increment("bootstrap.skipped", len(skipped))
    if len(skipped) > MAX_SKIP_FRACTION * config.replications:
        raise AggregateFailureError("bootstrap", len(skipped), config.replications)

    n = estimate.n
    tau_dev = np.array([d.tau_star for d in draws]) - estimate.tau_hat
    theta_dev = np.vstack([d.theta_star for d in draws]) - estimate.theta_hat
    gamma1_sq = float(n * np.mean(tau_dev ** 2))
    Gamma1 = n * (theta_dev.T @ theta_dev) / len(draws)
    Gamma1 = (Gamma1 + Gamma1.T) / 2.0

    names = list(estimate.parameter_names)
    centers = {"tau": estimate.tau_hat}
    centers.update({name: float(v) for name, v in zip(names, estimate.theta_hat)})
    variances = {"tau": gamma1_sq}
    variances.update({name: float(Gamma1[i, i]) for i, name in enumerate(names)})
    samples = {"tau": estimate.tau_hat + tau_dev}
    samples.update({name: estimate.theta_hat[i] + theta_dev[:, i] for i, name in enumerate(names)})
    ci = confidence_intervals(centers, variances, samples, n, config.ci_method, config.ci_levels)

    logger.info(
        f"Bootstrap finished: {len(draws)}/{config.replications} replications, "
        f"gamma1_sq_hat={gamma1_sq:.4g}"
    )
    return BootstrapSummary(
        draws=draws,
        tau_hat=estimate.tau_hat,
        theta_hat=np.asarray(estimate.theta_hat),
        n=n,
        gamma1_sq_hat=gamma1_sq,
        Gamma1_hat=Gamma1,
        ci=ci,
        method=config.ci_method,
        replications=config.replications,
        skipped=skipped,
        parameter_names=names,
    )


def write_bootstrap_json(summary: BootstrapSummary, json_path: Path, extra: Optional[Dict[str, Any]] = None) -> Path:
    record = summary.to_record()
    if extra:
        record.update(extra)
    return write_json(Path(json_path), record)


def write_draws_csv(summary: BootstrapSummary, csv_path: Path) -> Path:
    return write_csv(Path(csv_path), summary.draws_frame())
