"""
Two-step estimator.

Runs build_design -> eval_weights -> estimate_path -> build_moment_family
-> estimate_tau, then solves afresh at tau_hat. Failures are re-raised as
StageError tagged with the stage that failed.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from common.errors import InvalidInputError, StageError
from common.io_utils import write_csv, write_json
from common.metrics import timer
from common.models import EstimationConfig, coefficient_names
from qreg import LaggedDesign, QrSolution, build_design, eval_weights, solve_wqr
from sqe import QuantilePath, estimate_path, solution_at
from taustep.family import MomentWeightFamily, build_moment_family
from taustep.selection import TauSelection, estimate_tau

logger = logging.getLogger(__name__)


@dataclass
class TwoStepEstimate:
    """Feasible estimate (tau_hat, theta_hat(tau_hat)) with its diagnostics."""
    tau_hat: float
    theta_hat: np.ndarray
    objective_curve: List[Tuple[float, float]]
    refine_iterations: int
    boundary_flag: bool
    objective: float
    parameter_names: List[str]
    n: int
    p: int
    intercept_mode: bool
    warnings: List[str] = field(default_factory=list)
    solution: Optional[QrSolution] = field(default=None, repr=False)
    path: Optional[QuantilePath] = field(default=None, repr=False)
    family: Optional[MomentWeightFamily] = field(default=None, repr=False)
    design: Optional[LaggedDesign] = field(default=None, repr=False)

    def objective_frame(self) -> pd.DataFrame:
        """`tau,objective` table over grid levels and refinement probes."""
        return pd.DataFrame(self.objective_curve, columns=["tau", "objective"])

    def to_record(self) -> Dict[str, Any]:
        """JSON result record."""
        record = {
            "tau_hat": float(self.tau_hat),
            "theta_hat": [float(v) for v in self.theta_hat],
            "parameter_names": list(self.parameter_names),
            "objective_at_tau_hat": float(self.objective),
            "objective_curve": [
                {"tau": float(t), "objective": float(q)} for t, q in self.objective_curve
            ],
            "refine_iterations": int(self.refine_iterations),
            "boundary_flag": bool(self.boundary_flag),
            "warnings": list(self.warnings),
            "n": int(self.n),
            "p": int(self.p),
            "intercept": bool(self.intercept_mode),
        }
        if self.family is not None:
            record["family"] = self.family.summary()
        return record


def minimum_rows(p: int, epsilon: float) -> int:
    """
    Fewest retained rows two_step accepts: enough for a basic fit away from
    the interpolation regime and for (p + 1) observations beyond each grid end.
    """
    return max(2 * p + 2, math.ceil((p + 1) / epsilon))


def _run_stage(stage: str, fn: Callable, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as e:
        raise StageError(stage, e) from e


def _check_length(design: LaggedDesign, config: EstimationConfig) -> None:
    required = minimum_rows(design.p, config.grid.epsilon)
    if design.row_count < required:
        raise InvalidInputError(
            f"series too short: {design.row_count} usable rows, need at least {required} "
            f"for p={design.p} and epsilon={config.grid.epsilon}"
        )


def two_step(series, p: int, config: Optional[EstimationConfig] = None) -> TwoStepEstimate:
    """
    Estimate (tau_0, theta_0) from a single series.

    Args:
        series: SeriesSample or 1-D array of observations
        p: AR order
        config: Weights, grid, family and solver settings

    Returns:
        TwoStepEstimate; deterministic given (series, config)

    Raises:
        StageError: Tagged with the failing stage; the original error is
            its __cause__
    """
    config = config or EstimationConfig()

    with timer("taustep.two_step"):
        design = _run_stage("build_design", build_design, series, p, config.intercept)
        _run_stage("build_design", _check_length, design, config)
        weights = _run_stage("eval_weights", eval_weights, config.weights, design)
        path = _run_stage(
            "estimate_path", estimate_path, design, config.weights, config.grid,
            config.solver, config.warm_start, config.n_jobs, weights,
        )
        family = _run_stage(
            "build_moment_family", build_moment_family, design,
            config.family_base_weights(), config.d0, config.family_lags(p),
        )
        selection: TauSelection = _run_stage(
            "estimate_tau", estimate_tau, design, family, path, config.refine_tol,
        )
        solution = _run_stage("final_solve", solution_at, path, selection.tau_hat)

    if selection.boundary_flag:
        logger.warning(
            f"tau_hat={selection.tau_hat:.4f} lies within one step of the grid boundary; "
            f"tau_0 may be outside [{config.grid.lower}, {config.grid.upper}]"
        )
    logger.info(
        f"Two-step estimate: tau_hat={selection.tau_hat:.4f} after "
        f"{selection.refine_iterations} refinement probes"
    )

    return TwoStepEstimate(
        tau_hat=selection.tau_hat,
        theta_hat=solution.theta_hat,
        objective_curve=selection.objective_curve,
        refine_iterations=selection.refine_iterations,
        boundary_flag=selection.boundary_flag,
        objective=selection.objective,
        parameter_names=coefficient_names(p, config.intercept),
        n=design.n,
        p=p,
        intercept_mode=config.intercept,
        warnings=list(selection.warnings),
        solution=solution,
        path=path,
        family=family,
        design=design,
    )


def oracle_estimate(series, p: int, config: Optional[EstimationConfig], tau0: float) -> QrSolution:
    """
    Infeasible estimator theta_hat(tau_0) at the true zero-crossing level.

    Raises:
        InvalidInputError: If tau0 is not in (0, 1)
    """
    config = config or EstimationConfig()
    if not 0.0 < tau0 < 1.0:
        raise InvalidInputError(f"tau0 must lie in (0, 1), got {tau0}")
    design = build_design(series, p, config.intercept)
    weights = eval_weights(config.weights, design)
    return solve_wqr(design, weights, tau0, config.solver)


def write_two_step_json(estimate: TwoStepEstimate, json_path: Path) -> Path:
    return write_json(Path(json_path), estimate.to_record())


def write_objective_curve_csv(estimate: TwoStepEstimate, csv_path: Path) -> Path:
    return write_csv(Path(csv_path), estimate.objective_frame())
