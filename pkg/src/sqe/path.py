"""
SQE path: weighted quantile regression solutions across a grid of levels.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from common.errors import StageError, TauRangeError
from common.io_utils import write_csv
from common.metrics import get_metrics, timer
from common.models import SolverOptions, TauGrid, WeightSpec
from qreg import LaggedDesign, QrSolution, eval_weights, solve_wqr

logger = logging.getLogger(__name__)

_LEVEL_TOL = 1e-12


@dataclass
class QuantilePath:
    """
    Solutions theta_hat(tau) on a grid, plus what is needed to solve at
    off-grid levels.
    """
    grid: TauGrid
    estimates: Dict[float, QrSolution]
    weights_used: WeightSpec
    design_ref: Dict[str, object]
    design: LaggedDesign = field(repr=False)
    weights: np.ndarray = field(repr=False)
    opts: SolverOptions = field(default_factory=SolverOptions, repr=False)
    extra: Dict[float, QrSolution] = field(default_factory=dict, repr=False)

    @property
    def levels(self) -> np.ndarray:
        return np.fromiter(self.estimates.keys(), dtype=float)

    def coefficients(self) -> np.ndarray:
        """(levels, k) matrix of grid coefficients."""
        return np.vstack([s.theta_hat for s in self.estimates.values()])

    def to_frame(self) -> pd.DataFrame:
        """`tau,coef_0,...,coef_k,objective` table."""
        coefs = self.coefficients()
        frame = pd.DataFrame({"tau": self.levels})
        for j in range(coefs.shape[1]):
            frame[f"coef_{j}"] = coefs[:, j]
        frame["objective"] = [s.objective for s in self.estimates.values()]
        return frame


def _solve_level(design, weights, tau, opts, theta_start=None) -> QrSolution:
    try:
        return solve_wqr(design, weights, tau, opts, theta_start=theta_start)
    except Exception as e:
        raise StageError("sqe.estimate_path", e, level=tau) from e


def estimate_path(
    design: LaggedDesign,
    wspec: WeightSpec,
    grid: TauGrid,
    opts: Optional[SolverOptions] = None,
    warm_start: bool = True,
    n_jobs: int = 1,
    weights: Optional[np.ndarray] = None,
) -> QuantilePath:
    """
    Solve at every grid level.

    Warm-started mode solves in ascending order, each from the previous
    coefficients; cold mode solves levels independently and may run them
    in parallel. Both reach the same objectives.

    Args:
        design: Lagged design
        wspec: Self-weight spec (evaluated unless `weights` is given)
        grid: Quantile grid
        opts: Solver options
        warm_start: Chain solves through the grid
        n_jobs: Workers for cold mode
        weights: Precomputed row weights (bootstrap passes w* w)

    Raises:
        StageError: Wrapping the solver error, tagged with the failing level
    """
    opts = opts or SolverOptions()
    if weights is None:
        weights = eval_weights(wspec, design)
    levels = [float(t) for t in grid.levels]

    with timer("sqe.estimate_path"):
        if warm_start:
            solutions: List[QrSolution] = []
            previous = None
            for tau in levels:
                solution = _solve_level(design, weights, tau, opts, previous)
                previous = solution.theta_hat
                solutions.append(solution)
        else:
            solutions = Parallel(n_jobs=n_jobs)(
                delayed(_solve_level)(design, weights, tau, opts) for tau in levels
            )

    get_metrics().increment("sqe.path_levels", len(levels))
    logger.debug(f"Solved SQE path over {len(levels)} levels (warm_start={warm_start})")
    return QuantilePath(
        grid=grid,
        estimates=dict(zip(levels, solutions)),
        weights_used=wspec,
        design_ref=design.summary(),
        design=design,
        weights=np.asarray(weights, dtype=float),
        opts=opts,
    )


def _grid_match(path: QuantilePath, tau: float) -> Optional[float]:
    levels = path.levels
    i = int(np.argmin(np.abs(levels - tau)))
    return float(levels[i]) if abs(levels[i] - tau) <= _LEVEL_TOL else None


def solution_at(path: QuantilePath, tau: float) -> QrSolution:
    """
    Stored solution at a grid level, otherwise a fresh solve warm-started
    from the nearest level (cached on the path).

    Raises:
        TauRangeError: If tau is outside [epsilon, 1 - epsilon]
    """
    if not path.grid.contains(tau):
        raise TauRangeError(tau, path.grid.lower, path.grid.upper)
    level = _grid_match(path, tau)
    if level is not None:
        return path.estimates[level]
    if tau in path.extra:
        return path.extra[tau]

    levels = path.levels
    nearest = float(levels[int(np.argmin(np.abs(levels - tau)))])
    solution = _solve_level(path.design, path.weights, tau, path.opts, path.estimates[nearest].theta_hat)
    path.extra[tau] = solution
    return solution


def path_at(path: QuantilePath, tau: float) -> np.ndarray:
    """Coefficient vector theta_hat(tau); no interpolation between levels."""
    return solution_at(path, tau).theta_hat


def write_path_csv(path: QuantilePath, csv_path: Path) -> Path:
    return write_csv(Path(csv_path), path.to_frame())
