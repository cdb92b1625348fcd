"""
Second-step selection of the zero-crossing level.

Q(tau) = sum_l m_l(tau)^2 with m_l(tau) = (n-p)^-1 sum_t w~_lt psi_tau(y_t - Z' theta_hat(tau)).
The grid argmin (ties to the smallest tau) is refined by golden-section
search on the bracketing grid interval.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from common.metrics import get_metrics
from qreg import LaggedDesign, psi
from sqe import QuantilePath, path_at
from taustep.family import MomentWeightFamily

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5) - 1) / 2
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2

BOUNDARY_WARNING = "TAU_AT_BOUNDARY"


@dataclass
class TauSelection:
    """Result of the tau search."""
    tau_hat: float
    objective: float
    objective_curve: List[Tuple[float, float]]
    refine_iterations: int
    boundary_flag: bool
    warnings: List[str] = field(default_factory=list)


def residual_moments(
    design: LaggedDesign,
    family: MomentWeightFamily,
    path_or_theta,
    tau: float,
    multipliers: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    m_l(tau) for every family member.

    Args:
        design: Design the family was evaluated on
        family: Evaluated moment family
        path_or_theta: A QuantilePath (theta taken at tau) or a coefficient vector
        tau: Quantile level
        multipliers: Bootstrap multipliers w*_t (rows with 0 drop out);
            the normaliser stays (n - p)
    """
    if isinstance(path_or_theta, QuantilePath):
        theta = path_at(path_or_theta, tau)
    else:
        theta = np.asarray(path_or_theta, dtype=float)
    r = design.responses - design.rows @ theta
    score = psi(tau, r)
    if multipliers is not None:
        score = score * multipliers
    return (family.values.T @ score) / design.row_count


def golden_section(f: Callable[[float], float], a: float, b: float, tol: float) -> Tuple[float, float, int]:
    """
    Shrink [a, b] around a minimum of f until its width is below tol.

    Returns:
        (a, b, number of evaluations)
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    if h < tol:
        return a, b, 0

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc, yd = f(c), f(d)
    evaluations = 2

    while b - a >= tol:
        if yc < yd:
            b, d, yd = d, c, yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)
        evaluations += 1

    return a, b, evaluations


def estimate_tau(
    design: LaggedDesign,
    family: MomentWeightFamily,
    path: QuantilePath,
    refine_tol: float,
    multipliers: Optional[np.ndarray] = None,
) -> TauSelection:
    """
    Minimize Q over the grid, then refine by golden section.

    The returned tau_hat minimizes Q over every evaluated point (grid and
    probes), ties going to the smallest tau.

    Args:
        design: Design the family was evaluated on (full sample for bootstrap)
        family: Evaluated moment family
        path: SQE path (may be solved on a bootstrap subsample)
        refine_tol: Golden-section stopping width
        multipliers: Bootstrap multipliers
    """
    evaluated: Dict[float, float] = {}

    def objective(tau: float) -> float:
        m = residual_moments(design, family, path, tau, multipliers)
        value = float(m @ m)
        evaluated[float(tau)] = value
        return value

    levels = path.levels
    grid_values = np.array([objective(tau) for tau in levels])
    k = int(np.argmin(grid_values))
    lower = float(levels[max(k - 1, 0)])
    upper = float(levels[min(k + 1, levels.size - 1)])

    _, _, probes = golden_section(objective, lower, upper, refine_tol)
    get_metrics().increment("taustep.refine_probes", probes)

    curve = sorted(evaluated.items())
    tau_hat, q_hat = min(curve, key=lambda item: (item[1], item[0]))

    step = float(levels[1] - levels[0]) if levels.size > 1 else 0.0
    boundary = (
        tau_hat <= path.grid.lower + step + 1e-12
        or tau_hat >= path.grid.upper - step - 1e-12
    )
    warnings = [BOUNDARY_WARNING] if boundary else []
    if boundary:
        logger.debug(f"tau_hat={tau_hat:.4f} within one step of the grid boundary")

    return TauSelection(
        tau_hat=tau_hat,
        objective=q_hat,
        objective_curve=curve,
        refine_iterations=probes,
        boundary_flag=boundary,
        warnings=warnings,
    )
