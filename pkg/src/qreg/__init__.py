"""
Self-weighted quantile regression for one quantile level.
"""

from qreg.design import LaggedDesign, build_design, eval_weights, weights_from_lags
from qreg.loss import empirical_score, pinball, psi, residuals, weighted_objective
from qreg.solver import QrSolution, check_rank, solve_wqr, subgradient_certificate

__all__ = [
    "LaggedDesign",
    "QrSolution",
    "build_design",
    "check_rank",
    "empirical_score",
    "eval_weights",
    "pinball",
    "psi",
    "residuals",
    "solve_wqr",
    "subgradient_certificate",
    "weighted_objective",
    "weights_from_lags",
]
