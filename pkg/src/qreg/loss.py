"""
Pinball loss, its derivative psi, and the weighted sample objective.

psi_tau(x) = tau - I(x <= 0); the indicator includes zero.
"""

import numpy as np

from qreg.design import LaggedDesign


def pinball(tau: float, x):
    """rho_tau(x) = x * (tau - I(x <= 0)); vectorized."""
    x = np.asarray(x, dtype=float)
    return x * psi(tau, x)


def psi(tau: float, x):
    """tau - 1 where x <= 0, tau elsewhere; vectorized."""
    x = np.asarray(x, dtype=float)
    return np.where(x <= 0.0, tau - 1.0, tau)


def residuals(design: LaggedDesign, theta) -> np.ndarray:
    return design.responses - design.rows @ np.asarray(theta, dtype=float)


def weighted_objective(design: LaggedDesign, weights, tau: float, theta) -> float:
    """(n - p)^-1 sum_t w_t rho_tau(y_t - Z_{t-1}' theta)."""
    r = residuals(design, theta)
    return float(np.sum(np.asarray(weights) * pinball(tau, r)) / design.row_count)


def empirical_score(design: LaggedDesign, weights, theta, tau: float) -> np.ndarray:
    """
    Sample counterpart of g: -(n - p)^-1 sum_t w_t Z_{t-1} psi_tau(y_t - Z' theta).
    """
    r = residuals(design, theta)
    return -(design.rows.T @ (np.asarray(weights) * psi(tau, r))) / design.row_count
