"""
Wald tests built on the bootstrap covariances.

Gamma1_hat and gamma1_sq_hat are on the sqrt(n) scale, so the statistics
carry the factor n explicitly.
"""

import logging
from typing import NamedTuple

import numpy as np
from scipy import stats

from common.errors import InvalidInputError, SingularMatrixError
from common.models import HypothesisSpec
from config import RANK_TOL

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e12


class WaldResult(NamedTuple):
    statistic: float
    p_value: float
    df: int


def wald_theta(theta_hat, Gamma1_hat, hyp: HypothesisSpec, n: int) -> WaldResult:
    """
    W_n = n (A theta - a)' (A Gamma1 A')^-1 (A theta - a), chi-square with s
    degrees of freedom.

    Raises:
        InvalidInputError: If A does not have full row rank or shapes disagree
        SingularMatrixError: If A Gamma1 A' has condition number >= 1e12
    """
    theta = np.asarray(theta_hat, dtype=float)
    cov = np.asarray(Gamma1_hat, dtype=float)
    A, a = hyp.matrices()
    s, width = A.shape
    if width != theta.size or cov.shape != (theta.size, theta.size):
        raise InvalidInputError(
            f"hypothesis has {width} columns but theta has {theta.size} entries"
        )
    if np.linalg.matrix_rank(A, tol=RANK_TOL) < s:
        raise InvalidInputError(f"restriction matrix A must have full row rank {s}")
    if n < 1:
        raise InvalidInputError(f"n must be positive, got {n}")

    middle = A @ cov @ A.T
    condition = np.linalg.cond(middle)
    if not np.isfinite(condition) or condition >= MAX_CONDITION:
        raise SingularMatrixError("A Gamma1 A'", condition)

    gap = A @ theta - a
    statistic = float(n * gap @ np.linalg.solve(middle, gap))
    p_value = float(stats.chi2.sf(statistic, df=s))
    logger.debug(f"Wald test on theta: W={statistic:.4g}, df={s}, p={p_value:.4g}")
    return WaldResult(statistic, p_value, s)


def wald_tau(tau_hat: float, gamma1_sq_hat: float, tau1: float, n: int) -> WaldResult:
    """
    w_n = n (tau_hat - tau1)^2 / gamma1_sq_hat, chi-square with one degree of
    freedom.

    Raises:
        InvalidInputError: If tau1 is not in (0, 1)
        SingularMatrixError: If gamma1_sq_hat is not positive
    """
    if not 0.0 < tau1 < 1.0:
        raise InvalidInputError(f"tau1 must lie in (0, 1), got {tau1}")
    if not gamma1_sq_hat > 0.0:
        raise SingularMatrixError("gamma1_sq_hat", float("inf"))
    statistic = float(n * (tau_hat - tau1) ** 2 / gamma1_sq_hat)
    p_value = float(stats.chi2.sf(statistic, df=1))
    return WaldResult(statistic, p_value, 1)
