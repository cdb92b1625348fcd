"""
AR stationarity check via companion-matrix eigenvalues.
"""

import logging

import numpy as np

from common.errors import InvalidInputError
from common.models import ThetaVector

logger = logging.getLogger(__name__)

ROOT_MARGIN = 1e-10
RESIDUAL_TOL = 1e-8


def companion_matrix(ar_coeffs) -> np.ndarray:
    """Companion matrix whose eigenvalues are the reciprocal roots of 1 - sum phi_j z^j."""
    phi = np.asarray(ar_coeffs, dtype=float)
    p = phi.size
    matrix = np.zeros((p, p))
    matrix[0, :] = phi
    if p > 1:
        matrix[1:, :-1] = np.eye(p - 1)
    return matrix


def check_stationarity(theta: ThetaVector) -> bool:
    """
    True iff every root of phi(z) = 1 - sum phi_j z^j has modulus > 1 + 1e-10.

    Raises:
        InvalidInputError: If any coefficient is non-finite
    """
    values = list(theta.ar_coeffs) + ([theta.intercept] if theta.has_intercept else [])
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"non-finite AR parameter: {values}")

    phi = np.asarray(theta.ar_coeffs, dtype=float)
    eigenvalues = np.linalg.eigvals(companion_matrix(phi))

    # lambda^p - sum phi_j lambda^(p-j) vanishes at every eigenvalue
    char_poly = np.concatenate(([1.0], -phi))
    residual = np.max(np.abs(np.polyval(char_poly, eigenvalues)), initial=0.0)
    if residual > RESIDUAL_TOL * (1.0 + np.sum(np.abs(phi))):
        logger.warning(f"companion eigenvalue residual {residual:.3g} above tolerance")

    moduli = np.abs(eigenvalues)
    # roots of phi(z) are 1/lambda; lambda = 0 means a root at infinity
    return bool(np.all(moduli * (1.0 + ROOT_MARGIN) < 1.0))
