"""
Population objects of the self-weighted quantile regression.

g(x, tau)   = -int E{ w Z [tau - F(x'Z)] } ds
dg/dx       =  int E[ w Z Z' F_1(x'Z) ] ds
delta_0(tau) solves g(delta_0, tau) = 0 and Sigma(tau) = dg/dx at delta_0(tau).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from common.errors import NoConvergenceError, OracleFailureError
from common.models import OracleConfig, TauGrid
from bias_oracle.draws import McEstimate, StationaryDraws, grouped_draws, integrate
from bias_oracle.model import ParametricNoiseModel

logger = logging.getLogger(__name__)

_PD_TOL = 1e-12
_MAX_CONDITION = 1e12
_MIN_STEP = 1.0 / 1024


@dataclass
class BiasCurve:
    """delta_0 over a grid of levels, with Monte Carlo standard errors."""
    levels: List[float]
    delta0: Dict[float, np.ndarray]
    mc_standard_errors: Dict[float, np.ndarray]
    derivative_at_tau0: np.ndarray
    derivative_se: np.ndarray
    tau0: float

    def to_rows(self) -> List[Dict[str, float]]:
        """`tau,delta0_j,se_j` rows for the CSV export."""
        rows = []
        for tau in self.levels:
            row = {"tau": tau}
            row.update({f"delta0_{j}": float(v) for j, v in enumerate(self.delta0[tau])})
            row.update({f"se_{j}": float(v) for j, v in enumerate(self.mc_standard_errors[tau])})
            rows.append(row)
        return rows


@dataclass
class BiasSolution:
    """Root of g(., tau) found by Newton iteration."""
    tau: float
    delta0: np.ndarray
    se: np.ndarray
    iterations: int
    trace: List[Tuple[int, float]] = field(default_factory=list, repr=False)


def _score_integrand(model: ParametricNoiseModel, x: np.ndarray, tau: float):
    def integrand(d: StationaryDraws) -> np.ndarray:
        bracket = tau - model.cond_cdf(d.rows @ x, d.sigma)
        return -(d.weights * bracket)[:, None] * d.rows
    return integrand


def _outer(d: StationaryDraws, scale: np.ndarray) -> np.ndarray:
    return scale[:, None, None] * d.rows[:, :, None] * d.rows[:, None, :]


def g_function(x, tau: float, model: ParametricNoiseModel, config: OracleConfig, keep_paths: bool = False) -> McEstimate:
    """
    Monte Carlo estimate of g(x, tau).

    Raises:
        GenerationOverflowError: If the stationary draws overflow
    """
    x = np.asarray(x, dtype=float)
    return integrate(model, config, _score_integrand(model, x, tau), keep_paths)


def _check_positive_definite(matrix: np.ndarray, what: str) -> None:
    eigenvalues = np.linalg.eigvalsh(matrix)
    if eigenvalues[0] <= _PD_TOL * max(1.0, eigenvalues[-1]):
        raise OracleFailureError(
            f"{what} is not positive definite (smallest eigenvalue {eigenvalues[0]:.3g}); "
            f"increase mc_paths or check the model"
        )
    if eigenvalues[-1] / eigenvalues[0] > _MAX_CONDITION:
        raise OracleFailureError(f"{what} is singular to working precision")


def g_jacobian(x, tau: float, model: ParametricNoiseModel, config: OracleConfig) -> McEstimate:
    """
    Monte Carlo estimate of dg/dx, symmetrized.

    Raises:
        OracleFailureError: If the estimate is not positive definite
    """
    x = np.asarray(x, dtype=float)

    def integrand(d: StationaryDraws) -> np.ndarray:
        return _outer(d, d.weights * model.cond_pdf(d.rows @ x, d.sigma))

    estimate = integrate(model, config, integrand)
    value = (estimate.value + estimate.value.T) / 2.0
    se = (estimate.se + estimate.se.T) / 2.0
    _check_positive_definite(value, "g_jacobian")
    return McEstimate(value=value, se=se)


def _root_se(model, config, x, tau, jacobian: np.ndarray) -> np.ndarray:
    """Delta-method standard error of the root: per-path J^-1 g contributions."""
    score = g_function(x, tau, model, config, keep_paths=True)
    contributions = np.linalg.solve(jacobian, score.paths.T).T
    return contributions.std(axis=0, ddof=1) / np.sqrt(contributions.shape[0])


def solve_bias(
    tau: float,
    model: ParametricNoiseModel,
    config: OracleConfig,
    x0: Optional[np.ndarray] = None,
) -> BiasSolution:
    """
    Newton iteration x <- x - J^-1 g with halving line search.

    The draws are fixed, so g is a deterministic smooth function of x.

    Args:
        tau: Quantile level
        model: Noise model
        config: Oracle settings (newton_tol, newton_max_iter)
        x0: Starting point (default 0)

    Raises:
        NoConvergenceError: After newton_max_iter iterations, with the trace
    """
    x = np.zeros(model.n_params) if x0 is None else np.asarray(x0, dtype=float).copy()
    g = g_function(x, tau, model, config).value
    norm = float(np.linalg.norm(g))
    trace: List[Tuple[int, float]] = []

    for it in range(config.newton_max_iter + 1):
        trace.append((it, norm))
        if norm < config.newton_tol * (1.0 + float(np.linalg.norm(x))):
            jacobian = g_jacobian(x, tau, model, config).value
            return BiasSolution(
                tau=tau, delta0=x, se=_root_se(model, config, x, tau, jacobian),
                iterations=it, trace=trace,
            )
        if it == config.newton_max_iter:
            break

        jacobian = g_jacobian(x, tau, model, config).value
        step = np.linalg.solve(jacobian, g)
        t = 1.0
        while True:
            x_new = x - t * step
            g_new = g_function(x_new, tau, model, config).value
            norm_new = float(np.linalg.norm(g_new))
            if norm_new < norm or t <= _MIN_STEP:
                break
            t /= 2.0
        x, g, norm = x_new, g_new, norm_new

    raise NoConvergenceError(
        f"solve_bias did not converge at tau={tau} after {config.newton_max_iter} iterations "
        f"(|g|={norm:.3g})",
        best_iterate=x,
        trace=trace,
    )


def sigma_matrix(
    tau: float,
    model: ParametricNoiseModel,
    config: OracleConfig,
    delta0: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Sigma(tau) = int E[w Z Z' F_1(delta_0(tau)' Z)] ds.

    delta_0 is solved for unless given; at tau_0 it is zero.
    """
    if delta0 is None:
        delta0 = solve_bias(tau, model, config).delta0
    return g_jacobian(delta0, tau, model, config).value


def bias_derivative_at_tau0(model: ParametricNoiseModel, config: OracleConfig) -> McEstimate:
    """
    d delta_0(tau_0) / d tau = Sigma(tau_0)^-1 int E[w Z] ds.

    Raises:
        OracleFailureError: If Sigma(tau_0) is singular
    """
    sigma = sigma_matrix(model.tau0, model, config, np.zeros(model.n_params))
    mean_wz = integrate(model, config, lambda d: d.weights[:, None] * d.rows, keep_paths=True)
    contributions = np.linalg.solve(sigma, mean_wz.paths.T).T
    value = np.linalg.solve(sigma, mean_wz.value)
    se = contributions.std(axis=0, ddof=1) / np.sqrt(contributions.shape[0])
    return McEstimate(value=value, se=se)


def bias_curve(levels, model: ParametricNoiseModel, config: OracleConfig) -> BiasCurve:
    """
    delta_0 at every level, solved in ascending order, each Newton run
    started from the previous root.

    Args:
        levels: A TauGrid or a sequence of levels
    """
    levels = levels.levels if isinstance(levels, TauGrid) else levels
    levels = sorted(float(t) for t in levels)
    delta0: Dict[float, np.ndarray] = {}
    errors: Dict[float, np.ndarray] = {}
    previous = None
    for tau in levels:
        solution = solve_bias(tau, model, config, previous)
        delta0[tau] = solution.delta0
        errors[tau] = solution.se
        previous = solution.delta0
    derivative = bias_derivative_at_tau0(model, config)
    logger.info(f"Bias curve solved at {len(levels)} levels")
    return BiasCurve(
        levels=levels,
        delta0=delta0,
        mc_standard_errors=errors,
        derivative_at_tau0=derivative.value,
        derivative_se=derivative.se,
        tau0=model.tau0,
    )


def curvature_diagnostics(model: ParametricNoiseModel, config: OracleConfig) -> Dict[str, float]:
    """
    Density and density-slope magnitudes of the conditional law at zero.
    Reported only; no estimator uses them.
    """
    f1_max = f2_max = 0.0
    f2_mean = 0.0
    for a, d in grouped_draws(model, config):
        f1 = model.cond_pdf(np.zeros(d.size), d.sigma)
        f2 = np.abs(model.cond_dpdf(np.zeros(d.size), d.sigma))
        f1_max = max(f1_max, float(f1.max()))
        f2_max = max(f2_max, float(f2.max()))
        f2_mean += a * float(f2.mean())
    return {"max_f1_at_zero": f1_max, "max_abs_f2_at_zero": f2_max, "mean_abs_f2_at_zero": f2_mean}
