"""
Monte Carlo ground truth for parametric DGPs: g, its Jacobian, the bias
curve delta_0, Sigma and the asymptotic variances of the two-step estimator.
"""

from bias_oracle.draws import McEstimate, StationaryDraws, integrate, stationary_draws, trapezoid_weights
from bias_oracle.model import ParametricNoiseModel
from bias_oracle.population import (
    BiasCurve,
    BiasSolution,
    bias_curve,
    bias_derivative_at_tau0,
    curvature_diagnostics,
    g_function,
    g_jacobian,
    sigma_matrix,
    solve_bias,
)
from bias_oracle.reports import oracle_report, write_bias_curve_csv, write_oracle_report
from bias_oracle.variances import (
    AsymptoticVariances,
    IdentificationReport,
    asymptotic_variances,
    g_tilde,
    g_tilde_derivative,
    verify_identification,
)

__all__ = [
    "AsymptoticVariances",
    "BiasCurve",
    "BiasSolution",
    "IdentificationReport",
    "McEstimate",
    "ParametricNoiseModel",
    "StationaryDraws",
    "asymptotic_variances",
    "bias_curve",
    "bias_derivative_at_tau0",
    "curvature_diagnostics",
    "g_function",
    "g_jacobian",
    "g_tilde",
    "g_tilde_derivative",
    "integrate",
    "oracle_report",
    "sigma_matrix",
    "solve_bias",
    "stationary_draws",
    "trapezoid_weights",
    "verify_identification",
    "write_bias_curve_csv",
    "write_oracle_report",
]
