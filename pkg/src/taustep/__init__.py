"""
Second step: moment-weight family, tau selection and the two-step estimator.
"""

from taustep.family import (
    MomentWeightFamily,
    bounded_transform,
    build_moment_family,
    enumerate_exponents,
    evaluate_members,
)
from taustep.selection import TauSelection, estimate_tau, golden_section, residual_moments
from taustep.two_step import (
    TwoStepEstimate,
    minimum_rows,
    oracle_estimate,
    two_step,
    write_objective_curve_csv,
    write_two_step_json,
)

__all__ = [
    "MomentWeightFamily",
    "TauSelection",
    "TwoStepEstimate",
    "bounded_transform",
    "build_moment_family",
    "enumerate_exponents",
    "estimate_tau",
    "evaluate_members",
    "golden_section",
    "minimum_rows",
    "oracle_estimate",
    "residual_moments",
    "two_step",
    "write_objective_curve_csv",
    "write_two_step_json",
]
