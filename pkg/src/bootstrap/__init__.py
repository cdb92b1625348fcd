"""
Random-weighting bootstrap of the two-step estimator and Wald tests.
"""

from bootstrap.replicate import (
    BootstrapDraw,
    BootstrapSummary,
    bootstrap_two_step,
    confidence_intervals,
    draw_multipliers,
    replicate_once,
    write_bootstrap_json,
    write_draws_csv,
)
from bootstrap.wald import WaldResult, wald_tau, wald_theta

__all__ = [
    "BootstrapDraw",
    "BootstrapSummary",
    "WaldResult",
    "bootstrap_two_step",
    "confidence_intervals",
    "draw_multipliers",
    "replicate_once",
    "wald_tau",
    "wald_theta",
    "write_bootstrap_json",
    "write_draws_csv",
]
