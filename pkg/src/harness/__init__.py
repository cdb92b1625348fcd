"""
Monte Carlo experiment runner and metric tables.
"""

from harness.experiment import (
    METRIC_COLUMNS,
    MetricsTable,
    aggregate,
    rate_ratios,
    run_experiment,
    run_replication,
    summarize_estimates,
    true_parameters,
    write_experiment_outputs,
)

__all__ = [
    "METRIC_COLUMNS",
    "MetricsTable",
    "aggregate",
    "rate_ratios",
    "run_experiment",
    "run_replication",
    "summarize_estimates",
    "true_parameters",
    "write_experiment_outputs",
]
