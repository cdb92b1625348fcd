"""
Self-weighted quantile regression estimator over a grid of levels.
"""

from sqe.path import QuantilePath, estimate_path, path_at, solution_at, write_path_csv

__all__ = ["QuantilePath", "estimate_path", "path_at", "solution_at", "write_path_csv"]
