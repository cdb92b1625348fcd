"""
Lagged regression design and self-weights.
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np

from common.errors import InvalidInputError
from common.input_validation import validate_values
from common.models import WeightFamily, WeightSpec


@dataclass
class LaggedDesign:
    """
    Rows Z_{t-1} = (1, y_{t-1}, ..., y_{t-p}) (no leading 1 when intercept-free)
    and responses y_t for t = p+1..n.
    """
    rows: np.ndarray
    responses: np.ndarray
    p: int
    intercept_mode: bool
    n: int

    @property
    def row_count(self) -> int:
        return int(self.responses.size)

    @property
    def n_params(self) -> int:
        return int(self.rows.shape[1])

    @property
    def lags(self) -> np.ndarray:
        """(rows, p) matrix; column j is y_{t-1-j}."""
        return self.rows[:, 1:] if self.intercept_mode else self.rows

    @property
    def time_ratios(self) -> np.ndarray:
        return np.arange(self.p + 1, self.n + 1) / self.n

    def subset(self, mask) -> "LaggedDesign":
        """Design restricted to the rows where mask is true (n and p unchanged)."""
        mask = np.asarray(mask, dtype=bool)
        return LaggedDesign(
            rows=self.rows[mask],
            responses=self.responses[mask],
            p=self.p,
            intercept_mode=self.intercept_mode,
            n=self.n,
        )

    def summary(self) -> Dict[str, Any]:
        return {"n": self.n, "p": self.p, "intercept_mode": self.intercept_mode}


def _series_values(series) -> np.ndarray:
    values = getattr(series, "values", series)
    return validate_values(values)


def build_design(series, p: int, intercept_mode: bool) -> LaggedDesign:
    """
    Build the lagged design from a SeriesSample (or a plain array).

    Raises:
        InvalidInputError: If p < 1 or there are fewer than p + 2 rows
    """
    y = _series_values(series)
    n = y.size
    if p < 1:
        raise InvalidInputError(f"lag order must be >= 1, got {p}")
    if n - p < p + 2:
        raise InvalidInputError(f"series of length {n} is too short for p={p} (need n >= {2 * p + 2})")

    lag_columns = [y[p - 1 - j: n - 1 - j] for j in range(p)]
    lags = np.column_stack(lag_columns)
    rows = np.column_stack([np.ones(n - p), lags]) if intercept_mode else lags
    return LaggedDesign(rows=rows, responses=y[p:].copy(), p=p, intercept_mode=intercept_mode, n=n)


def weights_from_lags(spec: WeightSpec, lags: np.ndarray) -> np.ndarray:
    """Evaluate a weight spec on a (rows, p) lag matrix."""
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    if spec.family == WeightFamily.UNIT:
        return np.ones(lags.shape[0])
    powered = np.abs(lags) ** spec.k
    if spec.family == WeightFamily.POWER:
        return 1.0 / np.prod(1.0 + powered, axis=1)
    # exp_power: prod (1 + e^{|y|^k})^{-1}, in log space
    log_w = -np.sum(np.logaddexp(0.0, powered), axis=1)
    return np.maximum(np.exp(log_w), np.finfo(float).tiny)


def eval_weights(spec: WeightSpec, design: LaggedDesign) -> np.ndarray:
    """One self-weight per design row, in (0, 1]."""
    return weights_from_lags(spec, design.lags)
