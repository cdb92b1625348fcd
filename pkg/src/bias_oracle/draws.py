"""
Stationary Monte Carlo draws and s-integration.

Every population quantity has the form integral_0^1 E[f(Y_{t-1}(s), sigma_t(s))] ds.
For each s on the grid we draw mc_paths windows of the frozen-ratio
process, evaluate f per path, and combine the s-points with trapezoid
weights path by path. The reported standard error is the sample standard
deviation of the per-path integrals over sqrt(mc_paths).

Chunk c of every s-point is drawn from stream(seed, c), so the draws are
common random numbers across s, tau and Newton iterates.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

from common.caching import get_draw_cache, make_cache_key
from common.metrics import timer
from common.models import OracleConfig
from common.rng import stream
from dgp import stationary_states
from qreg import weights_from_lags
from bias_oracle.model import ParametricNoiseModel

logger = logging.getLogger(__name__)


@dataclass
class StationaryDraws:
    """mc_paths draws of (Y_{t-1}(s), sigma_t(s)) at one frozen ratio."""
    omega: float
    lags: np.ndarray = field(repr=False)
    sigma: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return int(self.sigma.size)

    @property
    def nbytes(self) -> int:
        return sum(a.nbytes for a in (self.lags, self.sigma, self.rows, self.weights))


@dataclass
class McEstimate:
    """Monte Carlo estimate with its standard error (same shape)."""
    value: np.ndarray
    se: np.ndarray
    paths: Optional[np.ndarray] = field(default=None, repr=False)


def trapezoid_weights(s_grid) -> np.ndarray:
    """Weights a_i with sum_i a_i f(s_i) equal to the trapezoid rule on s_grid."""
    s = np.asarray(s_grid, dtype=float)
    gaps = np.diff(s)
    weights = np.zeros_like(s)
    weights[:-1] += gaps / 2.0
    weights[1:] += gaps / 2.0
    return weights


def _chunk_sizes(total: int, chunk: int) -> List[int]:
    count = math.ceil(total / chunk)
    return [min(chunk, total - c * chunk) for c in range(count)]


def _draw_chunk(model: ParametricNoiseModel, s: float, size: int, burn_in: int, seed: int, c: int):
    return stationary_states(
        model.theta_true, model.dist, model.volatility, s, size, burn_in, stream(seed, c)
    )


def stationary_draws(model: ParametricNoiseModel, config: OracleConfig, s: float) -> StationaryDraws:
    """
    Draws at frozen ratio s, cached by the value of omega(s).

    Raises:
        GenerationOverflowError: If a chain overflows during burn-in
    """
    omega = float(model.volatility.omega_at(s))
    key = make_cache_key(
        model.key(), omega, config.mc_paths, config.burn_in, config.chunk_size, config.seed,
        config.weights.model_dump(mode="json"),
    )
    cache = get_draw_cache()
    cached = cache.get(key)
    if cached is not None:
        return cached

    with timer("bias_oracle.stationary_draws"):
        sizes = _chunk_sizes(config.mc_paths, config.chunk_size)
        chunks = Parallel(n_jobs=config.n_jobs)(
            delayed(_draw_chunk)(model, s, size, config.burn_in, config.seed, c)
            for c, size in enumerate(sizes)
        )
    lags = np.vstack([lag for lag, _ in chunks])
    sigma = np.concatenate([sig for _, sig in chunks])
    draws = StationaryDraws(
        omega=omega,
        lags=lags,
        sigma=sigma,
        rows=model.rows(lags),
        weights=weights_from_lags(config.weights, lags),
    )
    logger.debug(f"Drew {draws.size} stationary windows at s={s:.3f} (omega={omega:.4g})")
    cache.set(key, draws)
    return draws


def grouped_draws(model: ParametricNoiseModel, config: OracleConfig) -> List[tuple]:
    """
    (trapezoid weight, draws) pairs with s-points sharing omega(s) merged,
    so a time-invariant model is simulated and evaluated once.
    """
    groups: Dict[float, list] = {}
    for a, s in zip(trapezoid_weights(config.s_grid), config.s_grid):
        omega = float(model.volatility.omega_at(s))
        if omega in groups:
            groups[omega][0] += a
        else:
            groups[omega] = [a, s]
    return [(a, stationary_draws(model, config, s)) for a, s in groups.values()]


def integrate(
    model: ParametricNoiseModel,
    config: OracleConfig,
    integrand: Callable[[StationaryDraws], np.ndarray],
    keep_paths: bool = False,
) -> McEstimate:
    """
    integral_0^1 E[integrand] ds with per-path trapezoid combination.

    Args:
        model: Noise model
        config: Oracle settings
        integrand: Maps draws to an array whose first axis is the path
        keep_paths: Also return the per-path integrals
    """
    total = None
    for a, draws in grouped_draws(model, config):
        term = a * np.asarray(integrand(draws), dtype=float)
        total = term if total is None else total + term
    m = total.shape[0]
    value = total.mean(axis=0)
    se = total.std(axis=0, ddof=1) / math.sqrt(m)
    return McEstimate(value=value, se=se, paths=total if keep_paths else None)
