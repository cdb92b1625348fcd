"""
Innovation distributions.

Each InnovationSpec maps to a distribution object exposing the CDF, the
density and its first two derivatives (used by the oracle's curvature
diagnostics), and a sampler. None of the families is centered: tau0 is
the CDF at zero.
"""

import logging
from typing import Union

import numpy as np
from scipy import stats

from common.errors import InvalidInputError
from common.models import (
    NormalInnovation,
    ShiftedExponentialInnovation,
    SkewedMixtureInnovation,
    StudentTInnovation,
)

logger = logging.getLogger(__name__)

InnovationLike = Union[
    NormalInnovation, ShiftedExponentialInnovation, StudentTInnovation, SkewedMixtureInnovation
]


class InnovationDistribution:
    """Base class; subclasses implement the standardized pieces."""

    full_support = True

    def cdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        raise NotImplementedError

    def dpdf(self, x):
        """First derivative of the density."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        raise NotImplementedError

    def tau0(self) -> float:
        return float(self.cdf(0.0))


class NormalDistribution(InnovationDistribution):
    def __init__(self, mean: float, scale: float):
        self.mean, self.scale = mean, scale

    def _z(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.scale

    def cdf(self, x):
        return stats.norm.cdf(self._z(x))

    def pdf(self, x):
        return stats.norm.pdf(self._z(x)) / self.scale

    def dpdf(self, x):
        z = self._z(x)
        return -z * stats.norm.pdf(z) / self.scale ** 2

    def sample(self, rng, size):
        return self.mean + self.scale * rng.standard_normal(size)


class ShiftedExponentialDistribution(InnovationDistribution):
    """eta = scale * E - shift, support [-shift, inf)."""

    full_support = False

    def __init__(self, shift: float, scale: float):
        self.shift, self.scale = shift, scale

    def _u(self, x):
        return (np.asarray(x, dtype=float) + self.shift) / self.scale

    def cdf(self, x):
        u = self._u(x)
        return np.where(u >= 0.0, -np.expm1(-np.maximum(u, 0.0)), 0.0)

    def pdf(self, x):
        u = self._u(x)
        return np.where(u >= 0.0, np.exp(-np.maximum(u, 0.0)) / self.scale, 0.0)

    def dpdf(self, x):
        return -self.pdf(x) / self.scale

    def sample(self, rng, size):
        return self.scale * rng.standard_exponential(size) - self.shift

    def tau0(self) -> float:
        return float(-np.expm1(-self.shift / self.scale))


class StudentTDistribution(InnovationDistribution):
    """eta = scale * T - shift."""

    def __init__(self, df: float, shift: float, scale: float):
        self.df, self.shift, self.scale = df, shift, scale

    def _z(self, x):
        return (np.asarray(x, dtype=float) + self.shift) / self.scale

    def cdf(self, x):
        return stats.t.cdf(self._z(x), self.df)

    def pdf(self, x):
        return stats.t.pdf(self._z(x), self.df) / self.scale

    def dpdf(self, x):
        z = self._z(x)
        return stats.t.pdf(z, self.df) * (-(self.df + 1.0) * z / (self.df + z ** 2)) / self.scale ** 2

    def sample(self, rng, size):
        return self.scale * rng.standard_t(self.df, size) - self.shift


class SkewedMixtureDistribution(InnovationDistribution):
    """
    eta = B - shift with B = -L*V w.p. q and B = +R*V w.p. 1 - q, V = |N| or |t|.

    For shift >= 0: P(eta <= 0) = q + (1 - q)(2 F_V(shift / R) - 1).
    For shift < 0:  P(eta <= 0) = 2 q (1 - F_V(-shift / L)).
    q is solved from the target so that P(eta <= 0) equals it exactly.
    """

    def __init__(self, left_scale: float, right_scale: float, shift: float,
                 target_tau0: float, tail_df=None):
        self.left, self.right, self.shift = left_scale, right_scale, shift
        self.tail_df = tail_df
        self.base = stats.norm() if tail_df is None else stats.t(tail_df)
        self.left_prob = self._solve_left_prob(target_tau0)

    def _solve_left_prob(self, target: float) -> float:
        if self.shift >= 0.0:
            c = 2.0 * self.base.cdf(self.shift / self.right) - 1.0
            q = (target - c) / (1.0 - c)
        else:
            q = target / (2.0 * self.base.sf(-self.shift / self.left))
        if not 0.0 < q < 1.0:
            raise InvalidInputError(
                f"skewed_mixture cannot reach tau0={target} with shift={self.shift} "
                f"(left probability would be {q:.4g})"
            )
        return float(q)

    def _split(self, x):
        b = np.asarray(x, dtype=float) + self.shift
        neg = b < 0.0
        v_left = np.where(neg, -b, 0.0) / self.left
        v_right = np.where(neg, 0.0, b) / self.right
        return b, neg, v_left, v_right

    def cdf(self, x):
        _, neg, v_left, v_right = self._split(x)
        q = self.left_prob
        left = 2.0 * q * self.base.sf(v_left)
        right = q + (1.0 - q) * (2.0 * self.base.cdf(v_right) - 1.0)
        return np.where(neg, left, right)

    def pdf(self, x):
        _, neg, v_left, v_right = self._split(x)
        q = self.left_prob
        left = 2.0 * q * self.base.pdf(v_left) / self.left
        right = 2.0 * (1.0 - q) * self.base.pdf(v_right) / self.right
        return np.where(neg, left, right)

    def _base_dpdf(self, v):
        if self.tail_df is None:
            return -v * self.base.pdf(v)
        nu = self.tail_df
        return self.base.pdf(v) * (-(nu + 1.0) * v / (nu + v ** 2))

    def dpdf(self, x):
        _, neg, v_left, v_right = self._split(x)
        q = self.left_prob
        left = -2.0 * q * self._base_dpdf(v_left) / self.left ** 2
        right = 2.0 * (1.0 - q) * self._base_dpdf(v_right) / self.right ** 2
        return np.where(neg, left, right)

    def sample(self, rng, size):
        if self.tail_df is None:
            v = np.abs(rng.standard_normal(size))
        else:
            v = np.abs(rng.standard_t(self.tail_df, size))
        go_left = rng.random(size) < self.left_prob
        return np.where(go_left, -self.left * v, self.right * v) - self.shift


def innovation_distribution(spec: InnovationLike) -> InnovationDistribution:
    """
    Build the distribution object for a spec.

    Raises:
        InvalidInputError: On zero scales or unreachable targets
    """
    if isinstance(spec, NormalInnovation):
        _require_positive(spec.scale, "normal scale")
        return NormalDistribution(spec.mean, spec.scale)
    if isinstance(spec, ShiftedExponentialInnovation):
        _require_positive(spec.scale, "shifted_exponential scale")
        return ShiftedExponentialDistribution(spec.shift, spec.scale)
    if isinstance(spec, StudentTInnovation):
        _require_positive(spec.scale, "student_t scale")
        return StudentTDistribution(spec.df, spec.shift, spec.scale)
    if isinstance(spec, SkewedMixtureInnovation):
        _require_positive(spec.left_scale, "skewed_mixture left_scale")
        _require_positive(spec.right_scale, "skewed_mixture right_scale")
        return SkewedMixtureDistribution(
            spec.left_scale, spec.right_scale, spec.shift, spec.target_tau0, spec.tail_df
        )
    raise InvalidInputError(f"unknown innovation spec: {spec!r}")


def innovation_tau0(spec: InnovationLike) -> float:
    """
    P(eta <= 0) for the innovation family, in closed form.

    Raises:
        InvalidInputError: Degenerate spec, or tau0 not strictly inside (0, 1)
    """
    dist = innovation_distribution(spec)
    tau0 = dist.tau0()
    if not 0.0 < tau0 < 1.0:
        raise InvalidInputError(f"innovation has P(eta <= 0) = {tau0}, outside (0, 1)")
    if not dist.full_support:
        logger.debug(f"{spec.family} innovation has bounded support; density is zero below it")
    return tau0


def _require_positive(value: float, name: str) -> None:
    if not value > 0.0:
        raise InvalidInputError(f"{name} must be positive, got {value}")
