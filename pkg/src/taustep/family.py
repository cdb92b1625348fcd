"""
Bounded moment-weight family.

Members are w~_l = w~_0(Y_{t-1}) * prod_i t(y_{t-i})^{d_i} over exponent
tuples with 0 <= d_i <= d0 and sum d_i <= d0, where t(y) = y / sqrt(1 + y^2).
The all-zero tuple (the base weight alone) comes first.
"""

from dataclasses import dataclass, replace
from itertools import product
from typing import List, Optional, Tuple

import numpy as np

from common.errors import InvalidInputError
from common.models import WeightSpec
from qreg import LaggedDesign, weights_from_lags

DEFAULT_TRANSFORM = "bounded_ratio"


def bounded_transform(y):
    """t(y) = y / sqrt(1 + y^2): bounded, odd and one-to-one."""
    y = np.asarray(y, dtype=float)
    return y / np.sqrt(1.0 + y * y)


def enumerate_exponents(d0: int, p_tilde: int) -> List[Tuple[int, ...]]:
    """Exponent tuples with total degree <= d0, ordered by degree then lexicographically."""
    tuples = [t for t in product(range(d0 + 1), repeat=p_tilde) if sum(t) <= d0]
    return sorted(tuples, key=lambda t: (sum(t), t))


def evaluate_members(lags: np.ndarray, base: WeightSpec, members, scale: float = 1.0) -> np.ndarray:
    """
    (rows, L) matrix of member values for a lag matrix.

    Args:
        lags: (rows, p) lag matrix, column i holding y_{t-1-i}
        base: Base weight w~_0
        members: Exponent tuples
        scale: Common positive multiplier
    """
    lags = np.atleast_2d(np.asarray(lags, dtype=float))
    base_weights = weights_from_lags(base, lags)
    p_tilde = len(members[0])
    transformed = bounded_transform(lags[:, :p_tilde])
    columns = [
        base_weights * np.prod(transformed ** np.asarray(d), axis=1)
        for d in members
    ]
    return scale * np.column_stack(columns)


@dataclass
class MomentWeightFamily:
    """Instrument family for the second step."""
    base: WeightSpec
    max_degree: int
    lags: int
    members: List[Tuple[int, ...]]
    transform: str = DEFAULT_TRANSFORM
    scale: float = 1.0
    values: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return len(self.members)

    @classmethod
    def describe(cls, base: WeightSpec, d0: int, p_tilde: int) -> "MomentWeightFamily":
        """Family definition without evaluated values (used by the oracle)."""
        return cls(base=base, max_degree=d0, lags=p_tilde, members=enumerate_exponents(d0, p_tilde))

    def evaluate(self, lags: np.ndarray) -> np.ndarray:
        return evaluate_members(lags, self.base, self.members, self.scale)

    def scaled(self, factor: float) -> "MomentWeightFamily":
        """Same family with every member multiplied by a positive constant."""
        if not factor > 0:
            raise InvalidInputError(f"scale factor must be positive, got {factor}")
        values = None if self.values is None else factor * self.values
        return replace(self, scale=self.scale * factor, values=values)

    def summary(self) -> dict:
        return {
            "base": self.base.label(),
            "d0": self.max_degree,
            "p_tilde": self.lags,
            "transform": self.transform,
            "members": [list(m) for m in self.members],
        }


def build_moment_family(design: LaggedDesign, base: WeightSpec, d0: int, p_tilde: int) -> MomentWeightFamily:
    """
    Evaluate the family on every design row.

    Raises:
        InvalidInputError: If d0 < 1 or p_tilde is not in 1..p
    """
    if d0 < 1:
        raise InvalidInputError(f"d0 must be >= 1, got {d0}")
    if not 1 <= p_tilde <= design.p:
        raise InvalidInputError(f"p_tilde must lie in 1..{design.p}, got {p_tilde}")
    family = MomentWeightFamily.describe(base, d0, p_tilde)
    family.values = family.evaluate(design.lags)
    return family
