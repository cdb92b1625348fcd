"""
Parametric noise model for the population quantities.

Given the frozen-ratio volatility sigma_t(s), the conditional law of the
error e_t = y_t - Z_{t-1}' theta_0 is known in closed form:
F(u) = F_eta(u / sigma), F_1(u) = f_eta(u / sigma) / sigma and
F_2(u) = f_eta'(u / sigma) / sigma^2.
"""

from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from common.models import InnovationSpec, SimulationSpec, ThetaVector, VolatilitySpec
from dgp import check_stationarity, innovation_distribution, innovation_tau0
from dgp.innovations import InnovationDistribution


@dataclass
class ParametricNoiseModel:
    """AR coefficients plus innovation and volatility specs of a simulated DGP."""
    theta_true: ThetaVector
    innovation: InnovationSpec
    volatility: VolatilitySpec
    dist: InnovationDistribution = field(init=False, repr=False)

    def __post_init__(self):
        check_stationarity(self.theta_true)
        self.dist = innovation_distribution(self.innovation)

    @classmethod
    def from_spec(cls, spec: SimulationSpec) -> "ParametricNoiseModel":
        return cls(theta_true=spec.theta, innovation=spec.innovation, volatility=spec.volatility)

    @property
    def tau0(self) -> float:
        return innovation_tau0(self.innovation)

    @property
    def p(self) -> int:
        return self.theta_true.p

    @property
    def intercept_mode(self) -> bool:
        return self.theta_true.has_intercept

    @property
    def n_params(self) -> int:
        return self.p + int(self.intercept_mode)

    def rows(self, lags: np.ndarray) -> np.ndarray:
        """Regressors Z_{t-1} for a (paths, p) lag matrix."""
        if self.intercept_mode:
            return np.column_stack([np.ones(lags.shape[0]), lags])
        return lags

    def cond_cdf(self, u, sigma):
        return self.dist.cdf(np.asarray(u) / sigma)

    def cond_pdf(self, u, sigma):
        return self.dist.pdf(np.asarray(u) / sigma) / sigma

    def cond_dpdf(self, u, sigma):
        return self.dist.dpdf(np.asarray(u) / sigma) / sigma ** 2

    def key(self) -> Dict[str, Any]:
        """JSON-ready identity used for caching and reports."""
        return {
            "theta": self.theta_true.model_dump(mode="json"),
            "innovation": self.innovation.model_dump(mode="json"),
            "volatility": self.volatility.model_dump(mode="json"),
        }
