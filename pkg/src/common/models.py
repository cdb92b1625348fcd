"""
Pydantic models for sqar.

Configuration objects and model parameters shared by every stage.
Numerical results (paths, estimates, bootstrap summaries) are dataclasses
in the modules that produce them; the models here are the validated inputs.
"""

from enum import Enum
from typing import Annotated, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import (
    CI_LEVELS,
    DEFAULT_BOOT_J,
    DEFAULT_BURN_IN,
    DEFAULT_D0,
    DEFAULT_EPSILON,
    DEFAULT_REFINE_TOL,
    DEFAULT_STEP,
    DUALITY_GAP_TOL,
    CERTIFICATE_SLACK,
    HOMOTOPY_WIDTHS,
    IP_STEP_DAMPING,
    MAX_IP_ITERATIONS,
    ORACLE_BURN_IN,
    ORACLE_CHUNK_SIZE,
    ORACLE_DIFF_STEP,
    ORACLE_MC_PATHS,
    ORACLE_MIN_MC_PATHS,
    ORACLE_NEWTON_MAX_ITER,
    ORACLE_NEWTON_TOL,
    ORACLE_S_POINTS,
    RANK_TOL,
    ZERO_TOL_FACTOR,
)


# ============================================================================
# Enums
# ============================================================================

class WeightFamily(str, Enum):
    """Self-weight functional forms."""
    POWER = "power"
    EXP_POWER = "exp_power"
    UNIT = "unit"


class OmegaShape(str, Enum):
    """Shape of the time-varying volatility level omega(x)."""
    CONSTANT = "constant"
    LINEAR = "linear"
    SINE = "sine"


class CiMethod(str, Enum):
    """Bootstrap confidence interval construction."""
    NORMAL = "normal-with-bootstrap-SE"
    PERCENTILE = "percentile-of-centered-draws"


# ============================================================================
# Model Parameters
# ============================================================================

class ThetaVector(BaseModel):
    """AR parameter (mu, phi_1..phi_p); intercept is None in intercept-free mode."""
    intercept: Optional[float] = None
    ar_coeffs: List[float] = Field(..., min_length=1)

    @property
    def p(self) -> int:
        return len(self.ar_coeffs)

    @property
    def has_intercept(self) -> bool:
        return self.intercept is not None

    def as_array(self) -> np.ndarray:
        """Coefficient vector in design-column order."""
        head = [self.intercept] if self.has_intercept else []
        return np.asarray(head + list(self.ar_coeffs), dtype=float)

    @classmethod
    def from_array(cls, values, intercept_mode: bool) -> "ThetaVector":
        values = [float(v) for v in np.asarray(values, dtype=float).ravel()]
        if intercept_mode:
            return cls(intercept=values[0], ar_coeffs=values[1:])
        return cls(intercept=None, ar_coeffs=values)

    def parameter_names(self) -> List[str]:
        return coefficient_names(self.p, self.has_intercept)


def coefficient_names(p: int, intercept_mode: bool) -> List[str]:
    """Names of the coefficient vector entries, e.g. ["mu", "phi_1"]."""
    names = [f"phi_{i}" for i in range(1, p + 1)]
    return (["mu"] + names) if intercept_mode else names


class NormalInnovation(BaseModel):
    """eta = mean + scale * N(0, 1)."""
    family: Literal["normal"] = "normal"
    mean: float = 0.0
    scale: float = Field(1.0, ge=0.0)


class ShiftedExponentialInnovation(BaseModel):
    """eta = scale * Exp(1) - shift; tau0 = 1 - exp(-shift / scale)."""
    family: Literal["shifted_exponential"] = "shifted_exponential"
    shift: float = Field(1.0, gt=0.0)
    scale: float = Field(1.0, ge=0.0)


class StudentTInnovation(BaseModel):
    """eta = scale * t(df) - shift; tau0 = F_t(shift / scale)."""
    family: Literal["student_t"] = "student_t"
    df: float = Field(..., gt=0.0)
    shift: float = 0.0
    scale: float = Field(1.0, ge=0.0)


class SkewedMixtureInnovation(BaseModel):
    """
    Two-sided half-distribution mixture with a controlled zero quantile.

    Draw V as |N(0,1)| (or |t(tail_df)| when tail_df is set). With
    probability q the base value is -left_scale * V, otherwise
    +right_scale * V. Then eta = base - shift. The left probability q is
    solved from target_tau0 so that P(eta <= 0) = target_tau0.
    """
    family: Literal["skewed_mixture"] = "skewed_mixture"
    left_scale: float = Field(1.0, ge=0.0)
    right_scale: float = Field(1.0, ge=0.0)
    shift: float = 0.0
    target_tau0: float = Field(0.5, gt=0.0, lt=1.0)
    tail_df: Optional[float] = Field(None, gt=0.0)


InnovationSpec = Annotated[
    Union[
        NormalInnovation,
        ShiftedExponentialInnovation,
        StudentTInnovation,
        SkewedMixtureInnovation,
    ],
    Field(discriminator="family"),
]


class VolatilitySpec(BaseModel):
    """
    GARCH(1,1)-type volatility with an optionally time-varying level.

    sigma_t^2 = omega(t/n) + (arch_coeff * eta_{t-1}^2 + garch_coeff) * sigma_{t-1}^2
    """
    omega: float = Field(1.0, gt=0.0)
    omega_shape: OmegaShape = OmegaShape.CONSTANT
    omega_amplitude: float = 0.0
    arch_coeff: float = Field(0.0, ge=0.0)
    garch_coeff: float = Field(0.0, ge=0.0)
    time_varying: bool = False

    @model_validator(mode="after")
    def _omega_bounded_away_from_zero(self) -> "VolatilitySpec":
        amp = self.omega_amplitude
        if self.omega_shape == OmegaShape.LINEAR and amp <= -1.0:
            raise ValueError("linear omega needs omega_amplitude > -1")
        if self.omega_shape == OmegaShape.SINE and abs(amp) >= 1.0:
            raise ValueError("sine omega needs |omega_amplitude| < 1")
        return self

    def omega_at(self, x):
        """omega(x) for ratio(s) x in [0, 1]; constant unless time_varying."""
        x = np.asarray(x, dtype=float)
        if not self.time_varying or self.omega_shape == OmegaShape.CONSTANT:
            return self.omega * np.ones_like(x)
        if self.omega_shape == OmegaShape.LINEAR:
            return self.omega * (1.0 + self.omega_amplitude * x)
        return self.omega * (1.0 + self.omega_amplitude * np.sin(2.0 * np.pi * x))

    def initial_variance(self, s: float = 0.0) -> float:
        """Starting sigma^2 = omega(s) / (1 - b1) when b1 < 1, else omega(s)."""
        omega = float(self.omega_at(s))
        if self.garch_coeff < 1.0:
            return omega / (1.0 - self.garch_coeff)
        return omega


# ============================================================================
# Estimation Configuration
# ============================================================================

class WeightSpec(BaseModel):
    """Self-weight w_t as a function of the lag window."""
    family: WeightFamily = WeightFamily.POWER
    k: float = Field(2.0, gt=0.0)

    def label(self) -> str:
        return self.family.value if self.family == WeightFamily.UNIT else f"{self.family.value}:{self.k:g}"


class TauGrid(BaseModel):
    """Ascending grid of quantile levels on [epsilon, 1 - epsilon]."""
    epsilon: float = Field(DEFAULT_EPSILON, gt=0.0, lt=0.5)
    step: float = Field(DEFAULT_STEP, gt=0.0)

    @property
    def lower(self) -> float:
        return self.epsilon

    @property
    def upper(self) -> float:
        return 1.0 - self.epsilon

    @property
    def levels(self) -> np.ndarray:
        """Levels epsilon, epsilon + step, ..., ending exactly at 1 - epsilon."""
        width = self.upper - self.lower
        count = int(np.floor(width / self.step + 1e-9))
        levels = np.round(self.lower + self.step * np.arange(count + 1), 12)
        if self.upper - levels[-1] > 1e-9:
            levels = np.append(levels, self.upper)
        else:
            levels[-1] = self.upper
        return levels

    def contains(self, tau: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= tau <= self.upper + tol


class SolverOptions(BaseModel):
    """Options for the weighted quantile regression solver."""
    gap_tol: float = Field(DUALITY_GAP_TOL, gt=0.0)
    max_iter: int = Field(MAX_IP_ITERATIONS, ge=1)
    step_damping: float = Field(IP_STEP_DAMPING, gt=0.0, lt=1.0)
    rank_tol: float = Field(RANK_TOL, gt=0.0)
    zero_tol_factor: float = Field(ZERO_TOL_FACTOR, gt=0.0)
    certificate_slack: float = Field(CERTIFICATE_SLACK, ge=0.0)
    homotopy_widths: Tuple[float, ...] = HOMOTOPY_WIDTHS
    polish: bool = True
    use_fallback: bool = True


class EstimationConfig(BaseModel):
    """Everything the two-step estimator needs besides the series and p."""
    intercept: bool = True
    weights: WeightSpec = Field(default_factory=WeightSpec)
    grid: TauGrid = Field(default_factory=TauGrid)
    d0: int = Field(DEFAULT_D0, ge=1)
    p_tilde: Optional[int] = Field(None, ge=1)
    family_base: Optional[WeightSpec] = None
    refine_tol: float = Field(DEFAULT_REFINE_TOL, gt=0.0)
    warm_start: bool = True
    n_jobs: int = Field(1, ge=1)
    solver: SolverOptions = Field(default_factory=SolverOptions)

    def family_lags(self, p: int) -> int:
        return p if self.p_tilde is None else self.p_tilde

    def family_base_weights(self) -> WeightSpec:
        return self.family_base or self.weights


class BootstrapConfig(BaseModel):
    """Random-weighting bootstrap settings."""
    replications: int = Field(DEFAULT_BOOT_J, ge=1)
    seed: int = Field(0, ge=0)
    parallel_chunks: int = Field(1, ge=1)
    reuse_grid: bool = True
    ci_method: CiMethod = CiMethod.NORMAL
    ci_levels: Tuple[float, ...] = CI_LEVELS
    unit_multipliers: bool = False

    @field_validator("ci_levels")
    @classmethod
    def _levels_in_unit_interval(cls, v):
        if not v or any(not 0.0 < level < 1.0 for level in v):
            raise ValueError("ci_levels must lie in (0, 1)")
        return tuple(sorted(v))


class OracleConfig(BaseModel):
    """Monte Carlo settings for the population quantities."""
    s_grid: Tuple[float, ...] = tuple(np.linspace(0.0, 1.0, ORACLE_S_POINTS).tolist())
    mc_paths: int = Field(ORACLE_MC_PATHS, ge=ORACLE_MIN_MC_PATHS)
    seed: int = Field(0, ge=0)
    burn_in: int = Field(ORACLE_BURN_IN, ge=1)
    chunk_size: int = Field(ORACLE_CHUNK_SIZE, ge=1)
    newton_tol: float = Field(ORACLE_NEWTON_TOL, gt=0.0)
    newton_max_iter: int = Field(ORACLE_NEWTON_MAX_ITER, ge=1)
    diff_step: float = Field(ORACLE_DIFF_STEP, gt=0.0)
    weights: WeightSpec = Field(default_factory=WeightSpec)
    n_jobs: int = Field(1, ge=1)

    @field_validator("s_grid")
    @classmethod
    def _grid_covers_unit_interval(cls, v):
        grid = sorted(float(s) for s in v)
        if len(grid) < 2 or grid[0] != 0.0 or grid[-1] != 1.0:
            raise ValueError("s_grid must start at 0 and end at 1")
        if len(set(grid)) != len(grid):
            raise ValueError("s_grid points must be distinct")
        return tuple(grid)

    @classmethod
    def with_points(cls, points: int, **kwargs) -> "OracleConfig":
        return cls(s_grid=tuple(np.linspace(0.0, 1.0, points).tolist()), **kwargs)


class HypothesisSpec(BaseModel):
    """Linear restriction A theta = a."""
    A: List[List[float]] = Field(..., min_length=1)
    a: List[float] = Field(..., min_length=1)

    @model_validator(mode="after")
    def _shapes_agree(self) -> "HypothesisSpec":
        widths = {len(row) for row in self.A}
        if len(widths) != 1:
            raise ValueError("rows of A must have equal length")
        if len(self.a) != len(self.A):
            raise ValueError("a must have one entry per row of A")
        return self

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.A, dtype=float), np.asarray(self.a, dtype=float)


class SimulationSpec(BaseModel):
    """A fully specified data generating process."""
    theta: ThetaVector
    innovation: InnovationSpec
    volatility: VolatilitySpec = Field(default_factory=VolatilitySpec)
    burn_in: int = Field(DEFAULT_BURN_IN, ge=1)


# ============================================================================
# Experiments and Runs
# ============================================================================

EXPERIMENT_METRICS = ("theta", "tau", "oracle", "coverage", "wald")
MIN_REPLICATIONS_FOR_RATES = 50


class ExperimentSpec(BaseModel):
    """Monte Carlo study definition."""
    dgp_ids: List[str] = Field(..., min_length=1)
    sample_sizes: List[int] = Field(..., min_length=1)
    replications: int = Field(..., ge=1)
    estimation: EstimationConfig = Field(default_factory=EstimationConfig)
    bootstrap: Optional[BootstrapConfig] = None
    metrics: List[str] = Field(default_factory=lambda: ["theta", "tau"])
    master_seed: int = Field(0, ge=0)
    tau_null: float = Field(0.5, gt=0.0, lt=1.0)
    test_size: float = Field(0.05, gt=0.0, lt=1.0)
    n_jobs: int = Field(1, ge=1)

    @field_validator("sample_sizes")
    @classmethod
    def _positive_sizes(cls, v):
        if any(n < 1 for n in v):
            raise ValueError("sample sizes must be positive")
        return v

    @model_validator(mode="after")
    def _check_metrics(self) -> "ExperimentSpec":
        unknown = set(self.metrics) - set(EXPERIMENT_METRICS)
        if unknown:
            raise ValueError(f"unknown metrics: {sorted(unknown)}")
        interval_metrics = {"coverage", "wald"} & set(self.metrics)
        if interval_metrics:
            if self.replications < MIN_REPLICATIONS_FOR_RATES:
                raise ValueError(
                    f"metrics {sorted(interval_metrics)} need at least "
                    f"{MIN_REPLICATIONS_FOR_RATES} replications"
                )
            if self.bootstrap is None:
                raise ValueError(f"metrics {sorted(interval_metrics)} need a bootstrap config")
        return self


class RunManifest(BaseModel):
    """Everything needed to reproduce a CLI run."""
    model_config = ConfigDict(extra="forbid")

    command: str
    argv: List[str] = Field(default_factory=list)
    config_hash: str
    seed: Optional[int] = None
    threads: int = 1
    started_at: str
    finished_at: str
    wall_time_seconds: float = Field(..., ge=0.0)
    output_paths: List[str] = Field(default_factory=list)
    package_version: str
    seeds: List[int] = Field(default_factory=list)
