"""
AR(p) simulation with GARCH-type, optionally time-varying, noise.

    y_t = mu + sum_j phi_j y_{t-j} + eta_t sigma_t
    sigma_t^2 = omega(t/n) + (a1 eta_{t-1}^2 + b1) sigma_{t-1}^2

Burn-in steps use the ratio argument 0; the retained window uses t/n.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import TypeAdapter
from scipy.signal import lfilter

from config import OVERFLOW_LIMIT, PACKAGE_VERSION
from common.errors import GenerationOverflowError, InvalidInputError
from common.input_validation import validate_values
from common.io_utils import read_json, read_series_csv, write_csv, write_json
from common.models import InnovationSpec, SimulationSpec, ThetaVector, VolatilitySpec
from common.rng import stream
from dgp.innovations import InnovationDistribution, innovation_distribution, innovation_tau0
from dgp.stationarity import check_stationarity

logger = logging.getLogger(__name__)

_innovation_adapter = TypeAdapter(InnovationSpec)


@dataclass
class SeriesSample:
    """
    An observed path y_1..y_n.

    Generation metadata is present for simulated series and None for
    series read from a bare CSV.
    """
    values: np.ndarray
    theta_true: Optional[ThetaVector] = None
    innovation: Optional[Any] = None
    volatility: Optional[VolatilitySpec] = None
    tau0_true: Optional[float] = None
    seed: Optional[int] = None
    burn_in: Optional[int] = None

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def is_simulated(self) -> bool:
        return self.theta_true is not None

    @classmethod
    def from_values(cls, values) -> "SeriesSample":
        return cls(values=validate_values(values))

    def metadata(self) -> Dict[str, Any]:
        """JSON sidecar contents."""
        record: Dict[str, Any] = {"n": self.n, "package_version": PACKAGE_VERSION}
        if self.is_simulated:
            record.update({
                "seed": self.seed,
                "burn_in": self.burn_in,
                "tau0_true": self.tau0_true,
                "theta": self.theta_true.model_dump(mode="json"),
                "innovation": self.innovation.model_dump(mode="json"),
                "volatility": self.volatility.model_dump(mode="json"),
            })
        return record


def _volatility_path(eta: np.ndarray, omega: np.ndarray, vol: VolatilitySpec,
                     sigma2_init: float) -> np.ndarray:
    a1, b1 = vol.arch_coeff, vol.garch_coeff
    if a1 == 0.0 and b1 == 0.0:
        return omega.copy()
    sigma2 = np.empty_like(omega)
    prev_sigma2, prev_eta = sigma2_init, 0.0
    for i in range(omega.size):
        prev_sigma2 = omega[i] + (a1 * prev_eta * prev_eta + b1) * prev_sigma2
        sigma2[i] = prev_sigma2
        prev_eta = eta[i]
    return sigma2


def simulate_series(
    theta: ThetaVector,
    innov: Any,
    vol: VolatilitySpec,
    n: int,
    burn_in: int,
    seed: int,
) -> SeriesSample:
    """
    Simulate n retained observations after burn_in discarded ones.

    Args:
        theta: AR parameter (intercept None for intercept-free)
        innov: Innovation spec
        vol: Volatility spec
        n: Retained length
        burn_in: Discarded prefix length
        seed: Unsigned seed; the innovation stream is stream(seed)

    Returns:
        SeriesSample with full generation metadata

    Raises:
        InvalidInputError: Non-stationary theta, bad sizes, degenerate innovation
        GenerationOverflowError: If |y_t| exceeds 1e300 (t relative to the retained window)
    """
    if n < 1 or burn_in < 1:
        raise InvalidInputError(f"n and burn_in must be positive, got n={n}, burn_in={burn_in}")
    if seed < 0:
        raise InvalidInputError(f"seed must be unsigned, got {seed}")
    if not check_stationarity(theta):
        raise InvalidInputError(f"AR coefficients {theta.ar_coeffs} are not stationary")

    tau0 = innovation_tau0(innov)
    dist = innovation_distribution(innov)
    if not dist.full_support:
        logger.warning(f"{innov.family} innovations have bounded support")

    rng = stream(seed)
    total = burn_in + n
    eta = dist.sample(rng, total)

    ratio = np.zeros(total)
    ratio[burn_in:] = np.arange(1, n + 1) / n
    omega = vol.omega_at(ratio)

    with np.errstate(over="ignore", invalid="ignore"):
        sigma2 = _volatility_path(eta, omega, vol, vol.initial_variance(0.0))
        shocks = eta * np.sqrt(sigma2)
        intercept = theta.intercept if theta.has_intercept else 0.0
        ar_poly = np.concatenate(([1.0], -np.asarray(theta.ar_coeffs, dtype=float)))
        y = lfilter([1.0], ar_poly, intercept + shocks)

    bad = np.flatnonzero(~np.isfinite(y) | (np.abs(y) > OVERFLOW_LIMIT))
    if bad.size:
        i = int(bad[0])
        raise GenerationOverflowError(t=i - burn_in + 1, value=float(y[i]))

    logger.debug(f"Simulated n={n} (burn_in={burn_in}, seed={seed}, tau0={tau0:.6f})")
    return SeriesSample(
        values=y[burn_in:].copy(),
        theta_true=theta,
        innovation=innov,
        volatility=vol,
        tau0_true=tau0,
        seed=seed,
        burn_in=burn_in,
    )


def simulate_from_spec(spec: SimulationSpec, n: int, seed: int) -> SeriesSample:
    """simulate_series for a bundled SimulationSpec."""
    return simulate_series(spec.theta, spec.innovation, spec.volatility, n, spec.burn_in, seed)


def stationary_states(
    theta: ThetaVector,
    dist: InnovationDistribution,
    vol: VolatilitySpec,
    s: float,
    paths: int,
    burn_in: int,
    rng: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw (Y_{t-1}(s), sigma_t(s)) from the frozen-ratio stationary process.

    Runs `paths` independent chains for `burn_in` steps with omega fixed at
    omega(s).

    Returns:
        lags: (paths, p) array, column j holding y_{t-1-j}
        sigma: (paths,) conditional scale of the next innovation

    Raises:
        GenerationOverflowError: If any chain leaves the representable range
    """
    phi = np.asarray(theta.ar_coeffs, dtype=float)
    intercept = theta.intercept if theta.has_intercept else 0.0
    omega = float(vol.omega_at(s))
    a1, b1 = vol.arch_coeff, vol.garch_coeff

    lags = np.zeros((paths, phi.size))
    sigma2 = np.full(paths, vol.initial_variance(s))
    eta_prev = np.zeros(paths)

    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(burn_in):
            sigma2 = omega + (a1 * eta_prev ** 2 + b1) * sigma2
            eta = dist.sample(rng, paths)
            y = intercept + lags @ phi + eta * np.sqrt(sigma2)
            if not np.all(np.abs(y) <= OVERFLOW_LIMIT):
                i = int(np.flatnonzero(~(np.abs(y) <= OVERFLOW_LIMIT))[0])
                raise GenerationOverflowError(t=step + 1, value=float(y[i]))
            lags[:, 1:] = lags[:, :-1]
            lags[:, 0] = y
            eta_prev = eta
        sigma_next = np.sqrt(omega + (a1 * eta_prev ** 2 + b1) * sigma2)

    return lags, sigma_next


# ============================================================================
# CSV / JSON export
# ============================================================================

def sidecar_path(csv_path: Path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_series(sample: SeriesSample, csv_path: Path) -> Tuple[Path, Path]:
    """Write `t,y` CSV plus the JSON sidecar next to it."""
    frame = pd.DataFrame({"t": np.arange(1, sample.n + 1), "y": sample.values})
    csv_out = write_csv(Path(csv_path), frame)
    json_out = write_json(sidecar_path(csv_path), sample.metadata())
    return csv_out, json_out


def read_series(csv_path: Path) -> SeriesSample:
    """
    Read a `t,y` CSV, attaching generation metadata when a sidecar exists.

    Raises:
        InvalidInputError: On malformed CSV (with line number) or sidecar
    """
    values = read_series_csv(Path(csv_path))
    meta_path = sidecar_path(csv_path)
    if not meta_path.exists():
        return SeriesSample(values=values)

    meta = read_json(meta_path)
    if "theta" not in meta:
        return SeriesSample(values=values)
    try:
        return SeriesSample(
            values=values,
            theta_true=ThetaVector.model_validate(meta["theta"]),
            innovation=_innovation_adapter.validate_python(meta["innovation"]),
            volatility=VolatilitySpec.model_validate(meta["volatility"]),
            tau0_true=float(meta["tau0_true"]),
            seed=int(meta["seed"]),
            burn_in=int(meta["burn_in"]),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidInputError(f"malformed sidecar {meta_path}: {e}") from e
