"""
Named data generating processes used by the harness, CLI and tests.
"""

from typing import Dict, List

from common.errors import InvalidInputError
from common.models import (
    OmegaShape,
    ShiftedExponentialInnovation,
    SimulationSpec,
    SkewedMixtureInnovation,
    StudentTInnovation,
    NormalInnovation,
    ThetaVector,
    VolatilitySpec,
)

DGP_MENU: Dict[str, SimulationSpec] = {
    # tau0 = 1 - exp(-1)
    "asymmetric_arch": SimulationSpec(
        theta=ThetaVector(intercept=0.1, ar_coeffs=[0.5]),
        innovation=ShiftedExponentialInnovation(shift=1.0),
        volatility=VolatilitySpec(omega=0.2, arch_coeff=0.3, garch_coeff=0.0),
    ),
    # symmetric noise, no constant: delta0(tau) is identically zero
    "symmetric_garch": SimulationSpec(
        theta=ThetaVector(intercept=None, ar_coeffs=[0.5]),
        innovation=StudentTInnovation(df=3.0, shift=0.0),
        volatility=VolatilitySpec(omega=0.2, arch_coeff=0.1, garch_coeff=0.7),
    ),
    "skewed_tv": SimulationSpec(
        theta=ThetaVector(intercept=0.05, ar_coeffs=[0.4]),
        innovation=SkewedMixtureInnovation(
            left_scale=1.0, right_scale=2.0, shift=0.2, target_tau0=0.4, tail_df=1.5
        ),
        volatility=VolatilitySpec(
            omega=0.2,
            omega_shape=OmegaShape.SINE,
            omega_amplitude=0.5,
            arch_coeff=0.2,
            time_varying=True,
        ),
    ),
    "normal_ar2_garch": SimulationSpec(
        theta=ThetaVector(intercept=0.2, ar_coeffs=[0.5, 0.3]),
        innovation=NormalInnovation(mean=-0.5, scale=1.0),
        volatility=VolatilitySpec(omega=0.1, arch_coeff=0.1, garch_coeff=0.8),
    ),
}


def list_dgps() -> List[str]:
    return sorted(DGP_MENU)


def get_dgp(dgp_id: str) -> SimulationSpec:
    """
    Look up a menu entry.

    Raises:
        InvalidInputError: For unknown ids
    """
    try:
        return DGP_MENU[dgp_id]
    except KeyError:
        raise InvalidInputError(f"unknown dgp id {dgp_id!r}; choose from {list_dgps()}")
