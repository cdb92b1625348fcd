"""
Oracle report assembly and export.
"""

import logging
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from common.io_utils import write_csv, write_json
from common.models import OracleConfig
from bias_oracle.model import ParametricNoiseModel
from bias_oracle.population import BiasCurve, curvature_diagnostics
from bias_oracle.variances import AsymptoticVariances, IdentificationReport

logger = logging.getLogger(__name__)


def oracle_report(
    model: ParametricNoiseModel,
    config: OracleConfig,
    curve: BiasCurve,
    variances: Optional[AsymptoticVariances] = None,
    identification: Optional[IdentificationReport] = None,
) -> Dict[str, Any]:
    """JSON record with the bias curve, variances and diagnostics."""
    record: Dict[str, Any] = {
        "model": model.key(),
        "tau0": curve.tau0,
        "s_grid": list(config.s_grid),
        "mc_paths": config.mc_paths,
        "seed": config.seed,
        "burn_in": config.burn_in,
        "weights": config.weights.label(),
        "bias_curve": curve.to_rows(),
        "derivative_at_tau0": curve.derivative_at_tau0.tolist(),
        "derivative_se": curve.derivative_se.tolist(),
        "curvature": curvature_diagnostics(model, config),
    }
    if variances is not None:
        record["variances"] = variances.to_record()
    if identification is not None:
        record["identification"] = identification.to_record()
    return record


def write_oracle_report(record: Dict[str, Any], json_path: Path) -> Path:
    return write_json(Path(json_path), record)


def write_bias_curve_csv(curve: BiasCurve, csv_path: Path) -> Path:
    """`tau,delta0_0,...,se_0,...` table."""
    return write_csv(Path(csv_path), pd.DataFrame(curve.to_rows()))
