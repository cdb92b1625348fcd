"""
Flag parsing and run configuration.

A run configuration comes from an optional JSON file (validated against
contracts/config.schema.json) with command-line flags layered on top.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import ValidationError

from common.errors import InvalidInputError
from common.io_utils import read_json
from common.models import (
    BootstrapConfig,
    CiMethod,
    EstimationConfig,
    ExperimentSpec,
    HypothesisSpec,
    OracleConfig,
    TauGrid,
    WeightFamily,
    WeightSpec,
)
from common.schema_validator import validate_input_or_raise
from config import CONFIG_SCHEMA_PATH, CONFIG_SCHEMA_VERSION

logger = logging.getLogger(__name__)


def load_run_config(path: Optional[str]) -> Dict[str, Any]:
    """
    Read and validate a config JSON file; no file gives an empty config.

    Raises:
        InvalidInputError: Unreadable file or schema violation
    """
    if path is None:
        return {"schema_version": CONFIG_SCHEMA_VERSION}
    record = read_json(Path(path))
    validate_input_or_raise(record, CONFIG_SCHEMA_PATH)
    return record


def _model(cls, data: Dict[str, Any], what: str):
    try:
        return cls.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"invalid {what}: {e.errors()[0]['msg']}") from e


def parse_tau_grid(text: str) -> TauGrid:
    """`eps,step` -> TauGrid."""
    try:
        epsilon, step = (float(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"--tau-grid expects 'eps,step', got {text!r}")
    return _model(TauGrid, {"epsilon": epsilon, "step": step}, "--tau-grid")


def parse_weight(text: str) -> WeightSpec:
    """`power:k`, `exp_power:k` or `unit` -> WeightSpec."""
    family, _, k = text.partition(":")
    try:
        family = WeightFamily(family)
    except ValueError:
        raise InvalidInputError(
            f"--weight family must be one of {[f.value for f in WeightFamily]}, got {family!r}"
        )
    data: Dict[str, Any] = {"family": family}
    if k:
        try:
            data["k"] = float(k)
        except ValueError:
            raise InvalidInputError(f"--weight exponent must be a number, got {k!r}")
    return _model(WeightSpec, data, "--weight")


def parse_family(text: str) -> Tuple[int, int]:
    """`d0,ptilde` -> (d0, p_tilde)."""
    try:
        d0, p_tilde = (int(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"--family expects 'd0,ptilde', got {text!r}")
    if d0 < 1 or p_tilde < 1:
        raise InvalidInputError(f"--family values must be positive, got {text!r}")
    return d0, p_tilde


def parse_sizes(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise InvalidInputError(f"--sizes expects comma separated integers, got {text!r}")


def resolve_estimation(args, config: Dict[str, Any]) -> EstimationConfig:
    """EstimationConfig from the config file, then flags."""
    data = dict(config.get("estimation", {}))
    if getattr(args, "tau_grid", None):
        data["grid"] = parse_tau_grid(args.tau_grid).model_dump()
    if getattr(args, "weight", None):
        data["weights"] = parse_weight(args.weight).model_dump()
    if getattr(args, "family", None):
        data["d0"], data["p_tilde"] = parse_family(args.family)
    if getattr(args, "no_intercept", False):
        data["intercept"] = False
    data["n_jobs"] = args.threads
    return _model(EstimationConfig, data, "estimation config")


def resolve_bootstrap(args, config: Dict[str, Any]) -> BootstrapConfig:
    data = dict(config.get("bootstrap", {}))
    if getattr(args, "boot_J", None) is not None:
        data["replications"] = args.boot_J
    if getattr(args, "ci_method", None):
        data["ci_method"] = CiMethod(args.ci_method)
    if args.seed is not None:
        data["seed"] = args.seed
    data["parallel_chunks"] = args.threads
    return _model(BootstrapConfig, data, "bootstrap config")


def resolve_oracle(args, config: Dict[str, Any]) -> OracleConfig:
    data = dict(config.get("oracle", {}))
    if getattr(args, "s_points", None) is not None:
        if args.s_points < 2:
            raise InvalidInputError("--s-points must be at least 2")
        data["s_grid"] = list(OracleConfig.with_points(args.s_points).s_grid)
    if getattr(args, "mc_paths", None) is not None:
        data["mc_paths"] = args.mc_paths
    if getattr(args, "weight", None):
        data["weights"] = parse_weight(args.weight).model_dump()
    if args.seed is not None:
        data["seed"] = args.seed
    data["n_jobs"] = args.threads
    return _model(OracleConfig, data, "oracle config")


def resolve_hypothesis(config: Dict[str, Any]) -> Optional[HypothesisSpec]:
    if "hypothesis" not in config:
        return None
    return _model(HypothesisSpec, config["hypothesis"], "hypothesis")


def resolve_experiment(args, config: Dict[str, Any]) -> ExperimentSpec:
    data = dict(config.get("experiment", {}))
    if getattr(args, "dgp", None):
        data["dgp_ids"] = list(args.dgp)
    if getattr(args, "sizes", None):
        data["sample_sizes"] = parse_sizes(args.sizes)
    if getattr(args, "reps", None) is not None:
        data["replications"] = args.reps
    if getattr(args, "metrics", None):
        data["metrics"] = args.metrics.split(",")
    if args.seed is not None:
        data["master_seed"] = args.seed
    # replications already run in parallel
    data["estimation"] = resolve_estimation(args, config).model_copy(update={"n_jobs": 1})
    if "bootstrap" in config or getattr(args, "boot_J", None) is not None:
        bootstrap = resolve_bootstrap(args, config)
        data["bootstrap"] = bootstrap.model_copy(update={"parallel_chunks": 1})
    data["n_jobs"] = args.threads
    return _model(ExperimentSpec, data, "experiment")
