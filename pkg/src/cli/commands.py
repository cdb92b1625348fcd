"""
Subcommand implementations.

Each command reads its inputs, runs one pipeline entry point and writes
plot-ready CSV and JSON records under --output-dir.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from common.io_utils import write_json
from common.schema_validator import validate_or_raise
from config import (
    BOOTSTRAP_SCHEMA_PATH,
    CONFIG_SCHEMA_VERSION,
    ORACLE_SCHEMA_PATH,
    TWO_STEP_SCHEMA_PATH,
)
from bias_oracle import (
    ParametricNoiseModel,
    asymptotic_variances,
    bias_curve,
    oracle_report,
    verify_identification,
    write_bias_curve_csv,
)
from bootstrap import bootstrap_two_step, wald_tau, wald_theta, write_draws_csv
from cli.options import (
    load_run_config,
    resolve_bootstrap,
    resolve_estimation,
    resolve_experiment,
    resolve_hypothesis,
    resolve_oracle,
)
from common.rng import derive_seed
from dgp import get_dgp, read_series, simulate_from_spec, write_series
from harness import run_experiment, write_experiment_outputs
from sqe import write_path_csv
from taustep import MomentWeightFamily, TwoStepEstimate, oracle_estimate, two_step, write_objective_curve_csv

logger = logging.getLogger(__name__)


@dataclass
class CommandResult:
    """What a command wrote and the configuration that produced it."""
    outputs: List[Path]
    config: Dict[str, Any]
    seed: Optional[int] = None
    seeds: List[int] = field(default_factory=list)


def _output_dir(args) -> Path:
    path = Path(args.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _estimate_record(estimate: TwoStepEstimate) -> Dict[str, Any]:
    record = estimate.to_record()
    record["schema_version"] = CONFIG_SCHEMA_VERSION
    return record


def _write_estimate(estimate: TwoStepEstimate, out: Path, extra: Optional[Dict[str, Any]] = None) -> List[Path]:
    record = _estimate_record(estimate)
    if extra:
        record.update(extra)
    validate_or_raise(record, TWO_STEP_SCHEMA_PATH)
    if estimate.boundary_flag:
        logger.warning("TAU_AT_BOUNDARY: tau_hat lies within one grid step of the boundary")
    return [
        write_json(out / "estimate.json", record),
        write_objective_curve_csv(estimate, out / "objective_curve.csv"),
        write_path_csv(estimate.path, out / "sqe_path.csv"),
    ]


def cmd_simulate(args) -> CommandResult:
    """Simulate a series from a menu DGP and write `t,y` CSV plus sidecar."""
    seed = 0 if args.seed is None else args.seed
    spec = get_dgp(args.dgp)
    if args.burn_in is not None:
        spec = spec.model_copy(update={"burn_in": args.burn_in})
    sample = simulate_from_spec(spec, n=args.n, seed=seed)
    csv_path, json_path = write_series(sample, _output_dir(args) / "series.csv")
    logger.info(f"Simulated n={args.n} from {args.dgp} (seed={seed})")
    config = {"dgp": args.dgp, "n": args.n, "burn_in": spec.burn_in}
    return CommandResult(outputs=[csv_path, json_path], config=config, seed=seed)


def cmd_estimate(args) -> CommandResult:
    """Two-step estimate of (tau_0, theta_0) from an input series."""
    run_config = load_run_config(args.config)
    estimation = resolve_estimation(args, run_config)
    series = read_series(Path(args.input))
    estimate = two_step(series, args.p, estimation)

    extra = None
    if args.tau0 is not None:
        oracle = oracle_estimate(series, args.p, estimation, args.tau0)
        extra = {"oracle_theta_at_tau0": {"tau0": args.tau0, "theta_hat": oracle.theta_hat.tolist()}}
    outputs = _write_estimate(estimate, _output_dir(args), extra)
    config = {"p": args.p, "estimation": estimation.model_dump(mode="json"), "tau0": args.tau0}
    return CommandResult(outputs=outputs, config=config)


def _wald_record(args, run_config, estimate, summary) -> Dict[str, Any]:
    record: Dict[str, Any] = {}
    hypothesis = resolve_hypothesis(run_config)
    if hypothesis is not None:
        record["theta"] = wald_theta(estimate.theta_hat, summary.Gamma1_hat, hypothesis, estimate.n)._asdict()
    tau1 = args.tau1 if args.tau1 is not None else run_config.get("tau1")
    if tau1 is not None:
        record["tau"] = wald_tau(estimate.tau_hat, summary.gamma1_sq_hat, tau1, estimate.n)._asdict()
    return record


def cmd_bootstrap(args) -> CommandResult:
    """Two-step estimate followed by the random-weighting bootstrap."""
    run_config = load_run_config(args.config)
    estimation = resolve_estimation(args, run_config)
    boot_config = resolve_bootstrap(args, run_config)
    series = read_series(Path(args.input))
    estimate = two_step(series, args.p, estimation)
    summary = bootstrap_two_step(series, estimate, boot_config, estimation)

    out = _output_dir(args)
    outputs = _write_estimate(estimate, out)
    record = summary.to_record()
    record["schema_version"] = CONFIG_SCHEMA_VERSION
    wald = _wald_record(args, run_config, estimate, summary)
    if wald:
        record["wald"] = wald
    validate_or_raise(record, BOOTSTRAP_SCHEMA_PATH)
    outputs.append(write_json(out / "bootstrap.json", record))
    outputs.append(write_draws_csv(summary, out / "bootstrap_draws.csv"))

    config = {
        "p": args.p,
        "estimation": estimation.model_dump(mode="json"),
        "bootstrap": boot_config.model_dump(mode="json"),
        "wald": {k: v for k, v in run_config.items() if k in ("hypothesis", "tau1")},
        "tau1": args.tau1,
    }
    seeds = [derive_seed(boot_config.seed, j) for j in range(boot_config.replications)]
    return CommandResult(outputs=outputs, config=config, seed=boot_config.seed, seeds=seeds)


def cmd_oracle(args) -> CommandResult:
    """Bias curve, optional asymptotic variances and identification check for a menu DGP."""
    run_config = load_run_config(args.config)
    estimation = resolve_estimation(args, run_config)
    oracle_config = resolve_oracle(args, run_config)
    model = ParametricNoiseModel.from_spec(get_dgp(args.dgp))
    family = MomentWeightFamily.describe(
        estimation.family_base_weights(), estimation.d0, estimation.family_lags(model.p)
    )

    curve = bias_curve(estimation.grid, model, oracle_config)
    variances = asymptotic_variances(model, family, oracle_config) if args.variances else None
    identification = (
        verify_identification(model, family, estimation.grid, oracle_config) if args.identification else None
    )
    record = oracle_report(model, oracle_config, curve, variances, identification)
    record["schema_version"] = CONFIG_SCHEMA_VERSION
    record["dgp"] = args.dgp
    validate_or_raise(record, ORACLE_SCHEMA_PATH)

    out = _output_dir(args)
    outputs = [
        write_json(out / "oracle_report.json", record),
        write_bias_curve_csv(curve, out / "bias_curve.csv"),
    ]
    config = {
        "dgp": args.dgp,
        "estimation": estimation.model_dump(mode="json"),
        "oracle": oracle_config.model_dump(mode="json"),
        "variances": args.variances,
        "identification": args.identification,
    }
    return CommandResult(outputs=outputs, config=config, seed=oracle_config.seed)


def cmd_montecarlo(args) -> CommandResult:
    """Run a Monte Carlo experiment and write metric tables."""
    run_config = load_run_config(args.config)
    spec = resolve_experiment(args, run_config)
    table = run_experiment(spec)
    outputs = write_experiment_outputs(table, _output_dir(args))
    return CommandResult(
        outputs=outputs,
        config={"experiment": spec.model_dump(mode="json")},
        seed=spec.master_seed,
        seeds=table.seeds,
    )
