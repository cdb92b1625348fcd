"""
Command-line entry point.

    sqar simulate   --dgp asymmetric_arch --n 1000 --seed 7 --output-dir out/
    sqar estimate   --input out/series.csv --output-dir out/
    sqar bootstrap  --input out/series.csv --boot-J 499 --seed 1 --output-dir out/
    sqar oracle     --dgp asymmetric_arch --variances --output-dir out/
    sqar montecarlo --config experiment.json --threads 8 --output-dir out/

Exit codes: 0 success, 1 output record failed its contract, 2 input error,
3 numerical failure.
"""

import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional

from jsonschema import ValidationError as ContractError
from pydantic import ValidationError

from common.errors import InvalidInputError, NumericalError
from common.io_utils import config_hash, write_json
from common.logging_config import setup_logging
from common.metrics import log_run_summary
from common.models import CiMethod, RunManifest
from common.schema_validator import validate_or_raise
from config import (
    MANIFEST_SCHEMA_PATH,
    PACKAGE_VERSION,
    get_default_n_jobs,
    get_log_level,
    get_structured_logging,
)
from cli.commands import (
    CommandResult,
    cmd_bootstrap,
    cmd_estimate,
    cmd_montecarlo,
    cmd_oracle,
    cmd_simulate,
)
from dgp import list_dgps

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONTRACT = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3

COMMANDS: Dict[str, Callable[[argparse.Namespace], CommandResult]] = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "bootstrap": cmd_bootstrap,
    "oracle": cmd_oracle,
    "montecarlo": cmd_montecarlo,
}


# ============================================================================
# Parser
# ============================================================================

def _common_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--output-dir", default="out", help="directory for result files")
    parent.add_argument("--seed", type=int, default=None, help="seed for every random stream")
    parent.add_argument("--config", default=None, help="run configuration JSON (schema_version 1)")
    parent.add_argument("--threads", type=int, default=get_default_n_jobs(), help="worker processes")
    parent.add_argument("--log-level", default=None, help="override SQAR_LOG_LEVEL")
    return parent


def _estimation_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--tau-grid", default=None, metavar="EPS,STEP", help="quantile grid")
    parent.add_argument("--weight", default=None, metavar="FAMILY:K", help="self-weight, e.g. power:2")
    parent.add_argument("--family", default=None, metavar="D0,PTILDE", help="moment-weight family")
    parent.add_argument("--no-intercept", action="store_true", help="intercept-free model")
    return parent


def _bootstrap_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--boot-J", dest="boot_J", type=int, default=None, help="bootstrap replications")
    parent.add_argument(
        "--ci-method", choices=[m.value for m in CiMethod], default=None, help="confidence interval method"
    )
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    estimation = _estimation_flags()
    boot = _bootstrap_flags()

    parser = argparse.ArgumentParser(
        prog="sqar",
        description="Self-weighted quantile estimation for heavy-tailed AR models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", parents=[common], help="simulate a series")
    simulate.add_argument("--dgp", choices=list_dgps(), default="asymmetric_arch")
    simulate.add_argument("--n", type=int, default=1000)
    simulate.add_argument("--burn-in", type=int, default=None)

    for name, parents, help_text in (
        ("estimate", [common, estimation], "two-step estimate from a t,y CSV"),
        ("bootstrap", [common, estimation, boot], "two-step estimate with bootstrap inference"),
    ):
        cmd = sub.add_parser(name, parents=parents, help=help_text)
        cmd.add_argument("--input", required=True, help="t,y CSV")
        cmd.add_argument("--p", type=int, default=1, help="AR order")
        if name == "estimate":
            cmd.add_argument("--tau0", type=float, default=None, help="also solve at this level")
        else:
            cmd.add_argument("--tau1", type=float, default=None, help="Wald test of tau_0 = tau1")

    oracle = sub.add_parser("oracle", parents=[common, estimation], help="population bias curve and variances")
    oracle.add_argument("--dgp", choices=list_dgps(), default="asymmetric_arch")
    oracle.add_argument("--mc-paths", type=int, default=None)
    oracle.add_argument("--s-points", type=int, default=None)
    oracle.add_argument("--variances", action="store_true", help="compute gamma_1^2 and Gamma_1")
    oracle.add_argument("--identification", action="store_true", help="tabulate the population objective")

    montecarlo = sub.add_parser("montecarlo", parents=[common, estimation, boot], help="Monte Carlo experiment")
    montecarlo.add_argument("--dgp", action="append", choices=list_dgps(), default=None)
    montecarlo.add_argument("--sizes", default=None, metavar="N1,N2,...")
    montecarlo.add_argument("--reps", type=int, default=None)
    montecarlo.add_argument("--metrics", default=None, metavar="theta,tau,...")

    return parser


# ============================================================================
# Running
# ============================================================================

def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def exit_code_for(error: BaseException) -> int:
    """
    2 for input errors (including wrapped ones), 3 for numerical failures,
    1 for anything else, including an output record that breaks its contract.
    """
    if isinstance(error, (InvalidInputError, ValidationError)):
        return EXIT_INPUT
    if isinstance(error.__cause__, InvalidInputError):
        return EXIT_INPUT
    if isinstance(error, NumericalError):
        return EXIT_NUMERIC
    return EXIT_CONTRACT


def write_manifest(args, argv: List[str], result: CommandResult, started: str, elapsed: float):
    manifest = RunManifest(
        command=args.command,
        argv=list(argv),
        config_hash=config_hash({"command": args.command, **result.config}),
        seed=result.seed,
        threads=args.threads,
        started_at=started,
        finished_at=_now(),
        wall_time_seconds=elapsed,
        output_paths=[str(p) for p in result.outputs],
        package_version=PACKAGE_VERSION,
        seeds=result.seeds,
    )
    record = manifest.model_dump(mode="json")
    validate_or_raise(record, MANIFEST_SCHEMA_PATH)
    return write_json(Path(args.output_dir) / "manifest.json", record)


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level or get_log_level(), structured=get_structured_logging())

    if args.threads < 1:
        logger.error("--threads must be at least 1")
        return EXIT_INPUT

    started = _now()
    t0 = time.perf_counter()
    try:
        result = COMMANDS[args.command](args)
        path = write_manifest(args, argv, result, started, time.perf_counter() - t0)
    except (InvalidInputError, ValidationError, NumericalError) as e:
        logger.error(f"{args.command} failed: {e}")
        return exit_code_for(e)
    except ContractError as e:
        logger.error(f"{args.command} produced an invalid record: {e.message}")
        return exit_code_for(e)

    logger.info(f"{args.command} finished; manifest at {path}")
    log_run_summary(logger)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
