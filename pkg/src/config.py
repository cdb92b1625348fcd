"""
Configuration for the sqar pipeline

Loads settings from environment variables and provides numerical constants.
"""

import os
from pathlib import Path
from dotenv import load_dotenv

# Load .env file if present (try project root and current directory)
# Find project root (src/ directory is one level down from project root)
_project_root = Path(__file__).parent.parent
_env_path = _project_root / ".env"
if _env_path.exists():
    load_dotenv(_env_path)
else:
    # Fallback to default behavior (searches current directory and parents)
    load_dotenv()

# ============================================================================
# Runtime Settings
# ============================================================================

def get_log_level() -> str:
    """Log level from SQAR_LOG_LEVEL (default INFO)."""
    return os.getenv("SQAR_LOG_LEVEL", "INFO").upper()


def get_structured_logging() -> bool:
    """True when SQAR_LOG_STRUCTURED requests JSON log lines."""
    return os.getenv("SQAR_LOG_STRUCTURED", "").lower() in ("1", "true", "yes")


def get_default_n_jobs() -> int:
    """Default worker count from SQAR_N_JOBS.

    Raises:
        ValueError: If the variable is set but not a positive integer
    """
    raw = os.getenv("SQAR_N_JOBS", "1")
    try:
        n_jobs = int(raw)
    except ValueError:
        raise ValueError(f"SQAR_N_JOBS must be an integer, got {raw!r}")
    if n_jobs < 1:
        raise ValueError(f"SQAR_N_JOBS must be >= 1, got {n_jobs}")
    return n_jobs

# ============================================================================
# Quantile Regression Solver
# ============================================================================

# Relative duality gap at which the interior point method stops
DUALITY_GAP_TOL = 1e-9
MAX_IP_ITERATIONS = 100

# Fraction of the step to the boundary taken by the interior point method
IP_STEP_DAMPING = 0.99995

# Pivoted QR rank tolerance (relative to the largest pivot)
RANK_TOL = 1e-10

# Absolute slack in the subgradient certificate, multiplied by the data scale
CERTIFICATE_SLACK = 1e-6

# Residuals with |r| <= ZERO_TOL_FACTOR * (1 + |y|) count as active
ZERO_TOL_FACTOR = 1e-8

# Huberized ramp half-widths for the smoothing fallback
HOMOTOPY_WIDTHS = (1e-2, 1e-4, 1e-6)

# ============================================================================
# Quantile Grid and Second Step
# ============================================================================

DEFAULT_EPSILON = 0.05
DEFAULT_STEP = 0.01
DEFAULT_REFINE_TOL = 1e-4
DEFAULT_D0 = 2

# ============================================================================
# Data Generation
# ============================================================================

DEFAULT_BURN_IN = 500
OVERFLOW_LIMIT = 1e300

# ============================================================================
# Bias Oracle
# ============================================================================

ORACLE_S_POINTS = 11
ORACLE_MC_PATHS = 200_000
ORACLE_MIN_MC_PATHS = 10_000
ORACLE_BURN_IN = 1000
ORACLE_CHUNK_SIZE = 50_000
ORACLE_NEWTON_TOL = 1e-8
ORACLE_NEWTON_MAX_ITER = 50
ORACLE_DIFF_STEP = 0.01

# Stationary draws kept in memory across Newton steps and levels
DRAW_CACHE_MAX_ENTRIES = 32
DRAW_CACHE_MAX_BYTES = 256 * 2**20

# ============================================================================
# Bootstrap
# ============================================================================

DEFAULT_BOOT_J = 499
MIN_BOOT_J_FOR_COVARIANCE = 100
MAX_SKIP_FRACTION = 0.05
CI_LEVELS = (0.90, 0.95)

# ============================================================================
# Version Constants
# ============================================================================

PACKAGE_VERSION = "1.0.0"
CONFIG_SCHEMA_VERSION = 1

# ============================================================================
# Paths
# ============================================================================

PROJECT_ROOT = Path(__file__).parent.parent
CONTRACTS_DIR = PROJECT_ROOT / "contracts"

CONFIG_SCHEMA_PATH = CONTRACTS_DIR / "config.schema.json"
TWO_STEP_SCHEMA_PATH = CONTRACTS_DIR / "two_step_result.schema.json"
BOOTSTRAP_SCHEMA_PATH = CONTRACTS_DIR / "bootstrap_summary.schema.json"
ORACLE_SCHEMA_PATH = CONTRACTS_DIR / "oracle_report.schema.json"
MANIFEST_SCHEMA_PATH = CONTRACTS_DIR / "run_manifest.schema.json"
