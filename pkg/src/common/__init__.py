"""
Common utilities and models for the sqar pipeline.

Includes:
- Models: Pydantic configuration and parameter models
- Errors: The SqarError hierarchy
- Logging: Structured logging configuration
- Metrics: Counters, histograms and timers
- RNG: Counter-keyed random streams
- Caching: LRU cache for Monte Carlo draws
- Input Validation: Series CSV checks
"""

from common.errors import (
    AggregateFailureError,
    InvalidInputError,
    NumericalError,
    SqarError,
    StageError,
)

from common.models import (
    BootstrapConfig,
    EstimationConfig,
    ExperimentSpec,
    OracleConfig,
    RunManifest,
    TauGrid,
    WeightSpec,
)

from common.logging_config import (
    setup_logging,
    get_logger,
)

from common.metrics import (
    get_metrics,
    increment,
    histogram,
    timer,
)

from common.rng import (
    derive_seed,
    stream,
)

from common.caching import (
    LRUCache,
    clear_all_caches,
    get_draw_cache,
)

from common.input_validation import (
    SeriesValidator,
    ValidationResult,
    validate_values,
)

__all__ = [
    # Errors
    "AggregateFailureError",
    "InvalidInputError",
    "NumericalError",
    "SqarError",
    "StageError",
    # Models
    "BootstrapConfig",
    "EstimationConfig",
    "ExperimentSpec",
    "OracleConfig",
    "RunManifest",
    "TauGrid",
    "WeightSpec",
    # Logging
    "setup_logging",
    "get_logger",
    # Metrics
    "get_metrics",
    "increment",
    "histogram",
    "timer",
    # RNG
    "derive_seed",
    "stream",
    # Caching
    "LRUCache",
    "clear_all_caches",
    "get_draw_cache",
    # Input validation
    "SeriesValidator",
    "ValidationResult",
    "validate_values",
]
