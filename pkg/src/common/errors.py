"""
Error hierarchy for the sqar pipeline.

Input problems derive from InvalidInputError (also a ValueError); numerical
failures derive from NumericalError. The CLI maps the two families to
distinct exit codes.
"""

from typing import Any, List, Optional, Sequence


class SqarError(Exception):
    """Base class for all pipeline errors."""


class InvalidInputError(SqarError, ValueError):
    """Raised when inputs violate a documented precondition."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class TauRangeError(InvalidInputError):
    """Raised when a quantile level falls outside [epsilon, 1 - epsilon]."""

    def __init__(self, tau: float, lower: float, upper: float):
        self.tau = tau
        super().__init__(f"tau={tau} outside [{lower}, {upper}]")


class NumericalError(SqarError):
    """Base class for numerical failures."""


class GenerationOverflowError(NumericalError):
    """Raised when a simulated path leaves the representable range."""

    def __init__(self, t: int, value: float):
        self.t = t
        self.value = value
        super().__init__(f"simulated value overflowed at t={t} (|y|={abs(value):.3g})")


class RankDeficientError(NumericalError):
    """Raised when the weighted design does not have full column rank."""

    def __init__(self, dependent_columns: Sequence[int], rank: int):
        self.dependent_columns = list(dependent_columns)
        self.rank = rank
        super().__init__(
            f"design is rank deficient (rank {rank}); "
            f"dependent columns: {self.dependent_columns}"
        )


class NoConvergenceError(NumericalError):
    """Raised when an iterative method stops without meeting its tolerance."""

    def __init__(self, message: str, best_iterate: Any = None, trace: Optional[List[Any]] = None):
        self.best_iterate = best_iterate
        self.trace = trace or []
        super().__init__(message)


class CertificateError(NumericalError):
    """Raised when a solution fails its subgradient optimality certificate."""

    def __init__(self, violation: float):
        self.violation = violation
        super().__init__(f"subgradient certificate violated by {violation:.3g}")


class OracleFailureError(NumericalError):
    """Raised when a Monte Carlo population quantity is numerically unusable."""


class IdentificationFailureError(NumericalError):
    """Raised when no moment weight has a non-vanishing tau derivative."""


class StageError(NumericalError):
    """Wraps a failure with the pipeline stage (and level) where it happened."""

    def __init__(self, stage: str, cause: Exception, level: Optional[float] = None):
        self.stage = stage
        self.level = level
        where = stage if level is None else f"{stage} (tau={level:.6g})"
        super().__init__(f"{where}: {cause}")
        self.__cause__ = cause


class AggregateFailureError(NumericalError):
    """Raised when too many replications fail."""

    def __init__(self, what: str, failed: int, total: int):
        self.failed = failed
        self.total = total
        super().__init__(f"{what}: {failed} of {total} replications failed")


class SingularMatrixError(NumericalError):
    """Raised when a covariance to be inverted is singular or ill-conditioned."""

    def __init__(self, what: str, condition: float):
        self.condition = condition
        super().__init__(f"{what} is singular (condition number {condition:.3g})")
