"""
Input Validation Module

Validates observed series read from CSV before they reach the estimators.
Every problem is reported with the file line it came from.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from common.errors import InvalidInputError

logger = logging.getLogger(__name__)


@dataclass
class ValidationConfig:
    """Configuration for series validation."""
    required_columns: List[str] = field(default_factory=lambda: ["t", "y"])
    require_consecutive_t: bool = True
    min_length: int = 1


@dataclass
class ValidationIssue:
    """A single problem found in the input, with its CSV line when known."""
    message: str
    line: Optional[int] = None

    def __str__(self) -> str:
        return self.message if self.line is None else f"line {self.line}: {self.message}"


@dataclass
class ValidationResult:
    """Result of series validation."""
    is_valid: bool
    errors: List[ValidationIssue]
    warnings: List[str]
    values: Optional[np.ndarray] = None

    def raise_for_errors(self) -> np.ndarray:
        """Return the parsed values or raise on the first error."""
        if not self.is_valid:
            first = self.errors[0]
            raise InvalidInputError(first.message, line=first.line)
        return self.values


class SeriesValidator:
    """
    Validates `t,y` tables (as parsed string cells) into a float series.

    Line numbers count the header as line 1, so data row i sits on line i + 2.
    """

    def __init__(self, config: Optional[ValidationConfig] = None):
        self.config = config or ValidationConfig()

    def validate(self, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> ValidationResult:
        """
        Validate a parsed table.

        Args:
            header: Column names
            rows: Cell values per data row

        Returns:
            ValidationResult with errors, warnings and the parsed y values
        """
        errors: List[ValidationIssue] = []
        warnings: List[str] = []

        columns = [str(c).strip() for c in header]
        missing = [c for c in self.config.required_columns if c not in columns]
        if missing:
            errors.append(ValidationIssue(f"missing required column(s): {', '.join(missing)}", line=1))
            return ValidationResult(is_valid=False, errors=errors, warnings=warnings)

        extra = [c for c in columns if c not in self.config.required_columns]
        if extra:
            warnings.append(f"ignoring extra column(s): {', '.join(extra)}")

        t_idx, y_idx = columns.index("t"), columns.index("y")
        values: List[float] = []
        previous_t: Optional[int] = None

        for i, row in enumerate(rows):
            line = i + 2
            if len(row) <= max(t_idx, y_idx):
                errors.append(ValidationIssue(f"expected {len(columns)} fields, got {len(row)}", line))
                continue

            t_value = self._parse_int(row[t_idx])
            if t_value is None:
                errors.append(ValidationIssue(f"t is not an integer: {row[t_idx]!r}", line))
            elif self.config.require_consecutive_t and previous_t is not None and t_value != previous_t + 1:
                errors.append(ValidationIssue(f"t={t_value} does not follow t={previous_t}", line))
            if t_value is not None:
                previous_t = t_value

            y_value = self._parse_float(row[y_idx])
            if y_value is None:
                errors.append(ValidationIssue(f"y is not a number: {row[y_idx]!r}", line))
            elif not math.isfinite(y_value):
                errors.append(ValidationIssue(f"y is not finite: {row[y_idx]!r}", line))
            else:
                values.append(y_value)

        if not errors and len(values) < self.config.min_length:
            errors.append(ValidationIssue(
                f"series has {len(values)} observations, need at least {self.config.min_length}"
            ))

        for issue in errors:
            logger.debug(f"Series validation error: {issue}")

        return ValidationResult(
            is_valid=len(errors) == 0,
            errors=errors,
            warnings=warnings,
            values=np.asarray(values, dtype=float) if not errors else None,
        )

    @staticmethod
    def _parse_int(cell: Any) -> Optional[int]:
        try:
            text = str(cell).strip()
            number = float(text)
        except (TypeError, ValueError):
            return None
        if not math.isfinite(number) or number != int(number):
            return None
        return int(number)

    @staticmethod
    def _parse_float(cell: Any) -> Optional[float]:
        try:
            return float(str(cell).strip())
        except (TypeError, ValueError):
            return None


def validate_values(values: Sequence[float]) -> np.ndarray:
    """Check an in-memory series: one-dimensional and finite."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"series must be one-dimensional, got shape {arr.shape}")
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise InvalidInputError(f"series contains non-finite value at t={int(bad[0]) + 1}")
    return arr


# Global validator instance
_validator: Optional[SeriesValidator] = None


def get_validator() -> SeriesValidator:
    """Get the global series validator."""
    global _validator
    if _validator is None:
        _validator = SeriesValidator()
    return _validator


def summarize_issues(result: ValidationResult) -> Dict[str, Any]:
    """Compact dict form of a validation result for logs."""
    return {
        "valid": result.is_valid,
        "errors": [str(e) for e in result.errors],
        "warnings": list(result.warnings),
    }
