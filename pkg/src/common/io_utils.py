"""
File output helpers.

JSON records and CSV tables are written to a temporary file in the target
directory and moved into place with os.replace, so readers never observe
a partially written file.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from common.errors import InvalidInputError
from common.input_validation import get_validator


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays and tuples into plain JSON types."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_json(path: Path, record: Dict[str, Any]) -> Path:
    """Write a JSON record atomically (sorted keys, two-space indent)."""
    text = json.dumps(to_jsonable(record), indent=2, sort_keys=True) + "\n"
    return _atomic_write_text(path, text)


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    """Write a DataFrame as CSV atomically, with round-trip float formatting."""
    return _atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g", lineterminator="\n"))


def read_json(path: Path) -> Dict[str, Any]:
    """Read a JSON document; malformed JSON is an input error."""
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{path}: invalid JSON ({e.msg})", line=e.lineno) from e
    except OSError as e:
        raise InvalidInputError(f"cannot read {path}: {e}") from e


def read_series_csv(path: Path) -> np.ndarray:
    """
    Read a `t,y` CSV into a float array.

    Raises:
        InvalidInputError: On unreadable files or malformed rows (with line number)
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except FileNotFoundError as e:
        raise InvalidInputError(f"input file not found: {path}") from e
    except pd.errors.EmptyDataError as e:
        raise InvalidInputError(f"{path} is empty", line=1) from e
    except pd.errors.ParserError as e:
        raise InvalidInputError(f"{path}: {e}") from e

    rows = frame.itertuples(index=False, name=None)
    result = get_validator().validate(list(frame.columns), list(rows))
    return result.raise_for_errors()


def config_hash(record: Dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a config record."""
    canonical = json.dumps(to_jsonable(record), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

