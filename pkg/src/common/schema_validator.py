"""
Schema Validator Module

Validates config files and result records against the JSON Schema
contracts in contracts/.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Tuple

from jsonschema import Draft202012Validator, ValidationError

from common.errors import InvalidInputError


_schema_cache: Dict[Path, dict] = {}


def load_schema(path: Path) -> dict:
    """
    Load a JSON Schema from file, caching it after the first load.

    Raises:
        FileNotFoundError: If the schema file is missing
    """
    path = Path(path)
    if path in _schema_cache:
        return _schema_cache[path]

    if not path.exists():
        raise FileNotFoundError(f"schema not found at {path}")

    with open(path) as f:
        _schema_cache[path] = json.load(f)

    return _schema_cache[path]


def validate_record(record: Dict[str, Any], schema_path: Path) -> Tuple[bool, List[str]]:
    """
    Validate a record against a schema.

    Returns:
        Tuple of (is_valid, list of error messages)
    """
    validator = Draft202012Validator(load_schema(schema_path))

    errors = sorted(validator.iter_errors(record), key=lambda e: list(e.absolute_path))
    if not errors:
        return True, []

    messages = []
    for error in errors:
        path = " -> ".join(str(p) for p in error.absolute_path) or "root"
        messages.append(f"{path}: {error.message}")
    return False, messages


def validate_or_raise(record: Dict[str, Any], schema_path: Path) -> Dict[str, Any]:
    """
    Validate an output record, raising on failure.

    Raises:
        ValidationError: If validation fails (a bug in the producer)
    """
    is_valid, errors = validate_record(record, schema_path)
    if not is_valid:
        raise ValidationError(
            f"{Path(schema_path).name} validation failed:\n" + "\n".join(f"  - {e}" for e in errors)
        )
    return record


def validate_input_or_raise(record: Dict[str, Any], schema_path: Path) -> Dict[str, Any]:
    """
    Validate a user-supplied document, raising InvalidInputError on failure.
    """
    is_valid, errors = validate_record(record, schema_path)
    if not is_valid:
        raise InvalidInputError(f"{Path(schema_path).name}: " + "; ".join(errors))
    return record
