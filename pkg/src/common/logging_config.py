"""
Logging setup for sqar runs.

Diagnostics always go to standard error so that series written to standard
output by ``sqar simulate`` stay clean. Replication loops attach their
coordinates (dgp, n, replication, tau) through ``get_logger(...).with_context``;
those fields appear in brackets in the console format and as top-level keys in
the JSON format.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any, Dict, Mapping, MutableMapping, Optional, Tuple

# Record attribute carrying the bound context fields
CONTEXT_ATTR = "sqar_context"

# Third-party loggers that are chatty at INFO during parallel runs
_QUIET_LOGGERS = ("joblib", "loky")


class StructuredFormatter(logging.Formatter):
    """One JSON object per record, for batch runs collected by a log shipper."""

    def format(self, record: logging.LogRecord) -> str:
        payload: Dict[str, Any] = {
            "ts": datetime.fromtimestamp(record.created, tz=timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "msg": record.getMessage(),
            "where": f"{record.module}.{record.funcName}:{record.lineno}",
        }
        payload.update(getattr(record, CONTEXT_ATTR, {}))
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return json.dumps(payload, default=str)


class HumanReadableFormatter(logging.Formatter):
    """Single-line console format with the bound context in brackets."""

    def __init__(self) -> None:
        super().__init__(
            fmt="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
            datefmt="%H:%M:%S",
        )

    def formatMessage(self, record: logging.LogRecord) -> str:
        line = super().formatMessage(record)
        context = getattr(record, CONTEXT_ATTR, None)
        if context:
            fields = " ".join(f"{key}={value}" for key, value in context.items())
            line = f"{line} [{fields}]"
        return line


def setup_logging(
    level: str = "INFO",
    structured: bool = False,
    log_file: Optional[str] = None,
) -> None:
    """
    Install sqar's handlers on the root logger, replacing any existing ones.

    Args:
        level: Level name such as DEBUG or WARNING
        structured: Emit JSON lines instead of the console format
        log_file: Also append records to this file
    """
    numeric_level = logging.getLevelName(level.upper())
    if not isinstance(numeric_level, int):
        raise ValueError(f"unknown log level: {level}")

    formatter: logging.Formatter = StructuredFormatter() if structured else HumanReadableFormatter()
    handlers: list = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding="utf-8"))

    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)
    root.setLevel(numeric_level)

    for name in _QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))


class LoggerWithContext(logging.LoggerAdapter):
    """
    Adapter that stamps every record with a fixed set of context fields.

    ``with_context`` returns a new adapter, so a replication loop can bind
    its index without affecting the module-level logger.
    """

    def __init__(self, logger: logging.Logger, context: Optional[Mapping[str, Any]] = None):
        super().__init__(logger, dict(context or {}))

    @property
    def context(self) -> Dict[str, Any]:
        return dict(self.extra)

    def with_context(self, **fields: Any) -> "LoggerWithContext":
        return LoggerWithContext(self.logger, {**self.extra, **fields})

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        extra = dict(kwargs.get("extra") or {})
        extra[CONTEXT_ATTR] = {**self.extra, **extra.get(CONTEXT_ATTR, {})}
        kwargs["extra"] = extra
        return msg, kwargs


def get_logger(name: str) -> LoggerWithContext:
    """Return a context-capable logger for ``name`` (usually ``__name__``)."""
    return LoggerWithContext(logging.getLogger(name))
