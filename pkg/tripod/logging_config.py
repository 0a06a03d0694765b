"""Structured logging configuration for simulation runs."""

import json
import logging
import sys
from datetime import datetime, timezone
from typing import Any

# Extra fields copied from log records into JSON output when present.
CONTEXT_FIELDS = ("sweep_id", "kind", "grid_index", "node", "tau", "duration_ms")


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record: logging.LogRecord) -> str:
        """
        Format log record as JSON.

        Args:
            record: The log record to format.

        Returns:
            JSON-formatted log string.
        """
        log_data: dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        for field in CONTEXT_FIELDS:
            if hasattr(record, field):
                log_data[field] = getattr(record, field)

        return json.dumps(log_data, default=str)


def setup_logging(
    level: str = "INFO",
    json_format: bool = False,
) -> None:
    """
    Configure logging for the CLI.

    Logs go to stderr so that stdout stays free for result paths.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        json_format: Whether to emit one JSON object per line.
    """
    numeric_level = getattr(logging, level.upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"unknown log level: {level}")

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)

    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(numeric_level)

    if json_format:
        handler.setFormatter(JSONFormatter())
    else:
        handler.setFormatter(
            logging.Formatter(
                "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
            )
        )

    root_logger.addHandler(handler)


class LoggerAdapter(logging.LoggerAdapter):
    """Logger adapter carrying sweep context."""

    def process(
        self, msg: str, kwargs: dict[str, Any]
    ) -> tuple[str, dict[str, Any]]:
        """Merge the adapter's context into the call's extra fields."""
        extra = kwargs.get("extra", {})
        if self.extra:
            extra.update(self.extra)
        kwargs["extra"] = extra
        return msg, kwargs


def get_logger(
    name: str,
    sweep_id: str | None = None,
    kind: str | None = None,
) -> logging.LoggerAdapter:
    """
    Get a logger with optional sweep context.

    Args:
        name: Logger name.
        sweep_id: Optional sweep hash for context.
        kind: Optional experiment kind for context.

    Returns:
        LoggerAdapter with context.
    """
    logger = logging.getLogger(name)
    extra = {}
    if sweep_id:
        extra["sweep_id"] = sweep_id
    if kind:
        extra["kind"] = kind
    return LoggerAdapter(logger, extra)
