"""
Logging configuration for the engine.

The console gets every record at the configured level; warnings and
reproduction failures are also appended to LOG_DIR/seqnet.log.
"""

import logging
import os
from typing import Any, Dict, Optional

from seqnet.core.config import settings, settings_helper

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# pydot logs every parsed token at DEBUG
QUIET_LOGGERS = ("pydot", "pydot.core", "pydot.dot_parser")


def resolve_level(level: Optional[str]) -> int:
    """Numeric level for a name such as "debug"; unknown names fall back to INFO."""
    name = (level or settings.LOG_LEVEL).upper()
    numeric = logging.getLevelName(name)
    return numeric if isinstance(numeric, int) else logging.INFO


def setup_logging(level: Optional[str] = None) -> None:
    """
    Set up console and warning-file logging.

    Safe to call more than once; earlier root handlers are replaced.

    Args:
        level: Level name; defaults to the LOG_LEVEL setting
    """
    numeric_level = resolve_level(level)
    logging.basicConfig(level=numeric_level, format=LOG_FORMAT, datefmt=DATE_FORMAT, force=True)

    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(numeric_level, logging.WARNING))

    log_path = settings_helper.get_log_path()
    try:
        os.makedirs(os.path.dirname(log_path), exist_ok=True)
        file_handler = logging.FileHandler(log_path, encoding="utf-8")
    except OSError:
        logging.getLogger(__name__).debug(f"No warning log at {log_path}; console only")
        return
    file_handler.setLevel(logging.WARNING)
    file_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logging.getLogger().addHandler(file_handler)


class LoggerAdapter(logging.LoggerAdapter):
    """
    Logger adapter that tags messages with a component prefix and run context.

    Context entries render in insertion order, e.g. "experiments [n=7 T=8]: ...".
    """

    def __init__(
        self,
        logger: logging.Logger,
        prefix: str = "",
        extra: Optional[Dict[str, Any]] = None,
    ):
        super().__init__(logger, extra or {})
        self.prefix = prefix

    def bind(self, **context: Any) -> "LoggerAdapter":
        """New adapter on the same logger with additional context."""
        return LoggerAdapter(self.logger, self.prefix, {**self.extra, **context})

    def process(self, msg, kwargs):
        tags = " ".join(f"{key}={value}" for key, value in self.extra.items())
        label = " ".join(part for part in (self.prefix, f"[{tags}]" if tags else "") if part)
        if label:
            msg = f"{label}: {msg}"
        return msg, kwargs


def get_logger(
    name: str, prefix: str = "", extra: Optional[Dict[str, Any]] = None
) -> LoggerAdapter:
    """
    Get a prefixed logger.

    Args:
        name: Logger name, usually __name__
        prefix: Component label shown before each message
        extra: Run context shown as key=value tags

    Returns:
        Logger adapter
    """
    return LoggerAdapter(logging.getLogger(name), prefix, extra)
