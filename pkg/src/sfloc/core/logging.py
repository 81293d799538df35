"""Structured logging for the sfloc commands.

Events go to stderr so that stdout carries only the rich tables a command
prints. Development runs get the console renderer, anything else JSON lines.
The pipeline binds run context (command, session) with bind_context(); the
command wrapper clears it when the command returns.

Usage:
    from sfloc.core.logging import configure_logging, get_logger

    configure_logging(log_level="INFO", is_development=True)
    logger = get_logger(__name__)
    logger.info("map_built", frames=412)
"""

import logging
import sys
from typing import Any

import structlog
from structlog.types import Processor

# Third-party loggers that flood DEBUG output
QUIET_LOGGERS = ("matplotlib", "PIL")


def configure_logging(
    log_level: str = "INFO",
    is_development: bool = True,
) -> None:
    """Configure structlog for one command invocation.

    Args:
        log_level: Python log level name (DEBUG, INFO, WARNING, ERROR, CRITICAL).
        is_development: If True, use console output; else JSON lines.
    """
    level = getattr(logging, log_level.upper(), logging.INFO)

    processors: list[Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
    ]
    if is_development:
        processors.append(structlog.dev.ConsoleRenderer(colors=sys.stderr.isatty()))
    else:
        processors += [structlog.processors.format_exc_info, structlog.processors.JSONRenderer()]

    # Loggers are not cached: each invocation binds to the stderr current at that time
    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=False,
    )

    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level)
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(max(level, logging.WARNING))


def get_logger(name: str | None = None) -> structlog.stdlib.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


def bind_context(**kwargs: Any) -> None:
    structlog.contextvars.bind_contextvars(**kwargs)


def clear_context() -> None:
    structlog.contextvars.clear_contextvars()
