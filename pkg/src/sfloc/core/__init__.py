"""Core configuration, logging and errors."""

from .errors import ConfigError, SfLocError
from .logging import bind_context, clear_context, configure_logging, get_logger

__all__ = [
    "ConfigError",
    "SfLocError",
    "bind_context",
    "clear_context",
    "configure_logging",
    "get_logger",
]
