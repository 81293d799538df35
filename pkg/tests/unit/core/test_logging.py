"""
SF-Loc Unit Tests - Structured logging

Covers:
- level filtering and JSON output on stderr
- run context binding and clearing
- third-party DEBUG chatter kept quiet
"""
import json
import logging

import pytest

from sfloc.core.logging import (
    QUIET_LOGGERS,
    bind_context,
    clear_context,
    configure_logging,
    get_logger,
)


pytestmark = pytest.mark.unit


class TestConfigureLogging:
    """JSON events on stderr."""

    def test_filters_below_level(self, capsys):
        configure_logging("WARNING", is_development=False)
        log = get_logger("sfloc.test")
        log.info("dropped")
        log.warning("kept", frames=3)
        captured = capsys.readouterr()
        assert captured.out == ""
        (line,) = captured.err.strip().splitlines()
        event = json.loads(line)
        assert event["event"] == "kept"
        assert event["frames"] == 3
        assert event["level"] == "warning"

    def test_bound_context_until_cleared(self, capsys):
        configure_logging("INFO", is_development=False)
        log = get_logger("sfloc.test")
        bind_context(command="map")
        log.info("with_context")
        clear_context()
        log.info("without_context")
        first, second = (json.loads(x) for x in capsys.readouterr().err.strip().splitlines())
        assert first["command"] == "map"
        assert "command" not in second

    def test_third_party_debug_quiet(self):
        configure_logging("DEBUG", is_development=True)
        for name in QUIET_LOGGERS:
            assert logging.getLogger(name).level == logging.WARNING
