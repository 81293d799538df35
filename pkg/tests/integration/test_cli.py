"""
SF-Loc Integration Tests - Command line

Covers:
- sfloc map|localize|eval|report end to end
- exit codes for configuration and runtime failures
"""
import pytest
from click.testing import CliRunner

from sfloc.cli.main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, cli
from sfloc.fgraph import TRAJECTORY_HEADER
from sfloc.sasloc import RETRIEVAL_HEADER


pytestmark = pytest.mark.integration

CONFIG = """\
SCENARIO=straight
SEED=3
ESTIMATE_MAP=false
MAP_SESSIONS=1
QUERY_SESSION=1
KEYFRAME_RATE_HZ=1.0
SAS_WINDOW=3
FINE_FRAMES=2
MATCHES_PER_PAIR=40
RANSAC_ITERATIONS=50
SOLVER_MAX_ITERS=15
LOG_LEVEL=WARNING
"""


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "run.env"
    path.write_text(CONFIG)
    return path


def _invoke(runner: CliRunner, *args):
    return runner.invoke(cli, [str(a) for a in args])


# =============================================================================
# Happy path
# =============================================================================

class TestCommands:
    """All four commands against one workspace."""

    def test_map_localize_eval_report(self, runner, config, tmp_path):
        map_path = tmp_path / "map.sfm"
        out = tmp_path / "run"

        result = _invoke(runner, "map", "--config", config, "--out", map_path)
        assert result.exit_code == EXIT_OK, result.output
        assert map_path.is_file()
        assert "Map size" in result.output

        result = _invoke(
            runner, "localize", "--config", config, "--map", map_path, "--out", out
        )
        assert result.exit_code == EXIT_OK, result.output
        assert "21 queries" in result.output

        result = _invoke(runner, "eval", "--config", config, "--out", out)
        assert result.exit_code == EXIT_OK, result.output
        assert (out / "metrics.csv").is_file()

        result = _invoke(runner, "report", "--config", config, "--out", out)
        assert result.exit_code == EXIT_OK, result.output
        assert (out / "error_vs_time.svg").is_file()
        assert (out / "recall_bars.svg").is_file()

    def test_seed_and_xi_options(self, runner, config, tmp_path):
        """Command-line values override the config file."""
        a, b = tmp_path / "a.sfm", tmp_path / "b.sfm"
        assert _invoke(runner, "map", "--config", config, "--seed", 5, "--out", a).exit_code == 0
        result = _invoke(runner, "map", "--config", config, "--xi", 0.2, "--out", b)
        assert result.exit_code == EXIT_OK
        assert a.read_bytes() != b.read_bytes()

    def test_help(self, runner):
        result = _invoke(runner, "--help")
        assert result.exit_code == EXIT_OK
        for command in ("map", "localize", "eval", "report"):
            assert command in result.output


# =============================================================================
# Failures
# =============================================================================

class TestExitCodes:
    """ConfigError exits 1; map, log and I/O failures exit 2."""

    def test_missing_config_file(self, runner, tmp_path):
        result = _invoke(
            runner, "map", "--config", tmp_path / "nope.env", "--out", tmp_path / "m.sfm"
        )
        assert result.exit_code == EXIT_CONFIG

    def test_invalid_config_value(self, runner, tmp_path):
        path = tmp_path / "bad.env"
        path.write_text("COVIS_XI=2.0\n")
        result = _invoke(runner, "map", "--config", path, "--out", tmp_path / "m.sfm")
        assert result.exit_code == EXIT_CONFIG

    def test_invalid_xi_option(self, runner, config, tmp_path):
        result = _invoke(
            runner, "map", "--config", config, "--xi", 1.5, "--out", tmp_path / "m.sfm"
        )
        assert result.exit_code == EXIT_CONFIG

    def test_corrupt_map(self, runner, config, tmp_path):
        map_path = tmp_path / "map.sfm"
        assert _invoke(runner, "map", "--config", config, "--out", map_path).exit_code == 0
        data = bytearray(map_path.read_bytes())
        data[40] ^= 0xFF
        map_path.write_bytes(bytes(data))
        result = _invoke(
            runner, "localize", "--config", config, "--map", map_path, "--out", tmp_path / "run"
        )
        assert result.exit_code == EXIT_RUNTIME

    def test_not_a_map(self, runner, config, tmp_path):
        path = tmp_path / "notes.txt"
        path.write_text("not a map\n" * 10)
        result = _invoke(
            runner, "localize", "--config", config, "--map", path, "--out", tmp_path / "run"
        )
        assert result.exit_code == EXIT_RUNTIME

    def test_empty_retrieval_log(self, runner, config, tmp_path):
        out = tmp_path / "run"
        out.mkdir()
        (out / "retrieval.csv").write_text(",".join(RETRIEVAL_HEADER) + "\n")
        (out / "gt.csv").write_text(",".join(TRAJECTORY_HEADER) + "\n")
        result = _invoke(runner, "eval", "--config", config, "--out", out)
        assert result.exit_code == EXIT_RUNTIME

    @pytest.mark.parametrize("command", ["eval", "report"])
    def test_malformed_retrieval_header(self, runner, config, tmp_path, command):
        out = tmp_path / "run"
        out.mkdir()
        (out / "retrieval.csv").write_text("bogus,header\n1.0,2\n")
        (out / "gt.csv").write_text(",".join(TRAJECTORY_HEADER) + "\n")
        result = _invoke(runner, command, "--config", config, "--out", out)
        assert result.exit_code == EXIT_RUNTIME

    def test_malformed_trajectory_header(self, runner, config, tmp_path):
        out = tmp_path / "run"
        out.mkdir()
        rows = [",".join(RETRIEVAL_HEADER), "0.0,1,0.9,0.1,sas,1.0"]
        (out / "retrieval.csv").write_text("\n".join(rows) + "\n")
        (out / "gt.csv").write_text("t,x,y\n0.0,0.0,0.0\n")
        result = _invoke(runner, "eval", "--config", config, "--out", out)
        assert result.exit_code == EXIT_RUNTIME

    def test_missing_logs(self, runner, config, tmp_path):
        result = _invoke(runner, "eval", "--config", config, "--out", tmp_path / "empty")
        assert result.exit_code == EXIT_RUNTIME
