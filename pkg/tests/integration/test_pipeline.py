"""
SF-Loc Integration Tests - Map, localize, evaluate, report

Covers:
- map building and its size report
- byte-identical maps from identical settings
- coarse-to-fine localization logs
- metrics and report artifacts from the logs
"""
import math

import pytest

from sfloc.cli.pipeline import (
    FINE_LOG,
    GT_LOG,
    METRICS_CSV,
    RETRIEVAL_LOG,
    RetrievalMode,
    cmd_eval,
    cmd_localize,
    cmd_map,
    cmd_report,
)
from sfloc.cli.report import METRICS_HEADER
from sfloc.fgraph import read_trajectory_csv
from sfloc.fineloc import FINE_HEADER, FineMode, read_fine_log
from sfloc.mapstore import InsertKind, deserialize
from sfloc.sasloc import RETRIEVAL_HEADER, read_retrieval_log


pytestmark = pytest.mark.integration

# 100 m at 5 m/s, one keyframe and one query per second
KEYFRAMES = 21


@pytest.fixture
def map_file(straight_settings, tmp_path):
    return cmd_map(straight_settings, tmp_path / "map.sfm")


@pytest.fixture
def logs(straight_settings, map_file, tmp_path):
    return cmd_localize(straight_settings, map_file.path, tmp_path / "run")


# =============================================================================
# Mapping
# =============================================================================

class TestMapCommand:
    """sfloc map."""

    def test_writes_map(self, map_file):
        assert map_file.path.is_file()
        assert map_file.size_bytes == map_file.path.stat().st_size
        assert map_file.report.total_bytes == map_file.size_bytes

    def test_every_keyframe_decided(self, map_file):
        decisions = map_file.decisions
        assert sum(decisions.values()) == KEYFRAMES
        assert decisions[InsertKind.ADDED] == map_file.report.frames
        assert 2 <= map_file.report.frames < KEYFRAMES

    def test_frames_spread_along_route(self, map_file):
        """Stored frames keep increasing x along the straight drive."""
        sfmap = deserialize(map_file.path)
        xs = [f.pose.translation[0] for f in sfmap.frames_in_order()]
        assert xs == sorted(xs)
        assert sfmap.route_length_m == pytest.approx(100.0)

    def test_deterministic(self, straight_settings, map_file, tmp_path):
        again = cmd_map(straight_settings, tmp_path / "again.sfm")
        assert again.path.read_bytes() == map_file.path.read_bytes()

    def test_lower_threshold_keeps_fewer_frames(self, straight_settings, tmp_path):
        strict = straight_settings.model_copy(update={"covis_xi": 0.2})
        loose = straight_settings.model_copy(update={"covis_xi": 0.6})
        few = cmd_map(strict, tmp_path / "strict.sfm").report.frames
        many = cmd_map(loose, tmp_path / "loose.sfm").report.frames
        assert few <= many


# =============================================================================
# Localization
# =============================================================================

class TestLocalizeCommand:
    """sfloc localize."""

    def test_log_files(self, logs, tmp_path):
        out = tmp_path / "run"
        assert logs.retrieval_log == out / RETRIEVAL_LOG
        assert logs.fine_log == out / FINE_LOG
        assert logs.gt_log == out / GT_LOG
        assert logs.retrieval_log.read_text().splitlines()[0] == ",".join(RETRIEVAL_HEADER)
        assert logs.fine_log.read_text().splitlines()[0] == ",".join(FINE_HEADER)

    def test_one_row_per_query_in_time_order(self, logs):
        retrieval = read_retrieval_log(logs.retrieval_log)
        fine = read_fine_log(logs.fine_log)
        gt = read_trajectory_csv(logs.gt_log)
        assert len(retrieval) == len(fine) == len(gt) == KEYFRAMES
        times = [r.t for r in retrieval]
        assert times == sorted(times)
        assert [r.t for r in fine] == times

    def test_labels(self, logs):
        assert {r.method for r in read_retrieval_log(logs.retrieval_log)} == {"sas"}
        assert {r.mode for r in read_fine_log(logs.fine_log)} == {"fgo2"}

    def test_cross_session_retrieval_stays_near(self, logs):
        """A second drive down the same street retrieves nearby frames."""
        recalled = [r.retrieval_dist_m <= 20.0 for r in logs.records]
        assert sum(recalled) >= 0.7 * len(recalled)

    def test_fine_errors_are_finite_for_most_queries(self, logs):
        finite = [math.isfinite(r.fine_err_m) for r in logs.records]
        assert sum(finite) >= 0.5 * len(finite)

    def test_pnp_only_changes_fine_stage(self, straight_settings, map_file, logs, tmp_path):
        pnp = cmd_localize(
            straight_settings, map_file.path, tmp_path / "pnp", fine_mode=FineMode.PNP
        )
        assert pnp.retrieval_log.read_bytes() == logs.retrieval_log.read_bytes()
        assert {r.mode for r in read_fine_log(pnp.fine_log)} == {"pnp"}

    def test_single_frame_mode(self, straight_settings, map_file, tmp_path):
        single = cmd_localize(
            straight_settings, map_file.path, tmp_path / "single", mode=RetrievalMode.SINGLE
        )
        assert {r.method for r in single.records} == {"single"}


# =============================================================================
# Evaluation and report
# =============================================================================

class TestEvalAndReport:
    """sfloc eval and sfloc report on the localization logs."""

    def test_eval_writes_metrics(self, logs, tmp_path):
        out = tmp_path / "run"
        metrics, records = cmd_eval(out, out)
        assert [m.method for m in metrics] == ["sas+fgo2"]
        assert metrics[0].queries == KEYFRAMES
        assert len(records) == KEYFRAMES
        lines = (out / METRICS_CSV).read_text().splitlines()
        assert lines[0] == ",".join(METRICS_HEADER)
        assert lines[1].startswith("sas+fgo2,21,")

    def test_eval_matches_in_memory_records(self, logs, tmp_path):
        """Records rebuilt from disk agree with the ones localize returned."""
        _, records = cmd_eval(tmp_path / "run")
        for got, expected in zip(records, logs.records, strict=True):
            assert got.t == pytest.approx(expected.t)
            assert got.retrieval_dist_m == pytest.approx(expected.retrieval_dist_m, abs=1e-5)
            assert got.gt_xy == pytest.approx(expected.gt_xy, abs=1e-5)

    def test_report_is_reproducible(self, logs, tmp_path):
        metrics, records = cmd_eval(tmp_path / "run")
        first = cmd_report(metrics, records, tmp_path / "a")
        second = cmd_report(metrics, records, tmp_path / "b")
        assert len(first) == 4
        for a, b in zip(first, second, strict=True):
            assert a.read_bytes() == b.read_bytes()
