"""
SF-Loc Unit Tests - Evaluation metrics

Covers:
- recall@d and availability@e boundaries
- filtered coarse and fine RMSE
- joining retrieval, fine and ground-truth logs
"""
import math

import numpy as np
import pytest

from sfloc.cli.metrics import (
    EvalRecord,
    availability_at,
    coarse_rmse,
    compute_metrics,
    fine_rmse,
    horizontal_error,
    recall_at,
    records_from_logs,
)
from sfloc.core.errors import EmptyLogError
from sfloc.fgraph import NavState
from sfloc.fineloc import FineLogRow
from sfloc.geom import Pose
from sfloc.sasloc import RetrievalLogRow


pytestmark = pytest.mark.unit


@pytest.fixture
def records() -> list[EvalRecord]:
    """Five queries, one retrieved 150 m away and two exactly on thresholds."""
    rows = [(3.0, 0.4), (8.0, 0.9), (15.0, 3.0), (150.0, math.inf), (5.0, 1.0)]
    return [
        EvalRecord(t=float(i), gt_xy=(0.0, 0.0), retrieval_dist_m=d, fine_err_m=e, method="sas")
        for i, (d, e) in enumerate(rows)
    ]


class TestMetrics:
    """Hand-computed metric values."""

    def test_recall_inclusive(self, records):
        """A retrieval exactly d meters away counts as recalled."""
        assert recall_at(records, 5.0) == pytest.approx(0.4)
        assert recall_at(records, 10.0) == pytest.approx(0.6)
        assert recall_at(records, 20.0) == pytest.approx(0.8)

    def test_availability_strict(self, records):
        """An error exactly e meters counts as unavailable."""
        assert availability_at(records, 0.5) == pytest.approx(0.2)
        assert availability_at(records, 1.0) == pytest.approx(0.4)
        assert availability_at(records, 5.0) == pytest.approx(0.8)

    def test_coarse_rmse_drops_far_retrievals(self, records):
        assert coarse_rmse(records) == pytest.approx(math.sqrt((9 + 64 + 225 + 25) / 4))

    def test_fine_rmse_filters(self, records):
        expected = math.sqrt((0.16 + 0.81 + 9.0 + 1.0) / 4)
        assert fine_rmse(records) == pytest.approx(expected)

    def test_rmse_none_when_nothing_qualifies(self):
        far = [EvalRecord(0.0, (0.0, 0.0), 500.0)]
        assert coarse_rmse(far) is None
        assert fine_rmse(far) is None

    def test_compute_metrics(self, records):
        m = compute_metrics(records)
        assert m.method == "sas"
        assert m.queries == 5
        assert m.recall[20.0] == pytest.approx(0.8)
        assert m.availability[1.0] == pytest.approx(0.4)
        assert m.fine_rmse == pytest.approx(fine_rmse(records))

    def test_coarse_only(self, records):
        m = compute_metrics(records, method="single", with_fine=False)
        assert m.method == "single"
        assert m.availability == {}
        assert m.fine_rmse is None

    def test_empty_log(self):
        with pytest.raises(EmptyLogError):
            compute_metrics([])
        with pytest.raises(EmptyLogError):
            recall_at([], 5.0)
        with pytest.raises(EmptyLogError):
            availability_at([], 5.0)

    @pytest.mark.parametrize("dist,err", [(-1.0, 0.0), (math.nan, 0.0), (1.0, -0.5)])
    def test_invalid_record(self, dist, err):
        with pytest.raises(ValueError):
            EvalRecord(0.0, (0.0, 0.0), dist, err)

    def test_horizontal_error_ignores_height(self):
        assert horizontal_error(np.array([3.0, 4.0, 10.0]), np.zeros(3)) == 5.0


class TestLogJoin:
    """Records assembled from the on-disk logs."""

    def test_join_on_timestamp(self):
        retrieval = [
            RetrievalLogRow(t, 1, 0.5, 0.1, "sas", dist)
            for t, dist in ((0.0, 2.0), (1.0, 30.0), (2.0, 4.0))
        ]
        fine = [
            FineLogRow(0.0, 0.0, 0.0, 0.0, 0.3, 20, 3, "fgo"),
            FineLogRow(2.0000001, 0.0, 0.0, 0.0, 0.7, 18, 3, "fgo"),
        ]
        gt = [
            NavState(pose=Pose(translation=np.array([5.0 * t, 1.0, 1.5])), timestamp=t)
            for t in (0.0, 1.0, 2.0)
        ]
        records = records_from_logs(retrieval, fine, gt)
        assert [r.fine_err_m for r in records] == [0.3, math.inf, 0.7]
        assert records[1].gt_xy == (5.0, 1.0)
        assert records[2].fine_mode == "fgo"
        assert records[1].fine_mode == ""

    def test_missing_ground_truth(self):
        retrieval = [RetrievalLogRow(4.0, 1, 0.5, 0.1, "sas", 2.0)]
        (record,) = records_from_logs(retrieval, [], [])
        assert all(math.isnan(v) for v in record.gt_xy)

    def test_empty_retrieval_log(self):
        with pytest.raises(EmptyLogError):
            records_from_logs([], [], [])
