"""Recall, availability and filtered RMSE over per-query evaluation records."""

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import EmptyLogError, InvalidRecordError
from ..fgraph import NavState
from ..fineloc import FineLogRow
from ..sasloc import RetrievalLogRow

RECALL_DISTANCES_M = (5.0, 10.0, 20.0)
AVAILABILITY_THRESHOLDS_M = (0.5, 1.0, 5.0)

# Coarse RMSE only counts retrievals closer than this
COARSE_RMSE_CUTOFF_M = 100.0

# Fine RMSE only counts queries recalled within the first and solved within the second
FINE_RECALL_CUTOFF_M = 20.0
FINE_ERROR_CUTOFF_M = 5.0

# Timestamps are joined across logs at microsecond resolution
TIME_DECIMALS = 6


@dataclass(frozen=True)
class EvalRecord:
    """One query: GT position, retrieved-frame distance and fine horizontal error.

    A failed stage is recorded as an infinite distance or error.
    """

    t: float
    gt_xy: tuple[float, float]
    retrieval_dist_m: float
    fine_err_m: float = math.inf
    method: str = ""
    fine_mode: str = ""

    def __post_init__(self) -> None:
        if not self.retrieval_dist_m >= 0.0:
            raise InvalidRecordError(
                f"retrieval distance must be non-negative, got {self.retrieval_dist_m}"
            )
        if not self.fine_err_m >= 0.0:
            raise InvalidRecordError(f"fine error must be non-negative, got {self.fine_err_m}")


@dataclass(frozen=True)
class Metrics:
    method: str
    queries: int
    recall: dict[float, float] = field(default_factory=dict)
    coarse_rmse: float | None = None
    availability: dict[float, float] = field(default_factory=dict)
    fine_rmse: float | None = None


def horizontal_error(estimate: np.ndarray, truth: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(estimate)[:2] - np.asarray(truth)[:2]))


def recall_at(records: Sequence[EvalRecord], d: float) -> float:
    """Fraction of queries whose retrieved frame lies within d meters of GT."""
    if not records:
        raise EmptyLogError("recall over an empty log")
    return sum(r.retrieval_dist_m <= d for r in records) / len(records)


def availability_at(records: Sequence[EvalRecord], e: float) -> float:
    """Fraction of queries whose fine horizontal error is below e meters."""
    if not records:
        raise EmptyLogError("availability over an empty log")
    return sum(r.fine_err_m < e for r in records) / len(records)


def _rmse(values: Iterable[float]) -> float | None:
    arr = np.fromiter(values, dtype=np.float64)
    if arr.size == 0:
        return None
    return float(np.sqrt(np.mean(arr * arr)))


def coarse_rmse(
    records: Sequence[EvalRecord], cutoff: float = COARSE_RMSE_CUTOFF_M
) -> float | None:
    return _rmse(r.retrieval_dist_m for r in records if r.retrieval_dist_m < cutoff)


def fine_rmse(
    records: Sequence[EvalRecord],
    recall_cutoff: float = FINE_RECALL_CUTOFF_M,
    error_cutoff: float = FINE_ERROR_CUTOFF_M,
) -> float | None:
    return _rmse(
        r.fine_err_m
        for r in records
        if r.retrieval_dist_m < recall_cutoff and r.fine_err_m < error_cutoff
    )


def compute_metrics(
    records: Sequence[EvalRecord], method: str = "", with_fine: bool = True
) -> Metrics:
    """All metrics of one run.

    Raises:
        EmptyLogError: If records is empty.
    """
    if not records:
        raise EmptyLogError(f"no records to evaluate for {method or 'run'}")
    return Metrics(
        method=method or records[0].method,
        queries=len(records),
        recall={d: recall_at(records, d) for d in RECALL_DISTANCES_M},
        coarse_rmse=coarse_rmse(records),
        availability=(
            {e: availability_at(records, e) for e in AVAILABILITY_THRESHOLDS_M}
            if with_fine
            else {}
        ),
        fine_rmse=fine_rmse(records) if with_fine else None,
    )


def _tkey(t: float) -> float:
    return round(t, TIME_DECIMALS)


def records_from_logs(
    retrieval: Sequence[RetrievalLogRow],
    fine: Sequence[FineLogRow],
    gt: Sequence[NavState],
) -> list[EvalRecord]:
    """Join the logs on timestamp; queries missing from the fine log count as failed.

    Raises:
        EmptyLogError: If the retrieval log is empty.
    """
    if not retrieval:
        raise EmptyLogError("retrieval log has no rows")
    fine_by_t = {_tkey(row.t): row for row in fine}
    gt_by_t = {_tkey(s.timestamp): s for s in gt}
    records = []
    for row in retrieval:
        key = _tkey(row.t)
        state = gt_by_t.get(key)
        xy = (math.nan, math.nan) if state is None else tuple(state.position[:2].tolist())
        fine_row = fine_by_t.get(key)
        records.append(
            EvalRecord(
                t=row.t,
                gt_xy=xy,  # type: ignore[arg-type]
                retrieval_dist_m=row.gt_dist_m,
                fine_err_m=math.inf if fine_row is None else fine_row.err_m,
                method=row.method,
                fine_mode=fine_row.mode if fine_row is not None else "",
            )
        )
    return records
