"""Report artifacts: metrics and per-query error tables plus SVG plots.

SVG output is byte-stable: the hash salt is fixed and no date is written.
"""

import csv
import math
from collections.abc import Sequence
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from ..core.logging import get_logger  # noqa: E402
from .metrics import (  # noqa: E402
    AVAILABILITY_THRESHOLDS_M,
    RECALL_DISTANCES_M,
    EvalRecord,
    Metrics,
)

logger = get_logger(__name__)

SVG_HASH_SALT = "sfloc-report"

METRICS_HEADER = [
    "method",
    "queries",
    *(f"recall@{d:g}m" for d in RECALL_DISTANCES_M),
    "coarse_rmse_m",
    *(f"avail@{e:g}m" for e in AVAILABILITY_THRESHOLDS_M),
    "fine_rmse_m",
]

ERRORS_HEADER = ["t", "method", "fine_mode", "retrieval_dist_m", "fine_err_m"]


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.6f}"


def metrics_row(m: Metrics) -> list[str]:
    return [
        m.method,
        str(m.queries),
        *(_fmt(m.recall.get(d)) for d in RECALL_DISTANCES_M),
        _fmt(m.coarse_rmse),
        *(_fmt(m.availability.get(e)) for e in AVAILABILITY_THRESHOLDS_M),
        _fmt(m.fine_rmse),
    ]


def write_metrics_csv(metrics: Sequence[Metrics], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(METRICS_HEADER)
        writer.writerows(metrics_row(m) for m in metrics)
    return path


def write_errors_csv(records: Sequence[EvalRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(ERRORS_HEADER)
        for r in records:
            writer.writerow(
                [f"{r.t:.6f}", r.method, r.fine_mode, _fmt(r.retrieval_dist_m), _fmt(r.fine_err_m)]
            )
    return path


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _upper(values: Sequence[float]) -> float:
    finite = [v for v in values if math.isfinite(v)]
    return max(finite) * 1.05 if finite and max(finite) > 0 else 1.0


def plot_error_vs_time(records: Sequence[EvalRecord], path: str | Path) -> Path:
    """Fine horizontal error against query time; failed queries are left out."""
    fig, ax = plt.subplots(figsize=(8, 3.5))
    points = [(r.t, r.fine_err_m) for r in records if math.isfinite(r.fine_err_m)]
    if points:
        t, err = zip(*points, strict=True)
        ax.plot(t, err, linewidth=0.8, color="tab:blue")
        ax.set_xlim(min(t), max(t) if max(t) > min(t) else min(t) + 1.0)
    ax.set_ylim(0.0, _upper([e for _, e in points]))
    ax.set_xlabel("time [s]")
    ax.set_ylabel("horizontal error [m]")
    ax.grid(True, linewidth=0.3)
    return _save(fig, Path(path))


def plot_recall_bars(metrics: Sequence[Metrics], path: str | Path) -> Path:
    """Grouped recall@d bars, one group per distance and one bar per method."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    width = 0.8 / max(len(metrics), 1)
    for i, m in enumerate(metrics):
        xs = [j + i * width for j in range(len(RECALL_DISTANCES_M))]
        heights = [100.0 * m.recall.get(d, 0.0) for d in RECALL_DISTANCES_M]
        ax.bar(xs, heights, width, label=m.method)
    ax.set_xticks(
        [j + 0.5 * width * (len(metrics) - 1) for j in range(len(RECALL_DISTANCES_M))],
        [f"{d:g} m" for d in RECALL_DISTANCES_M],
    )
    ax.set_ylim(0.0, 100.0)
    ax.set_ylabel("recall [%]")
    if metrics:
        ax.legend(loc="lower right", fontsize="small")
    return _save(fig, Path(path))


def write_report(
    metrics: Sequence[Metrics], records: Sequence[EvalRecord], out_dir: str | Path
) -> list[Path]:
    """Write metrics.csv, errors.csv, error_vs_time.svg and recall_bars.svg."""
    out = Path(out_dir)
    paths = [
        write_metrics_csv(metrics, out / "metrics.csv"),
        write_errors_csv(records, out / "errors.csv"),
        plot_error_vs_time(records, out / "error_vs_time.svg"),
        plot_recall_bars(metrics, out / "recall_bars.svg"),
    ]
    logger.info("report_written", path=str(out), files=[p.name for p in paths])
    return paths
