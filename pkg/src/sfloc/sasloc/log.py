"""Retrieval log CSV: t,frame_id,sas,margin,method,gt_dist_m."""

import csv
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from ..core.errors import LogFormatError

RETRIEVAL_HEADER = ["t", "frame_id", "sas", "margin", "method", "gt_dist_m"]


@dataclass(frozen=True)
class RetrievalLogRow:
    t: float
    frame_id: int
    sas: float
    margin: float
    method: str
    gt_dist_m: float


def write_retrieval_log(rows: Iterable[RetrievalLogRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RETRIEVAL_HEADER)
        for r in rows:
            writer.writerow(
                [
                    f"{r.t:.6f}",
                    r.frame_id,
                    f"{r.sas:.9g}",
                    f"{r.margin:.9g}",
                    r.method,
                    f"{r.gt_dist_m:.6f}",
                ]
            )
    return path


def read_retrieval_log(path: str | Path) -> list[RetrievalLogRow]:
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != RETRIEVAL_HEADER:
            raise LogFormatError(f"unexpected retrieval log header in {path}")
        return [
            RetrievalLogRow(
                t=float(row["t"]),
                frame_id=int(row["frame_id"]),
                sas=float(row["sas"]),
                margin=float(row["margin"]),
                method=row["method"],
                gt_dist_m=float(row["gt_dist_m"]),
            )
            for row in reader
        ]
