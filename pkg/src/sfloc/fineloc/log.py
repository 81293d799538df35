"""Fine result log CSV: t,tx,ty,tz,err_m,inliers,n_frames,mode."""

import csv
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from ..core.errors import LogFormatError

FINE_HEADER = ["t", "tx", "ty", "tz", "err_m", "inliers", "n_frames", "mode"]


@dataclass(frozen=True)
class FineLogRow:
    t: float
    tx: float
    ty: float
    tz: float
    err_m: float
    inliers: int
    n_frames: int
    mode: str


def write_fine_log(rows: Iterable[FineLogRow], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(FINE_HEADER)
        for r in rows:
            writer.writerow(
                [
                    f"{r.t:.6f}",
                    f"{r.tx:.6f}",
                    f"{r.ty:.6f}",
                    f"{r.tz:.6f}",
                    f"{r.err_m:.6f}",
                    r.inliers,
                    r.n_frames,
                    r.mode,
                ]
            )
    return path


def read_fine_log(path: str | Path) -> list[FineLogRow]:
    with Path(path).open(newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != FINE_HEADER:
            raise LogFormatError(f"unexpected fine log header in {path}")
        return [
            FineLogRow(
                t=float(row["t"]),
                tx=float(row["tx"]),
                ty=float(row["ty"]),
                tz=float(row["tz"]),
                err_m=float(row["err_m"]),
                inliers=int(row["inliers"]),
                n_frames=int(row["n_frames"]),
                mode=row["mode"],
            )
            for row in reader
        ]
