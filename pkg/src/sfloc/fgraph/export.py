"""Trajectory CSV export."""

import csv
from collections.abc import Iterable
from pathlib import Path

from ..core.errors import LogFormatError
from .state import NavState

TRAJECTORY_HEADER = [
    "t", "qw", "qx", "qy", "qz", "tx", "ty", "tz",
    "vx", "vy", "vz", "bax", "bay", "baz", "bgx", "bgy", "bgz",
]  # fmt: skip


def export_trajectory_csv(states: Iterable[NavState], path: Path | str) -> Path:
    """Write one row per state, 17 significant digits, ordered as given."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for state in states:
            writer.writerow(f"{value:.17g}" for value in state.as_row())
    return path


def read_trajectory_csv(path: Path | str) -> list[NavState]:
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        if header != TRAJECTORY_HEADER:
            raise LogFormatError(f"unexpected trajectory header in {path}")
        return [NavState.from_row([float(v) for v in row]) for row in reader]
