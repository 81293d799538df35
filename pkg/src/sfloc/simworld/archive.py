"""Session archive: CSV sensor streams plus a binary keyframe file."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core.errors import LogFormatError
from ..core.logging import get_logger
from ..fgraph import NavState, export_trajectory_csv, read_trajectory_csv
from ..mapstore import VisualStructureFrame, decode_frames, encode_frames
from .providers import encode_frame_id
from .session import SessionStreams

logger = get_logger(__name__)

IMU_HEADER = ["t", "ax", "ay", "az", "gx", "gy", "gz", "dt"]
GNSS_HEADER = ["t", "x", "y", "z", "outlier"]


@dataclass(eq=False)
class SessionArchive:
    imu: np.ndarray
    gnss: np.ndarray
    gt: list[NavState]
    keyframes: list[VisualStructureFrame]


def _write_rows(path: Path, header: list[str], rows: np.ndarray) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(f"{v:.17g}" for v in row)


def _read_rows(path: Path, header: list[str]) -> np.ndarray:
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        if next(reader) != header:
            raise LogFormatError(f"unexpected header in {path}")
        rows = [[float(v) for v in row] for row in reader]
    return np.array(rows, dtype=np.float64).reshape(-1, len(header))


def keyframe_records(streams: SessionStreams) -> list[VisualStructureFrame]:
    """Ground-truth keyframes as map-frame records (no payload, zero score)."""
    return [
        VisualStructureFrame.from_grid(
            encode_frame_id(streams.session, i),
            float(streams.keyframe_times[i]),
            streams.camera_poses[i],
            streams.grids[i],
            streams.descriptors[i],
            session=streams.session,
        )
        for i in range(len(streams))
    ]


def write_session_archive(streams: SessionStreams, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    imu = streams.imu
    _write_rows(
        out / "imu.csv",
        IMU_HEADER,
        np.column_stack((imu.t, imu.accel, imu.gyro, np.full(len(imu), imu.dt))),
    )
    gnss = np.array(
        [[fix.t, *fix.position, float(fix.outlier)] for fix in streams.gnss]
    ).reshape(-1, len(GNSS_HEADER))
    _write_rows(out / "gnss.csv", GNSS_HEADER, gnss)
    export_trajectory_csv(streams.states, out / "gt.csv")
    (out / "keyframes.bin").write_bytes(
        encode_frames(keyframe_records(streams), streams.trajectory.length)
    )
    logger.info("session_archived", session=streams.session, path=str(out))
    return out


def read_session_archive(in_dir: str | Path) -> SessionArchive:
    src = Path(in_dir)
    frames, _ = decode_frames((src / "keyframes.bin").read_bytes())
    return SessionArchive(
        imu=_read_rows(src / "imu.csv", IMU_HEADER),
        gnss=_read_rows(src / "gnss.csv", GNSS_HEADER),
        gt=read_trajectory_csv(src / "gt.csv"),
        keyframes=frames,
    )
