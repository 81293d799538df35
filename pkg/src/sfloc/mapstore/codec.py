"""Binary map file: little-endian header, frame records and a CRC32 trailer.

Layout:
    header   magic "SFM1", version u32, frame_count u64, route_length_m f64, 8 reserved
    frame    id u64, timestamp f64, pose 7xf64, session u32, score f32,
             descriptor_dim u32 + dim x f32,
             rows u16, cols u16, scale f32, offset f32, rows*cols x u16,
             payload_len u32 + payload bytes
    trailer  CRC32 of every preceding byte, u32
"""

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..core.errors import (
    BadMagicError,
    ChecksumMismatchError,
    MapIoError,
    UnsupportedVersionError,
)
from ..core.logging import get_logger
from ..geom import CameraIntrinsics, Pose
from .frame import QuantizedDepth, VisualStructureFrame
from .store import StructureFrameMap

logger = get_logger(__name__)

MAGIC = b"SFM1"
VERSION = 1

HEADER = struct.Struct("<4sIQd8x")
RECORD_HEAD = struct.Struct("<Qd7dIfI")
GRID_HEAD = struct.Struct("<HHff")
PAYLOAD_HEAD = struct.Struct("<I")
TRAILER = struct.Struct("<I")

# Fixed bytes per frame outside payload, descriptor values and depth grid
RECORD_OVERHEAD = RECORD_HEAD.size + 4 + PAYLOAD_HEAD.size


def encode_frames(frames: list[VisualStructureFrame], route_length_m: float = 0.0) -> bytes:
    parts = [HEADER.pack(MAGIC, VERSION, len(frames), route_length_m)]
    for f in frames:
        parts.append(
            RECORD_HEAD.pack(
                f.id,
                f.timestamp,
                *f.pose.rotation,
                *f.pose.translation,
                f.session,
                f.score,
                f.descriptor.size,
            )
        )
        parts.append(f.descriptor.astype("<f4").tobytes())
        parts.append(GRID_HEAD.pack(f.depth.rows, f.depth.cols, f.depth.scale, f.depth.offset))
        parts.append(f.depth.codes.astype("<u2").tobytes())
        parts.append(PAYLOAD_HEAD.pack(len(f.payload)))
        parts.append(f.payload)
    body = b"".join(parts)
    return body + TRAILER.pack(zlib.crc32(body))


def encode_map(sfmap: StructureFrameMap) -> bytes:
    return encode_frames(sfmap.frames_in_order(), sfmap.route_length_m)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ChecksumMismatchError("record runs past the end of the file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: struct.Struct) -> tuple:
        return fmt.unpack(self.take(fmt.size))


def decode_frames(data: bytes) -> tuple[list[VisualStructureFrame], float]:
    """Parse a map file image into frames and the route length.

    Raises:
        BadMagicError: If the file does not start with the map magic.
        UnsupportedVersionError: If the version field is not 1.
        ChecksumMismatchError: If the file is truncated, padded or corrupted.
    """
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    if len(data) >= 8:
        (version,) = struct.unpack_from("<I", data, 4)
        if version != VERSION:
            raise UnsupportedVersionError(f"map version {version} is not supported")
    if len(data) < HEADER.size + TRAILER.size:
        raise ChecksumMismatchError(f"file of {len(data)} bytes is shorter than a header")
    body, trailer = data[: -TRAILER.size], data[-TRAILER.size :]
    (stored,) = TRAILER.unpack(trailer)
    if zlib.crc32(body) != stored:
        raise ChecksumMismatchError("CRC32 mismatch")

    reader = _Reader(body)
    _, _, count, route_length = reader.unpack(HEADER)
    frames = []
    for _ in range(count):
        head = reader.unpack(RECORD_HEAD)
        frame_id, timestamp = head[0], head[1]
        pose = Pose.from_bytes(struct.pack("<7d", *head[2:9]))
        session, score, dim = head[9], head[10], head[11]
        descriptor = np.frombuffer(reader.take(4 * dim), dtype="<f4").astype(np.float32)
        rows, cols, scale, offset = reader.unpack(GRID_HEAD)
        codes = np.frombuffer(reader.take(2 * rows * cols), dtype="<u2").astype(np.uint16)
        (payload_len,) = reader.unpack(PAYLOAD_HEAD)
        payload = reader.take(payload_len)
        try:
            frame = VisualStructureFrame(
                id=frame_id,
                timestamp=timestamp,
                pose=pose,
                depth=QuantizedDepth(
                    codes.reshape(rows, cols), np.float32(scale), np.float32(offset)
                ),
                descriptor=descriptor,
                payload=payload,
                score=score,
                session=session,
            )
        except ValueError as e:
            raise ChecksumMismatchError(f"frame {frame_id} failed validation: {e}") from e
        frames.append(frame)
    if reader.pos != len(body):
        raise ChecksumMismatchError(f"{len(body) - reader.pos} trailing bytes after last frame")
    return frames, route_length


def serialize(sfmap: StructureFrameMap, path: str | Path) -> int:
    """Write the map file; returns its size in bytes.

    Raises:
        MapIoError: If the file cannot be written.
    """
    data = encode_map(sfmap)
    try:
        Path(path).write_bytes(data)
    except OSError as e:
        raise MapIoError(f"cannot write map {path}: {e}") from e
    logger.info("map_serialized", path=str(path), frames=len(sfmap), size_bytes=len(data))
    return len(data)


def deserialize(
    path: str | Path,
    k: CameraIntrinsics | None = None,
    xi: float | None = None,
) -> StructureFrameMap:
    """Read a map file and rebuild its spatial index.

    Raises:
        MapIoError: If the file cannot be read.
        BadMagicError, UnsupportedVersionError, ChecksumMismatchError: On a bad file.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise MapIoError(f"cannot read map {path}: {e}") from e
    frames, route_length = decode_frames(data)
    sfmap = StructureFrameMap(k=k, route_length_m=route_length)
    if xi is not None:
        sfmap.xi = xi
    sfmap.add_unchecked(frames)
    logger.info("map_loaded", path=str(path), frames=len(sfmap))
    return sfmap


@dataclass(frozen=True)
class SizeReport:
    frames: int
    header_bytes: int
    trailer_bytes: int
    payload_bytes: int
    descriptor_bytes: int
    depth_bytes: int
    overhead_bytes: int
    route_length_m: float

    @property
    def total_bytes(self) -> int:
        return (
            self.header_bytes
            + self.trailer_bytes
            + self.payload_bytes
            + self.descriptor_bytes
            + self.depth_bytes
            + self.overhead_bytes
        )

    @property
    def bytes_per_km(self) -> float | None:
        if self.route_length_m <= 0.0:
            return None
        return self.total_bytes / (self.route_length_m / 1000.0)


def size_report(sfmap: StructureFrameMap) -> SizeReport:
    """Exact byte accounting of the serialized map, by category."""
    frames = sfmap.frames_in_order()
    return SizeReport(
        frames=len(frames),
        header_bytes=HEADER.size,
        trailer_bytes=TRAILER.size,
        payload_bytes=sum(len(f.payload) for f in frames),
        descriptor_bytes=sum(4 * f.descriptor.size for f in frames),
        depth_bytes=sum(2 * f.depth.rows * f.depth.cols + 8 for f in frames),
        overhead_bytes=RECORD_OVERHEAD * len(frames),
        route_length_m=sfmap.route_length_m,
    )
