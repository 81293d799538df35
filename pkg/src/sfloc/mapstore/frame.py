"""Visual structure frames: pose, opaque image payload, 16-bit depth and descriptor."""

from dataclasses import dataclass, field

import numpy as np

from ..core.errors import InvalidFrameError
from ..dba import InverseDepthGrid
from ..geom import Pose

QUANT_LEVELS = 65535

# Descriptor norm tolerance
UNIT_NORM_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class QuantizedDepth:
    """Inverse depth stored as u16 codes: value = offset + scale * code."""

    codes: np.ndarray
    scale: np.float32
    offset: np.float32

    @property
    def rows(self) -> int:
        return int(self.codes.shape[0])

    @property
    def cols(self) -> int:
        return int(self.codes.shape[1])

    @property
    def step(self) -> float:
        return float(self.scale)

    @classmethod
    def quantize(cls, grid: InverseDepthGrid) -> "QuantizedDepth":
        lo = np.float32(grid.values.min())
        hi = np.float32(grid.values.max())
        scale = np.float32(max(float(hi - lo) / QUANT_LEVELS, 1e-12))
        codes = np.rint((grid.values - float(lo)) / float(scale))
        return cls(np.clip(codes, 0, QUANT_LEVELS).astype(np.uint16), scale, lo)

    def dequantize(self) -> InverseDepthGrid:
        values = float(self.offset) + float(self.scale) * self.codes.astype(np.float64)
        return InverseDepthGrid(values)


def synthetic_payload(frame_id: int, size: int) -> bytes:
    """Opaque stand-in for a compressed image of `size` bytes."""
    return np.random.default_rng(frame_id).bytes(size)


@dataclass(eq=False)
class VisualStructureFrame:
    """A geo-tagged map frame. pose is camera-to-world."""

    id: int
    timestamp: float
    pose: Pose
    depth: QuantizedDepth
    descriptor: np.ndarray
    payload: bytes = b""
    score: float = 0.0
    session: int = 0
    _grid: InverseDepthGrid | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        self.descriptor = np.asarray(self.descriptor, dtype=np.float32).reshape(-1)
        norm = float(np.linalg.norm(self.descriptor.astype(np.float64)))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise InvalidFrameError(f"frame {self.id}: descriptor norm {norm:.8f} is not unit")
        self.score = float(np.float32(self.score))

    @classmethod
    def from_grid(
        cls,
        frame_id: int,
        timestamp: float,
        pose: Pose,
        grid: InverseDepthGrid,
        descriptor: np.ndarray,
        payload: bytes = b"",
        score: float = 0.0,
        session: int = 0,
    ) -> "VisualStructureFrame":
        return cls(
            id=frame_id,
            timestamp=timestamp,
            pose=pose,
            depth=QuantizedDepth.quantize(grid),
            descriptor=descriptor,
            payload=payload,
            score=score,
            session=session,
        )

    @property
    def position_xy(self) -> np.ndarray:
        return self.pose.translation[:2]

    @property
    def inverse_depth(self) -> InverseDepthGrid:
        if self._grid is None:
            self._grid = self.depth.dequantize()
        return self._grid

    def with_score(self, score: float) -> "VisualStructureFrame":
        return VisualStructureFrame(
            id=self.id,
            timestamp=self.timestamp,
            pose=self.pose,
            depth=self.depth,
            descriptor=self.descriptor,
            payload=self.payload,
            score=score,
            session=self.session,
        )
