"""The structure-frame map: co-visibility gated insertion and a 2-D spatial index."""

import threading
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from ..core.errors import EmptyMapError, InvalidFrameError
from ..core.logging import get_logger
from ..dba import covisibility
from ..geom import CameraIntrinsics
from .frame import VisualStructureFrame

logger = get_logger(__name__)

# Candidate search radius for co-visibility checks, m
CANDIDATE_RADIUS_M = 50.0

DEFAULT_XI = 0.4


class PolicyKind(str, Enum):
    INCREMENTAL = "incremental"
    FRESHNESS_FIRST = "freshness_first"
    CUSTOM_SCORE = "custom_score"


ScoreFn = Callable[[VisualStructureFrame], float]


@dataclass(frozen=True)
class InsertPolicy:
    """How a new frame is scored against the frames it conflicts with.

    incremental scores every frame 0, so conflicts always discard the newcomer;
    freshness_first scores by session index; custom_score calls score_fn, or
    keeps the frame's own score when none is given.
    """

    kind: PolicyKind = PolicyKind.INCREMENTAL
    score_fn: ScoreFn | None = None

    def score(self, frame: VisualStructureFrame) -> float:
        if self.kind == PolicyKind.INCREMENTAL:
            return 0.0
        if self.kind == PolicyKind.FRESHNESS_FIRST:
            return float(frame.session)
        return float(self.score_fn(frame)) if self.score_fn else frame.score


class InsertKind(str, Enum):
    ADDED = "added"
    REPLACED = "replaced"
    DISCARDED = "discarded"


@dataclass(frozen=True)
class InsertDecision:
    kind: InsertKind
    frame_id: int
    replaced: tuple[int, ...] = ()
    conflicts: tuple[int, ...] = ()


@dataclass(eq=False)
class StructureFrameMap:
    """Frames by id with a KD-tree over their (x, y) positions.

    Any number of readers or one writer; every mutation rebuilds the tree
    under the lock so queries never see a half-applied replace.
    """

    k: CameraIntrinsics | None = None
    xi: float = DEFAULT_XI
    policy: InsertPolicy = field(default_factory=InsertPolicy)
    radius: float = CANDIDATE_RADIUS_M
    route_length_m: float = 0.0
    _frames: dict[int, VisualStructureFrame] = field(default_factory=dict, init=False)
    _ids: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64), init=False)
    _tree: cKDTree | None = field(default=None, init=False, repr=False)
    _lock: threading.RLock = field(default_factory=threading.RLock, init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0.0 < self.xi < 1.0:
            raise InvalidFrameError(f"co-visibility threshold must lie in (0, 1), got {self.xi}")

    # --- reads ---

    def __len__(self) -> int:
        return len(self._frames)

    def __contains__(self, frame_id: object) -> bool:
        return frame_id in self._frames

    def get(self, frame_id: int) -> VisualStructureFrame:
        return self._frames[frame_id]

    def ids(self) -> list[int]:
        with self._lock:
            return sorted(self._frames)

    def frames_in_order(self) -> list[VisualStructureFrame]:
        with self._lock:
            return [self._frames[i] for i in sorted(self._frames)]

    def positions_xy(self) -> np.ndarray:
        """(M, 2) positions in id order."""
        frames = self.frames_in_order()
        return np.array([f.position_xy for f in frames]).reshape(-1, 2)

    def descriptor_matrix(self) -> np.ndarray:
        """(M, dim) float64 descriptors in id order."""
        frames = self.frames_in_order()
        if not frames:
            return np.zeros((0, 0))
        return np.stack([f.descriptor.astype(np.float64) for f in frames])

    def spatial_query(self, xy: np.ndarray, radius: float) -> list[int]:
        """Ids of frames within `radius` of xy, sorted."""
        if radius <= 0.0:
            raise InvalidFrameError("radius must be positive")
        with self._lock:
            if self._tree is None:
                return []
            hits = self._tree.query_ball_point(np.asarray(xy, dtype=np.float64)[:2], radius)
            return sorted(int(self._ids[h]) for h in hits)

    def nearest(self, xy: np.ndarray) -> np.ndarray:
        """Index (into id order) of the nearest frame for each row of xy (N, 2).

        Raises:
            EmptyMapError: If the map holds no frames.
        """
        with self._lock:
            if self._tree is None:
                raise EmptyMapError("nearest-frame lookup on an empty map")
            _, idx = self._tree.query(np.asarray(xy, dtype=np.float64).reshape(-1, 2))
            return np.asarray(idx, dtype=np.int64)

    def frame_covisibility(self, a: VisualStructureFrame, b: VisualStructureFrame) -> float:
        if self.k is None:
            raise InvalidFrameError("map has no camera intrinsics for co-visibility checks")
        return covisibility(
            a.pose.inverse(), b.pose.inverse(), a.inverse_depth, b.inverse_depth, self.k
        )

    # --- writes ---

    def try_insert(self, frame: VisualStructureFrame) -> InsertDecision:
        """Add the frame unless a co-visible neighbour with an equal or higher score exists."""
        with self._lock:
            frame = frame.with_score(self.policy.score(frame))
            candidates = self.spatial_query(frame.position_xy, self.radius) if self._frames else []
            conflicts = [
                cid
                for cid in candidates
                if self.frame_covisibility(frame, self._frames[cid]) >= self.xi
            ]
            if not conflicts:
                self._put([frame], ())
                logger.debug("map_frame_added", frame=frame.id, size=len(self._frames))
                return InsertDecision(InsertKind.ADDED, frame.id)

            best = max(self._frames[c].score for c in conflicts)
            if frame.score > best:
                self._put([frame], conflicts)
                logger.info("map_frame_replaced", frame=frame.id, replaced=conflicts)
                return InsertDecision(
                    InsertKind.REPLACED, frame.id, tuple(conflicts), tuple(conflicts)
                )
            logger.debug("map_frame_discarded", frame=frame.id, conflicts=conflicts)
            return InsertDecision(InsertKind.DISCARDED, frame.id, conflicts=tuple(conflicts))

    def add_unchecked(self, frames: Iterable[VisualStructureFrame]) -> None:
        """Load frames without co-visibility gating (deserialization, fixtures)."""
        with self._lock:
            self._put(list(frames), ())

    def remove(self, frame_ids: Iterable[int]) -> None:
        with self._lock:
            self._put([], list(frame_ids))

    def _put(self, added: list[VisualStructureFrame], removed: Iterable[int]) -> None:
        for fid in removed:
            del self._frames[fid]
        for frame in added:
            self._frames[frame.id] = frame
        self._rebuild()

    def _rebuild(self) -> None:
        self._ids = np.array(sorted(self._frames), dtype=np.int64)
        if self._ids.size == 0:
            self._tree = None
            return
        self._tree = cKDTree(np.array([self._frames[int(i)].position_xy for i in self._ids]))
