"""Rolling query window: descriptors, odometry poses and their similarity rows."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..core.errors import DimensionMismatchError, InvalidQueryError
from ..geom import Pose

DEFAULT_WINDOW = 10

# Odometry displacement below which a query counts as stationary, m
STATIONARY_THRESHOLD_M = 0.5

UNIT_NORM_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class QueryEntry:
    """One query: its descriptor, odometry camera-to-world pose and similarity row."""

    index: int
    timestamp: float
    descriptor: np.ndarray
    odom_pose: Pose
    similarity: np.ndarray
    stationary: bool = False


@dataclass(frozen=True, eq=False)
class SimilarityMatrix:
    """L x M descriptor distances, row 0 is the current query."""

    values: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])


def similarity_row(descriptor: np.ndarray, map_descriptors: np.ndarray) -> np.ndarray:
    """‖d_q − d_m‖₂ against every map descriptor."""
    return np.linalg.norm(map_descriptors - descriptor[None, :], axis=1)


class QueryBuffer:
    """The last `length` non-stationary queries plus the current one.

    A query whose odometry moved less than `stationary_threshold` since the
    last kept entry is flagged stationary: it serves as the current frame but
    drops out of the window once a newer query arrives.
    """

    def __init__(
        self,
        map_descriptors: np.ndarray,
        length: int = DEFAULT_WINDOW,
        stationary_threshold: float = STATIONARY_THRESHOLD_M,
    ) -> None:
        if length < 1:
            raise InvalidQueryError("window length must be at least 1")
        self.map_descriptors = np.asarray(map_descriptors, dtype=np.float64)
        self.length = length
        self.stationary_threshold = stationary_threshold
        self._kept: deque[QueryEntry] = deque(maxlen=length)
        self._current: QueryEntry | None = None
        self._count = 0

    def __len__(self) -> int:
        return len(self.window())

    @property
    def current(self) -> QueryEntry | None:
        return self._current

    def push(self, descriptor: np.ndarray, odom_pose: Pose, timestamp: float = 0.0) -> np.ndarray:
        """Add a query and return its similarity row.

        Raises:
            DimensionMismatchError: If the descriptor length differs from the map's.
        """
        d = np.asarray(descriptor, dtype=np.float64).reshape(-1)
        if self.map_descriptors.size and d.size != self.map_descriptors.shape[1]:
            raise DimensionMismatchError(
                f"descriptor has {d.size} dims, map has {self.map_descriptors.shape[1]}"
            )
        if abs(float(np.linalg.norm(d)) - 1.0) > UNIT_NORM_TOL:
            raise InvalidQueryError("query descriptor must be unit-norm")
        empty = self.map_descriptors.size == 0
        row = np.zeros(0) if empty else similarity_row(d, self.map_descriptors)

        stationary = bool(self._kept) and (
            np.linalg.norm(odom_pose.translation - self._kept[-1].odom_pose.translation)
            < self.stationary_threshold
        )
        entry = QueryEntry(self._count, timestamp, d, odom_pose, row, stationary)
        self._count += 1
        if not stationary:
            self._kept.append(entry)
        self._current = entry
        return row

    def window(self) -> list[QueryEntry]:
        """Entries newest first: the current query then up to length − 1 earlier kept ones."""
        if self._current is None:
            return []
        earlier = [e for e in reversed(self._kept) if e is not self._current]
        return [self._current, *earlier[: self.length - 1]]

    def similarity(self) -> SimilarityMatrix:
        entries = self.window()
        if not entries:
            return SimilarityMatrix(np.zeros((0, self.map_descriptors.shape[0])))
        return SimilarityMatrix(np.stack([e.similarity for e in entries]))

    def relative_poses(self) -> list[Pose]:
        """T^{c_k}_{c_j} for each window entry j (identity for the current query)."""
        entries = self.window()
        if not entries:
            return []
        inv_current = entries[0].odom_pose.inverse()
        return [Pose.identity()] + [inv_current @ e.odom_pose for e in entries[1:]]


def push_query(
    buf: QueryBuffer, descriptor: np.ndarray, odom_pose: Pose, timestamp: float = 0.0
) -> np.ndarray:
    return buf.push(descriptor, odom_pose, timestamp)
