"""2D-2D correspondences between a query frame and a map frame."""

from dataclasses import dataclass, field

import numpy as np

from ..core.errors import DimensionMismatchError, NonPositiveInverseDepthError
from ..geom import CameraIntrinsics


@dataclass(eq=False)
class MatchSet:
    """Pixels in the map frame (u_map), the query frame (u_query) and the map
    frame's inverse depth at u_map (inv_depth, 1/m).

    outlier is an optional ground-truth label carried by synthetic matchers.
    """

    map_frame_id: int
    query_index: int
    u_map: np.ndarray
    u_query: np.ndarray
    inv_depth: np.ndarray
    outlier: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        self.u_map = np.asarray(self.u_map, dtype=np.float64).reshape(-1, 2)
        self.u_query = np.asarray(self.u_query, dtype=np.float64).reshape(-1, 2)
        self.inv_depth = np.asarray(self.inv_depth, dtype=np.float64).reshape(-1)
        n = self.u_map.shape[0]
        if self.outlier.size == 0:
            self.outlier = np.zeros(n, dtype=bool)
        self.outlier = np.asarray(self.outlier, dtype=bool).reshape(-1)
        if not (self.u_query.shape[0] == n == self.inv_depth.size == self.outlier.size):
            raise DimensionMismatchError("match arrays differ in length")
        if np.any(self.inv_depth <= 0.0):
            raise NonPositiveInverseDepthError("matched inverse depth must be positive")

    def __len__(self) -> int:
        return int(self.u_map.shape[0])

    def subset(self, mask: np.ndarray) -> "MatchSet":
        return MatchSet(
            map_frame_id=self.map_frame_id,
            query_index=self.query_index,
            u_map=self.u_map[mask],
            u_query=self.u_query[mask],
            inv_depth=self.inv_depth[mask],
            outlier=self.outlier[mask],
        )


def rescale_map_pixels(
    matches: MatchSet, k_map: CameraIntrinsics, k_query: CameraIntrinsics
) -> MatchSet:
    """Express map-frame pixels in the query camera's intrinsics (same rays)."""
    if k_map == k_query:
        return matches
    rays = (matches.u_map - (k_map.cx, k_map.cy)) / (k_map.fx, k_map.fy)
    return MatchSet(
        map_frame_id=matches.map_frame_id,
        query_index=matches.query_index,
        u_map=rays * (k_query.fx, k_query.fy) + (k_query.cx, k_query.cy),
        u_query=matches.u_query,
        inv_depth=matches.inv_depth,
        outlier=matches.outlier,
    )
