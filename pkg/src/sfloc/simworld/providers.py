"""Synthetic stand-ins for the learned perception front-end: flow, matches, odometry."""

from collections import defaultdict
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..dba import FlowField, InverseDepthGrid, rigid_flow
from ..fineloc.matches import MatchSet
from ..geom import (
    INV_DEPTH_MIN,
    CameraIntrinsics,
    Pose,
    backproject_points,
    camera_grid,
    project_points,
    so3_exp,
)
from .config import FlowSimConfig, MatcherSimConfig
from .rng import stream_rng

# Half-width of the uniform residual drawn for outlier flow cells, px
OUTLIER_FLOW_PX = 20.0

# Weight of a low-confidence outlier cell relative to an inlier
LOW_OUTLIER_WEIGHT = 1e-3

SESSION_ID_SHIFT = 32


def encode_frame_id(session: int, index: int) -> int:
    """Map frame id carrying its source session and keyframe index."""
    return (session << SESSION_ID_SHIFT) | index


def decode_frame_id(frame_id: int) -> tuple[int, int]:
    return frame_id >> SESSION_ID_SHIFT, frame_id & ((1 << SESSION_ID_SHIFT) - 1)


class FlowProvider:
    """Residual flow between keyframes i and j.

    Called as flow_fn(i, j, T_i, T_j, lam_i) with world-to-camera estimates;
    returns the ground-truth rigid flow minus the flow implied by the
    estimates, with configured pixel noise and outlier cells.
    """

    def __init__(
        self,
        gt_poses_cw: Sequence[Pose],
        gt_grids: Sequence[InverseDepthGrid],
        k: CameraIntrinsics,
        cfg: FlowSimConfig,
        seed: int = 0,
        session: int = 0,
    ) -> None:
        self.gt_poses_cw = list(gt_poses_cw)
        self.gt_grids = list(gt_grids)
        self.k = k
        self.cfg = cfg
        self.seed = seed
        self.session = session
        self._calls: dict[tuple[int, int], int] = defaultdict(int)

    @property
    def inlier_weight(self) -> float:
        sigma = self.cfg.pixel_sigma
        return 1.0 / (sigma * sigma) if sigma > 0.0 else 1.0

    def __call__(self, i: int, j: int, t_i: Pose, t_j: Pose, lam_i: np.ndarray) -> FlowField:
        gt_i, gt_j = self.gt_poses_cw[i], self.gt_poses_cw[j]
        u_gt, valid_gt = rigid_flow(gt_i, gt_j, self.gt_grids[i], self.k)
        u_est, valid_est = rigid_flow(t_i, t_j, lam_i, self.k)
        valid = valid_gt & valid_est
        residual = np.where(valid[:, None], u_gt - u_est, 0.0)
        n = residual.shape[0]
        weight = np.full((n, 2), self.inlier_weight)

        call = self._calls[(i, j)]
        self._calls[(i, j)] += 1
        rng = stream_rng(self.seed, self.session, "flow", i, j, call)
        if self.cfg.pixel_sigma > 0.0:
            residual = residual + rng.normal(0.0, self.cfg.pixel_sigma, residual.shape)
        if self.cfg.outlier_fraction > 0.0:
            out = rng.random(n) < self.cfg.outlier_fraction
            residual[out] = rng.uniform(-OUTLIER_FLOW_PX, OUTLIER_FLOW_PX, (int(out.sum()), 2))
            if self.cfg.outlier_weight == "low":
                weight[out] *= LOW_OUTLIER_WEIGHT
        return FlowField(residual=residual, weight=weight, valid=valid)


@dataclass(frozen=True, eq=False)
class FrameTruth:
    """Ground truth behind a map frame: camera-to-world pose and inverse depth."""

    pose: Pose
    grid: InverseDepthGrid


class MatcherProvider:
    """Correspondences sampled from map-frame grid cells and projected with true geometry.

    A fixed fraction of each set is replaced by uniform random query pixels;
    the returned inverse depth comes from the stored map grid, scaled by
    1 / (1 + depth_scale_error) to model a biased depth map.
    """

    def __init__(
        self,
        k_map: CameraIntrinsics,
        k_query: CameraIntrinsics,
        cfg: MatcherSimConfig,
        seed: int = 0,
        session: int = 0,
    ) -> None:
        self.k_map = k_map
        self.k_query = k_query
        self.cfg = cfg
        self.seed = seed
        self.session = session

    def match(
        self,
        query_index: int,
        query_pose: Pose,
        map_frame_id: int,
        truth: FrameTruth,
        stored_grid: InverseDepthGrid | None = None,
    ) -> MatchSet:
        """Matches of one query (true camera-to-world pose) against one map frame."""
        map_session, map_index = decode_frame_id(map_frame_id)
        rng = stream_rng(self.seed, self.session, "matcher", query_index, map_session, map_index)
        uv = camera_grid(self.k_map)
        lam_gt = truth.grid.flat()
        points_world = truth.pose.act(backproject_points(self.k_map, uv, lam_gt))
        u_query, valid = project_points(self.k_query, query_pose.inverse().act(points_world))
        candidates = np.flatnonzero(valid & (lam_gt > INV_DEPTH_MIN * (1.0 + 1e-9)))

        n = min(self.cfg.matches_per_pair, candidates.size)
        chosen = np.sort(rng.choice(candidates, size=n, replace=False)) if n else candidates[:0]
        u_q = u_query[chosen].copy()
        if self.cfg.pixel_sigma > 0.0:
            u_q += rng.normal(0.0, self.cfg.pixel_sigma, u_q.shape)
        n_out = int(round(self.cfg.outlier_fraction * n))
        outlier = np.zeros(n, dtype=bool)
        if n_out:
            outlier[rng.choice(n, size=n_out, replace=False)] = True
            u_q[outlier] = rng.uniform(
                (0.0, 0.0), (self.k_query.width, self.k_query.height), (n_out, 2)
            )
        upper = np.nextafter((float(self.k_query.width), float(self.k_query.height)), 0.0)
        u_q = np.clip(u_q, 0.0, upper)

        lam = (truth.grid if stored_grid is None else stored_grid).flat()[chosen]
        return MatchSet(
            map_frame_id=map_frame_id,
            query_index=query_index,
            u_map=uv[chosen],
            u_query=u_q,
            inv_depth=lam / (1.0 + self.cfg.depth_scale_error),
            outlier=outlier,
        )


class OdometryProvider:
    """Relative camera motion T_a⁻¹ T_b with scaled translation and small rotation error."""

    def __init__(
        self,
        translation_error: float = 0.01,
        rotation_sigma: float = 1e-3,
        seed: int = 0,
        session: int = 0,
    ) -> None:
        self.translation_error = translation_error
        self.rotation_sigma = rotation_sigma
        self.seed = seed
        self.session = session

    def relative(self, index_a: int, index_b: int, pose_a: Pose, pose_b: Pose) -> Pose:
        rel = pose_a.inverse() @ pose_b
        rng = stream_rng(self.seed, self.session, "odometry", index_a, index_b)
        dist = float(np.linalg.norm(rel.translation))
        t = rel.translation + self.translation_error * dist * rng.standard_normal(3)
        r = so3_exp(rng.normal(0.0, self.rotation_sigma, 3)) if self.rotation_sigma else np.eye(3)
        return Pose.from_rt(r @ rel.R, t)
