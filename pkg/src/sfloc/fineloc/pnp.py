"""PnP-RANSAC baseline: P3P hypotheses, inlier voting and a Gauss-Newton refit."""

from dataclasses import dataclass

import cv2
import numpy as np

from ..core.errors import DegenerateGeometryError, TooFewMatchesError
from ..core.logging import get_logger
from ..fgraph import (
    FactorGraph,
    NoiseModel,
    ReprojectionFactor,
    SolverMode,
    SolverSettings,
    solve,
)
from ..geom import CameraIntrinsics, Pose, backproject_points
from .matches import MatchSet

logger = get_logger(__name__)

MIN_MATCHES = 4

# Minimal sets whose triangle area falls below this are skipped, m²
COLLINEAR_AREA = 1e-9

REFIT_SETTINGS = SolverSettings(mode=SolverMode.GAUSS_NEWTON, max_iters=20)


@dataclass(frozen=True, eq=False)
class PnpResult:
    """Query camera pose in the map frame's camera coordinates (T^m_c) and its inliers."""

    relative: Pose
    inliers: np.ndarray
    hypotheses: int

    @property
    def inlier_count(self) -> int:
        return int(np.count_nonzero(self.inliers))


def reprojection_errors(
    pose_mc: Pose, points_m: np.ndarray, u_query: np.ndarray, k: CameraIntrinsics
) -> np.ndarray:
    """Pixel error of each map-frame point projected into the query camera."""
    x_c = pose_mc.inverse().act(points_m)
    z = x_c[:, 2]
    ok = z > 1e-6
    safe = np.where(ok, z, 1.0)
    pred = np.stack((k.fx * x_c[:, 0] / safe + k.cx, k.fy * x_c[:, 1] / safe + k.cy), axis=1)
    return np.where(ok, np.linalg.norm(pred - u_query, axis=1), np.inf)


def _p3p(points: np.ndarray, pixels: np.ndarray, k: CameraIntrinsics) -> list[Pose]:
    """All P3P solutions as query camera-to-map-camera poses."""
    count, rvecs, tvecs = cv2.solveP3P(
        np.ascontiguousarray(points.reshape(3, 1, 3)),
        np.ascontiguousarray(pixels.reshape(3, 1, 2)),
        k.matrix(),
        None,
        flags=cv2.SOLVEPNP_P3P,
    )
    poses = []
    for rvec, tvec in zip(rvecs[:count], tvecs[:count], strict=True):
        r_cm, _ = cv2.Rodrigues(np.asarray(rvec, dtype=np.float64))
        t_cm = np.asarray(tvec, dtype=np.float64).reshape(3)
        if np.all(np.isfinite(r_cm)) and np.all(np.isfinite(t_cm)):
            poses.append(Pose.from_rt(r_cm, t_cm).inverse())
    return poses


def refit_pose(
    initial: Pose, matches: MatchSet, mask: np.ndarray, k: CameraIntrinsics
) -> Pose:
    """Gauss-Newton on the masked reprojection errors with depths held fixed."""
    graph = FactorGraph()
    graph.add_state("query", initial)
    graph.add_state("map", Pose.identity())
    graph.fix("map")
    noise = NoiseModel.isotropic(2, 1.0)
    for f in np.flatnonzero(mask):
        depth_key = ("depth", int(f))
        graph.add_state(depth_key, float(matches.inv_depth[f]))
        graph.fix(depth_key)
        graph.add_factor(
            ReprojectionFactor(
                "query", "map", depth_key, matches.u_map[f], matches.u_query[f], k, noise
            )
        )
    solve(graph, REFIT_SETTINGS)
    refined = graph.values["query"]
    assert isinstance(refined, Pose)
    return refined


def pnp_ransac(
    matches: MatchSet,
    k: CameraIntrinsics,
    threshold_px: float = 2.0,
    iterations: int = 500,
    seed: int = 0,
) -> PnpResult:
    """Robust pose of the query relative to the matched map frame.

    Raises:
        TooFewMatchesError: With fewer than four correspondences or inliers.
        DegenerateGeometryError: If no minimal set yields a pose.
    """
    n = len(matches)
    if n < MIN_MATCHES:
        raise TooFewMatchesError(f"{n} correspondences, PnP needs {MIN_MATCHES}")
    points = backproject_points(k, matches.u_map, matches.inv_depth)
    rng = np.random.default_rng([seed, matches.query_index, matches.map_frame_id & 0xFFFFFFFF])

    best_pose: Pose | None = None
    best_mask = np.zeros(n, dtype=bool)
    hypotheses = 0
    for _ in range(iterations):
        idx = rng.choice(n, size=3, replace=False)
        a, b, c = points[idx]
        if 0.5 * np.linalg.norm(np.cross(b - a, c - a)) < COLLINEAR_AREA:
            continue
        for pose in _p3p(points[idx], matches.u_query[idx], k):
            hypotheses += 1
            mask = reprojection_errors(pose, points, matches.u_query, k) < threshold_px
            if mask.sum() > best_mask.sum():
                best_pose, best_mask = pose, mask
    if best_pose is None:
        raise DegenerateGeometryError("no minimal set produced a pose hypothesis")
    if best_mask.sum() < MIN_MATCHES:
        raise TooFewMatchesError(f"best hypothesis has {int(best_mask.sum())} inliers")

    refined = refit_pose(best_pose, matches, best_mask, k)
    mask = reprojection_errors(refined, points, matches.u_query, k) < threshold_px
    if mask.sum() >= best_mask.sum():
        best_pose, best_mask = refined, mask
    logger.debug(
        "pnp_solved", frame=matches.map_frame_id, inliers=int(best_mask.sum()), total=n
    )
    return PnpResult(relative=best_pose, inliers=best_mask, hypotheses=hypotheses)
