"""Rigid flow by dense projection and bidirectional co-visibility.

Poses here are world-to-camera transforms; T_ij = T_j ∘ T_i⁻¹ maps camera i
points into camera j.
"""

import numpy as np

from ..geom import CameraIntrinsics, Pose, backproject_points, camera_grid, project_points
from .grid import InverseDepthGrid, as_flat_grid


def relative_pose(t_i: Pose, t_j: Pose) -> Pose:
    return t_j @ t_i.inverse()


def rigid_flow(
    t_i: Pose,
    t_j: Pose,
    lam_i: InverseDepthGrid | np.ndarray,
    k: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray]:
    """Where frame i's grid points land in frame j.

    Returns:
        (u_ij, valid): (n, 2) pixel coordinates and an (n,) mask that is false
        where the point falls behind frame j or outside its image.
    """
    lam = as_flat_grid(lam_i, k)
    points_i = backproject_points(k, camera_grid(k), lam)
    points_j = relative_pose(t_i, t_j).act(points_i)
    return project_points(k, points_j)


def overlap_ratio(
    t_i: Pose, t_j: Pose, lam_i: InverseDepthGrid | np.ndarray, k: CameraIntrinsics
) -> float:
    """Fraction of frame i's grid cells that project validly into frame j."""
    _, valid = rigid_flow(t_i, t_j, lam_i, k)
    return float(np.count_nonzero(valid)) / valid.size


def covisibility(
    t_i: Pose,
    t_j: Pose,
    lam_i: InverseDepthGrid | np.ndarray,
    lam_j: InverseDepthGrid | np.ndarray,
    k: CameraIntrinsics,
) -> float:
    """min of both overlap directions, in [0, 1]."""
    return min(overlap_ratio(t_i, t_j, lam_i, k), overlap_ratio(t_j, t_i, lam_j, k))
