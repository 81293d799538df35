"""Per-pair linearization of the flow reprojection residual.

Perturbations are left increments on world-to-camera poses, T <- Exp(xi) T,
with xi ordered (rho, phi).
"""

from dataclasses import dataclass

import numpy as np

from ..core.errors import DimensionMismatchError
from ..geom import (
    CameraIntrinsics,
    Pose,
    backproject_points,
    camera_grid,
    project_jacobians,
    project_points,
)
from .grid import FlowField, InverseDepthGrid, as_flat_grid


def skew_batch(points: np.ndarray) -> np.ndarray:
    """[p]x for each row of (n, 3) points, shape (n, 3, 3)."""
    out = np.zeros((points.shape[0], 3, 3))
    out[:, 0, 1], out[:, 0, 2] = -points[:, 2], points[:, 1]
    out[:, 1, 0], out[:, 1, 2] = points[:, 2], -points[:, 0]
    out[:, 2, 0], out[:, 2, 1] = -points[:, 1], points[:, 0]
    return out


@dataclass(eq=False)
class PairSystem:
    """Square-root-weighted linear system of one (i -> j) projection.

    j_i, j_j: (2n, 6) pose Jacobians; j_depth: (n, 2), the 2x1 diagonal
    block per cell of the depth Jacobian; residual: (2n,). Rows are
    interleaved (u0, v0, u1, v1, ...).
    """

    source: int
    target: int
    j_i: np.ndarray
    j_j: np.ndarray
    j_depth: np.ndarray
    residual: np.ndarray

    @property
    def cells(self) -> int:
        return int(self.j_depth.shape[0])

    def depth_jacobian_dense(self) -> np.ndarray:
        """The full (2n, n) block-diagonal depth Jacobian."""
        n = self.cells
        dense = np.zeros((2 * n, n))
        idx = np.arange(n)
        dense[2 * idx, idx] = self.j_depth[:, 0]
        dense[2 * idx + 1, idx] = self.j_depth[:, 1]
        return dense

    def gauss_newton_step(self) -> np.ndarray:
        """Least-squares [xi_i, xi_j, dlam] of this pair alone (min-norm)."""
        jac = np.hstack((self.j_i, self.j_j, self.depth_jacobian_dense()))
        step, *_ = np.linalg.lstsq(jac, self.residual, rcond=None)
        return step


def pair_jacobians(
    t_i: Pose,
    t_j: Pose,
    lam: np.ndarray,
    k: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Predicted pixels, validity and unweighted Jacobians of u_ij.

    Returns (u_pred (n,2), valid (n,), d/dxi_i (n,2,6), d/dxi_j (n,2,6), d/dlam (n,2)).
    """
    points_i = backproject_points(k, camera_grid(k), lam)
    t_ij = t_j @ t_i.inverse()
    r_ij = t_ij.R
    points_j = t_ij.act(points_i)
    u_pred, valid = project_points(k, points_j)
    proj = project_jacobians(k, points_j)
    n = lam.size

    dxj_dxi_j = np.zeros((n, 3, 6))
    dxj_dxi_j[:, :, :3] = np.eye(3)
    dxj_dxi_j[:, :, 3:] = -skew_batch(points_j)

    dxj_dxi_i = np.zeros((n, 3, 6))
    dxj_dxi_i[:, :, :3] = -r_ij
    dxj_dxi_i[:, :, 3:] = r_ij @ skew_batch(points_i)

    dxj_dlam = -(points_i @ r_ij.T) / lam[:, None]

    j_i = proj @ dxj_dxi_i
    j_j = proj @ dxj_dxi_j
    j_lam = np.einsum("nab,nb->na", proj, dxj_dlam)
    return u_pred, valid, j_i, j_j, j_lam


def linearize_pair(
    t_i: Pose,
    t_j: Pose,
    lam_i: InverseDepthGrid | np.ndarray,
    flow: FlowField,
    k: CameraIntrinsics,
    source: int = 0,
    target: int = 1,
) -> PairSystem:
    """Linearize the residual flow of frame i's grid projected into frame j."""
    lam = as_flat_grid(lam_i, k)
    if flow.size != lam.size:
        raise DimensionMismatchError(f"flow has {flow.size} cells, grid has {lam.size}")
    _, valid, j_i, j_j, j_lam = pair_jacobians(t_i, t_j, lam, k)

    sqrt_w = np.sqrt(np.where((valid & flow.valid)[:, None], flow.weight, 0.0))
    j_i = np.where(sqrt_w[:, :, None] > 0.0, j_i * sqrt_w[:, :, None], 0.0)
    j_j = np.where(sqrt_w[:, :, None] > 0.0, j_j * sqrt_w[:, :, None], 0.0)
    j_lam = np.where(sqrt_w > 0.0, j_lam * sqrt_w, 0.0)
    residual = flow.residual * sqrt_w

    n = lam.size
    return PairSystem(
        source=source,
        target=target,
        j_i=j_i.reshape(2 * n, 6),
        j_j=j_j.reshape(2 * n, 6),
        j_depth=j_lam,
        residual=residual.reshape(2 * n),
    )
