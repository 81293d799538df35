"""Pinhole camera model and the /8 inverse-depth grid."""

import math
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..core.errors import NonPositiveInverseDepthError
from .lie import Pose


# Cheirality cutoff, meters
Z_MIN = 0.1

# Inverse-depth clamp range, 1/meters
INV_DEPTH_MIN = 1e-4
INV_DEPTH_MAX = 10.0

GRID_STRIDE = 8


class CameraIntrinsics(BaseModel):
    """Pinhole intrinsics in pixels. Image dims must be multiples of the grid stride."""

    model_config = ConfigDict(frozen=True)

    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    width: int = Field(gt=0)
    height: int = Field(gt=0)

    @model_validator(mode="after")
    def _check_grid_alignment(self) -> "CameraIntrinsics":
        if self.width % GRID_STRIDE or self.height % GRID_STRIDE:
            raise ValueError(
                f"image size {self.width}x{self.height} not divisible by {GRID_STRIDE}"
            )
        return self

    @classmethod
    def from_fov(cls, width: int, height: int, hfov_deg: float) -> "CameraIntrinsics":
        """Square-pixel camera with the principal point at the image center."""
        f = 0.5 * width / np.tan(np.radians(hfov_deg) / 2.0)
        return cls(fx=f, fy=f, cx=width / 2.0, cy=height / 2.0, width=width, height=height)

    @property
    def grid_rows(self) -> int:
        return self.height // GRID_STRIDE

    @property
    def grid_cols(self) -> int:
        return self.width // GRID_STRIDE

    @property
    def grid_size(self) -> int:
        return self.grid_rows * self.grid_cols

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


def project_points(k: CameraIntrinsics, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Project camera-frame points (N, 3) to pixels (N, 2) plus a validity mask."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    z = points[:, 2]
    in_front = z > Z_MIN
    safe_z = np.where(in_front, z, 1.0)
    u = k.fx * points[:, 0] / safe_z + k.cx
    v = k.fy * points[:, 1] / safe_z + k.cy
    valid = in_front & (u >= 0.0) & (u < k.width) & (v >= 0.0) & (v < k.height)
    return np.stack((u, v), axis=1), valid


def project(k: CameraIntrinsics, point_cam: np.ndarray) -> tuple[np.ndarray, bool]:
    pixels, valid = project_points(k, np.asarray(point_cam).reshape(1, 3))
    return pixels[0], bool(valid[0])


def project_jacobian(k: CameraIntrinsics, point_cam: np.ndarray) -> np.ndarray:
    """d(pixel)/d(point) for a camera-frame point, 2x3."""
    x, y, z = point_cam
    iz = 1.0 / z
    return np.array(
        [
            [k.fx * iz, 0.0, -k.fx * x * iz * iz],
            [0.0, k.fy * iz, -k.fy * y * iz * iz],
        ]
    )


def project_jacobians(k: CameraIntrinsics, points: np.ndarray) -> np.ndarray:
    """Stacked project_jacobian for (N, 3) points, shape (N, 2, 3)."""
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    iz = 1.0 / np.where(np.abs(z) > 1e-12, z, 1e-12)
    jac = np.zeros((points.shape[0], 2, 3))
    jac[:, 0, 0] = k.fx * iz
    jac[:, 0, 2] = -k.fx * x * iz * iz
    jac[:, 1, 1] = k.fy * iz
    jac[:, 1, 2] = -k.fy * y * iz * iz
    return jac


def backproject_points(
    k: CameraIntrinsics, pixels: np.ndarray, inv_depth: np.ndarray
) -> np.ndarray:
    """Lift pixels (N, 2) with inverse depths (N,) to camera-frame points (N, 3)."""
    pixels = np.atleast_2d(np.asarray(pixels, dtype=np.float64))
    inv_depth = np.atleast_1d(np.asarray(inv_depth, dtype=np.float64))
    if np.any(inv_depth <= 0.0):
        raise NonPositiveInverseDepthError("inverse depth must be positive")
    lam = np.maximum(inv_depth, INV_DEPTH_MIN)
    z = 1.0 / lam
    x = (pixels[:, 0] - k.cx) / k.fx * z
    y = (pixels[:, 1] - k.cy) / k.fy * z
    return np.stack((x, y, z), axis=1)


def backproject(k: CameraIntrinsics, pixel: np.ndarray, inv_depth: float) -> np.ndarray:
    """Camera-frame point at z = 1/inv_depth (inv_depth clamped below at INV_DEPTH_MIN)."""
    return backproject_points(k, np.asarray(pixel).reshape(1, 2), np.array([inv_depth]))[0]


@lru_cache(maxsize=16)
def camera_grid(k: CameraIntrinsics) -> np.ndarray:
    """Pixel centers of the /8 grid, row-major, shape (rows*cols, 2) as (u, v).

    The returned array is shared and read-only.
    """
    rows, cols = k.grid_rows, k.grid_cols
    v, u = np.meshgrid(
        GRID_STRIDE * np.arange(rows) + GRID_STRIDE // 2,
        GRID_STRIDE * np.arange(cols) + GRID_STRIDE // 2,
        indexing="ij",
    )
    grid = np.stack((u.ravel(), v.ravel()), axis=1).astype(np.float64)
    grid.flags.writeable = False
    return grid


# Forward-looking camera on a forward-left-up body: camera z is body x,
# camera x is -body y, camera y is -body z.
BODY_TO_CAMERA_ROTATION = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])


def forward_camera_extrinsic(offset: np.ndarray | None = None) -> Pose:
    """Camera-to-body transform T_bc for a forward-looking camera at `offset` (body frame)."""
    t = np.zeros(3) if offset is None else np.asarray(offset, dtype=np.float64)
    return Pose.from_rt(BODY_TO_CAMERA_ROTATION, t)


def optical_axis_heading(camera_to_world: Pose) -> float:
    """World yaw of the camera's viewing direction (its z axis)."""
    axis = camera_to_world.R[:, 2]
    return math.atan2(axis[1], axis[0])
