"""
SF-Loc Unit Tests - Pinhole camera model
"""
import math

import numpy as np
import pytest

from sfloc.core.errors import NonPositiveInverseDepthError
from sfloc.geom import (
    CameraIntrinsics,
    Pose,
    backproject,
    backproject_points,
    camera_grid,
    forward_camera_extrinsic,
    optical_axis_heading,
    project,
    project_jacobian,
    project_points,
    rot_z,
)


pytestmark = pytest.mark.unit


class TestIntrinsics:
    """Intrinsics validation and grid geometry."""

    def test_from_fov_centers_principal_point(self, small_camera: CameraIntrinsics):
        """from_fov puts the principal point at the image center."""
        assert small_camera.cx == 32.0
        assert small_camera.cy == 24.0
        assert small_camera.fx == pytest.approx(32.0 / math.tan(math.radians(30.0)))

    def test_grid_dimensions(self, small_camera: CameraIntrinsics):
        """The grid has one cell per 8x8 pixel block."""
        assert (small_camera.grid_rows, small_camera.grid_cols) == (6, 8)
        assert small_camera.grid_size == 48

    def test_rejects_unaligned_size(self):
        """Image sizes must be multiples of 8."""
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=100.0, fy=100.0, cx=32.0, cy=24.0, width=65, height=48)

    def test_camera_grid_centers(self, small_camera: CameraIntrinsics):
        """Grid pixels sit at 8i + 4, row-major with u varying fastest."""
        grid = camera_grid(small_camera)
        assert grid.shape == (48, 2)
        np.testing.assert_array_equal(grid[0], [4.0, 4.0])
        np.testing.assert_array_equal(grid[1], [12.0, 4.0])
        np.testing.assert_array_equal(grid[8], [4.0, 12.0])
        np.testing.assert_array_equal(grid[-1], [60.0, 44.0])

    def test_camera_grid_is_read_only(self, small_camera: CameraIntrinsics):
        """The shared grid cannot be modified in place."""
        grid = camera_grid(small_camera)
        with pytest.raises(ValueError):
            grid[0, 0] = 1.0


class TestProjection:
    """Projection, its Jacobian and back-projection."""

    def test_jacobian_matches_finite_differences(self, small_camera: CameraIntrinsics):
        """Analytic d(pixel)/d(point) agrees with central differences."""
        point = np.array([0.4, -0.3, 3.0])
        analytic = project_jacobian(small_camera, point)
        eps = 1e-6
        numeric = np.zeros((2, 3))
        for axis in range(3):
            step = np.zeros(3)
            step[axis] = eps
            plus, _ = project(small_camera, point + step)
            minus, _ = project(small_camera, point - step)
            numeric[:, axis] = (plus - minus) / (2 * eps)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-6, atol=1e-6)

    def test_points_behind_or_too_close_are_invalid(self, small_camera: CameraIntrinsics):
        """Cheirality: z must exceed the minimum depth."""
        points = np.array([[0.0, 0.0, 5.0], [0.0, 0.0, -5.0], [0.0, 0.0, 0.05]])
        _, valid = project_points(small_camera, points)
        assert valid.tolist() == [True, False, False]

    def test_points_outside_image_are_invalid(self, small_camera: CameraIntrinsics):
        """Projections outside [0, W) x [0, H) are flagged."""
        _, valid = project(small_camera, np.array([50.0, 0.0, 1.0]))
        assert not valid

    def test_backproject_then_project(self, small_camera: CameraIntrinsics):
        """A back-projected pixel reprojects onto itself."""
        pixel = np.array([20.0, 36.0])
        point = backproject(small_camera, pixel, 0.25)
        assert point[2] == pytest.approx(4.0)
        uv, valid = project(small_camera, point)
        assert valid
        np.testing.assert_allclose(uv, pixel, atol=1e-12)

    def test_non_positive_inverse_depth_raises(self, small_camera: CameraIntrinsics):
        """Zero or negative inverse depth is rejected."""
        with pytest.raises(NonPositiveInverseDepthError):
            backproject_points(small_camera, np.array([[4.0, 4.0]]), np.array([0.0]))


class TestForwardCamera:
    """Body-mounted forward-looking camera."""

    def test_point_ahead_hits_principal_point(self, small_camera: CameraIntrinsics):
        """A point straight ahead of the body lands on the image center."""
        extrinsic = forward_camera_extrinsic()
        point_cam = extrinsic.inverse().act(np.array([10.0, 0.0, 0.0]))
        np.testing.assert_allclose(point_cam, [0.0, 0.0, 10.0], atol=1e-12)
        uv, valid = project(small_camera, point_cam)
        assert valid
        np.testing.assert_allclose(uv, [small_camera.cx, small_camera.cy], atol=1e-12)

    @pytest.mark.parametrize("yaw", [0.0, 0.5, -2.0, 3.0])
    def test_optical_axis_heading_follows_body_yaw(self, yaw: float):
        """The camera looks along the body's heading."""
        body = Pose.from_rt(rot_z(yaw), np.array([5.0, -2.0, 1.5]))
        camera = body @ forward_camera_extrinsic(np.array([0.5, 0.0, 0.2]))
        assert optical_axis_heading(camera) == pytest.approx(yaw, abs=1e-12)
