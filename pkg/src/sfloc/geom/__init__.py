"""SE(3)/SO(3) algebra, pinhole camera model and grid back-projection."""

from .camera import (
    BODY_TO_CAMERA_ROTATION,
    INV_DEPTH_MAX,
    INV_DEPTH_MIN,
    Z_MIN,
    CameraIntrinsics,
    backproject,
    backproject_points,
    camera_grid,
    forward_camera_extrinsic,
    optical_axis_heading,
    project,
    project_jacobian,
    project_jacobians,
    project_points,
)
from .lie import (
    Pose,
    Pose2D,
    Twist,
    compose,
    ground_plane_lift,
    inverse,
    rot_z,
    se3_exp,
    se3_log,
    skew,
    so3_exp,
    so3_left_jacobian_inv,
    so3_log,
    so3_right_jacobian,
    so3_right_jacobian_inv,
    wrap_angle,
)

__all__ = [
    "BODY_TO_CAMERA_ROTATION",
    "INV_DEPTH_MAX",
    "INV_DEPTH_MIN",
    "Z_MIN",
    "CameraIntrinsics",
    "Pose",
    "Pose2D",
    "Twist",
    "backproject",
    "backproject_points",
    "camera_grid",
    "compose",
    "forward_camera_extrinsic",
    "ground_plane_lift",
    "inverse",
    "optical_axis_heading",
    "project",
    "project_jacobian",
    "project_jacobians",
    "project_points",
    "rot_z",
    "se3_exp",
    "se3_log",
    "skew",
    "so3_exp",
    "so3_left_jacobian_inv",
    "so3_log",
    "so3_right_jacobian",
    "so3_right_jacobian_inv",
    "wrap_angle",
]
