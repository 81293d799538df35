"""Optimization variables and their manifold charts.

Pose-like variables use the right product chart on body-to-world poses:
R <- R Exp(dphi), p <- p + R drho, with increments ordered (drho, dphi).
NavState increments are (drho, dphi, dv, dba, dbg); velocity and biases
are additive.
"""

from dataclasses import dataclass, field, replace
from functools import singledispatch

import numpy as np

from ..geom import Pose, so3_log, so3_right_jacobian_inv
from ..geom.lie import quat_from_rotvec, quat_mul


@dataclass(frozen=True, eq=False)
class NavState:
    """Body pose (body-to-world), world velocity, IMU biases and timestamp."""

    pose: Pose = field(default_factory=Pose.identity)
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    bias_gyr: np.ndarray = field(default_factory=lambda: np.zeros(3))
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        for name in ("velocity", "bias_acc", "bias_gyr"):
            object.__setattr__(
                self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(3)
            )

    @property
    def R(self) -> np.ndarray:  # noqa: N802
        return self.pose.R

    @property
    def position(self) -> np.ndarray:
        return self.pose.translation

    def with_pose(self, pose: Pose) -> "NavState":
        return replace(self, pose=pose)

    def as_row(self) -> list[float]:
        """t, qw..qz, tx..tz, vx..vz, ba, bg."""
        return [
            self.timestamp,
            *self.pose.rotation,
            *self.pose.translation,
            *self.velocity,
            *self.bias_acc,
            *self.bias_gyr,
        ]

    @classmethod
    def from_row(cls, row: list[float]) -> "NavState":
        return cls(
            pose=Pose(rotation=np.array(row[1:5]), translation=np.array(row[5:8])),
            velocity=np.array(row[8:11]),
            bias_acc=np.array(row[11:14]),
            bias_gyr=np.array(row[14:17]),
            timestamp=float(row[0]),
        )


# --- pose charts ---


def _pose_retract(pose: Pose, delta: np.ndarray) -> Pose:
    return Pose(
        rotation=quat_mul(pose.rotation, quat_from_rotvec(delta[3:6])),
        translation=pose.translation + pose.R @ delta[:3],
    )


def _pose_local(pose: Pose, ref: Pose) -> np.ndarray:
    r0t = ref.R.T
    return np.concatenate((r0t @ (pose.translation - ref.translation), so3_log(r0t @ pose.R)))


def _pose_local_jacobian(pose: Pose, ref: Pose) -> np.ndarray:
    rel = ref.R.T @ pose.R
    jac = np.zeros((6, 6))
    jac[:3, :3] = rel
    jac[3:, 3:] = so3_right_jacobian_inv(so3_log(rel))
    return jac


@singledispatch
def dof(value: object) -> int:
    """Tangent dimension of a variable."""
    raise TypeError(f"unsupported variable type {type(value).__name__}")


@dof.register
def _(value: Pose) -> int:
    return 6


@dof.register
def _(value: NavState) -> int:
    return 15


@dof.register
def _(value: float) -> int:
    return 1


@dof.register
def _(value: np.ndarray) -> int:
    return int(value.size)


@singledispatch
def retract(value: object, delta: np.ndarray) -> object:
    """value ⊕ delta."""
    raise TypeError(f"unsupported variable type {type(value).__name__}")


@retract.register
def _(value: Pose, delta: np.ndarray) -> Pose:
    return _pose_retract(value, delta)


@retract.register
def _(value: NavState, delta: np.ndarray) -> NavState:
    return NavState(
        pose=_pose_retract(value.pose, delta[:6]),
        velocity=value.velocity + delta[6:9],
        bias_acc=value.bias_acc + delta[9:12],
        bias_gyr=value.bias_gyr + delta[12:15],
        timestamp=value.timestamp,
    )


@retract.register
def _(value: float, delta: np.ndarray) -> float:
    return float(value + float(np.asarray(delta).reshape(-1)[0]))


@retract.register
def _(value: np.ndarray, delta: np.ndarray) -> np.ndarray:
    return value + np.asarray(delta).reshape(value.shape)


@singledispatch
def local(value: object, ref: object) -> np.ndarray:
    """value ⊖ ref in the tangent space at ref."""
    raise TypeError(f"unsupported variable type {type(value).__name__}")


@local.register
def _(value: Pose, ref: Pose) -> np.ndarray:
    return _pose_local(value, ref)


@local.register
def _(value: NavState, ref: NavState) -> np.ndarray:
    return np.concatenate(
        (
            _pose_local(value.pose, ref.pose),
            value.velocity - ref.velocity,
            value.bias_acc - ref.bias_acc,
            value.bias_gyr - ref.bias_gyr,
        )
    )


@local.register
def _(value: float, ref: float) -> np.ndarray:
    return np.array([value - ref])


@local.register
def _(value: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return (value - ref).reshape(-1)


@singledispatch
def local_jacobian(value: object, ref: object) -> np.ndarray:
    """d local(value ⊕ δ, ref) / dδ at δ = 0."""
    raise TypeError(f"unsupported variable type {type(value).__name__}")


@local_jacobian.register
def _(value: Pose, ref: Pose) -> np.ndarray:
    return _pose_local_jacobian(value, ref)


@local_jacobian.register
def _(value: NavState, ref: NavState) -> np.ndarray:
    jac = np.eye(15)
    jac[:6, :6] = _pose_local_jacobian(value.pose, ref.pose)
    return jac


@local_jacobian.register
def _(value: float, ref: float) -> np.ndarray:
    return np.eye(1)


@local_jacobian.register
def _(value: np.ndarray, ref: np.ndarray) -> np.ndarray:
    return np.eye(value.size)


def pose_of(value: Pose | NavState) -> Pose:
    return value.pose if isinstance(value, NavState) else value


def embed_pose_jacobian(value: Pose | NavState, jac: np.ndarray) -> np.ndarray:
    """Widen an (m, 6) pose Jacobian to the variable's full tangent dimension."""
    if isinstance(value, NavState):
        full = np.zeros((jac.shape[0], 15))
        full[:, :6] = jac
        return full
    return jac

