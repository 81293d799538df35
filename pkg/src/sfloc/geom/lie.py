"""Lie-group algebra for SO(3) and SE(3).

Rotations are stored as unit quaternions (w, x, y, z) canonicalized to
w >= 0 so that serialized poses are deterministic. Twists are ordered
(rho, phi): translational part first, rotational part second.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from ..core.errors import AngleNearPiError


# Below this angle the exp/log series branches are used
SMALL_ANGLE = 1e-8

# se3_log refuses rotations within this margin of pi
LOG_PI_MARGIN = 1e-6

_POSE_STRUCT = struct.Struct("<7d")


def skew(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix [v]x such that [v]x @ w == cross(v, w)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# --- quaternion helpers ---


def _canonical(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    q = q / np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product of (w, x, y, z) quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a rotation matrix."""
    x, y, z, w = Rotation.from_matrix(r).as_quat()
    return _canonical(np.array([w, x, y, z]))


def quat_from_rotvec(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    theta = float(np.linalg.norm(phi))
    if theta < SMALL_ANGLE:
        return _canonical(np.concatenate(([1.0 - theta * theta / 8.0], 0.5 * phi)))
    half = 0.5 * theta
    return _canonical(np.concatenate(([math.cos(half)], math.sin(half) * phi / theta)))


def rotvec_from_quat(q: np.ndarray) -> np.ndarray:
    q = _canonical(q)
    vnorm = float(np.linalg.norm(q[1:]))
    if vnorm < SMALL_ANGLE:
        return 2.0 * q[1:] / q[0]
    theta = 2.0 * math.atan2(vnorm, q[0])
    return theta * q[1:] / vnorm


# --- SO(3) ---


def so3_exp(phi: np.ndarray) -> np.ndarray:
    """Rotation matrix Exp(phi) (Rodrigues with a second-order series near zero)."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = float(np.linalg.norm(phi))
    k = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + k + 0.5 * k @ k
    return (
        np.eye(3)
        + (math.sin(theta) / theta) * k
        + ((1.0 - math.cos(theta)) / (theta * theta)) * k @ k
    )


def so3_log(r: np.ndarray) -> np.ndarray:
    """Rotation vector Log(R)."""
    return rotvec_from_quat(quat_from_matrix(r))


def so3_left_jacobian(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    theta = float(np.linalg.norm(phi))
    k = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * k + k @ k / 6.0
    t2 = theta * theta
    return (
        np.eye(3)
        + ((1.0 - math.cos(theta)) / t2) * k
        + ((theta - math.sin(theta)) / (t2 * theta)) * k @ k
    )


def so3_left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    theta = float(np.linalg.norm(phi))
    k = skew(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) - 0.5 * k + k @ k / 12.0
    coeff = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    return np.eye(3) - 0.5 * k + coeff * k @ k


def so3_right_jacobian(phi: np.ndarray) -> np.ndarray:
    """Right Jacobian: Exp(phi + d) ~= Exp(phi) Exp(Jr(phi) d)."""
    return so3_left_jacobian(-np.asarray(phi, dtype=np.float64))


def so3_right_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    """Inverse right Jacobian: Log(Exp(phi) Exp(d)) ~= phi + Jr^-1(phi) d."""
    return so3_left_jacobian_inv(-np.asarray(phi, dtype=np.float64))


# --- SE(3) ---


@dataclass(frozen=True, eq=False)
class Twist:
    """se(3) tangent vector: rho (translation part), phi (rotation part, rad)."""

    rho: np.ndarray = field(default_factory=lambda: np.zeros(3))
    phi: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=np.float64).reshape(3))
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64).reshape(3))

    def as_vector(self) -> np.ndarray:
        return np.concatenate((self.rho, self.phi))

    @classmethod
    def from_vector(cls, xi: np.ndarray) -> "Twist":
        xi = np.asarray(xi, dtype=np.float64).reshape(6)
        return cls(rho=xi[:3], phi=xi[3:])


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform in SE(3).

    rotation is a unit quaternion (w, x, y, z) with w >= 0; translation in
    meters. A Pose maps points from its source frame to its target frame:
    x_target = R @ x_source + t.
    """

    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0, 0.0]))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _canonical(self.rotation))
        object.__setattr__(
            self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3)
        )

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_rt(cls, r: np.ndarray, t: np.ndarray) -> "Pose":
        return cls(rotation=quat_from_matrix(r), translation=t)

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "Pose":
        m = np.asarray(m, dtype=np.float64)
        return cls.from_rt(m[:3, :3], m[:3, 3])

    @property
    def R(self) -> np.ndarray:  # noqa: N802
        return quat_to_matrix(self.rotation)

    @property
    def t(self) -> np.ndarray:
        return self.translation

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R
        m[:3, 3] = self.translation
        return m

    def act(self, points: np.ndarray) -> np.ndarray:
        """Transform a point (3,) or points (N, 3)."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.R.T + self.translation

    def __matmul__(self, other: "Pose") -> "Pose":
        return compose(self, other)

    def inverse(self) -> "Pose":
        return inverse(self)

    def angle(self) -> float:
        """Rotation angle in radians, in [0, pi]."""
        return 2.0 * math.atan2(float(np.linalg.norm(self.rotation[1:])), float(self.rotation[0]))

    def yaw(self) -> float:
        """Heading of the frame's x axis projected on the ground plane."""
        r = self.R
        return math.atan2(r[1, 0], r[0, 0])

    def to_bytes(self) -> bytes:
        """7 little-endian f64: (qw, qx, qy, qz, tx, ty, tz)."""
        return _POSE_STRUCT.pack(*self.rotation, *self.translation)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Pose":
        """Inverse of to_bytes; values are kept bit-exact (no renormalization)."""
        values = _POSE_STRUCT.unpack(data[: _POSE_STRUCT.size])
        pose = object.__new__(cls)
        object.__setattr__(pose, "rotation", np.array(values[:4]))
        object.__setattr__(pose, "translation", np.array(values[4:]))
        return pose

    def __repr__(self) -> str:
        q = ", ".join(f"{v:.6f}" for v in self.rotation)
        t = ", ".join(f"{v:.4f}" for v in self.translation)
        return f"Pose(q=[{q}], t=[{t}])"


def compose(a: Pose, b: Pose) -> Pose:
    """a ∘ b: apply b first, then a."""
    return Pose(
        rotation=quat_mul(a.rotation, b.rotation),
        translation=a.R @ b.translation + a.translation,
    )


def inverse(p: Pose) -> Pose:
    q_conj = p.rotation * np.array([1.0, -1.0, -1.0, -1.0])
    return Pose(rotation=q_conj, translation=-(p.R.T @ p.translation))


def se3_exp(xi: Twist) -> Pose:
    """Exponential retraction se(3) -> SE(3)."""
    q = quat_from_rotvec(xi.phi)
    return Pose(rotation=q, translation=so3_left_jacobian(xi.phi) @ xi.rho)


def se3_log(p: Pose) -> Twist:
    """Logarithm SE(3) -> se(3).

    Raises:
        AngleNearPiError: If the rotation angle is within 1e-6 of pi.
    """
    angle = p.angle()
    if angle >= math.pi - LOG_PI_MARGIN:
        raise AngleNearPiError(f"rotation angle {angle:.9f} too close to pi")
    phi = rotvec_from_quat(p.rotation)
    return Twist(rho=so3_left_jacobian_inv(phi) @ p.translation, phi=phi)


@dataclass(frozen=True)
class Pose2D:
    """Ground-plane pose (x, y, theta); theta wrapped to (-pi, pi]."""

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", wrap_angle(self.theta))


def wrap_angle(theta: float) -> float:
    wrapped = math.remainder(float(theta), 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def rot_z(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def ground_plane_lift(pose: Pose, offset: Pose2D, heading: float | None = None) -> Pose:
    """Apply a ground-plane offset to a world pose.

    The rotation is pre-multiplied by a yaw of offset.theta about the world
    up axis, so height, roll and pitch are inherited from pose. The (x, y)
    offset is expressed along the ground heading (defaults to pose.yaw()).
    """
    base_heading = pose.yaw() if heading is None else heading
    c, s = math.cos(base_heading), math.sin(base_heading)
    shift = np.array([c * offset.x - s * offset.y, s * offset.x + c * offset.y, 0.0])
    return Pose.from_rt(rot_z(offset.theta) @ pose.R, pose.translation + shift)
