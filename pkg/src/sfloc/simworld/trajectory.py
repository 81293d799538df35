"""Smooth ground-truth trajectories along polyline routes."""

import math

import numpy as np
from scipy.interpolate import CubicSpline

from ..core.errors import DegenerateRouteError
from ..fgraph import NavState
from ..geom import Pose, rot_z

# Spacing of the densified route polyline, m
ROUTE_DENSIFY_M = 10.0

# Arc-length integration step, m
ARC_STEP_M = 0.05

# Time spacing of the resampled knots, s
KNOT_DT_S = 0.1


class Trajectory:
    """C² planar trajectory at constant speed and fixed height.

    The body frame is forward-left-up with yaw along the velocity; roll and
    pitch are zero.
    """

    def __init__(self, spline: CubicSpline, height: float, duration: float, length: float) -> None:
        self._spline = spline
        self._vel = spline.derivative(1)
        self._acc = spline.derivative(2)
        self.height = height
        self.duration = duration
        self.length = length

    def position(self, t: float | np.ndarray) -> np.ndarray:
        xy = self._spline(t)
        z = np.full(np.shape(xy)[:-1] + (1,), self.height)
        return np.concatenate((xy, z), axis=-1)

    def velocity(self, t: float | np.ndarray) -> np.ndarray:
        vxy = self._vel(t)
        return np.concatenate((vxy, np.zeros(np.shape(vxy)[:-1] + (1,))), axis=-1)

    def acceleration(self, t: float | np.ndarray) -> np.ndarray:
        axy = self._acc(t)
        return np.concatenate((axy, np.zeros(np.shape(axy)[:-1] + (1,))), axis=-1)

    def yaw(self, t: float) -> float:
        vx, vy = self._vel(t)
        return math.atan2(vy, vx)

    def yaw_rate(self, t: float | np.ndarray) -> np.ndarray | float:
        v = self._vel(t)
        a = self._acc(t)
        vx, vy = v[..., 0], v[..., 1]
        ax, ay = a[..., 0], a[..., 1]
        return (vx * ay - vy * ax) / (vx * vx + vy * vy)

    def rotation(self, t: float) -> np.ndarray:
        return rot_z(self.yaw(t))

    def pose(self, t: float) -> Pose:
        return Pose.from_rt(self.rotation(t), self.position(t))

    def state(self, t: float) -> NavState:
        return NavState(pose=self.pose(t), velocity=self.velocity(t), timestamp=float(t))

    def angular_velocity_body(self, t: float) -> np.ndarray:
        return np.array([0.0, 0.0, float(self.yaw_rate(t))])


def _densify(points: np.ndarray, spacing: float) -> np.ndarray:
    out = [points[0]]
    for a, b in zip(points[:-1], points[1:], strict=True):
        n = max(1, math.ceil(np.linalg.norm(b - a) / spacing))
        for i in range(1, n + 1):
            out.append(a + (b - a) * i / n)
    return np.array(out)


def build_trajectory(
    route: list[tuple[float, float]] | np.ndarray,
    speed: float,
    height: float = 1.5,
    closed: bool = False,
    lane_offset: float = 0.0,
) -> Trajectory:
    """Arc-length parameterized C² trajectory through the route waypoints.

    Raises:
        DegenerateRouteError: If the route has fewer than two distinct waypoints.
    """
    pts = np.asarray(route, dtype=np.float64).reshape(-1, 2)
    if len(pts) >= 2:
        keep = np.concatenate(([True], np.linalg.norm(np.diff(pts, axis=0), axis=1) > 1e-9))
        pts = pts[keep]
    if len(pts) < 2:
        raise DegenerateRouteError("route needs at least two distinct waypoints")
    if closed and np.linalg.norm(pts[0] - pts[-1]) > 1e-9:
        pts = np.vstack((pts, pts[:1]))
    if closed and len(pts) < 4:
        raise DegenerateRouteError("closed route needs at least three distinct waypoints")
    if closed:
        pts[-1] = pts[0]

    dense = _densify(pts, ROUTE_DENSIFY_M)
    chord = np.concatenate(([0.0], np.cumsum(np.linalg.norm(np.diff(dense, axis=0), axis=1))))
    bc = "periodic" if closed else "natural"
    geo = CubicSpline(chord, dense, bc_type=bc)

    u = np.linspace(0.0, chord[-1], max(2, math.ceil(chord[-1] / ARC_STEP_M) + 1))
    speed_u = np.linalg.norm(geo(u, 1), axis=1)
    arc = np.concatenate(([0.0], np.cumsum(0.5 * (speed_u[1:] + speed_u[:-1]) * np.diff(u))))
    length = float(arc[-1])
    duration = length / speed

    times = np.linspace(0.0, duration, max(2, math.ceil(duration / KNOT_DT_S) + 1))
    u_t = np.interp(times * speed, arc, u)
    knots = geo(u_t)
    if lane_offset:
        tangent = geo(u_t, 1)
        tangent /= np.linalg.norm(tangent, axis=1, keepdims=True)
        knots = knots + lane_offset * np.stack((-tangent[:, 1], tangent[:, 0]), axis=1)
    if closed:
        knots[-1] = knots[0]
    spline = CubicSpline(times, knots, bc_type=bc)
    return Trajectory(spline, height, duration, length)
