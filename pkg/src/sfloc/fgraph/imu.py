"""IMU preintegration and the inertial residual between consecutive states.

Increments are integrated with the midpoint rotation of each sample
interval; bias Jacobians and the 9x9 noise covariance are propagated
alongside, ordered (dp, dphi, dv).
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import EmptySampleListError, InvalidFactorError, TimestampMismatchError
from ..geom import skew, so3_exp, so3_log, so3_right_jacobian, so3_right_jacobian_inv
from .state import NavState


GRAVITY = np.array([0.0, 0.0, -9.81])

# Covariance floor keeping the information matrix finite for noise-free inputs
COVARIANCE_FLOOR = 1e-12

# Allowed gap between state timestamps and the preintegrated interval, s
TIMESTAMP_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ImuSample:
    accel: np.ndarray
    gyro: np.ndarray
    dt: float


@dataclass(frozen=True)
class ImuNoiseParams:
    """Continuous-time white-noise densities and bias random-walk sigmas."""

    acc_noise_density: float = 0.01
    gyr_noise_density: float = 1e-3
    acc_bias_walk: float = 1e-3
    gyr_bias_walk: float = 1e-4


@dataclass(eq=False)
class PreintegratedImu:
    delta_p: np.ndarray
    delta_v: np.ndarray
    delta_r: np.ndarray
    dt: float
    covariance: np.ndarray
    bias_acc_lin: np.ndarray
    bias_gyr_lin: np.ndarray
    # d(delta)/d(bias): rows (p, phi, v), cols (ba, bg)
    j_p_ba: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    j_p_bg: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    j_v_ba: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    j_v_bg: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    j_r_bg: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    gravity: np.ndarray = field(default_factory=lambda: GRAVITY.copy())

    @property
    def bias_jacobian(self) -> np.ndarray:
        """The stacked 9x6 d(p, phi, v)/d(ba, bg)."""
        jac = np.zeros((9, 6))
        jac[0:3, 0:3], jac[0:3, 3:6] = self.j_p_ba, self.j_p_bg
        jac[3:6, 3:6] = self.j_r_bg
        jac[6:9, 0:3], jac[6:9, 3:6] = self.j_v_ba, self.j_v_bg
        return jac

    def corrected(
        self, bias_acc: np.ndarray, bias_gyr: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """First-order bias-corrected (dp, dv, dR)."""
        dba = bias_acc - self.bias_acc_lin
        dbg = bias_gyr - self.bias_gyr_lin
        dp = self.delta_p + self.j_p_ba @ dba + self.j_p_bg @ dbg
        dv = self.delta_v + self.j_v_ba @ dba + self.j_v_bg @ dbg
        dr = self.delta_r @ so3_exp(self.j_r_bg @ dbg)
        return dp, dv, dr

    def predict(self, state: NavState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Propagate a state across the interval: (R, v, p) at its end."""
        dp, dv, dr = self.corrected(state.bias_acc, state.bias_gyr)
        r0, v0, p0, dt = state.R, state.velocity, state.position, self.dt
        r1 = r0 @ dr
        v1 = v0 + self.gravity * dt + r0 @ dv
        p1 = p0 + v0 * dt + 0.5 * self.gravity * dt * dt + r0 @ dp
        return r1, v1, p1

    def full_covariance(self, noise: ImuNoiseParams) -> np.ndarray:
        """15x15 covariance over (p, phi, v, ba, bg) residual rows."""
        cov = np.zeros((15, 15))
        cov[:9, :9] = self.covariance
        cov[9:12, 9:12] = np.eye(3) * noise.acc_bias_walk**2 * self.dt
        cov[12:15, 12:15] = np.eye(3) * noise.gyr_bias_walk**2 * self.dt
        return cov + np.eye(15) * COVARIANCE_FLOOR


def _as_sample(sample: ImuSample | Sequence) -> ImuSample:
    if isinstance(sample, ImuSample):
        return sample
    accel, gyro, dt = sample
    return ImuSample(np.asarray(accel, dtype=np.float64), np.asarray(gyro, dtype=np.float64), dt)


def preintegrate(
    samples: Sequence[ImuSample | Sequence],
    bias_acc: np.ndarray | None = None,
    bias_gyr: np.ndarray | None = None,
    noise: ImuNoiseParams | None = None,
    gravity: np.ndarray | None = None,
) -> PreintegratedImu:
    """Integrate (accel, gyro, dt) samples between two keyframes.

    Raises:
        EmptySampleListError: If samples is empty.
        ValueError: If any dt is not positive.
    """
    if not samples:
        raise EmptySampleListError("no IMU samples to preintegrate")
    noise = noise or ImuNoiseParams()
    ba = np.zeros(3) if bias_acc is None else np.asarray(bias_acc, dtype=np.float64)
    bg = np.zeros(3) if bias_gyr is None else np.asarray(bias_gyr, dtype=np.float64)

    dr = np.eye(3)
    dv = np.zeros(3)
    dp = np.zeros(3)
    total = 0.0
    cov = np.zeros((9, 9))
    j_p_ba = np.zeros((3, 3))
    j_p_bg = np.zeros((3, 3))
    j_v_ba = np.zeros((3, 3))
    j_v_bg = np.zeros((3, 3))
    j_r_bg = np.zeros((3, 3))

    for raw in samples:
        s = _as_sample(raw)
        dt = float(s.dt)
        if dt <= 0.0:
            raise InvalidFactorError(f"IMU sample dt must be positive, got {dt}")
        acc = s.accel - ba
        omega = s.gyro - bg
        theta = omega * dt
        step_r = so3_exp(theta)
        dr_mid = dr @ so3_exp(0.5 * theta)
        acc_skew = skew(acc)

        a_mat = np.eye(9)
        a_mat[0:3, 3:6] = -0.5 * dr_mid @ acc_skew * dt * dt
        a_mat[0:3, 6:9] = np.eye(3) * dt
        a_mat[3:6, 3:6] = step_r.T
        a_mat[6:9, 3:6] = -dr_mid @ acc_skew * dt
        b_mat = np.zeros((9, 6))
        b_mat[0:3, 3:6] = 0.5 * dr_mid * dt * dt
        b_mat[3:6, 0:3] = so3_right_jacobian(theta) * dt
        b_mat[6:9, 3:6] = dr_mid * dt
        q_mat = np.diag(
            np.concatenate(
                (
                    np.full(3, noise.gyr_noise_density**2 / dt),
                    np.full(3, noise.acc_noise_density**2 / dt),
                )
            )
        )
        cov = a_mat @ cov @ a_mat.T + b_mat @ q_mat @ b_mat.T

        j_p_ba += j_v_ba * dt - 0.5 * dr_mid * dt * dt
        j_p_bg += j_v_bg * dt - 0.5 * dr_mid @ acc_skew @ j_r_bg * dt * dt
        j_v_ba += -dr_mid * dt
        j_v_bg += -dr_mid @ acc_skew @ j_r_bg * dt
        j_r_bg = step_r.T @ j_r_bg - so3_right_jacobian(theta) * dt

        dp = dp + dv * dt + 0.5 * dr_mid @ acc * dt * dt
        dv = dv + dr_mid @ acc * dt
        dr = dr @ step_r
        total += dt

    return PreintegratedImu(
        delta_p=dp,
        delta_v=dv,
        delta_r=dr,
        dt=total,
        covariance=0.5 * (cov + cov.T),
        bias_acc_lin=ba,
        bias_gyr_lin=bg,
        j_p_ba=j_p_ba,
        j_p_bg=j_p_bg,
        j_v_ba=j_v_ba,
        j_v_bg=j_v_bg,
        j_r_bg=j_r_bg,
        gravity=GRAVITY.copy() if gravity is None else np.asarray(gravity, dtype=np.float64),
    )


def imu_residual_and_jacobians(
    x_k: NavState, x_k1: NavState, pre: PreintegratedImu
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """15-vector residual (p, phi, v, ba, bg) and its 15x15 Jacobians per state.

    Raises:
        TimestampMismatchError: If the states' time gap differs from pre.dt.
    """
    gap = x_k1.timestamp - x_k.timestamp
    if abs(gap - pre.dt) > TIMESTAMP_TOLERANCE:
        raise TimestampMismatchError(
            f"states are {gap:.6f} s apart, preintegration covers {pre.dt:.6f} s"
        )
    dt = pre.dt
    g = pre.gravity
    r0, r1 = x_k.R, x_k1.R
    r0t = r0.T
    dp, dv, dr = pre.corrected(x_k.bias_acc, x_k.bias_gyr)

    pos_term = x_k1.position - x_k.position - x_k.velocity * dt - 0.5 * g * dt * dt
    vel_term = x_k1.velocity - x_k.velocity - g * dt
    r_p = r0t @ pos_term - dp
    r_v = r0t @ vel_term - dv
    r_r = so3_log(dr.T @ r0t @ r1)
    r_ba = x_k1.bias_acc - x_k.bias_acc
    r_bg = x_k1.bias_gyr - x_k.bias_gyr
    residual = np.concatenate((r_p, r_r, r_v, r_ba, r_bg))

    jr_inv = so3_right_jacobian_inv(r_r)
    dbg = x_k.bias_gyr - pre.bias_gyr_lin
    j0 = np.zeros((15, 15))
    j1 = np.zeros((15, 15))

    # position rows
    j0[0:3, 0:3] = -np.eye(3)
    j0[0:3, 3:6] = skew(r0t @ pos_term)
    j0[0:3, 6:9] = -r0t * dt
    j0[0:3, 9:12] = -pre.j_p_ba
    j0[0:3, 12:15] = -pre.j_p_bg
    j1[0:3, 0:3] = r0t @ r1

    # rotation rows
    j0[3:6, 3:6] = -jr_inv @ r1.T @ r0
    j0[3:6, 12:15] = (
        -jr_inv @ so3_exp(r_r).T @ so3_right_jacobian(pre.j_r_bg @ dbg) @ pre.j_r_bg
    )
    j1[3:6, 3:6] = jr_inv

    # velocity rows
    j0[6:9, 3:6] = skew(r0t @ vel_term)
    j0[6:9, 6:9] = -r0t
    j0[6:9, 9:12] = -pre.j_v_ba
    j0[6:9, 12:15] = -pre.j_v_bg
    j1[6:9, 6:9] = r0t

    # bias random walk
    j0[9:15, 9:15] = -np.eye(6)
    j1[9:15, 9:15] = np.eye(6)
    return residual, j0, j1


def imu_residual(x_k: NavState, x_k1: NavState, pre: PreintegratedImu) -> np.ndarray:
    return imu_residual_and_jacobians(x_k, x_k1, pre)[0]
