"""IMU and GNSS streams synthesized from a ground-truth trajectory."""

import math
from dataclasses import dataclass

import numpy as np

from ..fgraph import GRAVITY, ImuSample
from .config import GnssSimConfig, ImuSimConfig
from .rng import stream_rng
from .trajectory import Trajectory

# Slack when matching sample or fix times against keyframe times, s
TIME_EPS = 1e-6


@dataclass(eq=False)
class ImuStream:
    """Samples on a regular clock; row i covers [t[i], t[i] + dt)."""

    t: np.ndarray
    accel: np.ndarray
    gyro: np.ndarray
    dt: float
    bias_acc: np.ndarray
    bias_gyr: np.ndarray

    def __len__(self) -> int:
        return int(self.t.shape[0])

    def between(self, t0: float, t1: float) -> list[ImuSample]:
        """Samples whose interval lies inside [t0, t1]."""
        lo = math.ceil((t0 - TIME_EPS) / self.dt)
        hi = math.floor((t1 + TIME_EPS) / self.dt)
        return [
            ImuSample(self.accel[i], self.gyro[i], self.dt)
            for i in range(max(lo, 0), min(hi, len(self)))
        ]


@dataclass(frozen=True, eq=False)
class GnssFix:
    t: float
    position: np.ndarray
    outlier: bool = False


def synth_imu(
    traj: Trajectory, cfg: ImuSimConfig, seed: int = 0, session: int = 0
) -> ImuStream:
    """Midpoint-sampled specific force and body rate.

    accel = Rᵀ(a − g) + b_a + n_a and gyro = ω + b_g + n_g with discrete noise
    sigma = density / sqrt(dt).
    """
    dt = 1.0 / cfg.rate_hz
    n = int(math.floor(traj.duration / dt + TIME_EPS))
    t = np.arange(n) * dt
    mid = t + 0.5 * dt
    g = GRAVITY if cfg.gravity_enabled else np.zeros(3)

    accel = np.empty((n, 3))
    gyro = np.empty((n, 3))
    acc_world = traj.acceleration(mid)
    for i, tm in enumerate(mid):
        accel[i] = traj.rotation(tm).T @ (acc_world[i] - g)
        gyro[i] = traj.angular_velocity_body(tm)

    bias_rng = stream_rng(seed, session, "imu_bias")
    bias_acc = bias_rng.normal(0.0, cfg.acc_bias_sigma, 3) if cfg.acc_bias_sigma else np.zeros(3)
    bias_gyr = bias_rng.normal(0.0, cfg.gyr_bias_sigma, 3) if cfg.gyr_bias_sigma else np.zeros(3)
    accel += bias_acc
    gyro += bias_gyr

    noise_rng = stream_rng(seed, session, "imu_noise")
    if cfg.acc_noise_density:
        accel += noise_rng.normal(0.0, cfg.acc_noise_density / math.sqrt(dt), (n, 3))
    if cfg.gyr_noise_density:
        gyro += noise_rng.normal(0.0, cfg.gyr_noise_density / math.sqrt(dt), (n, 3))
    return ImuStream(t=t, accel=accel, gyro=gyro, dt=dt, bias_acc=bias_acc, bias_gyr=bias_gyr)


def in_outage(t: float, outages: list[tuple[float, float]]) -> bool:
    return any(a <= t <= b for a, b in outages)


def synth_gnss(
    traj: Trajectory, cfg: GnssSimConfig, seed: int = 0, session: int = 0
) -> list[GnssFix]:
    """Antenna positions with Gaussian noise, outage gaps and gross outliers."""
    noise_rng = stream_rng(seed, session, "gnss_noise")
    outlier_rng = stream_rng(seed, session, "gnss_outlier")
    lever = np.asarray(cfg.lever_arm, dtype=np.float64)
    fixes = []
    count = int(math.floor(traj.duration * cfg.rate_hz + TIME_EPS)) + 1
    for i in range(count):
        t = i / cfg.rate_hz
        # draws happen for every epoch so outages never shift later noise
        noise = noise_rng.normal(0.0, cfg.sigma, 3) if cfg.sigma else np.zeros(3)
        is_outlier = bool(outlier_rng.random() < cfg.outlier_rate)
        magnitude = outlier_rng.uniform(cfg.outlier_min_m, cfg.outlier_max_m)
        bearing = outlier_rng.uniform(0.0, 2.0 * math.pi)
        if in_outage(t, cfg.outages):
            continue
        pose = traj.pose(t)
        antenna = pose.act(lever) + noise
        if is_outlier:
            antenna = antenna + magnitude * np.array([math.cos(bearing), math.sin(bearing), 0.0])
        fixes.append(GnssFix(t=t, position=antenna, outlier=is_outlier))
    return fixes
