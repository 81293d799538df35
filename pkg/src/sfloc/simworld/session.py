"""One synthetic drive: ground truth, sensor streams and per-keyframe perception data."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..core.logging import get_logger
from ..dba import InverseDepthGrid
from ..fgraph import KeyframeInput, NavState
from ..geom import CameraIntrinsics, Pose, forward_camera_extrinsic
from .appearance import AppearanceField
from .config import WorldConfig
from .providers import FlowProvider, FrameTruth, MatcherProvider, OdometryProvider
from .rng import stream_rng
from .scene import Scene, build_scene, gt_inverse_depth
from .sensors import TIME_EPS, GnssFix, ImuStream, synth_gnss, synth_imu
from .trajectory import Trajectory, build_trajectory

logger = get_logger(__name__)


@dataclass(eq=False)
class SessionStreams:
    """Everything generated for one session; keyframe lists share one index."""

    session: int
    config: WorldConfig
    trajectory: Trajectory
    k: CameraIntrinsics
    extrinsic: Pose
    keyframe_times: np.ndarray
    states: list[NavState]
    camera_poses: list[Pose]
    grids: list[InverseDepthGrid]
    descriptors: np.ndarray
    imu: ImuStream
    gnss: list[GnssFix]
    query_indices: np.ndarray
    scene: Scene = field(repr=False, default_factory=Scene)

    def __len__(self) -> int:
        return len(self.states)

    def camera_pose_cw(self, index: int) -> Pose:
        return self.camera_poses[index].inverse()

    def truth(self, index: int) -> FrameTruth:
        return FrameTruth(self.camera_poses[index], self.grids[index])

    def gnss_at(self, index: int) -> list[GnssFix]:
        t = self.keyframe_times[index]
        return [fix for fix in self.gnss if abs(fix.t - t) <= TIME_EPS]

    def initial_grid(self, index: int) -> np.ndarray:
        """Noisy initial inverse depth for a keyframe (log-normal scale noise)."""
        sigma = self.config.flow.init_depth_noise
        grid = self.grids[index].flat()
        if sigma <= 0.0:
            return grid.copy()
        rng = stream_rng(self.config.seed, self.session, "init_depth", index)
        return grid * np.exp(rng.normal(0.0, sigma, grid.shape))

    def keyframe_inputs(self) -> list[KeyframeInput]:
        """Estimator inputs in keyframe order; IMU covers the interval since the previous one."""
        inputs = []
        for i, t in enumerate(self.keyframe_times):
            samples = self.imu.between(self.keyframe_times[i - 1], t) if i else []
            inputs.append(
                KeyframeInput(
                    timestamp=float(t),
                    imu_samples=samples,
                    gnss=[fix.position for fix in self.gnss_at(i)],
                    init_inv_depth=self.initial_grid(i),
                )
            )
        return inputs

    def flow_provider(self) -> FlowProvider:
        return FlowProvider(
            [self.camera_pose_cw(i) for i in range(len(self))],
            self.grids,
            self.k,
            self.config.flow,
            seed=self.config.seed,
            session=self.session,
        )

    def matcher(self, k_map: CameraIntrinsics) -> MatcherProvider:
        return MatcherProvider(
            k_map, self.k, self.config.matcher, seed=self.config.seed, session=self.session
        )

    def odometry(self) -> OdometryProvider:
        return OdometryProvider(
            self.config.odometry_translation_error,
            self.config.odometry_rotation_sigma,
            seed=self.config.seed,
            session=self.session,
        )


def keyframe_times(duration: float, rate_hz: float) -> np.ndarray:
    count = int(math.floor(duration * rate_hz + TIME_EPS)) + 1
    return np.arange(count) / rate_hz


def gen_session(cfg: WorldConfig, session_id: int, scene: Scene | None = None) -> SessionStreams:
    """Generate a full session; the same (cfg, session_id) always yields identical streams.

    Raises:
        DegenerateRouteError: If the route has fewer than two distinct waypoints.
    """
    traj = build_trajectory(
        cfg.route,
        cfg.speed_mps,
        cfg.body_height_m,
        closed=cfg.closed_route,
        lane_offset=cfg.lane_offset(session_id),
    )
    scene = scene if scene is not None else build_scene(cfg.scene, cfg.seed)
    k = cfg.camera.intrinsics(session_id)
    extrinsic = forward_camera_extrinsic(np.asarray(cfg.camera_offset, dtype=np.float64))
    appearance = AppearanceField(cfg.appearance, cfg.seed)

    times = keyframe_times(traj.duration, cfg.keyframe_rate_hz)
    states = [traj.state(t) for t in times]
    camera_poses = [s.pose @ extrinsic for s in states]
    grids = [gt_inverse_depth(p, k, scene) for p in camera_poses]
    descriptors = np.stack([appearance.descriptor(p, session_id) for p in camera_poses])
    stride = max(1, round(cfg.keyframe_rate_hz / cfg.query_rate_hz))

    imu = synth_imu(traj, cfg.imu, cfg.seed, session_id)
    gnss = synth_gnss(traj, cfg.gnss, cfg.seed, session_id)
    logger.info(
        "session_generated",
        session=session_id,
        duration_s=round(traj.duration, 3),
        keyframes=len(states),
        imu_samples=len(imu),
        gnss_fixes=len(gnss),
    )
    return SessionStreams(
        session=session_id,
        config=cfg,
        trajectory=traj,
        k=k,
        extrinsic=extrinsic,
        keyframe_times=times,
        states=states,
        camera_poses=camera_poses,
        grids=grids,
        descriptors=descriptors,
        imu=imu,
        gnss=gnss,
        query_indices=np.arange(0, len(states), stride),
        scene=scene,
    )
