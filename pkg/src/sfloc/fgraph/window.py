"""Sliding-window multi-sensor DBA estimator.

Each keyframe adds a NavState predicted by IMU preintegration, its GNSS
fixes and an initial inverse-depth grid. The window is then optimized
dba_iters times, each time relinearizing the DBA containers from fresh
residual flow. When the window is full the oldest frame is marginalized;
its own DBA constraint, inertial and GNSS factors are copied to the
global archive first.
"""

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, Field

from ..core.logging import get_logger
from ..dba import (
    DBAConstraint,
    build_constraints,
    depth_backsub,
    update_inverse_depth,
    window_edges,
)
from ..dba.solver import FlowFn
from ..geom import CameraIntrinsics, Pose, forward_camera_extrinsic, se3_log
from .factors import DbaHessianFactor, GnssFactor, ImuFactor, PriorFactor
from .graph import FactorGraph
from .imu import ImuNoiseParams, ImuSample, preintegrate
from .marginal import marginalize
from .noise import NoiseModel, RobustLoss
from .smoother import GlobalArchive, global_smooth
from .solver import SolveReport, SolverSettings, solve
from .state import NavState

logger = get_logger(__name__)


class WindowConfig(BaseModel):
    """Sliding-window estimator settings."""

    window_size: int = Field(default=10, ge=2)
    dba_iters: int = Field(default=2, ge=1)
    edge_radius: int = Field(default=2, ge=1)
    global_period: int = Field(default=50, ge=1)
    gnss_sigma: float = Field(default=0.5, gt=0)
    gnss_cauchy_scale: float = Field(default=1.0, gt=0)
    lever_arm: tuple[float, float, float] = (0.0, 0.0, 0.5)
    camera_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    prior_sigmas: tuple[float, float, float, float, float] = (0.5, 0.02, 0.2, 0.05, 0.005)
    imu_acc_noise: float = Field(default=0.01, gt=0)
    imu_gyr_noise: float = Field(default=1e-3, gt=0)
    imu_acc_walk: float = Field(default=1e-3, gt=0)
    imu_gyr_walk: float = Field(default=1e-4, gt=0)
    solver: SolverSettings = Field(default_factory=lambda: SolverSettings(max_iters=10))
    global_solver: SolverSettings = Field(default_factory=SolverSettings)

    @property
    def imu_noise(self) -> ImuNoiseParams:
        return ImuNoiseParams(
            acc_noise_density=self.imu_acc_noise,
            gyr_noise_density=self.imu_gyr_noise,
            acc_bias_walk=self.imu_acc_walk,
            gyr_bias_walk=self.imu_gyr_walk,
        )

    def prior_noise(self) -> NoiseModel:
        pos, rot, vel, ba, bg = self.prior_sigmas
        return NoiseModel.from_sigmas(
            np.repeat([pos, rot, vel, ba, bg], 3).astype(np.float64)
        )


@dataclass(eq=False)
class KeyframeInput:
    """Sensor data arriving with one keyframe.

    imu_samples cover the interval since the previous keyframe (ignored for
    the first one); gnss holds antenna fixes assigned to this keyframe.
    """

    timestamp: float
    imu_samples: Sequence[ImuSample] = field(default_factory=list)
    gnss: Sequence[np.ndarray] = field(default_factory=list)
    init_inv_depth: np.ndarray | None = None


@dataclass
class WindowStepResult:
    frame_id: int
    state: NavState
    marginalized: list[int] = field(default_factory=list)
    reports: list[SolveReport] = field(default_factory=list)


def camera_pose_cw(state: NavState, extrinsic: Pose) -> Pose:
    """World-to-camera pose of a body state."""
    return (state.pose @ extrinsic).inverse()


class SlidingWindowEstimator:
    """Owns the window graph, the per-frame depth grids and the global archive."""

    def __init__(
        self,
        config: WindowConfig,
        k: CameraIntrinsics,
        flow_fn: FlowFn,
        initial: NavState,
        initial_inv_depth: np.ndarray,
    ) -> None:
        self.config = config
        self.k = k
        self.flow_fn = flow_fn
        self.extrinsic = forward_camera_extrinsic(np.array(config.camera_offset))
        self.lever = np.array(config.lever_arm, dtype=np.float64)
        self.graph = FactorGraph()
        self.archive = GlobalArchive()
        self.window: list[int] = []
        self.grids: dict[int, np.ndarray] = {}
        self.realtime: dict[int, NavState] = {}
        self.smoothed: dict[int, NavState] = {}
        self._initial = initial
        self._initial_grid = np.asarray(initial_inv_depth, dtype=np.float64).ravel()
        self._next_id = 0
        self._gnss_noise = NoiseModel.isotropic(3, config.gnss_sigma)
        self._gnss_loss = RobustLoss.cauchy(config.gnss_cauchy_scale)

    # --- public API ---

    def add_keyframe(self, kf: KeyframeInput) -> WindowStepResult:
        """Insert a keyframe, optimize the window and marginalize if full."""
        frame_id = self._next_id
        self._next_id += 1
        if not self.window:
            state = NavState(
                pose=self._initial.pose,
                velocity=self._initial.velocity,
                bias_acc=self._initial.bias_acc,
                bias_gyr=self._initial.bias_gyr,
                timestamp=kf.timestamp,
            )
            self.graph.add_state(frame_id, state)
            self.graph.add_factor(PriorFactor(frame_id, state, self.config.prior_noise()))
            grid = self._initial_grid
        else:
            prev_id = self.window[-1]
            prev = self.graph.values[prev_id]
            assert isinstance(prev, NavState)
            pre = preintegrate(
                kf.imu_samples, prev.bias_acc, prev.bias_gyr, self.config.imu_noise
            )
            r1, v1, p1 = pre.predict(prev)
            state = NavState(
                pose=Pose.from_rt(r1, p1),
                velocity=v1,
                bias_acc=prev.bias_acc,
                bias_gyr=prev.bias_gyr,
                timestamp=prev.timestamp + pre.dt,
            )
            self.graph.add_state(frame_id, state)
            self.graph.add_factor(ImuFactor(prev_id, frame_id, pre, self.config.imu_noise))
            grid = self.grids[prev_id]
        if kf.init_inv_depth is not None:
            grid = np.asarray(kf.init_inv_depth, dtype=np.float64).ravel()
        self.grids[frame_id] = grid.copy()
        for fix in kf.gnss:
            self.graph.add_factor(
                GnssFactor(
                    frame_id,
                    fix,
                    self._gnss_noise,
                    lever=self.lever,
                    loss=self._gnss_loss,
                )
            )
        self.window.append(frame_id)

        result = WindowStepResult(frame_id=frame_id, state=state)
        result.reports = self._optimize()
        newest = self.graph.values[frame_id]
        assert isinstance(newest, NavState)
        result.state = newest
        self.realtime[frame_id] = newest

        while len(self.window) > self.config.window_size:
            result.marginalized.append(self._marginalize_oldest())
        if self._next_id % self.config.global_period == 0:
            self.smoothed, _ = global_smooth(
                self.archive, self.config.global_solver, self.graph.values
            )
        logger.debug(
            "window_step",
            frame=frame_id,
            window=len(self.window),
            marginalized=result.marginalized,
        )
        return result

    def finalize(self) -> dict[int, NavState]:
        """Flush the remaining window into the archive and run the global smoother."""
        self._remove_dba_factors()
        for fid in self.window:
            self._archive_constraint(fid)
        for factor in self.graph.factors:
            if isinstance(factor, PriorFactor | ImuFactor | GnssFactor):
                self.archive.add(factor)
        for fid in self.window:
            self.archive.set_value(fid, self.graph.values[fid])
        self.smoothed, _ = global_smooth(self.archive, self.config.global_solver)
        return self.smoothed

    def window_states(self) -> dict[int, NavState]:
        return {fid: self.graph.values[fid] for fid in self.window}  # type: ignore[misc]

    def camera_pose(self, state: NavState) -> Pose:
        """Camera-to-world pose of a body state."""
        return state.pose @ self.extrinsic

    # --- internals ---

    def _state(self, fid: int) -> NavState:
        value = self.graph.values[fid] if fid in self.graph.values else self.archive.values[fid]
        assert isinstance(value, NavState)
        return value

    def _states_cw(self, frame_ids: Sequence[int] | None = None) -> dict[int, Pose]:
        ids = self.window if frame_ids is None else frame_ids
        return {fid: camera_pose_cw(self._state(fid), self.extrinsic) for fid in ids}

    def _constraints(self, edges: list[tuple[int, int]]) -> list[DBAConstraint]:
        if not edges:
            return []
        ids = sorted({fid for edge in edges for fid in edge})
        return build_constraints(self._states_cw(ids), self.grids, edges, self.flow_fn, self.k)

    def _archive_constraint(self, source: int) -> None:
        """Archive source's DBA constraint over every known frame within edge_radius.

        Neighbours already marginalized contribute through their archived states,
        so the archive holds each edge once, reduced with its source's full depth block.
        """
        radius = self.config.edge_radius
        edges = [
            (source, fid)
            for fid in range(source - radius, source + radius + 1)
            if fid != source and (fid in self.window or fid in self.archive.values)
        ]
        for con in self._constraints(edges):
            self.archive.add(self._dba_factor(con))

    def _dba_factor(self, constraint: DBAConstraint) -> DbaHessianFactor:
        return DbaHessianFactor(constraint.frame_ids, constraint, self.extrinsic)

    def _remove_dba_factors(self) -> None:
        self.graph.remove_factors(self.graph.factors_of_type(DbaHessianFactor))

    def _optimize(self) -> list[SolveReport]:
        reports = []
        edges = window_edges(self.window, self.config.edge_radius)
        iterations = self.config.dba_iters if len(self.window) > 1 else 1
        for _ in range(iterations):
            self._remove_dba_factors()
            constraints = self._constraints(edges)
            for con in constraints:
                self.graph.add_factor(self._dba_factor(con))
            reports.append(solve(self.graph, self.config.solver))
            self._backsubstitute(constraints)
        return reports

    def _backsubstitute(self, constraints: list[DBAConstraint]) -> None:
        if not constraints:
            return
        current = self._states_cw()
        for con in constraints:
            updates = {
                fid: se3_log(current[fid] @ lin.inverse())
                for fid, lin in zip(con.frame_ids, con.lin_poses, strict=True)
            }
            delta = depth_backsub(con, updates)
            self.grids[con.source] = update_inverse_depth(self.grids[con.source], delta)

    def _marginalize_oldest(self) -> int:
        oldest = self.window[0]
        self._remove_dba_factors()
        touching = [
            (i, j)
            for i, j in window_edges(self.window, self.config.edge_radius)
            if oldest in (i, j)
        ]
        for con in self._constraints(touching):
            self.graph.add_factor(self._dba_factor(con))
        self._archive_constraint(oldest)
        for factor in self.graph.factors_touching(oldest):
            if isinstance(factor, PriorFactor | ImuFactor | GnssFactor):
                self.archive.add(factor)
        self.archive.set_value(oldest, self.graph.values[oldest])
        marginalize(self.graph, [oldest])
        self.window.pop(0)
        logger.debug("window_marginalized", frame=oldest)
        return oldest


def sliding_window_step(
    estimator: SlidingWindowEstimator, keyframe: KeyframeInput
) -> WindowStepResult:
    """One real-time step: insert, optimize, marginalize."""
    return estimator.add_keyframe(keyframe)
