"""Factor-graph engine: IMU preintegration, GNSS and DBA factors, marginalization, smoothing."""

from .export import TRAJECTORY_HEADER, export_trajectory_csv, read_trajectory_csv
from .factors import (
    DbaHessianFactor,
    DepthPriorFactor,
    Factor,
    GnssFactor,
    ImuFactor,
    LinearFactor,
    Linearization,
    MarginalPriorFactor,
    OdometryFactor,
    PriorFactor,
    QuadraticFactor,
    ReprojectionFactor,
    ResidualFactor,
    camera_container,
    dba_hessian_cost,
    gnss_residual,
    gnss_residual_and_jacobian,
    relative_pose_residual,
    reprojection_residual,
)
from .graph import FactorGraph, NormalEquations
from .imu import (
    GRAVITY,
    ImuNoiseParams,
    ImuSample,
    PreintegratedImu,
    imu_residual,
    imu_residual_and_jacobians,
    preintegrate,
)
from .marginal import MarginalPrior, marginalize
from .noise import LossKind, NoiseModel, RobustLoss
from .smoother import GlobalArchive, global_smooth
from .solver import SolveReport, SolverMode, SolverSettings, Termination, solve
from .state import NavState, dof, local, local_jacobian, pose_of, retract
from .window import (
    KeyframeInput,
    SlidingWindowEstimator,
    WindowConfig,
    WindowStepResult,
    camera_pose_cw,
    sliding_window_step,
)

__all__ = [
    "GRAVITY",
    "TRAJECTORY_HEADER",
    "DbaHessianFactor",
    "DepthPriorFactor",
    "Factor",
    "FactorGraph",
    "GlobalArchive",
    "GnssFactor",
    "ImuFactor",
    "ImuNoiseParams",
    "ImuSample",
    "KeyframeInput",
    "LinearFactor",
    "Linearization",
    "LossKind",
    "MarginalPrior",
    "MarginalPriorFactor",
    "NavState",
    "NoiseModel",
    "NormalEquations",
    "OdometryFactor",
    "PreintegratedImu",
    "PriorFactor",
    "QuadraticFactor",
    "ReprojectionFactor",
    "ResidualFactor",
    "RobustLoss",
    "SlidingWindowEstimator",
    "SolveReport",
    "SolverMode",
    "SolverSettings",
    "Termination",
    "WindowConfig",
    "WindowStepResult",
    "camera_container",
    "camera_pose_cw",
    "dba_hessian_cost",
    "dof",
    "export_trajectory_csv",
    "global_smooth",
    "gnss_residual",
    "gnss_residual_and_jacobian",
    "imu_residual",
    "imu_residual_and_jacobians",
    "local",
    "local_jacobian",
    "marginalize",
    "pose_of",
    "preintegrate",
    "read_trajectory_csv",
    "relative_pose_residual",
    "reprojection_residual",
    "retract",
    "sliding_window_step",
    "solve",
]
