"""Deterministic synthetic worlds: trajectories, sensors, depth and perception providers."""

from .appearance import AppearanceField, descriptor_provider
from .archive import (
    SessionArchive,
    keyframe_records,
    read_session_archive,
    write_session_archive,
)
from .config import (
    AppearanceConfig,
    CameraSimConfig,
    FlowSimConfig,
    GnssSimConfig,
    ImuSimConfig,
    MatcherSimConfig,
    SceneConfig,
    TwinZone,
    WorldConfig,
)
from .providers import (
    FlowProvider,
    FrameTruth,
    MatcherProvider,
    OdometryProvider,
    decode_frame_id,
    encode_frame_id,
)
from .rng import stream_rng
from .scenarios import (
    ambiguity_world,
    benchmark_world,
    corridor_world,
    gnss_outage_world,
    grid_city_route,
    square_loop,
    straight_route,
    twin_zones_along,
)
from .scene import Scene, build_corridor, build_grid_city, build_scene, gt_inverse_depth
from .sensors import GnssFix, ImuStream, synth_gnss, synth_imu
from .session import SessionStreams, gen_session, keyframe_times
from .trajectory import Trajectory, build_trajectory

__all__ = [
    "AppearanceConfig",
    "AppearanceField",
    "CameraSimConfig",
    "FlowProvider",
    "FlowSimConfig",
    "FrameTruth",
    "GnssFix",
    "GnssSimConfig",
    "ImuSimConfig",
    "ImuStream",
    "MatcherProvider",
    "MatcherSimConfig",
    "OdometryProvider",
    "Scene",
    "SceneConfig",
    "SessionArchive",
    "SessionStreams",
    "Trajectory",
    "TwinZone",
    "WorldConfig",
    "ambiguity_world",
    "benchmark_world",
    "build_corridor",
    "build_grid_city",
    "build_scene",
    "build_trajectory",
    "corridor_world",
    "decode_frame_id",
    "descriptor_provider",
    "encode_frame_id",
    "gen_session",
    "gnss_outage_world",
    "grid_city_route",
    "gt_inverse_depth",
    "keyframe_records",
    "keyframe_times",
    "read_session_archive",
    "square_loop",
    "straight_route",
    "stream_rng",
    "synth_gnss",
    "synth_imu",
    "twin_zones_along",
    "write_session_archive",
]
