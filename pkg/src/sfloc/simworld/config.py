"""Synthetic world configuration."""

from typing import Literal

from pydantic import BaseModel, Field

from ..geom import CameraIntrinsics


class ImuSimConfig(BaseModel):
    rate_hz: float = Field(default=200.0, gt=0)
    acc_noise_density: float = Field(default=0.0, ge=0)
    gyr_noise_density: float = Field(default=0.0, ge=0)
    acc_bias_sigma: float = Field(default=0.0, ge=0)
    gyr_bias_sigma: float = Field(default=0.0, ge=0)
    gravity_enabled: bool = True


class GnssSimConfig(BaseModel):
    rate_hz: float = Field(default=1.0, gt=0)
    sigma: float = Field(default=0.0, ge=0)
    outages: list[tuple[float, float]] = Field(default_factory=list)
    outlier_rate: float = Field(default=0.0, ge=0, le=1)
    outlier_min_m: float = 20.0
    outlier_max_m: float = 100.0
    lever_arm: tuple[float, float, float] = (0.0, 0.0, 0.5)


class TwinZone(BaseModel):
    """Cells of the target rectangle copy the place codes of the source rectangle."""

    source_min: tuple[float, float]
    size: tuple[float, float]
    offset: tuple[float, float]


class AppearanceConfig(BaseModel):
    dim: int = Field(default=256, ge=2)
    cell_size_m: float = Field(default=10.0, gt=0)
    sector_deg: float = Field(default=60.0, gt=0, le=360)
    session_sigma: float = Field(default=0.3, ge=0)
    twin_zones: list[TwinZone] = Field(default_factory=list)


class MatcherSimConfig(BaseModel):
    pixel_sigma: float = Field(default=1.0, ge=0)
    outlier_fraction: float = Field(default=0.3, ge=0, le=1)
    matches_per_pair: int = Field(default=64, ge=1)
    depth_scale_error: float = Field(default=0.0, ge=0)


class FlowSimConfig(BaseModel):
    pixel_sigma: float = Field(default=0.0, ge=0)
    outlier_fraction: float = Field(default=0.0, ge=0, le=1)
    outlier_weight: Literal["low", "high"] = "low"
    init_depth_noise: float = Field(default=0.1, ge=0)


class SceneConfig(BaseModel):
    kind: Literal["grid_city", "corridor"] = "grid_city"
    blocks_x: int = Field(default=4, ge=1)
    blocks_y: int = Field(default=4, ge=1)
    block_size_m: float = Field(default=80.0, gt=0)
    street_width_m: float = Field(default=20.0, gt=0)
    setback_variation_m: float = Field(default=4.0, ge=0)
    height_min_m: float = Field(default=8.0, gt=0)
    height_max_m: float = Field(default=30.0, gt=0)
    corridor_length_m: float = Field(default=400.0, gt=0)
    wall_distance_m: float = Field(default=8.0, gt=0)
    wall_height_m: float = Field(default=12.0, gt=0)
    facade_segment_m: float = Field(default=10.0, gt=0)
    facade_jitter_m: float = Field(default=1.5, ge=0)


class CameraSimConfig(BaseModel):
    width: int = 256
    height: int = 192
    hfov_deg: float = Field(default=60.0, gt=0, lt=180)
    session_hfov_deg: dict[int, float] = Field(default_factory=dict)

    def intrinsics(self, session: int = 0) -> CameraIntrinsics:
        hfov = self.session_hfov_deg.get(session, self.hfov_deg)
        return CameraIntrinsics.from_fov(self.width, self.height, hfov)


class WorldConfig(BaseModel):
    """Everything that determines a synthetic session; a fixed seed reproduces it bitwise."""

    seed: int = 0
    route: list[tuple[float, float]] = Field(default_factory=lambda: [(0.0, 0.0), (100.0, 0.0)])
    closed_route: bool = False
    speed_mps: float = Field(default=5.0, gt=0)
    body_height_m: float = Field(default=1.5, gt=0)
    lane_offsets_m: list[float] = Field(default_factory=lambda: [0.0])
    keyframe_rate_hz: float = Field(default=5.0, gt=0)
    query_rate_hz: float = Field(default=1.0, gt=0)
    camera_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    odometry_translation_error: float = Field(default=0.01, ge=0)
    odometry_rotation_sigma: float = Field(default=1e-3, ge=0)
    camera: CameraSimConfig = Field(default_factory=CameraSimConfig)
    scene: SceneConfig = Field(default_factory=SceneConfig)
    imu: ImuSimConfig = Field(default_factory=ImuSimConfig)
    gnss: GnssSimConfig = Field(default_factory=GnssSimConfig)
    appearance: AppearanceConfig = Field(default_factory=AppearanceConfig)
    matcher: MatcherSimConfig = Field(default_factory=MatcherSimConfig)
    flow: FlowSimConfig = Field(default_factory=FlowSimConfig)

    def lane_offset(self, session: int) -> float:
        return self.lane_offsets_m[session % len(self.lane_offsets_m)]
