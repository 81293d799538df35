"""Run configuration from a key=value file and the environment."""

import math
from functools import lru_cache
from pathlib import Path
from typing import Any, Literal

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from ..fgraph import SolverSettings, WindowConfig
from ..fineloc import FineConfig
from ..geom import Pose2D
from ..mapstore import InsertPolicy, PolicyKind
from ..simworld import (
    WorldConfig,
    ambiguity_world,
    benchmark_world,
    corridor_world,
    gnss_outage_world,
    square_loop,
    straight_route,
)
from .errors import ConfigError

Scenario = Literal["benchmark", "ambiguity", "corridor", "outage", "straight", "square"]


class Settings(BaseSettings):
    """Settings loaded from a dotenv-style config file and environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
        populate_by_name=True,
    )

    # Runtime
    environment: Literal["development", "production", "test"] = Field(
        default="development", alias="SFLOC_ENV"
    )
    log_level: str = Field(default="INFO", alias="LOG_LEVEL")

    # World
    seed: int = Field(default=0, ge=0, alias="SEED")
    scenario: Scenario = Field(default="benchmark", alias="SCENARIO")
    route: list[tuple[float, float]] | None = Field(default=None, alias="ROUTE")
    speed_mps: float = Field(default=5.0, gt=0, alias="SPEED_MPS")
    keyframe_rate_hz: float = Field(default=5.0, gt=0, alias="KEYFRAME_RATE_HZ")
    query_rate_hz: float = Field(default=1.0, gt=0, alias="QUERY_RATE_HZ")
    descriptor_dim: int = Field(default=256, ge=2, alias="DESCRIPTOR_DIM")
    session_sigma: float = Field(default=0.3, ge=0, alias="SESSION_SIGMA")
    gnss_sim_sigma: float = Field(default=0.5, ge=0, alias="GNSS_SIM_SIGMA")
    gnss_outages: list[tuple[float, float]] = Field(default_factory=list, alias="GNSS_OUTAGES")
    gnss_outlier_rate: float = Field(default=0.0, ge=0, le=1, alias="GNSS_OUTLIER_RATE")
    matcher_pixel_sigma: float = Field(default=1.0, ge=0, alias="MATCHER_PIXEL_SIGMA")
    matcher_outlier_fraction: float = Field(
        default=0.3, ge=0, le=1, alias="MATCHER_OUTLIER_FRACTION"
    )
    matches_per_pair: int = Field(default=64, ge=4, alias="MATCHES_PER_PAIR")
    depth_scale_error: float = Field(default=0.0, ge=0, alias="DEPTH_SCALE_ERROR")
    map_sessions: int = Field(default=2, ge=1, alias="MAP_SESSIONS")
    query_session: int = Field(default=2, ge=0, alias="QUERY_SESSION")

    # Sliding window
    window_size: int = Field(default=10, ge=2, alias="WINDOW_SIZE")
    dba_iters: int = Field(default=2, ge=1, alias="DBA_ITERS")
    edge_radius: int = Field(default=2, ge=1, alias="EDGE_RADIUS")
    global_period: int = Field(default=50, ge=1, alias="GLOBAL_PERIOD")
    gnss_sigma: float = Field(default=0.5, gt=0, alias="GNSS_SIGMA")
    gnss_cauchy_scale: float = Field(default=1.0, gt=0, alias="GNSS_CAUCHY_SCALE")
    estimate_map: bool = Field(default=True, alias="ESTIMATE_MAP")

    # Map
    covis_xi: float = Field(default=0.4, gt=0, lt=1, alias="COVIS_XI")
    map_radius_m: float = Field(default=50.0, gt=0, alias="MAP_RADIUS_M")
    map_policy: PolicyKind = Field(default=PolicyKind.INCREMENTAL, alias="MAP_POLICY")
    payload_bytes: int = Field(default=20480, ge=0, alias="PAYLOAD_BYTES")

    # Coarse localization
    sas_window: int = Field(default=10, ge=1, alias="SAS_WINDOW")
    stationary_m: float = Field(default=0.5, ge=0, alias="STATIONARY_M")
    particle_offsets_deg: list[float] = Field(
        default_factory=lambda: [0.0, -30.0, 30.0], alias="PARTICLE_OFFSETS_DEG"
    )
    cluster_k: int = Field(default=10, ge=0, alias="CLUSTER_K")
    cluster_top_n: int = Field(default=10, ge=1, alias="CLUSTER_TOP_N")

    # Fine localization
    fine_frames: int = Field(default=10, ge=1, alias="FINE_FRAMES")
    fine_cauchy_scale: float = Field(default=2.0, gt=0, alias="FINE_CAUCHY_SCALE")
    pixel_sigma: float = Field(default=1.0, gt=0, alias="PIXEL_SIGMA")
    depth_rel_sigma: float = Field(default=0.1, gt=0, alias="DEPTH_REL_SIGMA")
    odometry_sigmas: tuple[float, float] = Field(default=(0.05, 0.005), alias="ODOMETRY_SIGMAS")
    ransac_threshold_px: float = Field(default=2.0, gt=0, alias="RANSAC_THRESHOLD_PX")
    ransac_iterations: int = Field(default=500, ge=1, alias="RANSAC_ITERATIONS")

    # Solver
    solver_max_iters: int = Field(default=50, ge=1, alias="SOLVER_MAX_ITERS")
    solver_rel_tol: float = Field(default=1e-8, gt=0, alias="SOLVER_REL_TOL")

    @property
    def is_development(self) -> bool:
        return self.environment == "development"

    def _explicit(self, name: str) -> bool:
        return name in self.model_fields_set

    def world_config(self) -> WorldConfig:
        """The scenario's world with explicitly configured values applied on top."""
        base = {
            "benchmark": benchmark_world,
            "ambiguity": ambiguity_world,
            "corridor": corridor_world,
            "outage": gnss_outage_world,
        }
        if self.scenario in base:
            world = base[self.scenario](seed=self.seed)
        else:
            route = straight_route() if self.scenario == "straight" else square_loop()
            world = WorldConfig(seed=self.seed, route=route, closed_route=self.scenario == "square")

        update: dict[str, Any] = {}
        for name in ("speed_mps", "keyframe_rate_hz", "query_rate_hz"):
            if self._explicit(name):
                update[name] = getattr(self, name)
        if self.route is not None:
            update["route"] = self.route
        nested = {
            "appearance": {"descriptor_dim": "dim", "session_sigma": "session_sigma"},
            "gnss": {
                "gnss_sim_sigma": "sigma",
                "gnss_outages": "outages",
                "gnss_outlier_rate": "outlier_rate",
            },
            "matcher": {
                "matcher_pixel_sigma": "pixel_sigma",
                "matcher_outlier_fraction": "outlier_fraction",
                "matches_per_pair": "matches_per_pair",
                "depth_scale_error": "depth_scale_error",
            },
        }
        for section, mapping in nested.items():
            changes = {
                target: getattr(self, name)
                for name, target in mapping.items()
                if self._explicit(name)
            }
            if changes:
                update[section] = getattr(world, section).model_copy(update=changes)
        try:
            return WorldConfig.model_validate({**world.model_dump(), **_dumped(update)})
        except ValidationError as e:
            raise ConfigError(f"invalid world configuration: {e}") from e

    def solver_settings(self) -> SolverSettings:
        return SolverSettings(max_iters=self.solver_max_iters, rel_tol=self.solver_rel_tol)

    def window_config(self) -> WindowConfig:
        world = self.world_config()
        return WindowConfig(
            window_size=self.window_size,
            dba_iters=self.dba_iters,
            edge_radius=self.edge_radius,
            global_period=self.global_period,
            gnss_sigma=self.gnss_sigma,
            gnss_cauchy_scale=self.gnss_cauchy_scale,
            lever_arm=world.gnss.lever_arm,
            camera_offset=world.camera_offset,
            global_solver=self.solver_settings(),
        )

    def fine_config(self, frames: int | None = None) -> FineConfig:
        return FineConfig(
            frames=frames or self.fine_frames,
            odometry_sigmas=self.odometry_sigmas,
            depth_rel_sigma=self.depth_rel_sigma,
            pixel_sigma=self.pixel_sigma,
            cauchy_scale=self.fine_cauchy_scale,
            ransac_threshold_px=self.ransac_threshold_px,
            ransac_iterations=self.ransac_iterations,
            seed=self.seed,
        )

    def insert_policy(self) -> InsertPolicy:
        return InsertPolicy(kind=self.map_policy)

    def particle_offsets(self) -> list[Pose2D]:
        return [Pose2D(0.0, 0.0, math.radians(d)) for d in self.particle_offsets_deg]


def _dumped(update: dict[str, Any]) -> dict[str, Any]:
    return {k: v.model_dump() if hasattr(v, "model_dump") else v for k, v in update.items()}


def load_settings(config_path: str | Path | None = None, **overrides: Any) -> Settings:
    """Settings from `config_path` (key=value lines) plus explicit overrides.

    Raises:
        ConfigError: If the file is missing or any value fails validation.
    """
    if config_path is not None and not Path(config_path).is_file():
        raise ConfigError(f"config file not found: {config_path}")
    given = {k: v for k, v in overrides.items() if v is not None}
    try:
        if config_path is None:
            return Settings(**given)
        return Settings(_env_file=str(config_path), **given)  # type: ignore[call-arg]
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
