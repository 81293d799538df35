"""Standard worlds used by the benchmarks and fixtures."""

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

Route = list[tuple[float, float]]


def straight_route(length: float = 100.0) -> Route:
    return [(0.0, 0.0), (length, 0.0)]


def square_loop(side: float = 100.0) -> Route:
    return [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]


def grid_city_route(scene: SceneConfig, rows: int | None = None) -> Route:
    """Lawnmower drive along the street grid: full-width rows joined at alternate ends."""
    pitch = scene.block_size_m + scene.street_width_m
    width = scene.blocks_x * pitch
    route: Route = []
    for r in range(rows if rows is not None else scene.blocks_y):
        y = r * pitch
        xs = (0.0, width) if r % 2 == 0 else (width, 0.0)
        route.extend((x, y) for x in xs)
    return route


def twin_zones_along(
    scene: SceneConfig, rows: int, zone_length: float = 40.0, zone_width: float = 30.0
) -> list[TwinZone]:
    """Copy stretches of row r onto row r + 2 (same driving direction), one per block."""
    pitch = scene.block_size_m + scene.street_width_m
    zones = []
    for r in range(rows - 2):
        for b in range(scene.blocks_x):
            x0 = b * pitch + 0.5 * (pitch - zone_length)
            zones.append(
                TwinZone(
                    source_min=(x0, r * pitch - 0.5 * zone_width),
                    size=(zone_length, zone_width),
                    offset=(0.0, 2 * pitch),
                )
            )
    return zones


def corridor_world(length: float = 200.0, seed: int = 0) -> WorldConfig:
    """Straight drive between two parallel walls."""
    return WorldConfig(
        seed=seed,
        route=straight_route(length),
        scene=SceneConfig(kind="corridor"),
    )


def ambiguity_world(seed: int = 0, rows: int = 4) -> WorldConfig:
    """Grid city whose rows repeat each other's appearance in block-sized stretches."""
    scene = SceneConfig()
    return WorldConfig(
        seed=seed,
        route=grid_city_route(scene, rows),
        lane_offsets_m=[0.0, 1.5, -1.5],
        scene=scene,
        appearance=AppearanceConfig(twin_zones=twin_zones_along(scene, rows)),
    )


def benchmark_world(seed: int = 0, rows: int = 4) -> WorldConfig:
    """The ~2 km grid-city benchmark: noisy sensors, 30% match outliers."""
    scene = SceneConfig()
    return WorldConfig(
        seed=seed,
        route=grid_city_route(scene, rows),
        lane_offsets_m=[0.0, 1.5, -1.5],
        scene=scene,
        imu=ImuSimConfig(
            acc_noise_density=0.01,
            gyr_noise_density=1e-3,
            acc_bias_sigma=0.02,
            gyr_bias_sigma=1e-3,
        ),
        gnss=GnssSimConfig(sigma=0.5),
        appearance=AppearanceConfig(twin_zones=twin_zones_along(scene, rows)),
        matcher=MatcherSimConfig(pixel_sigma=1.0, outlier_fraction=0.3),
        flow=FlowSimConfig(pixel_sigma=0.5),
    )


def gnss_outage_world(seed: int = 0, outage: tuple[float, float] = (15.0, 75.0)) -> WorldConfig:
    """Square loop with a 60 s GNSS outage and a coarse camera, for smoothing comparisons."""
    return WorldConfig(
        seed=seed,
        route=square_loop(100.0),
        closed_route=True,
        scene=SceneConfig(blocks_x=2, blocks_y=2),
        camera=CameraSimConfig(width=128, height=96),
        imu=ImuSimConfig(
            acc_noise_density=0.02,
            gyr_noise_density=2e-3,
            acc_bias_sigma=0.05,
            gyr_bias_sigma=2e-3,
        ),
        gnss=GnssSimConfig(sigma=0.5, outages=[outage]),
        flow=FlowSimConfig(pixel_sigma=0.5),
    )
