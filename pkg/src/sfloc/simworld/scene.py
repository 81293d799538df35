"""2.5D world: vertical facade segments over a ground plane, ray-cast per grid cell."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..dba import InverseDepthGrid
from ..geom import INV_DEPTH_MIN, CameraIntrinsics, Pose, camera_grid
from .config import SceneConfig
from .rng import stream_rng

# Facades farther than this from the camera are skipped, m
CULL_RADIUS_M = 150.0


@dataclass(eq=False)
class Scene:
    """Facade segments (a, b) in the ground plane with heights, plus optional ground."""

    starts: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    ends: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    heights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ground: bool = True

    def __post_init__(self) -> None:
        self.starts = np.asarray(self.starts, dtype=np.float64).reshape(-1, 2)
        self.ends = np.asarray(self.ends, dtype=np.float64).reshape(-1, 2)
        self.heights = np.asarray(self.heights, dtype=np.float64).reshape(-1)

    @property
    def segment_count(self) -> int:
        return int(self.starts.shape[0])

    def add_wall(self, a: tuple[float, float], b: tuple[float, float], height: float) -> None:
        self.starts = np.vstack((self.starts, a))
        self.ends = np.vstack((self.ends, b))
        self.heights = np.append(self.heights, height)

    def ray_depths(self, origin: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Ray parameter of the first hit for each direction (N, 3); inf when nothing is hit."""
        t_best = np.full(directions.shape[0], np.inf)
        if self.ground:
            dz = directions[:, 2]
            down = dz < -1e-12
            t_ground = np.where(down, -origin[2] / np.where(down, dz, -1.0), np.inf)
            t_best = np.where(t_ground > 0.0, np.minimum(t_best, t_ground), t_best)
        if self.segment_count == 0:
            return t_best

        mid = 0.5 * (self.starts + self.ends)
        half = 0.5 * np.linalg.norm(self.ends - self.starts, axis=1)
        near = np.linalg.norm(mid - origin[:2], axis=1) - half < CULL_RADIUS_M
        a = self.starts[near]
        e = self.ends[near] - a
        h = self.heights[near]
        if a.shape[0] == 0:
            return t_best

        # Solve o + t d = a + s e in the ground plane for every (ray, segment)
        d = directions[:, None, :2]
        w = a[None, :, :] - origin[None, None, :2]
        denom = d[..., 0] * e[None, :, 1] - d[..., 1] * e[None, :, 0]
        ok = np.abs(denom) > 1e-12
        safe = np.where(ok, denom, 1.0)
        t = (w[..., 0] * e[None, :, 1] - w[..., 1] * e[None, :, 0]) / safe
        s = (w[..., 0] * d[..., 1] - w[..., 1] * d[..., 0]) / safe
        z = origin[2] + t * directions[:, None, 2]
        hit = ok & (t > 1e-9) & (s >= 0.0) & (s <= 1.0) & (z >= 0.0) & (z <= h[None, :])
        t_wall = np.where(hit, t, np.inf).min(axis=1)
        return np.minimum(t_best, t_wall)


def gt_inverse_depth(camera_to_world: Pose, k: CameraIntrinsics, scene: Scene) -> InverseDepthGrid:
    """Ground-truth inverse depth on the /8 grid; cells seeing sky get INV_DEPTH_MIN."""
    uv = camera_grid(k)
    rays_cam = np.stack(
        ((uv[:, 0] - k.cx) / k.fx, (uv[:, 1] - k.cy) / k.fy, np.ones(uv.shape[0])), axis=1
    )
    rays_world = rays_cam @ camera_to_world.R.T
    # unit z-component in the camera frame, so the ray parameter is the depth
    depth = scene.ray_depths(camera_to_world.translation, rays_world)
    lam = np.where(np.isfinite(depth), 1.0 / np.maximum(depth, 1e-9), INV_DEPTH_MIN)
    return InverseDepthGrid(lam.reshape(k.grid_rows, k.grid_cols))


def _facade(
    scene: Scene,
    a: np.ndarray,
    b: np.ndarray,
    height: float,
    piece: float,
    jitter: float,
    rng: np.random.Generator,
) -> None:
    """Split a facade into pieces with small setback jitter toward its outward normal."""
    n = max(1, math.ceil(np.linalg.norm(b - a) / piece))
    direction = (b - a) / np.linalg.norm(b - a)
    normal = np.array([direction[1], -direction[0]])
    for i in range(n):
        p0 = a + (b - a) * i / n
        p1 = a + (b - a) * (i + 1) / n
        shift = normal * rng.uniform(-jitter, jitter) if jitter else np.zeros(2)
        scene.add_wall(tuple(p0 + shift), tuple(p1 + shift), height)


def build_grid_city(cfg: SceneConfig, seed: int = 0) -> Scene:
    """Rectangular blocks separated by streets; street centerlines lie on the grid lines
    x = i * pitch, y = j * pitch with pitch = block + street width."""
    rng = stream_rng(seed, 0, "scene")
    scene = Scene()
    pitch = cfg.block_size_m + cfg.street_width_m
    half_street = 0.5 * cfg.street_width_m
    for bx in range(-1, cfg.blocks_x + 1):
        for by in range(-1, cfg.blocks_y + 1):
            setback = rng.uniform(0.0, cfg.setback_variation_m, size=4)
            x0 = bx * pitch + half_street + setback[0]
            x1 = (bx + 1) * pitch - half_street - setback[1]
            y0 = by * pitch + half_street + setback[2]
            y1 = (by + 1) * pitch - half_street - setback[3]
            height = rng.uniform(cfg.height_min_m, cfg.height_max_m)
            corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
            for c in range(4):
                _facade(
                    scene,
                    corners[c],
                    corners[(c + 1) % 4],
                    height,
                    cfg.facade_segment_m,
                    cfg.facade_jitter_m,
                    rng,
                )
    return scene


def build_corridor(
    length: float, wall_distance: float, height: float, ground: bool = True
) -> Scene:
    """Two straight parallel walls along +x at y = ±wall_distance."""
    scene = Scene(ground=ground)
    scene.add_wall((-length, wall_distance), (length, wall_distance), height)
    scene.add_wall((-length, -wall_distance), (length, -wall_distance), height)
    return scene


def build_scene(cfg: SceneConfig, seed: int = 0) -> Scene:
    if cfg.kind == "corridor":
        return build_corridor(cfg.corridor_length_m, cfg.wall_distance_m, cfg.wall_height_m)
    return build_grid_city(cfg, seed)
