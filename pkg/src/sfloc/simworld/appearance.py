"""Synthetic place appearance standing in for a learned global descriptor."""

import math
from functools import lru_cache

import numpy as np

from ..geom import Pose, optical_axis_heading
from .config import AppearanceConfig
from .rng import stream_rng

# Position and heading quantization keying the session noise stream
NOISE_POSITION_STEP_M = 1e-3
NOISE_HEADING_STEP_RAD = 1e-4


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


class AppearanceField:
    """Place codes per (cell, heading sector), blended bilinearly in space and
    linearly in heading so descriptors vary smoothly along a route.

    Points inside a twin zone read the codes of its source rectangle, which
    seeds genuinely ambiguous places.
    """

    def __init__(self, cfg: AppearanceConfig, seed: int = 0) -> None:
        self.cfg = cfg
        self.seed = seed
        self.sectors = max(1, round(360.0 / cfg.sector_deg))
        self._code = lru_cache(maxsize=65536)(self._draw_code)

    def _draw_code(self, ix: int, iy: int, sector: int) -> np.ndarray:
        rng = stream_rng(self.seed, 0, "appearance", ix, iy, sector)
        code = _unit(rng.standard_normal(self.cfg.dim))
        code.setflags(write=False)
        return code

    def source_point(self, xy: np.ndarray) -> np.ndarray:
        """Map a point in a twin zone back onto the place it copies."""
        for zone in self.cfg.twin_zones:
            lo = np.add(zone.source_min, zone.offset)
            hi = lo + np.asarray(zone.size)
            if np.all(xy >= lo) and np.all(xy <= hi):
                return xy - np.asarray(zone.offset)
        return xy

    def place_code(self, xy: np.ndarray, heading: float) -> np.ndarray:
        """Unit-norm code of a place seen along `heading` (rad)."""
        src = self.source_point(np.asarray(xy, dtype=np.float64)[:2])
        g = src / self.cfg.cell_size_m - 0.5
        ix, iy = math.floor(g[0]), math.floor(g[1])
        fx, fy = g[0] - ix, g[1] - iy
        s = (heading % (2.0 * math.pi)) / (2.0 * math.pi) * self.sectors - 0.5
        i_s = math.floor(s)
        fs = s - i_s

        code = np.zeros(self.cfg.dim)
        for dx, wx in ((0, 1.0 - fx), (1, fx)):
            for dy, wy in ((0, 1.0 - fy), (1, fy)):
                for ds, ws in ((0, 1.0 - fs), (1, fs)):
                    w = wx * wy * ws
                    if w > 0.0:
                        code += w * self._code(ix + dx, iy + dy, (i_s + ds) % self.sectors)
        return _unit(code)

    def descriptor(self, camera_to_world: Pose, session: int) -> np.ndarray:
        """Place code plus per-session noise N(0, sigma²/dim), renormalized, as float32."""
        xy = camera_to_world.translation[:2]
        heading = optical_axis_heading(camera_to_world)
        code = self.place_code(xy, heading)
        if self.cfg.session_sigma > 0.0:
            q = np.round(np.append(xy / NOISE_POSITION_STEP_M, heading / NOISE_HEADING_STEP_RAD))
            rng = stream_rng(self.seed, session, "descriptor", *q.astype(np.int64))
            code = code + rng.normal(
                0.0, self.cfg.session_sigma / math.sqrt(self.cfg.dim), self.cfg.dim
            )
        return _unit(code).astype(np.float32)


def descriptor_provider(
    camera_to_world: Pose, session: int, field: AppearanceField
) -> np.ndarray:
    return field.descriptor(camera_to_world, session)
