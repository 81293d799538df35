"""Particles around map frames and their odometry-propagated virtual trajectories."""

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass

import numpy as np

from ..core.errors import EmptyMapError, EmptyQueryBufferError
from ..geom import Pose, Pose2D, ground_plane_lift, optical_axis_heading
from ..mapstore import StructureFrameMap
from .buffer import QueryBuffer

DEFAULT_OFFSETS: tuple[Pose2D, ...] = (
    Pose2D(0.0, 0.0, 0.0),
    Pose2D(0.0, 0.0, math.radians(-30.0)),
    Pose2D(0.0, 0.0, math.radians(30.0)),
)


@dataclass(frozen=True, eq=False)
class Particle:
    """A hypothesized current camera pose anchored at a map frame."""

    frame_id: int
    frame_index: int
    offset_index: int
    offset: Pose2D
    pose: Pose


class ParticleSet:
    """Particles ordered by frame id, then offset; rotations and positions stacked."""

    def __init__(self, particles: Sequence[Particle]) -> None:
        self.particles = list(particles)
        self.rotations = np.stack([p.pose.R for p in self.particles]).reshape(-1, 3, 3)
        self.positions = np.stack([p.pose.translation for p in self.particles]).reshape(-1, 3)

    def __len__(self) -> int:
        return len(self.particles)

    def __iter__(self) -> Iterator[Particle]:
        return iter(self.particles)

    def __getitem__(self, i: int) -> Particle:
        return self.particles[i]


def gen_particles(
    sfmap: StructureFrameMap, offsets: Sequence[Pose2D] = DEFAULT_OFFSETS
) -> ParticleSet:
    """len(offsets) particles per map frame, lifted on the ground plane along the
    frame's viewing heading.

    Raises:
        EmptyMapError: If the map holds no frames.
    """
    frames = sfmap.frames_in_order()
    if not frames:
        raise EmptyMapError("cannot place particles on an empty map")
    particles = [
        Particle(
            frame_id=f.id,
            frame_index=m,
            offset_index=o,
            offset=off,
            pose=ground_plane_lift(f.pose, off, heading=optical_axis_heading(f.pose)),
        )
        for m, f in enumerate(frames)
        for o, off in enumerate(offsets)
    ]
    return ParticleSet(particles)


def virtual_trajectory(p: Particle, buf: QueryBuffer) -> list[Pose]:
    """T^w_p ∘ T^{c_k}_{c_j} for each window entry, current query first."""
    relatives = buf.relative_poses()
    if not relatives:
        raise EmptyQueryBufferError("query buffer is empty")
    return [p.pose] + [p.pose @ rel for rel in relatives[1:]]


def virtual_positions(particles: ParticleSet, relatives: Sequence[Pose]) -> np.ndarray:
    """(P, L, 2) ground-plane positions of every particle's virtual trajectory."""
    offsets = np.stack([rel.translation for rel in relatives])
    offsets[0] = 0.0
    world = particles.positions[:, None, :] + np.einsum(
        "pij,lj->pli", particles.rotations, offsets
    )
    return world[..., :2]
