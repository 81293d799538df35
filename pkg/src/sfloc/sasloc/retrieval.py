"""Coarse retrieval: SAS over particle virtual trajectories and the two baselines."""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from ..core.errors import EmptyMapError, EmptyQueryBufferError
from ..mapstore import StructureFrameMap
from .buffer import QueryBuffer, similarity_row
from .particles import Particle, ParticleSet, virtual_positions, virtual_trajectory

# Single-linkage radius of the clustering baseline, m
CLUSTER_LINK_M = 20.0

DEFAULT_TOP_N = 10


@dataclass(frozen=True)
class RetrievalResult:
    """Retrieved frame, its score and the gap to the best competing frame."""

    frame_id: int
    sas_distance: float
    margin: float
    method: str
    particle_index: int = -1


def _margin(scores_by_frame: np.ndarray, best_index: int) -> float:
    if scores_by_frame.size < 2:
        return float("inf")
    others = np.delete(scores_by_frame, best_index)
    return float(others.min() - scores_by_frame[best_index])


def particle_scores(
    particles: ParticleSet, buf: QueryBuffer, sfmap: StructureFrameMap
) -> np.ndarray:
    """σ_SAS of every particle: RMS over the window of the similarity to the map
    frame spatially nearest each virtual pose.

    Raises:
        EmptyMapError: If the map holds no frames.
    """
    if len(sfmap) == 0:
        raise EmptyMapError("SAS retrieval on an empty map")
    sim = buf.similarity()
    if sim.rows == 0:
        raise EmptyQueryBufferError("query buffer is empty")
    xy = virtual_positions(particles, buf.relative_poses())
    nearest = sfmap.nearest(xy.reshape(-1, 2)).reshape(xy.shape[:2])
    gathered = sim.values[np.arange(sim.rows)[None, :], nearest]
    return np.sqrt(np.mean(gathered * gathered, axis=1))


def sas_distance(particle: Particle, buf: QueryBuffer, sfmap: StructureFrameMap) -> float:
    """σ_SAS of one particle, pose by pose."""
    sim = buf.similarity()
    poses = virtual_trajectory(particle, buf)
    nearest = sfmap.nearest(np.array([p.translation[:2] for p in poses]))
    values = sim.values[np.arange(sim.rows), nearest]
    return float(np.sqrt(np.mean(values * values)))


def best_per_frame(particles: ParticleSet, scores: np.ndarray, frame_count: int) -> np.ndarray:
    """Lowest particle score for each map frame, in id order."""
    best = np.full(frame_count, np.inf)
    frame_index = np.array([p.frame_index for p in particles])
    np.minimum.at(best, frame_index, scores)
    return best


def retrieve_sas(
    buf: QueryBuffer, sfmap: StructureFrameMap, particles: ParticleSet
) -> RetrievalResult:
    """The particle with minimum σ_SAS; exact ties go to the lowest frame id, then offset order."""
    scores = particle_scores(particles, buf, sfmap)
    best = int(np.argmin(scores))
    winner = particles[best]
    per_frame = best_per_frame(particles, scores, len(sfmap))
    return RetrievalResult(
        frame_id=winner.frame_id,
        sas_distance=float(scores[best]),
        margin=_margin(per_frame, winner.frame_index),
        method="sas",
        particle_index=best,
    )


def rank_of(
    frame_id: int, buf: QueryBuffer, sfmap: StructureFrameMap, particles: ParticleSet
) -> int:
    """1-based rank of a frame under its best particle score."""
    ids = sfmap.ids()
    per_frame = best_per_frame(particles, particle_scores(particles, buf, sfmap), len(ids))
    target = per_frame[ids.index(frame_id)]
    return int(np.count_nonzero(per_frame < target)) + 1


def retrieve_single(descriptor: np.ndarray, sfmap: StructureFrameMap) -> RetrievalResult:
    """Nearest map descriptor in L2; ties go to the lowest id.

    Raises:
        EmptyMapError: If the map holds no frames.
    """
    if len(sfmap) == 0:
        raise EmptyMapError("single-frame retrieval on an empty map")
    row = similarity_row(np.asarray(descriptor, dtype=np.float64), sfmap.descriptor_matrix())
    best = int(np.argmin(row))
    return RetrievalResult(
        frame_id=sfmap.ids()[best],
        sas_distance=float(row[best]),
        margin=_margin(row, best),
        method="single",
    )


def _cluster_labels(positions: np.ndarray, link: float) -> np.ndarray:
    """Component label per point under single linkage at `link` meters."""
    pairs = cKDTree(positions).query_pairs(link, output_type="ndarray")
    n = positions.shape[0]
    adjacency = coo_matrix(
        (np.ones(pairs.shape[0]), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    _, labels = connected_components(adjacency, directed=False)
    return labels


def retrieve_cluster(
    buf: QueryBuffer,
    sfmap: StructureFrameMap,
    k: int,
    top_n: int = DEFAULT_TOP_N,
    link: float = CLUSTER_LINK_M,
) -> RetrievalResult:
    """Pool the top-n frames of the current and last k queries, cluster them
    spatially and return the member of the largest cluster most similar to
    the current query. With k = 0 there is no sequence and the current top-1
    is returned.

    Raises:
        EmptyMapError: If the map holds no frames.
    """
    if len(sfmap) == 0:
        raise EmptyMapError("cluster retrieval on an empty map")
    sim = buf.similarity().values
    if sim.shape[0] == 0:
        raise EmptyQueryBufferError("query buffer is empty")
    ids = sfmap.ids()
    current = sim[0]
    if k == 0:
        best = int(np.argmin(current))
        return RetrievalResult(ids[best], float(current[best]), _margin(current, best), "cluster")

    n = min(top_n, current.size)
    pooled = np.concatenate([np.argsort(row, kind="stable")[:n] for row in sim[: k + 1]])
    labels = _cluster_labels(sfmap.positions_xy()[pooled], link)
    counts = np.bincount(labels)
    winners = np.flatnonzero(counts == counts.max())
    members = np.unique(pooled[np.isin(labels, winners)])
    # among tied clusters the one holding the most similar member wins
    best = int(members[np.argmin(current[members])])
    return RetrievalResult(
        frame_id=ids[best],
        sas_distance=float(current[best]),
        margin=_margin(current, best),
        method="cluster",
    )

