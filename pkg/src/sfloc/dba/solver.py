"""Pure dense bundle adjustment over a small window (no inertial or GNSS terms)."""

from collections import defaultdict
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.logging import get_logger
from ..geom import CameraIntrinsics, Pose, Twist, se3_exp
from .grid import FlowField, update_inverse_depth
from .linearize import linearize_pair
from .schur import DBAConstraint, assemble_frame_system, depth_backsub, schur_reduce


logger = get_logger(__name__)

FlowFn = Callable[[int, int, Pose, Pose, np.ndarray], FlowField]


def window_edges(frame_ids: Sequence[int], radius: int = 2) -> list[tuple[int, int]]:
    """Ordered (source, target) pairs of frames at most `radius` apart in window order."""
    edges = []
    for a, i in enumerate(frame_ids):
        for b, j in enumerate(frame_ids):
            if a != b and abs(a - b) <= radius:
                edges.append((i, j))
    return edges


def build_constraints(
    poses: dict[int, Pose],
    grids: dict[int, np.ndarray],
    edges: Iterable[tuple[int, int]],
    flow_fn: FlowFn,
    k: CameraIntrinsics,
) -> list[DBAConstraint]:
    """Linearize every edge and Schur-reduce per source frame, sorted by source."""
    by_source: dict[int, list[int]] = defaultdict(list)
    for i, j in edges:
        by_source[i].append(j)
    constraints = []
    for i in sorted(by_source):
        pairs = []
        for j in sorted(by_source[i]):
            flow = flow_fn(i, j, poses[i], poses[j], grids[i])
            pairs.append(linearize_pair(poses[i], poses[j], grids[i], flow, k, i, j))
        system = assemble_frame_system(pairs)
        constraints.append(schur_reduce(system, [poses[f] for f in system.frame_ids]))
    return constraints


def accumulate_constraints(
    constraints: Iterable[DBAConstraint], frame_ids: Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Sum constraint blocks into one (6N, 6N) system in frame_ids order."""
    index = {fid: pos for pos, fid in enumerate(frame_ids)}
    dim = 6 * len(frame_ids)
    h = np.zeros((dim, dim))
    v = np.zeros(dim)
    for con in constraints:
        rows = np.concatenate([np.arange(6) + 6 * index[f] for f in con.frame_ids])
        h[np.ix_(rows, rows)] += con.h
        v[rows] += con.v
    return h, v


@dataclass
class DbaReport:
    iterations: int = 0
    step_norms: list[float] = field(default_factory=list)


def solve_window_dba(
    poses: dict[int, Pose],
    grids: dict[int, np.ndarray],
    flow_fn: FlowFn,
    k: CameraIntrinsics,
    iterations: int = 10,
    edge_radius: int = 2,
    fixed: Sequence[int] | None = None,
) -> tuple[dict[int, Pose], dict[int, np.ndarray], DbaReport]:
    """Gauss-Newton DBA with the first frame (or `fixed`) held as gauge.

    Poses are world-to-camera; grids are flat inverse-depth arrays. Each
    iteration re-queries flow_fn for residual flow at the current estimates.
    """
    frame_ids = sorted(poses)
    fixed_ids = set(frame_ids[:1] if fixed is None else fixed)
    poses = dict(poses)
    grids = {fid: np.asarray(g, dtype=np.float64).ravel().copy() for fid, g in grids.items()}
    edges = window_edges(frame_ids, edge_radius)
    report = DbaReport()

    for _ in range(iterations):
        constraints = build_constraints(poses, grids, edges, flow_fn, k)
        h, v = accumulate_constraints(constraints, frame_ids)
        free = np.concatenate(
            [np.arange(6) + 6 * pos for pos, fid in enumerate(frame_ids) if fid not in fixed_ids]
        )
        xi = np.zeros(6 * len(frame_ids))
        if free.size:
            xi[free], *_ = np.linalg.lstsq(h[np.ix_(free, free)], v[free], rcond=None)
        updates = {
            fid: Twist.from_vector(xi[6 * pos : 6 * pos + 6]) for pos, fid in enumerate(frame_ids)
        }
        for con in constraints:
            delta = depth_backsub(con, updates)
            grids[con.source] = update_inverse_depth(grids[con.source], delta)
        for fid in frame_ids:
            poses[fid] = se3_exp(updates[fid]) @ poses[fid]
        report.iterations += 1
        report.step_norms.append(float(np.linalg.norm(xi)))
        logger.debug("dba_iteration", iteration=report.iterations, step_norm=report.step_norms[-1])
        if report.step_norms[-1] < 1e-10:
            break
    return poses, grids, report
