"""Multi-frame fine localization: odometry chain, depth priors and robust reprojection."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field

from ..core.errors import (
    DegenerateGeometryError,
    InvalidQueryError,
    MissingOdometryError,
    TooFewMatchesError,
)
from ..core.logging import get_logger
from ..fgraph import (
    DepthPriorFactor,
    FactorGraph,
    NoiseModel,
    OdometryFactor,
    ReprojectionFactor,
    RobustLoss,
    SolverSettings,
    solve,
)
from ..geom import CameraIntrinsics, Pose
from .matches import MatchSet
from .pnp import PnpResult, pnp_ransac

logger = get_logger(__name__)


class FineMode(str, Enum):
    PNP = "pnp"
    FGO = "fgo"


class ErrorMode(str, Enum):
    """relative scores against the stored map frame; absolute also counts its pose error."""

    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class FineConfig(BaseModel):
    """Fine localization settings; sigmas define the information blocks."""

    frames: int = Field(default=10, ge=1)
    odometry_sigmas: tuple[float, float] = (0.05, 0.005)
    depth_rel_sigma: float = Field(default=0.1, gt=0)
    pixel_sigma: float = Field(default=1.0, gt=0)
    cauchy_scale: float = Field(default=2.0, gt=0)
    inlier_whitened: float = Field(default=3.0, gt=0)
    min_inliers: int = Field(default=10, ge=0)
    ransac_threshold_px: float = Field(default=2.0, gt=0)
    ransac_iterations: int = Field(default=500, ge=1)
    seed: int = 0
    solver: SolverSettings = Field(default_factory=lambda: SolverSettings(max_iters=30))

    def odometry_noise(self) -> NoiseModel:
        trans, rot = self.odometry_sigmas
        return NoiseModel.from_sigmas([trans] * 3 + [rot] * 3)

    def pixel_noise(self) -> NoiseModel:
        return NoiseModel.isotropic(2, self.pixel_sigma)

    def depth_noise(self, inv_depth: float) -> NoiseModel:
        return NoiseModel.isotropic(1, self.depth_rel_sigma * inv_depth)

    def loss(self) -> RobustLoss:
        return RobustLoss.cauchy(self.cauchy_scale)


@dataclass(eq=False)
class FineQuery:
    """One query frame of the fused window and its match sets (possibly none)."""

    index: int
    timestamp: float
    retrieved_frame_id: int | None
    matches: list[MatchSet] = field(default_factory=list)


@dataclass(eq=False)
class FineGraph:
    graph: FactorGraph
    query_keys: list[tuple[str, int]]
    reprojection: list[list[ReprojectionFactor]]


@dataclass(frozen=True, eq=False)
class FinePoseResult:
    poses: list[Pose]
    inliers: list[int]
    correspondences: list[int]
    final_cost: float
    converged: bool

    @property
    def pose(self) -> Pose:
        """Newest query pose."""
        return self.poses[-1]


def query_key(i: int) -> tuple[str, int]:
    return ("query", i)


def map_key(frame_id: int) -> tuple[str, int]:
    return ("map", frame_id)


def depth_error_bound(scale_err: float, recall_dist: float) -> float:
    """Position error predicted for a relative depth scale error at a recall distance."""
    if scale_err < 0.0:
        raise InvalidQueryError("depth scale error must be non-negative")
    return scale_err * recall_dist


def best_pnp(
    matches: Sequence[MatchSet], k: CameraIntrinsics, cfg: FineConfig
) -> tuple[MatchSet, PnpResult] | None:
    """PnP on each match set; the result with most inliers, or None if all fail."""
    best: tuple[MatchSet, PnpResult] | None = None
    for ms in matches:
        try:
            result = pnp_ransac(
                ms, k, cfg.ransac_threshold_px, cfg.ransac_iterations, cfg.seed
            )
        except (TooFewMatchesError, DegenerateGeometryError) as e:
            logger.warning(
                "pnp_failed", frame=ms.map_frame_id, query=ms.query_index, error=str(e)
            )
            continue
        if best is None or result.inlier_count > best[1].inlier_count:
            best = (ms, result)
    return best


def initial_poses(
    queries: Sequence[FineQuery],
    map_poses: Mapping[int, Pose],
    odometry: Sequence[Pose | None],
    k: CameraIntrinsics,
    cfg: FineConfig,
) -> list[Pose]:
    """PnP pose when it succeeds, else the previous pose chained by odometry, else
    the retrieved frame's pose."""
    poses: list[Pose] = []
    for i, q in enumerate(queries):
        found = best_pnp(q.matches, k, cfg)
        if found is not None:
            ms, result = found
            poses.append(map_poses[ms.map_frame_id] @ result.relative)
        elif i > 0 and (relative := odometry[i - 1]) is not None:
            poses.append(poses[-1] @ relative)
        elif q.retrieved_frame_id is not None:
            poses.append(map_poses[q.retrieved_frame_id])
        elif poses:
            poses.append(poses[-1])
        else:
            raise TooFewMatchesError(f"query {q.index} has no retrieval, matches or odometry")
    return poses


def build_fine_graph(
    queries: Sequence[FineQuery],
    map_poses: Mapping[int, Pose],
    odometry: Sequence[Pose | None],
    k: CameraIntrinsics,
    cfg: FineConfig,
    initial: Sequence[Pose] | None = None,
) -> FineGraph:
    """Odometry between consecutive queries, one depth state with a prior per
    matched point and a Cauchy reprojection factor per correspondence; map
    frame poses are fixed.

    Raises:
        MissingOdometryError: If a consecutive odometry relative is missing.
    """
    if len(odometry) < len(queries) - 1 or any(o is None for o in odometry[: len(queries) - 1]):
        raise MissingOdometryError(f"{len(queries)} queries need {len(queries) - 1} relatives")
    if initial is None:
        initial = initial_poses(queries, map_poses, odometry, k, cfg)

    graph = FactorGraph()
    keys = [query_key(i) for i in range(len(queries))]
    for key, pose in zip(keys, initial, strict=True):
        graph.add_state(key, pose)
    odom_noise = cfg.odometry_noise()
    for i in range(len(queries) - 1):
        measured = odometry[i]
        assert measured is not None
        graph.add_factor(OdometryFactor(keys[i], keys[i + 1], measured, odom_noise))

    pixel_noise, loss = cfg.pixel_noise(), cfg.loss()
    reprojection: list[list[ReprojectionFactor]] = []
    for i, q in enumerate(queries):
        factors = []
        for ms in q.matches:
            mkey = map_key(ms.map_frame_id)
            if mkey not in graph:
                graph.add_state(mkey, map_poses[ms.map_frame_id])
                graph.fix(mkey)
            for f in range(len(ms)):
                lam = float(ms.inv_depth[f])
                dkey = ("depth", i, ms.map_frame_id, f)
                graph.add_state(dkey, lam)
                graph.add_factor(DepthPriorFactor(dkey, lam, cfg.depth_noise(lam)))
                factor = ReprojectionFactor(
                    keys[i], mkey, dkey, ms.u_map[f], ms.u_query[f], k, pixel_noise, loss
                )
                graph.add_factor(factor)
                factors.append(factor)
        reprojection.append(factors)
    return FineGraph(graph=graph, query_keys=keys, reprojection=reprojection)


def _inlier_count(factors: Sequence[ReprojectionFactor], values: Mapping, bound: float) -> int:
    count = 0
    for factor in factors:
        whitened = factor.noise.whiten(factor.residual(values))
        count += int(np.linalg.norm(whitened) < bound)
    return count


def solve_fine(fine: FineGraph, cfg: FineConfig) -> FinePoseResult:
    """LM solve of the fine graph; inliers are correspondences whose whitened
    reprojection residual ends below cfg.inlier_whitened.

    Raises:
        SolverDivergedError: If the cost becomes non-finite.
    """
    total = [len(factors) for factors in fine.reprojection]
    solved = sum(total) > 0
    report = solve(fine.graph, cfg.solver) if solved else None
    values = fine.graph.values
    inliers = [_inlier_count(f, values, cfg.inlier_whitened) for f in fine.reprojection]
    poses = [values[key] for key in fine.query_keys]
    converged = bool(report and report.converged and sum(inliers) >= cfg.min_inliers)
    if not converged:
        logger.warning("fine_not_converged", inliers=sum(inliers), correspondences=sum(total))
    return FinePoseResult(
        poses=poses,  # type: ignore[arg-type]
        inliers=inliers,
        correspondences=total,
        final_cost=report.final_cost if report else fine.graph.total_cost(),
        converged=converged,
    )


def localize_pnp(
    query: FineQuery, map_poses: Mapping[int, Pose], k: CameraIntrinsics, cfg: FineConfig
) -> FinePoseResult | None:
    """Single-frame PnP-RANSAC fine pose, or None when every match set fails."""
    found = best_pnp(query.matches, k, cfg)
    if found is None:
        return None
    ms, result = found
    return FinePoseResult(
        poses=[map_poses[ms.map_frame_id] @ result.relative],
        inliers=[result.inlier_count],
        correspondences=[sum(len(m) for m in query.matches)],
        final_cost=0.0,
        converged=result.inlier_count >= cfg.min_inliers,
    )
