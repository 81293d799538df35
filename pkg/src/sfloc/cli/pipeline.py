"""Command implementations: mapping, coarse-to-fine localization, evaluation and reports.

The click commands in main.py are thin wrappers around the cmd_* functions;
the benchmark harnesses reuse the same stages in memory.
"""

import math
from collections import Counter, deque
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np
from rich.console import Console
from rich.table import Table

from ..core.config import Settings
from ..core.errors import SolverDivergedError
from ..core.logging import bind_context, get_logger
from ..dba import InverseDepthGrid
from ..fgraph import NavState, SlidingWindowEstimator, export_trajectory_csv, read_trajectory_csv
from ..fineloc import (
    ErrorMode,
    FineConfig,
    FineLogRow,
    FineMode,
    FineQuery,
    MatchSet,
    best_pnp,
    build_fine_graph,
    localize_pnp,
    read_fine_log,
    rescale_map_pixels,
    solve_fine,
    write_fine_log,
)
from ..geom import CameraIntrinsics, Pose
from ..mapstore import (
    InsertKind,
    SizeReport,
    StructureFrameMap,
    VisualStructureFrame,
    deserialize,
    serialize,
    size_report,
    synthetic_payload,
)
from ..sasloc import (
    ParticleSet,
    QueryBuffer,
    RetrievalLogRow,
    RetrievalResult,
    gen_particles,
    push_query,
    read_retrieval_log,
    retrieve_cluster,
    retrieve_sas,
    retrieve_single,
    write_retrieval_log,
)
from ..simworld import (
    FrameTruth,
    MatcherProvider,
    Scene,
    SessionStreams,
    WorldConfig,
    build_scene,
    decode_frame_id,
    encode_frame_id,
    gen_session,
)
from .metrics import EvalRecord, Metrics, compute_metrics, horizontal_error, records_from_logs
from .report import write_metrics_csv, write_report

logger = get_logger(__name__)

RETRIEVAL_LOG = "retrieval.csv"
FINE_LOG = "fine.csv"
GT_LOG = "gt.csv"
METRICS_CSV = "metrics.csv"


class RetrievalMode(str, Enum):
    SINGLE = "single"
    CLUSTER = "cluster"
    SAS = "sas"


# ============================================
# Mapping
# ============================================


@dataclass(eq=False)
class SessionEstimate:
    """Smoothed and real-time keyframe states plus the estimated depth grids."""

    states: list[NavState]
    realtime: list[NavState]
    grids: list[InverseDepthGrid]


def estimate_session(streams: SessionStreams, settings: Settings) -> SessionEstimate:
    """Sliding-window MS-DBA over every keyframe, then global smoothing.

    With estimate_map disabled the ground-truth states and grids are used as is.
    """
    if not settings.estimate_map:
        return SessionEstimate(list(streams.states), list(streams.states), list(streams.grids))
    estimator = SlidingWindowEstimator(
        settings.window_config(),
        streams.k,
        streams.flow_provider(),
        streams.states[0],
        streams.initial_grid(0),
    )
    for keyframe in streams.keyframe_inputs():
        estimator.add_keyframe(keyframe)
    smoothed = estimator.finalize()
    n = len(streams)
    return SessionEstimate(
        states=[smoothed[i] for i in range(n)],
        realtime=[estimator.realtime[i] for i in range(n)],
        grids=[InverseDepthGrid.from_flat(estimator.grids[i], streams.k) for i in range(n)],
    )


class MapBuilder:
    """Turns estimated keyframes into structure frames and offers them to the map."""

    def __init__(self, sfmap: StructureFrameMap, payload_bytes: int = 0) -> None:
        self.sfmap = sfmap
        self.payload_bytes = payload_bytes
        self.decisions: Counter[InsertKind] = Counter()

    def frames(
        self, streams: SessionStreams, estimate: SessionEstimate
    ) -> Iterator[VisualStructureFrame]:
        for i, state in enumerate(estimate.states):
            frame_id = encode_frame_id(streams.session, i)
            yield VisualStructureFrame.from_grid(
                frame_id,
                float(streams.keyframe_times[i]),
                state.pose @ streams.extrinsic,
                estimate.grids[i],
                streams.descriptors[i],
                payload=synthetic_payload(frame_id, self.payload_bytes),
                session=streams.session,
            )

    def add_session(
        self, streams: SessionStreams, estimate: SessionEstimate
    ) -> Counter[InsertKind]:
        counts: Counter[InsertKind] = Counter()
        for frame in self.frames(streams, estimate):
            counts[self.sfmap.try_insert(frame).kind] += 1
        self.sfmap.route_length_m = max(self.sfmap.route_length_m, streams.trajectory.length)
        self.decisions.update(counts)
        logger.info(
            "session_mapped",
            session=streams.session,
            added=counts[InsertKind.ADDED],
            replaced=counts[InsertKind.REPLACED],
            discarded=counts[InsertKind.DISCARDED],
            map_frames=len(self.sfmap),
        )
        return counts


@dataclass(eq=False)
class MapContext:
    """A map plus lazy access to the ground truth of the sessions it came from."""

    sfmap: StructureFrameMap
    world: WorldConfig
    scene: Scene
    decisions: Counter[InsertKind] = field(default_factory=Counter)
    _sessions: dict[int, SessionStreams] = field(default_factory=dict, repr=False)

    def session(self, session: int) -> SessionStreams:
        if session not in self._sessions:
            self._sessions[session] = gen_session(self.world, session, self.scene)
        return self._sessions[session]

    def truth(self, frame_id: int) -> tuple[FrameTruth, CameraIntrinsics]:
        """True camera pose and depth of a map frame, and its session's intrinsics."""
        session, index = decode_frame_id(frame_id)
        streams = self.session(session)
        return streams.truth(index), streams.k

    def map_poses(self) -> dict[int, Pose]:
        return {f.id: f.pose for f in self.sfmap.frames_in_order()}


def new_map(settings: Settings, world: WorldConfig) -> StructureFrameMap:
    return StructureFrameMap(
        k=world.camera.intrinsics(0),
        xi=settings.covis_xi,
        policy=settings.insert_policy(),
        radius=settings.map_radius_m,
    )


def build_map(settings: Settings, sessions: int | None = None) -> MapContext:
    """Estimate each mapping session and insert its frames in session order."""
    world = settings.world_config()
    scene = build_scene(world.scene, world.seed)
    ctx = MapContext(new_map(settings, world), world, scene)
    builder = MapBuilder(ctx.sfmap, settings.payload_bytes)
    for s in range(sessions or settings.map_sessions):
        bind_context(session=s)
        streams = ctx.session(s)
        builder.add_session(streams, estimate_session(streams, settings))
    ctx.decisions = builder.decisions
    logger.info("map_built", frames=len(ctx.sfmap), sessions=sessions or settings.map_sessions)
    return ctx


def load_map_context(settings: Settings, map_path: str | Path) -> MapContext:
    world = settings.world_config()
    sfmap = deserialize(map_path, k=world.camera.intrinsics(0), xi=settings.covis_xi)
    return MapContext(sfmap, world, build_scene(world.scene, world.seed))


# ============================================
# Coarse localization
# ============================================


@dataclass(frozen=True, eq=False)
class CoarseStep:
    """One query: its keyframe index, retrieval and the odometry since the previous query."""

    index: int
    t: float
    result: RetrievalResult
    gt_dist_m: float
    odometry: Pose | None


def _buffer_length(settings: Settings, mode: RetrievalMode) -> int:
    if mode == RetrievalMode.SAS:
        return settings.sas_window
    if mode == RetrievalMode.CLUSTER:
        return settings.cluster_k + 1
    return 1


def _retrieve(
    mode: RetrievalMode,
    buf: QueryBuffer,
    sfmap: StructureFrameMap,
    particles: ParticleSet | None,
    settings: Settings,
) -> RetrievalResult:
    if mode == RetrievalMode.SAS:
        assert particles is not None
        return retrieve_sas(buf, sfmap, particles)
    if mode == RetrievalMode.CLUSTER:
        return retrieve_cluster(buf, sfmap, settings.cluster_k, settings.cluster_top_n)
    current = buf.current
    assert current is not None
    return retrieve_single(current.descriptor, sfmap)


def coarse_localize(
    ctx: MapContext, query: SessionStreams, settings: Settings, mode: RetrievalMode
) -> list[CoarseStep]:
    """Retrieve a map frame for every 1 Hz query of the session.

    Raises:
        EmptyMapError: If the map holds no frames.
    """
    sfmap = ctx.sfmap
    buf = QueryBuffer(
        sfmap.descriptor_matrix(), _buffer_length(settings, mode), settings.stationary_m
    )
    particles = (
        gen_particles(sfmap, settings.particle_offsets()) if mode == RetrievalMode.SAS else None
    )
    odometry = query.odometry()
    odom_pose = Pose.identity()
    previous: int | None = None
    steps: list[CoarseStep] = []
    for raw in query.query_indices:
        index = int(raw)
        relative = None
        if previous is not None:
            relative = odometry.relative(
                previous, index, query.camera_poses[previous], query.camera_poses[index]
            )
            odom_pose = odom_pose @ relative
        t = float(query.keyframe_times[index])
        push_query(buf, query.descriptors[index], odom_pose, t)
        result = _retrieve(mode, buf, sfmap, particles, settings)
        gt_dist = horizontal_error(
            sfmap.get(result.frame_id).pose.translation, query.camera_poses[index].translation
        )
        steps.append(CoarseStep(index, t, result, gt_dist, relative))
        previous = index
    logger.info("coarse_localized", mode=mode.value, queries=len(steps))
    return steps


# ============================================
# Fine localization
# ============================================


def fine_label(mode: FineMode, frames: int, error_mode: ErrorMode = ErrorMode.RELATIVE) -> str:
    """pnp, fgoN, or fgoN* when map pose error is counted."""
    label = "pnp" if mode == FineMode.PNP else f"fgo{frames}"
    return label + ("*" if error_mode == ErrorMode.ABSOLUTE else "")


@dataclass(eq=False)
class _WindowEntry:
    query: FineQuery
    odometry: Pose | None
    estimate: Pose


class FineLocalizer:
    """Matches each coarse result and estimates the query pose, one query at a time.

    In FGO mode the last cfg.frames queries are re-solved together; each keeps
    its latest estimate as the initial value of the next solve.
    """

    def __init__(
        self,
        ctx: MapContext,
        query: SessionStreams,
        cfg: FineConfig,
        mode: FineMode = FineMode.FGO,
        error_mode: ErrorMode = ErrorMode.RELATIVE,
    ) -> None:
        self.ctx = ctx
        self.query = query
        self.cfg = cfg
        self.mode = mode
        self.error_mode = error_mode
        self.label = fine_label(mode, cfg.frames, error_mode)
        self.map_poses = ctx.map_poses()
        self._matchers: dict[int, MatcherProvider] = {}
        self._window: deque[_WindowEntry] = deque(maxlen=cfg.frames)

    def matches(self, step: CoarseStep) -> list[MatchSet]:
        frame_id = step.result.frame_id
        truth, k_map = self.ctx.truth(frame_id)
        session, _ = decode_frame_id(frame_id)
        if session not in self._matchers:
            self._matchers[session] = self.query.matcher(k_map)
        ms = self._matchers[session].match(
            step.index,
            self.query.camera_poses[step.index],
            frame_id,
            truth,
            stored_grid=self.ctx.sfmap.get(frame_id).inverse_depth,
        )
        return [rescale_map_pixels(ms, k_map, self.query.k)] if len(ms) else []

    def reference_position(self, step: CoarseStep) -> np.ndarray:
        """The query's true position, re-expressed in the stored map frame unless absolute."""
        gt = self.query.camera_poses[step.index]
        if self.error_mode == ErrorMode.ABSOLUTE:
            return gt.translation
        truth, _ = self.ctx.truth(step.result.frame_id)
        stored = self.map_poses[step.result.frame_id]
        return (stored @ truth.pose.inverse() @ gt).translation

    def _initial(self, fq: FineQuery, odometry: Pose | None) -> Pose:
        found = best_pnp(fq.matches, self.query.k, self.cfg)
        if found is not None:
            ms, result = found
            return self.map_poses[ms.map_frame_id] @ result.relative
        if self._window and odometry is not None:
            return self._window[-1].estimate @ odometry
        assert fq.retrieved_frame_id is not None
        return self.map_poses[fq.retrieved_frame_id]

    def _solve_fgo(self, fq: FineQuery, odometry: Pose | None) -> tuple[Pose, int, int]:
        self._window.append(_WindowEntry(fq, odometry, self._initial(fq, odometry)))
        entries = list(self._window)
        fine = build_fine_graph(
            [e.query for e in entries],
            self.map_poses,
            [e.odometry for e in entries[1:]],
            self.query.k,
            self.cfg,
            initial=[e.estimate for e in entries],
        )
        result = solve_fine(fine, self.cfg)
        for entry, pose in zip(entries, result.poses, strict=True):
            entry.estimate = pose
        return result.pose, sum(result.inliers), len(entries)

    def step(self, step: CoarseStep) -> FineLogRow:
        fq = FineQuery(step.index, step.t, step.result.frame_id, self.matches(step))
        pose: Pose | None = None
        inliers, n_frames = 0, 1
        try:
            if self.mode == FineMode.PNP:
                result = localize_pnp(fq, self.map_poses, self.query.k, self.cfg)
                if result is not None:
                    pose, inliers = result.pose, result.inliers[0]
            else:
                pose, inliers, n_frames = self._solve_fgo(fq, step.odometry)
        except SolverDivergedError as e:
            logger.warning("fine_solve_diverged", query=step.index, error=str(e))
            self._window.clear()
        if pose is None:
            nan = math.nan
            return FineLogRow(step.t, nan, nan, nan, math.inf, 0, n_frames, self.label)
        err = horizontal_error(pose.translation, self.reference_position(step))
        tx, ty, tz = (float(v) for v in pose.translation)
        return FineLogRow(step.t, tx, ty, tz, err, inliers, n_frames, self.label)

    def run(self, steps: Sequence[CoarseStep]) -> list[FineLogRow]:
        rows = [self.step(s) for s in steps]
        logger.info("fine_localized", mode=self.label, queries=len(rows))
        return rows


# ============================================
# Commands
# ============================================


def size_table(report: SizeReport) -> Table:
    table = Table(title="Map size")
    table.add_column("category")
    table.add_column("bytes", justify="right")
    for name in ("header", "trailer", "payload", "descriptor", "depth", "overhead"):
        table.add_row(name, str(getattr(report, f"{name}_bytes")))
    table.add_row("total", str(report.total_bytes), style="bold")
    per_km = report.bytes_per_km
    table.add_row("bytes/km", "-" if per_km is None else f"{per_km:.0f}")
    table.add_row("frames", str(report.frames))
    return table


def metrics_table(metrics: Sequence[Metrics]) -> Table:
    table = Table(title="Localization metrics")
    columns = ("method", "queries", "R@5", "R@10", "R@20", "RMSE", "A@0.5", "A@1", "A@5", "RMSE")
    for column in columns:
        table.add_column(column, justify="right")

    def pct(v: float | None) -> str:
        return "-" if v is None else f"{100.0 * v:.2f}%"

    def meters(v: float | None) -> str:
        return "-" if v is None else f"{v:.3f}"

    for m in metrics:
        table.add_row(
            m.method,
            str(m.queries),
            *(pct(v) for v in m.recall.values()),
            meters(m.coarse_rmse),
            *(pct(m.availability.get(e)) for e in (0.5, 1.0, 5.0)),
            meters(m.fine_rmse),
        )
    return table


@dataclass(frozen=True, eq=False)
class MapResult:
    path: Path
    size_bytes: int
    report: SizeReport
    decisions: Counter[InsertKind]


def cmd_map(
    settings: Settings,
    out_path: str | Path,
    sessions: int | None = None,
    console: Console | None = None,
) -> MapResult:
    """Build the map from the mapping sessions, write it and print its size report.

    Raises:
        ConfigError: On invalid settings.
        MapIoError: If the map file cannot be written.
    """
    bind_context(command="map")
    ctx = build_map(settings, sessions)
    written = serialize(ctx.sfmap, out_path)
    report = size_report(ctx.sfmap)
    if console is not None:
        console.print(size_table(report))
    return MapResult(Path(out_path), written, report, ctx.decisions)


@dataclass(frozen=True, eq=False)
class LocalizeResult:
    retrieval_log: Path
    fine_log: Path
    gt_log: Path
    records: list[EvalRecord]


def cmd_localize(
    settings: Settings,
    map_path: str | Path,
    out_dir: str | Path,
    mode: RetrievalMode = RetrievalMode.SAS,
    fine_mode: FineMode = FineMode.FGO,
    frames: int | None = None,
    error_mode: ErrorMode = ErrorMode.RELATIVE,
) -> LocalizeResult:
    """Coarse-to-fine localization of the query session against a map file.

    Logs are written in query order: retrieval.csv, fine.csv and the query
    ground truth gt.csv.
    """
    bind_context(command="localize")
    ctx = load_map_context(settings, map_path)
    query = ctx.session(settings.query_session)
    steps = coarse_localize(ctx, query, settings, mode)
    fine_rows = FineLocalizer(ctx, query, settings.fine_config(frames), fine_mode, error_mode).run(
        steps
    )

    out = Path(out_dir)
    retrieval_rows = [
        RetrievalLogRow(
            t=s.t,
            frame_id=s.result.frame_id,
            sas=s.result.sas_distance,
            margin=s.result.margin,
            method=s.result.method,
            gt_dist_m=s.gt_dist_m,
        )
        for s in steps
    ]
    result = LocalizeResult(
        retrieval_log=write_retrieval_log(retrieval_rows, out / RETRIEVAL_LOG),
        fine_log=write_fine_log(fine_rows, out / FINE_LOG),
        gt_log=export_trajectory_csv([query.states[s.index] for s in steps], out / GT_LOG),
        records=_records(query, steps, fine_rows),
    )
    logger.info("localize_done", queries=len(steps), out=str(out))
    return result


def _records(
    query: SessionStreams, steps: Sequence[CoarseStep], fine_rows: Sequence[FineLogRow] | None
) -> list[EvalRecord]:
    records = []
    for i, s in enumerate(steps):
        row = fine_rows[i] if fine_rows is not None else None
        x, y = query.camera_poses[s.index].translation[:2]
        records.append(
            EvalRecord(
                t=s.t,
                gt_xy=(float(x), float(y)),
                retrieval_dist_m=s.gt_dist_m,
                fine_err_m=math.inf if row is None else row.err_m,
                method=s.result.method,
                fine_mode="" if row is None else row.mode,
            )
        )
    return records


def _run_label(record: EvalRecord) -> str:
    return f"{record.method}+{record.fine_mode}" if record.fine_mode else record.method


def cmd_eval(
    log_dir: str | Path, out_dir: str | Path | None = None, console: Console | None = None
) -> tuple[list[Metrics], list[EvalRecord]]:
    """Metrics of the logs in log_dir, one row per method combination.

    Raises:
        EmptyLogError: If the retrieval log has no rows.
        LogFormatError: If a log has an unexpected header.
    """
    src = Path(log_dir)
    fine_path = src / FINE_LOG
    fine_rows = read_fine_log(fine_path) if fine_path.exists() else []
    records = records_from_logs(
        read_retrieval_log(src / RETRIEVAL_LOG), fine_rows, read_trajectory_csv(src / GT_LOG)
    )
    groups: dict[str, list[EvalRecord]] = {}
    for r in records:
        groups.setdefault(_run_label(r), []).append(r)
    metrics = [
        compute_metrics(group, label, with_fine=bool(fine_rows)) for label, group in groups.items()
    ]
    if out_dir is not None:
        write_metrics_csv(metrics, Path(out_dir) / METRICS_CSV)
    if console is not None:
        console.print(metrics_table(metrics))
    return metrics, records


def cmd_report(
    metrics: Sequence[Metrics], records: Sequence[EvalRecord], out_dir: str | Path
) -> list[Path]:
    """CSV tables and SVG plots; identical inputs give byte-identical files."""
    return write_report(metrics, records, out_dir)


# ============================================
# Benchmarks
# ============================================


def run_coarse_benchmark(
    settings: Settings,
    variants: Sequence[tuple[RetrievalMode, int]] = (
        (RetrievalMode.SINGLE, 1),
        (RetrievalMode.CLUSTER, 10),
        (RetrievalMode.SAS, 10),
    ),
    ctx: MapContext | None = None,
) -> dict[str, Metrics]:
    """Recall and coarse RMSE per retrieval variant; n is the SAS window or cluster K."""
    ctx = ctx or build_map(settings)
    query = ctx.session(settings.query_session)
    results = {}
    for mode, n in variants:
        label = mode.value if mode == RetrievalMode.SINGLE else f"{mode.value}{n}"
        tuned = settings.model_copy(update={"sas_window": n, "cluster_k": n})
        steps = coarse_localize(ctx, query, tuned, mode)
        results[label] = compute_metrics(_records(query, steps, None), label, with_fine=False)
        logger.info("coarse_benchmark", variant=label, recall=results[label].recall)
    return results


def run_fine_benchmark(
    settings: Settings,
    variants: Sequence[tuple[FineMode, int]] = (
        (FineMode.PNP, 1),
        (FineMode.FGO, 1),
        (FineMode.FGO, 2),
        (FineMode.FGO, 5),
        (FineMode.FGO, 10),
    ),
    ctx: MapContext | None = None,
    error_mode: ErrorMode = ErrorMode.RELATIVE,
) -> dict[str, Metrics]:
    """Availability and fine RMSE per fine variant, all on one SAS retrieval run."""
    ctx = ctx or build_map(settings)
    query = ctx.session(settings.query_session)
    steps = coarse_localize(ctx, query, settings, RetrievalMode.SAS)
    results = {}
    for mode, frames in variants:
        localizer = FineLocalizer(ctx, query, settings.fine_config(frames), mode, error_mode)
        rows = localizer.run(steps)
        results[localizer.label] = compute_metrics(_records(query, steps, rows), localizer.label)
        logger.info(
            "fine_benchmark", variant=localizer.label, rmse=results[localizer.label].fine_rmse
        )
    return results
