"""
SF-Loc Unit Tests - Fine localization

Covers:
- match containers and intrinsics rescaling
- PnP-RANSAC on clean and contaminated correspondences
- the multi-frame fine graph and its fallbacks
- fine result log
"""
import numpy as np
import pytest

from sfloc.core.errors import (
    DimensionMismatchError,
    LogFormatError,
    MissingOdometryError,
    NonPositiveInverseDepthError,
    TooFewMatchesError,
)
from sfloc.fineloc import (
    FINE_HEADER,
    FineConfig,
    FineLogRow,
    FineQuery,
    MatchSet,
    build_fine_graph,
    depth_error_bound,
    initial_poses,
    localize_pnp,
    pnp_ransac,
    read_fine_log,
    rescale_map_pixels,
    solve_fine,
    write_fine_log,
)
from sfloc.geom import (
    CameraIntrinsics,
    Pose,
    Twist,
    backproject_points,
    project_points,
    se3_exp,
)


pytestmark = pytest.mark.unit

MAP_ID = 42


def _pose(rho, phi) -> Pose:
    return se3_exp(Twist(rho=np.array(rho, dtype=float), phi=np.array(phi, dtype=float)))


@pytest.fixture
def camera() -> CameraIntrinsics:
    return CameraIntrinsics.from_fov(256, 192, 60.0)


@pytest.fixture
def map_pose() -> Pose:
    return _pose([2.0, 1.0, 0.5], [0.0, 0.2, 0.0])


def _matches(
    k: CameraIntrinsics,
    map_pose: Pose,
    query_pose: Pose,
    rng: np.random.Generator,
    n: int = 60,
    outlier_fraction: float = 0.0,
    query_index: int = 0,
) -> MatchSet:
    """Correspondences of random points seen by both cameras (camera-to-world poses)."""
    pts = np.column_stack(
        (rng.uniform(-6, 6, 4 * n), rng.uniform(-3, 2, 4 * n), rng.uniform(6, 30, 4 * n))
    )
    u_map, ok_map = project_points(k, pts)
    u_query, ok_query = project_points(k, query_pose.inverse().act(map_pose.act(pts)))
    keep = np.flatnonzero(ok_map & ok_query)[:n]
    assert keep.size == n
    u_query = u_query[keep]
    outlier = np.zeros(n, dtype=bool)
    n_out = int(round(outlier_fraction * n))
    if n_out:
        outlier[:n_out] = True
        u_query[:n_out] = rng.uniform((0.0, 0.0), (k.width, k.height), (n_out, 2))
    return MatchSet(
        map_frame_id=MAP_ID,
        query_index=query_index,
        u_map=u_map[keep],
        u_query=u_query,
        inv_depth=1.0 / pts[keep, 2],
        outlier=outlier,
    )


def _translation_error(a: Pose, b: Pose) -> float:
    return float(np.linalg.norm(a.translation - b.translation))


# =============================================================================
# Matches
# =============================================================================

class TestMatchSet:
    """Correspondence container."""

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            MatchSet(1, 0, np.zeros((3, 2)), np.zeros((2, 2)), np.ones(3))

    def test_non_positive_depth(self):
        with pytest.raises(NonPositiveInverseDepthError):
            MatchSet(1, 0, np.zeros((2, 2)), np.zeros((2, 2)), np.array([0.1, 0.0]))

    def test_subset(self, camera, map_pose, rng):
        ms = _matches(camera, map_pose, map_pose, rng, n=10, outlier_fraction=0.3)
        clean = ms.subset(~ms.outlier)
        assert len(clean) == 7
        assert not clean.outlier.any()

    def test_rescale_keeps_rays(self, camera, map_pose, rng):
        """Rescaled map pixels describe the same rays in the query camera."""
        other = CameraIntrinsics.from_fov(128, 96, 75.0)
        ms = _matches(other, map_pose, map_pose, rng, n=10)
        rescaled = rescale_map_pixels(ms, other, camera)
        np.testing.assert_allclose(
            backproject_points(camera, rescaled.u_map, ms.inv_depth),
            backproject_points(other, ms.u_map, ms.inv_depth),
            atol=1e-9,
        )
        assert rescale_map_pixels(ms, camera, camera) is ms


# =============================================================================
# PnP
# =============================================================================

class TestPnp:
    """Single-frame PnP-RANSAC."""

    def test_noise_free_recovers_relative_pose(self, camera, map_pose, rng):
        relative = _pose([0.3, -0.1, 1.5], [0.01, 0.05, 0.0])
        ms = _matches(camera, map_pose, map_pose @ relative, rng)
        result = pnp_ransac(ms, camera, iterations=50)
        assert result.inliers.all()
        assert result.hypotheses > 0
        np.testing.assert_allclose(result.relative.as_matrix(), relative.as_matrix(), atol=1e-6)

    def test_outliers_rejected(self, camera, map_pose, rng):
        """Gross outliers fall outside the inlier set."""
        relative = _pose([-0.5, 0.0, 2.0], [0.0, -0.08, 0.0])
        ms = _matches(camera, map_pose, map_pose @ relative, rng, n=80, outlier_fraction=0.3)
        result = pnp_ransac(ms, camera, iterations=300)
        assert not np.any(result.inliers & ms.outlier)
        assert result.inlier_count >= 0.9 * np.count_nonzero(~ms.outlier)
        assert _translation_error(result.relative, relative) < 1e-3

    def test_too_few_matches(self, camera, map_pose, rng):
        ms = _matches(camera, map_pose, map_pose, rng, n=3)
        with pytest.raises(TooFewMatchesError):
            pnp_ransac(ms, camera)

    def test_localize_pnp(self, camera, map_pose, rng):
        relative = _pose([0.2, 0.0, 1.0], [0.0, 0.03, 0.0])
        ms = _matches(camera, map_pose, map_pose @ relative, rng)
        query = FineQuery(0, 0.0, MAP_ID, [ms])
        result = localize_pnp(query, {MAP_ID: map_pose}, camera, FineConfig())
        assert result is not None
        assert result.converged
        assert result.inliers == [60]
        assert _translation_error(result.pose, map_pose @ relative) < 1e-6

    def test_localize_pnp_without_usable_matches(self, camera, map_pose, rng):
        ms = _matches(camera, map_pose, map_pose, rng, n=3)
        query = FineQuery(0, 0.0, MAP_ID, [ms])
        assert localize_pnp(query, {MAP_ID: map_pose}, camera, FineConfig()) is None


# =============================================================================
# Fine graph
# =============================================================================

class TestFineGraph:
    """Multi-frame factor-graph fine localization."""

    @pytest.fixture
    def drive(self, camera, map_pose, rng):
        """Three queries creeping forward past one map frame."""
        poses = [
            map_pose @ _pose([0.2 * i, 0.0, 1.0 + i], [0.0, 0.02 * i, 0.0]) for i in range(3)
        ]
        odometry = [a.inverse() @ b for a, b in zip(poses, poses[1:])]
        queries = [
            FineQuery(
                i,
                float(i),
                MAP_ID,
                [_matches(camera, map_pose, p, rng, n=40, outlier_fraction=0.2, query_index=i)],
            )
            for i, p in enumerate(poses)
        ]
        return poses, odometry, queries

    def test_recovers_poses_with_outliers(self, camera, map_pose, drive):
        """The Cauchy-weighted graph lands on the true poses despite 20% outliers."""
        poses, odometry, queries = drive
        cfg = FineConfig(ransac_iterations=100)
        fine = build_fine_graph(queries, {MAP_ID: map_pose}, odometry, camera, cfg)
        result = solve_fine(fine, cfg)
        assert result.converged
        assert result.correspondences == [40, 40, 40]
        for got, truth in zip(result.poses, poses, strict=True):
            assert _translation_error(got, truth) < 1e-2
        assert all(count >= 30 for count in result.inliers)
        assert result.pose is result.poses[-1]

    def test_map_pose_fixed(self, camera, map_pose, drive):
        _, odometry, queries = drive
        cfg = FineConfig(ransac_iterations=100)
        fine = build_fine_graph(queries, {MAP_ID: map_pose}, odometry, camera, cfg)
        solve_fine(fine, cfg)
        assert fine.graph.values[("map", MAP_ID)].to_bytes() == map_pose.to_bytes()

    def test_missing_odometry(self, camera, map_pose, drive):
        _, odometry, queries = drive
        with pytest.raises(MissingOdometryError):
            build_fine_graph(
                queries, {MAP_ID: map_pose}, [odometry[0], None], camera, FineConfig()
            )
        with pytest.raises(MissingOdometryError):
            build_fine_graph(queries, {MAP_ID: map_pose}, odometry[:1], camera, FineConfig())

    def test_initial_pose_falls_back_to_odometry(self, camera, map_pose, drive):
        """A query without matches is chained from its predecessor."""
        poses, odometry, queries = drive
        queries[1].matches = []
        cfg = FineConfig(ransac_iterations=100)
        initial = initial_poses(queries, {MAP_ID: map_pose}, odometry, camera, cfg)
        expected = initial[0] @ odometry[0]
        assert initial[1].to_bytes() == expected.to_bytes()
        assert _translation_error(initial[2], poses[2]) < 1e-3

    def test_initial_pose_falls_back_to_retrieval(self, camera, map_pose):
        queries = [FineQuery(0, 0.0, MAP_ID, [])]
        initial = initial_poses(queries, {MAP_ID: map_pose}, [], camera, FineConfig())
        assert initial[0] is map_pose

    def test_no_information_raises(self, camera, map_pose):
        with pytest.raises(TooFewMatchesError):
            initial_poses([FineQuery(0, 0.0, None, [])], {}, [], camera, FineConfig())

    def test_without_correspondences_not_converged(self, camera, map_pose):
        """An empty graph returns its initial poses unconverged."""
        queries = [FineQuery(0, 0.0, MAP_ID, [])]
        fine = build_fine_graph(queries, {MAP_ID: map_pose}, [], camera, FineConfig())
        result = solve_fine(fine, FineConfig())
        assert not result.converged
        assert result.inliers == [0]
        assert result.pose.to_bytes() == map_pose.to_bytes()

    def test_min_inliers_gate(self, camera, map_pose, drive):
        _, odometry, queries = drive
        cfg = FineConfig(ransac_iterations=100, min_inliers=1000)
        fine = build_fine_graph(queries, {MAP_ID: map_pose}, odometry, camera, cfg)
        assert not solve_fine(fine, cfg).converged

    def test_depth_error_bound(self):
        assert depth_error_bound(0.1, 5.0) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            depth_error_bound(-0.1, 5.0)


# =============================================================================
# Log
# =============================================================================

class TestFineLog:
    """Fine result CSV."""

    def test_write_and_read(self, tmp_path):
        rows = [
            FineLogRow(0.2, 1.5, -2.25, 1.0, 0.125, 33, 3, "fgo"),
            FineLogRow(1.0, 0.0, 0.0, 0.0, float("inf"), 0, 1, "pnp"),
        ]
        path = write_fine_log(rows, tmp_path / "logs" / "fine.csv")
        assert path.read_text().splitlines()[0] == ",".join(FINE_HEADER)
        assert read_fine_log(path) == rows

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b\n1,2\n")
        with pytest.raises(LogFormatError):
            read_fine_log(path)
