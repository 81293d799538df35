"""
SF-Loc Unit Tests - Synthetic world

Covers:
- trajectories and keyframe clocks
- bitwise determinism of generated sessions
- IMU/GNSS streams consistent with ground truth
- noise-free perception providers
- session archives on disk
"""
import numpy as np
import pytest

from sfloc.core.errors import DegenerateRouteError
from sfloc.dba import FlowField
from sfloc.fgraph import preintegrate
from sfloc.geom import INV_DEPTH_MIN, backproject_points, project_points
from sfloc.simworld import (
    CameraSimConfig,
    GnssSimConfig,
    MatcherSimConfig,
    OdometryProvider,
    WorldConfig,
    build_corridor,
    build_trajectory,
    corridor_world,
    decode_frame_id,
    encode_frame_id,
    gen_session,
    keyframe_times,
    read_session_archive,
    straight_route,
    write_session_archive,
)


pytestmark = pytest.mark.unit


def _small_world(**overrides) -> WorldConfig:
    fields = {
        "seed": 11,
        "route": straight_route(30.0),
        "camera": CameraSimConfig(width=64, height=48),
        "keyframe_rate_hz": 1.0,
    }
    fields.update(overrides)
    return WorldConfig(**fields)


@pytest.fixture(scope="module")
def small_session():
    return gen_session(_small_world(), 0)


# =============================================================================
# Trajectory
# =============================================================================

class TestTrajectory:
    """Route splines and the keyframe clock."""

    def test_straight_route_constant_speed(self):
        """A straight route is driven at the commanded speed and height."""
        traj = build_trajectory(straight_route(100.0), speed=5.0, height=1.5)
        assert traj.length == pytest.approx(100.0, rel=1e-6)
        assert traj.duration == pytest.approx(20.0, rel=1e-6)
        np.testing.assert_allclose(traj.position(10.0), [50.0, 0.0, 1.5], atol=1e-3)
        np.testing.assert_allclose(np.linalg.norm(traj.velocity(7.0)), 5.0, rtol=1e-3)
        assert traj.yaw(10.0) == pytest.approx(0.0, abs=1e-6)

    @pytest.mark.parametrize(
        "route,closed",
        [
            ([(0.0, 0.0)], False),
            ([(3.0, 3.0), (3.0, 3.0)], False),
            ([(0.0, 0.0), (10.0, 0.0)], True),
        ],
    )
    def test_degenerate_routes_rejected(self, route, closed):
        with pytest.raises(DegenerateRouteError):
            build_trajectory(route, speed=5.0, closed=closed)

    def test_keyframe_times_include_both_ends(self):
        """A 20 s drive at 5 Hz has 101 keyframes."""
        times = keyframe_times(20.0, 5.0)
        assert len(times) == 101
        assert times[0] == 0.0
        assert times[-1] == pytest.approx(20.0)


# =============================================================================
# Sessions
# =============================================================================

class TestSessionGeneration:
    """Per-session streams."""

    def test_fixed_seed_reproduces_bitwise(self, small_session):
        """Two generations with the same config agree bit for bit."""
        again = gen_session(_small_world(), 0)
        np.testing.assert_array_equal(small_session.descriptors, again.descriptors)
        np.testing.assert_array_equal(small_session.imu.accel, again.imu.accel)
        for a, b in zip(small_session.grids, again.grids, strict=True):
            np.testing.assert_array_equal(a.values, b.values)
        for a, b in zip(small_session.camera_poses, again.camera_poses, strict=True):
            assert a.to_bytes() == b.to_bytes()

    def test_sessions_differ_in_appearance(self, small_session):
        other = gen_session(_small_world(), 1)
        assert not np.array_equal(small_session.descriptors, other.descriptors)

    def test_shapes(self, small_session):
        n = len(small_session)
        assert n == 7
        assert small_session.descriptors.shape == (n, 256)
        norms = np.linalg.norm(small_session.descriptors, axis=1)
        np.testing.assert_allclose(norms, 1.0, rtol=1e-5)
        assert all(g.values.shape == (6, 8) for g in small_session.grids)
        np.testing.assert_array_equal(small_session.query_indices, np.arange(n))

    def test_query_stride(self):
        streams = gen_session(_small_world(keyframe_rate_hz=2.0, query_rate_hz=0.5), 0)
        np.testing.assert_array_equal(streams.query_indices, np.arange(0, len(streams), 4))

    def test_camera_looks_along_heading(self, small_session):
        """The forward camera's optical axis follows the direction of travel."""
        axis = small_session.camera_poses[3].R[:, 2]
        np.testing.assert_allclose(axis, [1.0, 0.0, 0.0], atol=1e-6)

    def test_imu_integrates_to_next_keyframe(self, small_session):
        """Noise-free IMU between keyframes reproduces the ground-truth motion."""
        t0, t1 = small_session.keyframe_times[2], small_session.keyframe_times[3]
        samples = small_session.imu.between(t0, t1)
        assert len(samples) == 200
        r1, v1, p1 = preintegrate(samples).predict(small_session.states[2])
        truth = small_session.states[3]
        np.testing.assert_allclose(r1, truth.pose.R, atol=1e-6)
        np.testing.assert_allclose(v1, truth.velocity, atol=1e-3)
        np.testing.assert_allclose(p1, truth.pose.translation, atol=1e-3)

    def test_gnss_outage_has_no_fixes(self):
        cfg = _small_world(gnss=GnssSimConfig(outages=[(2.0, 4.0)]))
        streams = gen_session(cfg, 0)
        times = [fix.t for fix in streams.gnss]
        assert times == [0.0, 1.0, 5.0, 6.0]
        assert streams.gnss_at(3) == []
        assert len(streams.gnss_at(5)) == 1

    def test_gnss_lever_arm(self, small_session):
        """Noise-free fixes sit at the antenna above the body origin."""
        fix = small_session.gnss_at(2)[0]
        np.testing.assert_allclose(
            fix.position, small_session.states[2].pose.translation + [0.0, 0.0, 0.5], atol=1e-9
        )

    def test_initial_grid_noise(self, small_session):
        """Initial inverse depth is a positive scaled copy of the truth."""
        init = small_session.initial_grid(1)
        truth = small_session.grids[1].flat()
        assert np.all(init > 0.0)
        assert not np.array_equal(init, truth)
        np.testing.assert_array_equal(init, small_session.initial_grid(1))

    def test_keyframe_inputs(self, small_session):
        inputs = small_session.keyframe_inputs()
        assert len(inputs) == len(small_session)
        assert inputs[0].imu_samples == []
        assert len(inputs[1].imu_samples) == 200
        assert len(inputs[1].gnss) == 1


# =============================================================================
# Providers
# =============================================================================

class TestProviders:
    """Synthetic flow, matches and odometry."""

    def test_frame_id_round_trip(self):
        fid = encode_frame_id(3, 1234)
        assert fid == (3 << 32) | 1234
        assert decode_frame_id(fid) == (3, 1234)

    def test_flow_vanishes_at_truth(self, small_session):
        """Noise-free flow evaluated at the true poses and depths is zero."""
        flow_fn = small_session.flow_provider()
        t = [small_session.camera_pose_cw(i) for i in range(len(small_session))]
        flow = flow_fn(1, 2, t[1], t[2], small_session.grids[1].flat())
        assert isinstance(flow, FlowField)
        assert flow.valid.any()
        np.testing.assert_allclose(flow.residual, 0.0, atol=1e-9)

    def test_flow_is_nonzero_off_truth(self, small_session):
        flow_fn = small_session.flow_provider()
        t1 = small_session.camera_pose_cw(1)
        t2 = small_session.camera_pose_cw(2)
        flow = flow_fn(1, 2, t1, t2, 0.5 * small_session.grids[1].flat())
        assert np.abs(flow.residual).max() > 0.1

    def test_noise_free_matches_reproject(self):
        """Clean matches back-project and reproject onto the query pixel."""
        cfg = _small_world(matcher=MatcherSimConfig(pixel_sigma=0.0, outlier_fraction=0.0))
        streams = gen_session(cfg, 0)
        matcher = streams.matcher(streams.k)
        matches = matcher.match(
            4, streams.camera_poses[4], encode_frame_id(0, 3), streams.truth(3)
        )
        assert len(matches.u_query) > 0
        assert not matches.outlier.any()
        assert np.all(matches.inv_depth > INV_DEPTH_MIN)

        world = streams.camera_poses[3].act(
            backproject_points(streams.k, matches.u_map, matches.inv_depth)
        )
        u, valid = project_points(streams.k, streams.camera_poses[4].inverse().act(world))
        assert valid.all()
        np.testing.assert_allclose(u, matches.u_query, atol=1e-6)

    def test_outlier_fraction(self):
        cfg = _small_world(
            matcher=MatcherSimConfig(pixel_sigma=0.0, outlier_fraction=0.25, matches_per_pair=20)
        )
        streams = gen_session(cfg, 0)
        matches = streams.matcher(streams.k).match(
            4, streams.camera_poses[4], encode_frame_id(0, 3), streams.truth(3)
        )
        assert matches.outlier.sum() == round(0.25 * len(matches.u_query))

    def test_noisy_matches_stay_inside_image(self):
        """Pixels pushed past the border are clipped into [0, W) x [0, H)."""
        cfg = _small_world(matcher=MatcherSimConfig(pixel_sigma=200.0, outlier_fraction=0.0))
        streams = gen_session(cfg, 0)
        matches = streams.matcher(streams.k).match(
            4, streams.camera_poses[4], encode_frame_id(0, 3), streams.truth(3)
        )
        u, v = matches.u_query[:, 0], matches.u_query[:, 1]
        assert (u >= 0.0).all() and (v >= 0.0).all()
        assert (u < streams.k.width).all()
        assert (v < streams.k.height).all()
        assert (u > streams.k.width - 1e-6).any()

    def test_exact_odometry_without_error(self, small_session):
        odo = OdometryProvider(0.0, 0.0)
        a, b = small_session.camera_poses[1], small_session.camera_poses[2]
        rel = odo.relative(1, 2, a, b)
        np.testing.assert_allclose(
            rel.as_matrix(), (a.inverse() @ b).as_matrix(), atol=1e-12
        )

    def test_odometry_error_scales_with_distance(self, small_session):
        """Translation error is proportional to the distance travelled."""
        odo = OdometryProvider(0.01, 0.0, seed=5)
        a, b = small_session.camera_poses[0], small_session.camera_poses[4]
        rel = odo.relative(0, 4, a, b)
        true_t = (a.inverse() @ b).translation
        err = np.linalg.norm(rel.translation - true_t)
        assert 0.0 < err < 0.1 * np.linalg.norm(true_t)


# =============================================================================
# Scenes and archives
# =============================================================================

class TestSceneAndArchive:
    """Scene construction and the on-disk session format."""

    def test_corridor_walls(self):
        """A camera on the corridor axis sees both walls at the wall distance."""
        scene = build_corridor(100.0, 8.0, 12.0, ground=False)
        origin = np.array([0.0, 0.0, 1.5])
        dirs = np.array([[0.0, 1.0, 0.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]])
        depths = scene.ray_depths(origin, dirs)
        np.testing.assert_allclose(depths[:2], [8.0, 8.0])
        assert np.isinf(depths[2])

    def test_corridor_world_has_structure(self):
        cfg = corridor_world(length=20.0, seed=2).model_copy(
            update={"camera": CameraSimConfig(width=64, height=48), "keyframe_rate_hz": 1.0}
        )
        streams = gen_session(cfg, 0)
        assert (streams.grids[0].flat() > INV_DEPTH_MIN).mean() > 0.5

    def test_archive_round_trip(self, small_session, tmp_path):
        """Streams written to disk read back with matching contents."""
        out = write_session_archive(small_session, tmp_path / "s0")
        assert {p.name for p in out.iterdir()} == {
            "imu.csv",
            "gnss.csv",
            "gt.csv",
            "keyframes.bin",
        }
        archive = read_session_archive(out)
        assert archive.imu.shape == (len(small_session.imu), 8)
        np.testing.assert_array_equal(archive.imu[:, 1:4], small_session.imu.accel)
        assert archive.gnss.shape == (len(small_session.gnss), 5)
        assert len(archive.gt) == len(small_session)
        assert [f.id for f in archive.keyframes] == [
            encode_frame_id(0, i) for i in range(len(small_session))
        ]
        np.testing.assert_allclose(
            archive.keyframes[2].pose.translation,
            small_session.camera_poses[2].translation,
        )
