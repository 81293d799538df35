"""
SF-Loc Unit Tests - Factor residuals, Jacobians, noise models and robust losses
"""
import numpy as np
import pytest

from sfloc.core.errors import MissingStateError
from sfloc.dba import DBAConstraint
from sfloc.fgraph import (
    DbaHessianFactor,
    DepthPriorFactor,
    GnssFactor,
    NavState,
    NoiseModel,
    OdometryFactor,
    PriorFactor,
    ReprojectionFactor,
    RobustLoss,
    camera_container,
    dba_hessian_cost,
    retract,
)
from sfloc.fgraph.state import dof
from sfloc.geom import CameraIntrinsics, Pose, Twist, forward_camera_extrinsic, se3_exp


pytestmark = pytest.mark.unit


def _pose(rho, phi) -> Pose:
    return se3_exp(Twist(rho=np.array(rho, dtype=float), phi=np.array(phi, dtype=float)))


def _numeric_jacobians(factor, values, eps: float = 1e-6) -> list[np.ndarray]:
    """Central differences of the factor residual on each key's chart."""
    jacs = []
    for key in factor.keys:
        n = dof(values[key])
        jac = np.zeros((factor.residual(values).size, n))
        for axis in range(n):
            step = np.zeros(n)
            step[axis] = eps
            plus, minus = dict(values), dict(values)
            plus[key] = retract(values[key], step)
            minus[key] = retract(values[key], -step)
            jac[:, axis] = (factor.residual(plus) - factor.residual(minus)) / (2 * eps)
        jacs.append(jac)
    return jacs


def _assert_jacobians(factor, values, rtol: float = 1e-5, atol: float = 1e-6) -> None:
    _, analytic = factor.evaluate(values)
    for a, n in zip(analytic, _numeric_jacobians(factor, values), strict=True):
        np.testing.assert_allclose(a, n, rtol=rtol, atol=atol)


# =============================================================================
# Noise and loss
# =============================================================================

class TestNoiseModel:
    """Whitening."""

    def test_from_sigmas_whitens(self):
        noise = NoiseModel.from_sigmas([2.0, 0.5])
        np.testing.assert_allclose(noise.whiten(np.array([4.0, 1.0])), [2.0, 2.0])

    def test_from_covariance_matches_information(self):
        cov = np.array([[2.0, 0.3], [0.3, 1.0]])
        noise = NoiseModel.from_covariance(cov)
        l_mat = noise.sqrt_information
        np.testing.assert_allclose(l_mat.T @ l_mat, np.linalg.inv(cov), atol=1e-12)

    def test_isotropic_dim(self):
        assert NoiseModel.isotropic(3, 0.1).dim == 3


class TestRobustLoss:
    """Cauchy kernel."""

    def test_quadratic_is_identity(self):
        loss = RobustLoss()
        assert loss.rho(4.0) == 4.0
        assert loss.weight(4.0) == 1.0

    @pytest.mark.parametrize("s", [0.0, 0.5, 4.0, 100.0])
    def test_cauchy_bounded_by_quadratic(self, s: float):
        """rho(s) <= s and the IRLS weight lies in (0, 1]."""
        loss = RobustLoss.cauchy(2.0)
        assert loss.rho(s) <= s + 1e-12
        assert 0.0 < loss.weight(s) <= 1.0

    def test_cauchy_weight_is_derivative(self):
        loss = RobustLoss.cauchy(1.5)
        s, h = 3.0, 1e-6
        assert loss.weight(s) == pytest.approx((loss.rho(s + h) - loss.rho(s - h)) / (2 * h))

    def test_non_positive_scale_rejected(self):
        with pytest.raises(ValueError):
            RobustLoss.cauchy(0.0)


# =============================================================================
# Residual factors
# =============================================================================

class TestPoseFactors:
    """Prior, odometry and GNSS factors."""

    def test_prior_zero_at_prior(self):
        pose = _pose([1.0, 2.0, 3.0], [0.1, 0.2, -0.3])
        factor = PriorFactor("x", pose, NoiseModel.isotropic(6, 0.1))
        np.testing.assert_allclose(factor.residual({"x": pose}), np.zeros(6), atol=1e-12)

    def test_prior_jacobian(self):
        prior = _pose([1.0, 2.0, 3.0], [0.1, 0.2, -0.3])
        value = _pose([1.2, 1.9, 3.1], [0.15, 0.1, -0.2])
        _assert_jacobians(PriorFactor("x", prior, NoiseModel.isotropic(6, 0.1)), {"x": value})

    def test_odometry_zero_when_consistent(self):
        """r = 0 when T_a^-1 T_b equals the measurement."""
        a = _pose([1.0, 0.0, 0.0], [0.0, 0.0, 0.4])
        b = _pose([3.0, 1.0, 0.2], [0.05, 0.0, 0.7])
        factor = OdometryFactor("a", "b", a.inverse() @ b, NoiseModel.isotropic(6, 0.1))
        np.testing.assert_allclose(factor.residual({"a": a, "b": b}), np.zeros(6), atol=1e-12)

    def test_odometry_jacobians(self):
        a = _pose([1.0, 0.0, 0.0], [0.0, 0.0, 0.4])
        b = _pose([3.0, 1.0, 0.2], [0.05, 0.0, 0.7])
        measured = _pose([1.8, 1.2, 0.1], [0.02, 0.03, 0.25])
        factor = OdometryFactor("a", "b", measured, NoiseModel.isotropic(6, 0.1))
        _assert_jacobians(factor, {"a": a, "b": b})

    def test_odometry_jacobians_on_navstates(self):
        """NavState variables get zero columns beyond the pose block."""
        a = NavState(pose=_pose([1.0, 0.0, 0.0], [0.0, 0.0, 0.4]))
        b = NavState(pose=_pose([3.0, 1.0, 0.2], [0.05, 0.0, 0.7]))
        factor = OdometryFactor("a", "b", Pose.identity(), NoiseModel.isotropic(6, 0.1))
        _, jacs = factor.evaluate({"a": a, "b": b})
        assert jacs[0].shape == (6, 15)
        assert np.all(jacs[0][:, 6:] == 0.0)
        _assert_jacobians(factor, {"a": a, "b": b})

    def test_gnss_residual_uses_lever_arm(self):
        """The antenna sits at the body position plus the rotated lever arm."""
        body = Pose.from_rt(np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
                            np.array([10.0, 5.0, 1.5]))
        factor = GnssFactor(
            "x", np.array([10.0, 6.0, 2.0]), NoiseModel.isotropic(3, 0.5),
            lever=np.array([1.0, 0.0, 0.5]),
        )
        np.testing.assert_allclose(factor.residual({"x": body}), np.zeros(3), atol=1e-12)

    def test_gnss_jacobian(self):
        state = NavState(pose=_pose([4.0, -2.0, 1.5], [0.02, -0.01, 1.2]))
        factor = GnssFactor(
            "x", np.array([4.5, -1.0, 2.0]), NoiseModel.isotropic(3, 0.5),
            lever=np.array([0.3, 0.1, 0.8]), loss=RobustLoss.cauchy(1.0),
        )
        _assert_jacobians(factor, {"x": state})

    def test_cauchy_downweights_outlier(self):
        """A 50 m GNSS outlier costs far less than its quadratic value."""
        state = NavState()
        noise = NoiseModel.isotropic(3, 0.5)
        fix = np.array([50.0, 0.0, 0.0])
        robust = GnssFactor("x", fix, noise, loss=RobustLoss.cauchy(1.0))
        plain = GnssFactor("x", fix, noise)
        assert robust.cost({"x": state}) < 0.01 * plain.cost({"x": state})


class TestReprojectionFactor:
    """Query-to-map reprojection through a per-point inverse depth."""

    @pytest.fixture
    def values(self):
        return {
            "q": _pose([0.3, -0.1, 1.0], [0.01, 0.03, -0.02]),
            "m": _pose([0.0, 0.0, 0.0], [0.0, 0.0, 0.0]),
            "d": 0.2,
        }

    def test_zero_for_true_projection(self, small_camera: CameraIntrinsics, values):
        """Projecting the true point gives zero residual."""
        u_map = np.array([20.0, 28.0])
        z = 1.0 / values["d"]
        point_m = np.array(
            [(u_map[0] - small_camera.cx) / small_camera.fx * z,
             (u_map[1] - small_camera.cy) / small_camera.fy * z, z]
        )
        point_q = values["q"].inverse().act(values["m"].act(point_m))
        u_query = np.array(
            [small_camera.fx * point_q[0] / point_q[2] + small_camera.cx,
             small_camera.fy * point_q[1] / point_q[2] + small_camera.cy]
        )
        factor = ReprojectionFactor(
            "q", "m", "d", u_map, u_query, small_camera, NoiseModel.isotropic(2, 1.0)
        )
        np.testing.assert_allclose(factor.residual(values), np.zeros(2), atol=1e-9)

    def test_jacobians(self, small_camera: CameraIntrinsics, values):
        """Query pose, map pose and depth Jacobians match finite differences."""
        factor = ReprojectionFactor(
            "q", "m", "d", np.array([20.0, 28.0]), np.array([25.0, 30.0]), small_camera,
            NoiseModel.isotropic(2, 1.0), RobustLoss.cauchy(2.0),
        )
        _assert_jacobians(factor, values, rtol=1e-5, atol=1e-5)

    def test_depth_prior(self):
        factor = DepthPriorFactor("d", 0.25, NoiseModel.isotropic(1, 0.01))
        np.testing.assert_allclose(factor.residual({"d": 0.3}), [0.05])
        _assert_jacobians(factor, {"d": 0.3})


# =============================================================================
# Quadratic factors
# =============================================================================

class TestDbaHessianFactor:
    """The relinearized Schur-reduced visual container."""

    def test_container_zero_at_linearization_point(self):
        """l_c vanishes at the poses the constraint was built at."""
        extrinsic = forward_camera_extrinsic(np.array([0.5, 0.0, 0.2]))
        body = _pose([3.0, 1.0, 1.5], [0.0, 0.0, 0.3])
        lin_cw = (body @ extrinsic).inverse()
        l_vec, _ = camera_container(body, extrinsic, lin_cw)
        np.testing.assert_allclose(l_vec, np.zeros(6), atol=1e-12)

    def test_container_jacobian(self):
        """d l_c / d body-chart increment against finite differences."""
        extrinsic = forward_camera_extrinsic(np.array([0.5, 0.0, 0.2]))
        body = _pose([3.0, 1.0, 1.5], [0.02, -0.01, 0.3])
        lin_cw = (_pose([3.1, 0.9, 1.5], [0.0, 0.0, 0.25]) @ extrinsic).inverse()
        _, analytic = camera_container(body, extrinsic, lin_cw)
        eps = 1e-6
        numeric = np.zeros((6, 6))
        for axis in range(6):
            step = np.zeros(6)
            step[axis] = eps
            plus, _ = camera_container(retract(body, step), extrinsic, lin_cw)
            minus, _ = camera_container(retract(body, -step), extrinsic, lin_cw)
            numeric[:, axis] = (plus - minus) / (2 * eps)
        np.testing.assert_allclose(analytic, numeric, rtol=1e-5, atol=1e-6)

    def test_gradient_at_linearization_point(self):
        """At the linearization point the factor gradient is -J^T v."""
        extrinsic = forward_camera_extrinsic()
        bodies = [_pose([0.0, 0.0, 1.5], [0, 0, 0]), _pose([1.0, 0.0, 1.5], [0, 0, 0.05])]
        lin = [(b @ extrinsic).inverse() for b in bodies]
        rng = np.random.default_rng(0)
        a = rng.standard_normal((12, 12))
        constraint = DBAConstraint(
            source=0, frame_ids=[0, 1], h=a @ a.T, v=rng.standard_normal(12), lin_poses=lin
        )
        values = {0: bodies[0], 1: bodies[1]}
        lin_result = dba_hessian_cost(constraint, values, extrinsic)
        _, jac = DbaHessianFactor([0, 1], constraint, extrinsic).container(values)
        assert lin_result.cost == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(lin_result.gradient, -jac.T @ constraint.v, atol=1e-10)

    def test_missing_states_raise(self):
        constraint = DBAConstraint(source=0, frame_ids=[0, 1], h=np.eye(12), v=np.zeros(12))
        with pytest.raises(MissingStateError):
            dba_hessian_cost(constraint, {0: Pose.identity()}, forward_camera_extrinsic())
