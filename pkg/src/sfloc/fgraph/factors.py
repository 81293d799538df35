"""Factor types of the window, global and fine-localization graphs.

Residual factors whiten with their NoiseModel and apply a RobustLoss to the
squared whitened norm s: cost = ½ rho(s). Quadratic factors (DBA Hessian
containers and marginal priors) carry their own (H, v) pair.
"""

from abc import ABC, abstractmethod
from collections.abc import Hashable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from ..core.errors import InvalidFactorError, MissingStateError
from ..dba.schur import DBAConstraint
from ..geom import (
    INV_DEPTH_MIN,
    CameraIntrinsics,
    Pose,
    skew,
    so3_left_jacobian_inv,
    so3_log,
    so3_right_jacobian_inv,
)
from .imu import ImuNoiseParams, PreintegratedImu, imu_residual_and_jacobians
from .noise import QUADRATIC, NoiseModel, RobustLoss
from .state import NavState, dof, embed_pose_jacobian, local, local_jacobian, pose_of

Key = Hashable
Values = Mapping[Key, object]


@dataclass(eq=False)
class Linearization:
    """Cost, gradient and Gauss-Newton Hessian over a factor's keys (concatenated)."""

    cost: float
    gradient: np.ndarray
    hessian: np.ndarray


class Factor(ABC):
    keys: tuple[Key, ...]

    @abstractmethod
    def cost(self, values: Values) -> float:
        ...

    @abstractmethod
    def linearize(self, values: Values) -> Linearization:
        ...

    def touches(self, key: Key) -> bool:
        return key in self.keys


class ResidualFactor(Factor):
    """Factor built on a residual r(x) with Jacobians per key."""

    def __init__(
        self, keys: Sequence[Key], noise: NoiseModel, loss: RobustLoss = QUADRATIC
    ) -> None:
        self.keys = tuple(keys)
        self.noise = noise
        self.loss = loss

    @abstractmethod
    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        """Unwhitened residual and one Jacobian per key (columns = variable dof)."""

    def residual(self, values: Values) -> np.ndarray:
        return self.evaluate(values)[0]

    def whitened_norm2(self, values: Values) -> float:
        r = self.noise.whiten(self.residual(values))
        return float(r @ r)

    def cost(self, values: Values) -> float:
        return 0.5 * self.loss.rho(self.whitened_norm2(values))

    def linearize(self, values: Values) -> Linearization:
        r, jacs = self.evaluate(values)
        rw = self.noise.whiten(r)
        jw = self.noise.whiten_jacobian(np.hstack(jacs))
        s = float(rw @ rw)
        w = self.loss.weight(s)
        return Linearization(
            cost=0.5 * self.loss.rho(s),
            gradient=w * (jw.T @ rw),
            hessian=w * (jw.T @ jw),
        )


class PriorFactor(ResidualFactor):
    """Prior on one variable: r = x ⊖ prior."""

    def __init__(self, key: Key, prior: object, noise: NoiseModel) -> None:
        super().__init__((key,), noise)
        self.prior = prior

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        x = values[self.keys[0]]
        return local(x, self.prior), [local_jacobian(x, self.prior)]


class ImuFactor(ResidualFactor):
    """Preintegrated inertial factor between consecutive NavStates."""

    def __init__(
        self,
        key_k: Key,
        key_k1: Key,
        pre: PreintegratedImu,
        noise_params: ImuNoiseParams | None = None,
    ) -> None:
        params = noise_params or ImuNoiseParams()
        super().__init__((key_k, key_k1), NoiseModel.from_covariance(pre.full_covariance(params)))
        self.pre = pre

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        x_k = values[self.keys[0]]
        x_k1 = values[self.keys[1]]
        assert isinstance(x_k, NavState) and isinstance(x_k1, NavState)
        r, j0, j1 = imu_residual_and_jacobians(x_k, x_k1, self.pre)
        return r, [j0, j1]


def gnss_residual_and_jacobian(
    x: NavState | Pose, lever: np.ndarray, t_nw: Pose, meas: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """r = T_nw ∘ T_wb ∘ lever − meas, with its (3, 6) pose Jacobian."""
    pose = pose_of(x)
    r_wb = pose.R
    antenna_w = pose.translation + r_wb @ lever
    residual = t_nw.act(antenna_w) - meas
    r_nb = t_nw.R @ r_wb
    jac = np.hstack((r_nb, -r_nb @ skew(lever)))
    return residual, jac


def gnss_residual(
    x: NavState | Pose, lever: np.ndarray, t_nw: Pose, meas: np.ndarray
) -> np.ndarray:
    return gnss_residual_and_jacobian(x, lever, t_nw, meas)[0]


class GnssFactor(ResidualFactor):
    """Antenna position fix."""

    def __init__(
        self,
        key: Key,
        meas: np.ndarray,
        noise: NoiseModel,
        lever: np.ndarray | None = None,
        t_nw: Pose | None = None,
        loss: RobustLoss = QUADRATIC,
    ) -> None:
        super().__init__((key,), noise, loss)
        self.meas = np.asarray(meas, dtype=np.float64)
        self.lever = np.zeros(3) if lever is None else np.asarray(lever, dtype=np.float64)
        self.t_nw = t_nw or Pose.identity()

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        x = values[self.keys[0]]
        r, jac = gnss_residual_and_jacobian(x, self.lever, self.t_nw, self.meas)
        return r, [embed_pose_jacobian(x, jac)]


def relative_pose_residual(
    pose_a: Pose, pose_b: Pose, measured: Pose
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Residual on the chart of E = T_b⁻¹ T_a T̃ (identity when T_a⁻¹T_b = T̃)."""
    ra, rb, rm = pose_a.R, pose_b.R, measured.R
    rbt = rb.T
    r_e = rbt @ ra @ rm
    t_e = rbt @ (ra @ measured.translation + pose_a.translation - pose_b.translation)
    phi = so3_log(r_e)
    jr_inv = so3_right_jacobian_inv(phi)

    ja = np.zeros((6, 6))
    ja[:3, :3] = rbt @ ra
    ja[:3, 3:] = -rbt @ ra @ skew(measured.translation)
    ja[3:, 3:] = jr_inv @ rm.T
    jb = np.zeros((6, 6))
    jb[:3, :3] = -np.eye(3)
    jb[:3, 3:] = skew(t_e)
    jb[3:, 3:] = -so3_left_jacobian_inv(phi)
    return np.concatenate((t_e, phi)), ja, jb


class OdometryFactor(ResidualFactor):
    """Relative pose T̃ = T_a⁻¹ T_b between two pose-like variables."""

    def __init__(
        self, key_a: Key, key_b: Key, measured: Pose, noise: NoiseModel
    ) -> None:
        super().__init__((key_a, key_b), noise)
        self.measured = measured

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        a, b = values[self.keys[0]], values[self.keys[1]]
        r, ja, jb = relative_pose_residual(pose_of(a), pose_of(b), self.measured)
        return r, [embed_pose_jacobian(a, ja), embed_pose_jacobian(b, jb)]


class DepthPriorFactor(ResidualFactor):
    """Scalar inverse-depth prior λ − λ̃."""

    def __init__(self, key: Key, inv_depth: float, noise: NoiseModel) -> None:
        super().__init__((key,), noise)
        self.inv_depth = float(inv_depth)

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        lam = float(values[self.keys[0]])  # type: ignore[arg-type]
        return np.array([lam - self.inv_depth]), [np.eye(1)]


def reprojection_residual(
    query: Pose,
    map_pose: Pose,
    inv_depth: float,
    u_map: np.ndarray,
    u_query: np.ndarray,
    k: CameraIntrinsics,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Reproject a map-frame pixel with inverse depth into the query camera.

    Poses are camera-to-world. Returns (r, d/d query (2,6), d/d map (2,6), d/dλ (2,1)).
    """
    lam = max(float(inv_depth), INV_DEPTH_MIN)
    z = 1.0 / lam
    x_m = np.array([(u_map[0] - k.cx) / k.fx * z, (u_map[1] - k.cy) / k.fy * z, z])
    r_c, r_m = query.R, map_pose.R
    x_w = r_m @ x_m + map_pose.translation
    x_c = r_c.T @ (x_w - query.translation)
    depth = max(x_c[2], 1e-6)
    pred = np.array([k.fx * x_c[0] / depth + k.cx, k.fy * x_c[1] / depth + k.cy])
    proj = np.array(
        [
            [k.fx / depth, 0.0, -k.fx * x_c[0] / depth**2],
            [0.0, k.fy / depth, -k.fy * x_c[1] / depth**2],
        ]
    )
    j_query = proj @ np.hstack((-np.eye(3), skew(x_c)))
    rel = r_c.T @ r_m
    j_map = proj @ np.hstack((rel, -rel @ skew(x_m)))
    j_depth = proj @ (rel @ (-x_m / lam))
    return pred - u_query, j_query, j_map, j_depth.reshape(2, 1)


class ReprojectionFactor(ResidualFactor):
    """Query-to-map correspondence through a per-point inverse-depth variable."""

    def __init__(
        self,
        query_key: Key,
        map_key: Key,
        depth_key: Key,
        u_map: np.ndarray,
        u_query: np.ndarray,
        k: CameraIntrinsics,
        noise: NoiseModel,
        loss: RobustLoss = QUADRATIC,
    ) -> None:
        super().__init__((query_key, map_key, depth_key), noise, loss)
        self.u_map = np.asarray(u_map, dtype=np.float64)
        self.u_query = np.asarray(u_query, dtype=np.float64)
        self.k = k

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        q, m = values[self.keys[0]], values[self.keys[1]]
        lam = float(values[self.keys[2]])  # type: ignore[arg-type]
        r, jq, jm, jd = reprojection_residual(
            pose_of(q), pose_of(m), lam, self.u_map, self.u_query, self.k
        )
        return r, [embed_pose_jacobian(q, jq), embed_pose_jacobian(m, jm), jd]


class LinearFactor(ResidualFactor):
    """r = Σ A_k x_k − b over vector variables."""

    def __init__(
        self,
        keys: Sequence[Key],
        blocks: Sequence[np.ndarray],
        b: np.ndarray,
        noise: NoiseModel,
    ) -> None:
        super().__init__(keys, noise)
        self.blocks = [np.atleast_2d(np.asarray(a, dtype=np.float64)) for a in blocks]
        self.b = np.asarray(b, dtype=np.float64)

    def evaluate(self, values: Values) -> tuple[np.ndarray, list[np.ndarray]]:
        r = -self.b.copy()
        for key, a in zip(self.keys, self.blocks, strict=True):
            r = r + a @ np.asarray(values[key]).reshape(-1)
        return r, list(self.blocks)


# --- quadratic factors ---


class QuadraticFactor(Factor):
    """E = ½ lᵀ H l − lᵀ v on a linear container l(x) with Jacobian J_l."""

    h: np.ndarray
    v: np.ndarray

    @abstractmethod
    def container(self, values: Values) -> tuple[np.ndarray, np.ndarray]:
        """(l, dl/dδ) over the factor's keys."""

    def quadratic(self, l_vec: np.ndarray) -> float:
        return float(0.5 * l_vec @ self.h @ l_vec - l_vec @ self.v)

    def cost(self, values: Values) -> float:
        return self.quadratic(self.container(values)[0])

    def linearize(self, values: Values) -> Linearization:
        l_vec, jac = self.container(values)
        return Linearization(
            cost=self.quadratic(l_vec),
            gradient=jac.T @ (self.h @ l_vec - self.v),
            hessian=jac.T @ self.h @ jac,
        )


def camera_container(
    body: Pose, extrinsic: Pose, lin_cw: Pose
) -> tuple[np.ndarray, np.ndarray]:
    """l = (t_E, Log R_E) of E = T_cw(x) T_cw_lin⁻¹ and its (6, 6) Jacobian in body chart."""
    r_bc, t_bc = extrinsic.R, extrinsic.translation
    r_wc = body.R @ r_bc
    p_wc = body.translation + body.R @ t_bc
    lin_wc = lin_cw.inverse()
    l_rho = r_wc.T @ (lin_wc.translation - p_wc)
    l_phi = so3_log(r_wc.T @ lin_wc.R)
    jac = np.zeros((6, 6))
    jac[:3, :3] = -r_bc.T
    jac[:3, 3:] = skew(l_rho) @ r_bc.T + r_bc.T @ skew(t_bc)
    jac[3:, 3:] = -so3_left_jacobian_inv(l_phi) @ r_bc.T
    return np.concatenate((l_rho, l_phi)), jac


class DbaHessianFactor(QuadraticFactor):
    """Schur-reduced visual constraint relinearized through l_c."""

    def __init__(
        self, keys: Sequence[Key], constraint: DBAConstraint, extrinsic: Pose
    ) -> None:
        if len(keys) != len(constraint.frame_ids):
            raise InvalidFactorError("one key per constraint frame required")
        self.keys = tuple(keys)
        self.constraint = constraint
        self.extrinsic = extrinsic
        self.h = constraint.h
        self.v = constraint.v

    def container(self, values: Values) -> tuple[np.ndarray, np.ndarray]:
        dims = [dof(values[key]) for key in self.keys]
        l_vec = np.zeros(6 * len(self.keys))
        jac = np.zeros((6 * len(self.keys), sum(dims)))
        col = 0
        for pos, (key, lin) in enumerate(zip(self.keys, self.constraint.lin_poses, strict=True)):
            x = values[key]
            l_i, j_i = camera_container(pose_of(x), self.extrinsic, lin)  # type: ignore[arg-type]
            l_vec[6 * pos : 6 * pos + 6] = l_i
            jac[6 * pos : 6 * pos + 6, col : col + 6] = j_i
            col += dims[pos]
        return l_vec, jac


class MarginalPriorFactor(QuadraticFactor):
    """Quadratic prior left by marginalization, l = x ⊖ x_lin per key."""

    def __init__(
        self,
        keys: Sequence[Key],
        h: np.ndarray,
        v: np.ndarray,
        lin_values: Sequence[object],
    ) -> None:
        self.keys = tuple(keys)
        self.h = 0.5 * (h + h.T)
        self.v = v
        self.lin_values = list(lin_values)

    def container(self, values: Values) -> tuple[np.ndarray, np.ndarray]:
        parts = []
        blocks = []
        for key, lin in zip(self.keys, self.lin_values, strict=True):
            x = values[key]
            parts.append(local(x, lin))
            blocks.append(local_jacobian(x, lin))
        size = sum(b.shape[0] for b in blocks)
        jac = np.zeros((size, size))
        offset = 0
        for b in blocks:
            n = b.shape[0]
            jac[offset : offset + n, offset : offset + n] = b
            offset += n
        return np.concatenate(parts), jac


def dba_hessian_cost(
    constraint: DBAConstraint,
    states: Values,
    extrinsic: Pose,
    keys: Sequence[Key] | None = None,
) -> Linearization:
    """Cost, gradient and Hessian of a DBA container at the given states.

    keys default to the constraint's frame ids.

    Raises:
        MissingStateError: If a constraint frame has no state.
    """
    keys = list(constraint.frame_ids if keys is None else keys)
    missing = [key for key in keys if key not in states]
    if missing:
        raise MissingStateError(f"no states for constraint frames {missing}")
    return DbaHessianFactor(keys, constraint, extrinsic).linearize(states)
