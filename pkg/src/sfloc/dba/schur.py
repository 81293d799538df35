"""Frame-stacked normal equations, Schur reduction and depth back-substitution."""

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import EmptyPairSetError, IndexMismatchError, InvalidFlowError
from ..geom import Pose, Twist
from .linearize import PairSystem


# Added to the depth Hessian diagonal before inversion
DEPTH_DAMPING = 1e-6


@dataclass(eq=False)
class FrameSystem:
    """Normal equations of all projections from one source frame.

    [B  D] [xi ]   [v]
    [Dᵀ C] [dlam] = [z]

    with C diagonal (stored as its (n,) diagonal).
    """

    source: int
    frame_ids: list[int]
    b: np.ndarray
    d: np.ndarray
    c: np.ndarray
    v: np.ndarray
    z: np.ndarray

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Full joint (H, g) over [poses, depths]."""
        h = np.block([[self.b, self.d], [self.d.T, np.diag(self.c)]])
        return h, np.concatenate((self.v, self.z))


@dataclass(eq=False)
class DBAConstraint:
    """Schur-reduced pose-only constraint H_c xi = v_c over frame_ids.

    C, D, z and the linearization poses are retained for back-substitution
    and for relinearizing the container in the factor graph.
    """

    source: int
    frame_ids: list[int]
    h: np.ndarray
    v: np.ndarray
    lin_poses: list[Pose] = field(default_factory=list)
    c: np.ndarray = field(default_factory=lambda: np.zeros(0))
    d: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    z: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def dim(self) -> int:
        return 6 * len(self.frame_ids)

    def block_index(self, frame_id: int) -> slice:
        pos = self.frame_ids.index(frame_id)
        return slice(6 * pos, 6 * pos + 6)


def assemble_frame_system(pairs: Sequence[PairSystem]) -> FrameSystem:
    """Stack every pair sharing source frame i into one frame system.

    Frame ids are sorted so the block layout is independent of pair order.
    """
    if not pairs:
        raise EmptyPairSetError("no pairs to assemble")
    source = pairs[0].source
    if any(p.source != source for p in pairs):
        raise InvalidFlowError("all pairs must share the same source frame")
    n = pairs[0].cells
    frame_ids = sorted({source, *(p.target for p in pairs)})
    index = {fid: 6 * pos for pos, fid in enumerate(frame_ids)}
    dim = 6 * len(frame_ids)

    b = np.zeros((dim, dim))
    d = np.zeros((dim, n))
    c = np.zeros(n)
    v = np.zeros(dim)
    z = np.zeros(n)
    for pair in sorted(pairs, key=lambda p: p.target):
        j_pose = np.zeros((2 * n, dim))
        si, sj = index[pair.source], index[pair.target]
        j_pose[:, si : si + 6] = pair.j_i
        j_pose[:, sj : sj + 6] = pair.j_j
        b += j_pose.T @ j_pose
        v += j_pose.T @ pair.residual
        # J_poseᵀ J_lam with J_lam block-diagonal 2x1 per cell
        d += np.einsum("nad,na->dn", j_pose.reshape(n, 2, dim), pair.j_depth)
        c += np.sum(pair.j_depth**2, axis=1)
        z += np.sum(pair.j_depth * pair.residual.reshape(n, 2), axis=1)
    b = 0.5 * (b + b.T)
    return FrameSystem(source=source, frame_ids=frame_ids, b=b, d=d, c=c, v=v, z=z)


def schur_reduce(
    system: FrameSystem, lin_poses: Sequence[Pose] | None = None
) -> DBAConstraint:
    """Eliminate the depths: H_c = B − D C⁻¹ Dᵀ, v_c = v − D C⁻¹ z."""
    c_inv = 1.0 / (system.c + DEPTH_DAMPING)
    d_scaled = system.d * c_inv
    h = system.b - d_scaled @ system.d.T
    h = 0.5 * (h + h.T)
    v = system.v - d_scaled @ system.z
    return DBAConstraint(
        source=system.source,
        frame_ids=list(system.frame_ids),
        h=h,
        v=v,
        lin_poses=list(lin_poses) if lin_poses is not None else [],
        c=system.c.copy(),
        d=system.d.copy(),
        z=system.z.copy(),
    )


def depth_backsub(
    constraint: DBAConstraint,
    pose_updates: Mapping[int, Twist] | Sequence[Twist],
) -> np.ndarray:
    """Recover the depth update δλ = C⁻¹(z − Dᵀ ξ) of the source frame.

    pose_updates is keyed by frame id, or a sequence aligned with frame_ids.
    """
    if isinstance(pose_updates, Mapping):
        missing = [fid for fid in constraint.frame_ids if fid not in pose_updates]
        if missing:
            raise IndexMismatchError(f"no pose update for frames {missing}")
        ordered = [pose_updates[fid] for fid in constraint.frame_ids]
    else:
        if len(pose_updates) != len(constraint.frame_ids):
            raise IndexMismatchError(
                f"{len(pose_updates)} updates for {len(constraint.frame_ids)} frames"
            )
        ordered = list(pose_updates)
    xi = np.concatenate([tw.as_vector() for tw in ordered])
    return (constraint.z - constraint.d.T @ xi) / (constraint.c + DEPTH_DAMPING)
