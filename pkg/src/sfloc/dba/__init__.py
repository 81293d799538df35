"""Dense bundle adjustment: rigid flow, pair linearization, Schur reduction, co-visibility."""

from .flow import covisibility, overlap_ratio, relative_pose, rigid_flow
from .grid import FlowField, InverseDepthGrid, as_flat_grid, update_inverse_depth
from .linearize import PairSystem, linearize_pair, pair_jacobians
from .schur import (
    DEPTH_DAMPING,
    DBAConstraint,
    FrameSystem,
    assemble_frame_system,
    depth_backsub,
    schur_reduce,
)
from .solver import (
    DbaReport,
    accumulate_constraints,
    build_constraints,
    solve_window_dba,
    window_edges,
)

__all__ = [
    "DEPTH_DAMPING",
    "DBAConstraint",
    "DbaReport",
    "FlowField",
    "FrameSystem",
    "InverseDepthGrid",
    "PairSystem",
    "accumulate_constraints",
    "as_flat_grid",
    "assemble_frame_system",
    "build_constraints",
    "covisibility",
    "depth_backsub",
    "linearize_pair",
    "overlap_ratio",
    "pair_jacobians",
    "relative_pose",
    "rigid_flow",
    "schur_reduce",
    "solve_window_dba",
    "update_inverse_depth",
    "window_edges",
]
