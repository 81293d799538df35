"""Fine localization against retrieved map frames."""

from .fine import (
    ErrorMode,
    FineConfig,
    FineGraph,
    FineMode,
    FinePoseResult,
    FineQuery,
    best_pnp,
    build_fine_graph,
    depth_error_bound,
    initial_poses,
    localize_pnp,
    solve_fine,
)
from .log import FINE_HEADER, FineLogRow, read_fine_log, write_fine_log
from .matches import MatchSet, rescale_map_pixels
from .pnp import PnpResult, pnp_ransac, refit_pose, reprojection_errors

__all__ = [
    "FINE_HEADER",
    "ErrorMode",
    "FineConfig",
    "FineGraph",
    "FineLogRow",
    "FineMode",
    "FinePoseResult",
    "FineQuery",
    "MatchSet",
    "PnpResult",
    "best_pnp",
    "build_fine_graph",
    "depth_error_bound",
    "initial_poses",
    "localize_pnp",
    "pnp_ransac",
    "read_fine_log",
    "refit_pose",
    "reprojection_errors",
    "rescale_map_pixels",
    "solve_fine",
    "write_fine_log",
]
