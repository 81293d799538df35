"""
SF-Loc Tests - Shared Fixtures and Configuration
"""
import numpy as np
import pytest
import structlog

from sfloc.core.config import Settings, load_settings
from sfloc.geom import CameraIntrinsics


# =============================================================================
# Logging
# =============================================================================

@pytest.fixture(autouse=True)
def reset_structlog():
    """Commands reconfigure structlog against their own streams; undo that after each test."""
    yield
    structlog.reset_defaults()
    structlog.contextvars.clear_contextvars()


# =============================================================================
# Cameras and poses
# =============================================================================

@pytest.fixture
def small_camera() -> CameraIntrinsics:
    """64x48 camera: an 8x6 inverse-depth grid."""
    return CameraIntrinsics.from_fov(64, 48, 60.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


# =============================================================================
# Settings
# =============================================================================

@pytest.fixture
def straight_settings() -> Settings:
    """Short straight route with ground-truth map poses and fast solvers."""
    return load_settings(
        scenario="straight",
        seed=3,
        estimate_map=False,
        map_sessions=1,
        query_session=1,
        keyframe_rate_hz=1.0,
        query_rate_hz=1.0,
        sas_window=3,
        cluster_k=3,
        fine_frames=2,
        matches_per_pair=40,
        ransac_iterations=50,
        solver_max_iters=15,
    )
