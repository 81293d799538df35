"""Grid-aligned containers: inverse-depth grids and residual flow fields."""

from dataclasses import dataclass, field

import numpy as np

from ..core.errors import DimensionMismatchError, InvalidFlowError
from ..geom import INV_DEPTH_MAX, INV_DEPTH_MIN, CameraIntrinsics


@dataclass(frozen=True, eq=False)
class InverseDepthGrid:
    """Inverse depth (1/m) at the /8 grid pixel centers, shape (rows, cols)."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatchError(f"grid must be 2-D, got shape {values.shape}")
        object.__setattr__(self, "values", np.clip(values, INV_DEPTH_MIN, INV_DEPTH_MAX))

    @property
    def rows(self) -> int:
        return int(self.values.shape[0])

    @property
    def cols(self) -> int:
        return int(self.values.shape[1])

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    @classmethod
    def from_flat(cls, flat: np.ndarray, k: CameraIntrinsics) -> "InverseDepthGrid":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.size != k.grid_size:
            raise DimensionMismatchError(f"{flat.size} values for a {k.grid_size}-cell grid")
        return cls(flat.reshape(k.grid_rows, k.grid_cols))

    @classmethod
    def constant(cls, k: CameraIntrinsics, inv_depth: float) -> "InverseDepthGrid":
        return cls(np.full((k.grid_rows, k.grid_cols), inv_depth))


def as_flat_grid(lam: "InverseDepthGrid | np.ndarray", k: CameraIntrinsics) -> np.ndarray:
    """Flat (n,) inverse depths, checked against the camera grid."""
    values = lam.flat() if isinstance(lam, InverseDepthGrid) else np.asarray(lam).ravel()
    if values.size != k.grid_size:
        raise DimensionMismatchError(
            f"grid has {values.size} cells, camera expects {k.grid_rows}x{k.grid_cols}"
        )
    return values.astype(np.float64)


def update_inverse_depth(lam: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Apply a depth update and clamp to [INV_DEPTH_MIN, INV_DEPTH_MAX]."""
    return np.clip(np.asarray(lam) + np.asarray(delta), INV_DEPTH_MIN, INV_DEPTH_MAX)


@dataclass(eq=False)
class FlowField:
    """Residual flow on the grid.

    residual: (n, 2) pixels, target minus predicted correspondence.
    weight: (n, 2) per-axis confidence, forced to 0 on invalid cells.
    """

    residual: np.ndarray
    weight: np.ndarray
    valid: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self) -> None:
        self.residual = np.asarray(self.residual, dtype=np.float64).reshape(-1, 2)
        n = self.residual.shape[0]
        self.weight = np.asarray(self.weight, dtype=np.float64).reshape(-1, 2)
        if self.valid.size == 0:
            self.valid = np.ones(n, dtype=bool)
        self.valid = np.asarray(self.valid, dtype=bool).reshape(-1)
        if self.weight.shape[0] != n or self.valid.shape[0] != n:
            raise DimensionMismatchError("flow residual, weight and mask sizes differ")
        if np.any(self.weight < 0.0):
            raise InvalidFlowError("flow weights must be non-negative")
        self.residual = np.where(self.valid[:, None], self.residual, 0.0)
        self.weight = np.where(self.valid[:, None], self.weight, 0.0)

    @property
    def size(self) -> int:
        return int(self.residual.shape[0])

    @classmethod
    def zeros(cls, n: int, weight: float = 1.0) -> "FlowField":
        return cls(residual=np.zeros((n, 2)), weight=np.full((n, 2), weight))
