"""Gaussian noise models and robust losses on whitened residuals."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..core.errors import InvalidFactorError


class LossKind(str, Enum):
    NONE = "none"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class RobustLoss:
    """rho(s) on the squared whitened norm s; Cauchy: c² log(1 + s/c²)."""

    kind: LossKind = LossKind.NONE
    scale: float = 1.0

    def __post_init__(self) -> None:
        if self.scale <= 0.0:
            raise InvalidFactorError("robust loss scale must be positive")

    @classmethod
    def cauchy(cls, scale: float = 1.0) -> "RobustLoss":
        return cls(LossKind.CAUCHY, scale)

    def rho(self, s: float) -> float:
        if self.kind is LossKind.NONE:
            return s
        c2 = self.scale * self.scale
        return c2 * float(np.log1p(s / c2))

    def weight(self, s: float) -> float:
        """rho'(s), the IRLS weight."""
        if self.kind is LossKind.NONE:
            return 1.0
        return 1.0 / (1.0 + s / (self.scale * self.scale))


QUADRATIC = RobustLoss()


class NoiseModel:
    """Information-form Gaussian noise with a square-root whitener L, LᵀL = Ω."""

    def __init__(self, information: np.ndarray) -> None:
        information = np.atleast_2d(np.asarray(information, dtype=np.float64))
        information = 0.5 * (information + information.T)
        self.information = information
        self.sqrt_information = np.linalg.cholesky(information).T

    @classmethod
    def from_sigmas(cls, sigmas: np.ndarray | list[float]) -> "NoiseModel":
        sigmas = np.asarray(sigmas, dtype=np.float64)
        return cls(np.diag(1.0 / sigmas**2))

    @classmethod
    def isotropic(cls, dim: int, sigma: float) -> "NoiseModel":
        return cls.from_sigmas(np.full(dim, sigma))

    @classmethod
    def from_covariance(cls, covariance: np.ndarray) -> "NoiseModel":
        covariance = 0.5 * (covariance + covariance.T)
        return cls(np.linalg.inv(covariance))

    @property
    def dim(self) -> int:
        return int(self.information.shape[0])

    def whiten(self, residual: np.ndarray) -> np.ndarray:
        return self.sqrt_information @ residual

    def whiten_jacobian(self, jac: np.ndarray) -> np.ndarray:
        return self.sqrt_information @ jac
