"""Gauss-Newton and Levenberg-Marquardt over a FactorGraph."""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field
from scipy import sparse
from scipy.sparse.linalg import spsolve

from ..core.errors import SolverDivergedError
from ..core.logging import get_logger
from .graph import FactorGraph


logger = get_logger(__name__)


class SolverMode(str, Enum):
    GAUSS_NEWTON = "gauss_newton"
    LM = "lm"


class SolverSettings(BaseModel):
    """Nonlinear least-squares solver settings."""

    mode: SolverMode = SolverMode.LM
    max_iters: int = Field(default=50, ge=1)
    rel_tol: float = Field(default=1e-8, gt=0)
    step_tol: float = Field(default=1e-10, gt=0)
    lambda_init: float = Field(default=1e-4, gt=0)
    lambda_factor: float = Field(default=10.0, gt=1)
    lambda_max: float = Field(default=1e12, gt=0)


class Termination(str, Enum):
    RELATIVE_DECREASE = "relative_decrease"
    SMALL_STEP = "small_step"
    MAX_ITERS = "max_iters"
    NO_VARIABLES = "no_variables"


@dataclass
class SolveReport:
    iterations: int = 0
    initial_cost: float = 0.0
    final_cost: float = 0.0
    accepted_costs: list[float] = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERS

    @property
    def converged(self) -> bool:
        return self.termination is not Termination.MAX_ITERS


def _solve_linear(hessian: sparse.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    step = spsolve(hessian.tocsc(), rhs)
    if not np.all(np.isfinite(step)):
        step, *_ = np.linalg.lstsq(hessian.toarray(), rhs, rcond=None)
    return np.asarray(step)


def _check_finite(cost: float) -> None:
    if not math.isfinite(cost):
        raise SolverDivergedError(f"cost became non-finite ({cost})")


def solve(graph: FactorGraph, settings: SolverSettings | None = None) -> SolveReport:
    """Minimize the graph cost in place.

    Stops when |Δcost|/cost < rel_tol, the step norm < step_tol or after
    max_iters iterations (rejected LM trials count as iterations).

    Raises:
        SolverDivergedError: If the cost becomes non-finite.
    """
    settings = settings or SolverSettings()
    report = SolveReport()
    cost = graph.total_cost()
    _check_finite(cost)
    report.initial_cost = report.final_cost = cost
    report.accepted_costs.append(cost)
    if not graph.free_keys():
        report.termination = Termination.NO_VARIABLES
        return report

    lam = settings.lambda_init
    equations = graph.linearize()
    while report.iterations < settings.max_iters:
        report.iterations += 1
        hessian = equations.hessian
        if settings.mode is SolverMode.LM:
            diag = hessian.diagonal()
            damping = lam * np.maximum(diag, 1e-12)
            hessian = hessian + sparse.diags(damping)
        step = _solve_linear(hessian, -equations.gradient)
        step_norm = float(np.linalg.norm(step))
        trial = graph.retracted(equations, step)
        new_cost = graph.total_cost(trial)
        logger.debug(
            "solver_iteration",
            iteration=report.iterations,
            cost=new_cost,
            step_norm=step_norm,
            damping=lam,
        )

        _check_finite(new_cost)
        if settings.mode is SolverMode.LM and new_cost > cost:
            lam = min(lam * settings.lambda_factor, settings.lambda_max)
            if step_norm < settings.step_tol:
                report.termination = Termination.SMALL_STEP
                break
            continue

        graph.values = trial
        decrease = abs(cost - new_cost)
        cost = new_cost
        report.accepted_costs.append(cost)
        if settings.mode is SolverMode.LM:
            lam = max(lam / settings.lambda_factor, 1e-15)
        if step_norm < settings.step_tol:
            report.termination = Termination.SMALL_STEP
            break
        if decrease / max(abs(cost), 1e-300) < settings.rel_tol:
            report.termination = Termination.RELATIVE_DECREASE
            break
        equations = graph.linearize()

    report.final_cost = cost
    return report
