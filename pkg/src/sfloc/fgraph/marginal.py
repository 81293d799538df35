"""Schur-complement marginalization of graph states into a quadratic prior."""

from collections.abc import Hashable, Sequence
from dataclasses import dataclass, field

import numpy as np

from ..core.errors import DanglingFactorError
from ..core.logging import get_logger
from .factors import MarginalPriorFactor
from .graph import FactorGraph
from .state import dof

logger = get_logger(__name__)

Key = Hashable

# Added to the dropped block before inversion
MARGINAL_DAMPING = 1e-9


@dataclass(eq=False)
class MarginalPrior:
    """H_m, v_m over the Markov blanket, linearized at lin_values.

    The prior's gradient at its own linearization point is −v_m.
    """

    keys: list[Key] = field(default_factory=list)
    h: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    v: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lin_values: list[object] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.keys

    def as_factor(self) -> MarginalPriorFactor:
        return MarginalPriorFactor(self.keys, self.h, self.v, self.lin_values)


def marginalize(graph: FactorGraph, drop_keys: Sequence[Key]) -> MarginalPrior:
    """Fold every factor touching drop_keys into a prior on the remaining keys.

    The consumed factors and the dropped states leave the graph; a non-empty
    prior is added back as a MarginalPriorFactor.

    Raises:
        DanglingFactorError: If a consumed factor references a key absent from the graph.
    """
    drop = list(drop_keys)
    drop_set = set(drop)
    consumed = [f for f in graph.factors if any(k in drop_set for k in f.keys)]
    blanket: list[Key] = []
    for factor in consumed:
        for key in factor.keys:
            if key not in graph.values:
                raise DanglingFactorError(f"factor references absent state {key!r}")
            if key not in drop_set and key not in blanket:
                blanket.append(key)

    values = dict(graph.values)
    graph.remove_factors(consumed)
    for key in drop:
        graph.remove_state(key)
    if not consumed or not blanket:
        logger.debug("marginalized_without_prior", dropped=len(drop), factors=len(consumed))
        return MarginalPrior()

    ordering = blanket + [k for k in drop if any(f.touches(k) for f in consumed)]
    offsets: dict[Key, int] = {}
    size = 0
    for key in ordering:
        offsets[key] = size
        size += dof(values[key])
    h = np.zeros((size, size))
    g = np.zeros(size)
    for factor in consumed:
        lin = factor.linearize(values)
        idx = np.concatenate(
            [np.arange(offsets[key], offsets[key] + dof(values[key])) for key in factor.keys]
        )
        h[np.ix_(idx, idx)] += lin.hessian
        g[idx] += lin.gradient

    nb = sum(dof(values[key]) for key in blanket)
    h_bb, h_bd = h[:nb, :nb], h[:nb, nb:]
    h_dd = h[nb:, nb:] + MARGINAL_DAMPING * np.eye(size - nb)
    h_dd_inv_h_db = np.linalg.solve(h_dd, h_bd.T)
    h_m = h_bb - h_bd @ h_dd_inv_h_db
    g_m = g[:nb] - h_bd @ np.linalg.solve(h_dd, g[nb:])
    prior = MarginalPrior(
        keys=blanket,
        h=0.5 * (h_m + h_m.T),
        v=-g_m,
        lin_values=[values[key] for key in blanket],
    )
    graph.add_factor(prior.as_factor())
    logger.debug(
        "marginalized",
        dropped=len(drop),
        factors=len(consumed),
        blanket=len(blanket),
    )
    return prior
