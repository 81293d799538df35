"""Factor graph container and sparse normal-equation assembly."""

from collections.abc import Hashable, Iterable
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..core.errors import MissingStateError
from .factors import Factor
from .state import dof, retract

Key = Hashable


@dataclass(eq=False)
class NormalEquations:
    """H δ = −g over the free keys in `order`; cost at the linearization point."""

    hessian: sparse.csr_matrix
    gradient: np.ndarray
    cost: float
    order: list[Key]
    offsets: dict[Key, int]


class FactorGraph:
    """Variables keyed by hashable ids plus the factors over them.

    Variable order is insertion order, which fixes the layout of the
    normal equations.
    """

    def __init__(self) -> None:
        self.values: dict[Key, object] = {}
        self.factors: list[Factor] = []
        self.fixed: set[Key] = set()

    def __contains__(self, key: Key) -> bool:
        return key in self.values

    def __len__(self) -> int:
        return len(self.values)

    def add_state(self, key: Key, value: object) -> None:
        self.values[key] = value

    def set_value(self, key: Key, value: object) -> None:
        if key not in self.values:
            raise MissingStateError(f"no state {key!r}")
        self.values[key] = value

    def add_factor(self, factor: Factor) -> Factor:
        missing = [key for key in factor.keys if key not in self.values]
        if missing:
            raise MissingStateError(f"factor references missing states {missing}")
        self.factors.append(factor)
        return factor

    def add_factors(self, factors: Iterable[Factor]) -> None:
        for factor in factors:
            self.add_factor(factor)

    def remove_factors(self, factors: Iterable[Factor]) -> None:
        drop = {id(f) for f in factors}
        self.factors = [f for f in self.factors if id(f) not in drop]

    def remove_state(self, key: Key) -> None:
        self.values.pop(key, None)
        self.fixed.discard(key)

    def fix(self, key: Key) -> None:
        """Hold a variable constant during optimization."""
        if key not in self.values:
            raise MissingStateError(f"no state {key!r}")
        self.fixed.add(key)

    def unfix(self, key: Key) -> None:
        self.fixed.discard(key)

    def factors_touching(self, key: Key) -> list[Factor]:
        return [f for f in self.factors if f.touches(key)]

    def factors_of_type(self, kind: type) -> list[Factor]:
        return [f for f in self.factors if isinstance(f, kind)]

    def free_keys(self) -> list[Key]:
        return [key for key in self.values if key not in self.fixed]

    def total_cost(self, values: dict[Key, object] | None = None) -> float:
        values = self.values if values is None else values
        return float(sum(f.cost(values) for f in self.factors))

    def linearize(self, values: dict[Key, object] | None = None) -> NormalEquations:
        values = self.values if values is None else values
        order = self.free_keys()
        offsets: dict[Key, int] = {}
        size = 0
        for key in order:
            offsets[key] = size
            size += dof(values[key])

        rows: list[np.ndarray] = []
        cols: list[np.ndarray] = []
        data: list[np.ndarray] = []
        gradient = np.zeros(size)
        cost = 0.0
        for factor in self.factors:
            lin = factor.linearize(values)
            cost += lin.cost
            local_idx: list[np.ndarray] = []
            global_idx: list[np.ndarray] = []
            start = 0
            for key in factor.keys:
                n = dof(values[key])
                if key in offsets:
                    local_idx.append(np.arange(start, start + n))
                    global_idx.append(np.arange(offsets[key], offsets[key] + n))
                start += n
            if not local_idx:
                continue
            li = np.concatenate(local_idx)
            gi = np.concatenate(global_idx)
            gradient[gi] += lin.gradient[li]
            block = lin.hessian[np.ix_(li, li)]
            r, c = np.meshgrid(gi, gi, indexing="ij")
            rows.append(r.ravel())
            cols.append(c.ravel())
            data.append(block.ravel())

        if data:
            hessian = sparse.coo_matrix(
                (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                shape=(size, size),
            ).tocsr()
        else:
            hessian = sparse.csr_matrix((size, size))
        return NormalEquations(hessian, gradient, cost, order, offsets)

    def retracted(self, equations: NormalEquations, delta: np.ndarray) -> dict[Key, object]:
        """Copy of the values with delta applied to the free keys."""
        values = dict(self.values)
        for key in equations.order:
            start = equations.offsets[key]
            values[key] = retract(values[key], delta[start : start + dof(values[key])])
        return values

    def copy(self) -> "FactorGraph":
        graph = FactorGraph()
        graph.values = dict(self.values)
        graph.factors = list(self.factors)
        graph.fixed = set(self.fixed)
        return graph
