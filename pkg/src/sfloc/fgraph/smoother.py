"""Global factor graph built from the factors archived by the sliding window."""

from collections.abc import Hashable, Mapping
from dataclasses import dataclass, field

from ..core.logging import get_logger
from .factors import Factor
from .graph import FactorGraph
from .solver import SolveReport, SolverSettings, solve
from .state import NavState

logger = get_logger(__name__)

Key = Hashable


@dataclass
class GlobalArchive:
    """Factors copied out of the window before marginalization, plus state estimates."""

    factors: list[Factor] = field(default_factory=list)
    values: dict[Key, object] = field(default_factory=dict)
    _archived: set[int] = field(default_factory=set, repr=False)

    def add(self, factor: Factor) -> bool:
        """Archive a factor once; returns False if it was already archived."""
        if id(factor) in self._archived:
            return False
        self._archived.add(id(factor))
        self.factors.append(factor)
        return True

    def contains(self, factor: Factor) -> bool:
        return id(factor) in self._archived

    def set_value(self, key: Key, value: object) -> None:
        self.values[key] = value

    def build_graph(self, extra_values: Mapping[Key, object] | None = None) -> FactorGraph:
        """Graph over the archive; keys missing from `values` come from extra_values."""
        graph = FactorGraph()
        merged: dict[Key, object] = dict(extra_values or {})
        merged.update(self.values)
        needed = {key for factor in self.factors for key in factor.keys} | set(self.values)
        for key in sorted(needed, key=_sort_key):
            graph.add_state(key, merged[key])
        graph.add_factors(self.factors)
        return graph


def _sort_key(key: Key) -> tuple[str, object]:
    return (type(key).__name__, key)


def global_smooth(
    archive: GlobalArchive,
    settings: SolverSettings | None = None,
    extra_values: Mapping[Key, object] | None = None,
) -> tuple[dict[Key, NavState], SolveReport]:
    """Batch LM solve over every archived factor; returns the smoothed states by key."""
    graph = archive.build_graph(extra_values)
    report = solve(graph, settings)
    logger.info(
        "global_smooth_done",
        states=len(graph),
        factors=len(graph.factors),
        iterations=report.iterations,
        cost=report.final_cost,
    )
    states = {key: value for key, value in graph.values.items() if isinstance(value, NavState)}
    return states, report
