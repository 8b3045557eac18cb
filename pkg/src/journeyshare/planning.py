"""Single-traveller route planning on the relaxed graph.

plan_individual is a label-setting (uniform-cost) search returning a
cost-optimal simple path.  It also serves as the inner solver for
best-response replanning, which only swaps in a different edge-cost function.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Hashable

from .errors import ConsistencyError, InputError
from .transit import RelaxedGraph

AgentId = Hashable
Edge = tuple[str, str]
EdgeCost = Callable[[Edge], float]


@dataclass(frozen=True)
class AgentRequest:
    agent: AgentId
    origin: str
    destination: str

    def __post_init__(self) -> None:
        if self.origin == self.destination:
            raise InputError(f"agent {self.agent!r}: origin equals destination ({self.origin})")


@dataclass(frozen=True)
class Plan:
    """One traveller's route: a chained sequence of relaxed-graph edges."""

    agent: AgentId
    legs: tuple[Edge, ...]
    total_cost: float

    def stops(self) -> tuple[str, ...]:
        if not self.legs:
            return ()
        return (self.legs[0][0],) + tuple(leg[1] for leg in self.legs)

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "origin": self.legs[0][0] if self.legs else None,
            "destination": self.legs[-1][1] if self.legs else None,
            "legs": [list(leg) for leg in self.legs],
            "cost": self.total_cost,
        }


def graph_edge_cost(graph: RelaxedGraph) -> EdgeCost:
    """Base cost function: each edge costs its minimal duration in minutes."""

    def cost(edge: Edge) -> float:
        return float(graph.edges[edge])

    return cost


def plan_individual(
    graph: RelaxedGraph,
    request: AgentRequest,
    edge_cost: EdgeCost | None = None,
) -> Plan | None:
    """Minimum-cost simple path from origin to destination, or None.

    Ties are broken towards fewer legs, then the lexicographically smallest
    stop sequence, so results are reproducible.  Returns None when the
    destination is unreachable.
    """
    if request.origin not in graph.nodes:
        raise InputError(f"unknown origin stop {request.origin!r}")
    if request.destination not in graph.nodes:
        raise InputError(f"unknown destination stop {request.destination!r}")
    if edge_cost is None:
        edge_cost = graph_edge_cost(graph)

    # Labels are (cost, hops, path); edge costs are strictly positive, so the
    # first label settled at a node is its tie-broken optimum and optimal
    # paths are automatically simple.
    start = (0.0, 0, (request.origin,))
    heap: list[tuple[float, int, tuple[str, ...]]] = [start]
    settled: set[str] = set()
    while heap:
        cost, hops, path = heapq.heappop(heap)
        node = path[-1]
        if node in settled:
            continue
        settled.add(node)
        if node == request.destination:
            legs = tuple(zip(path, path[1:]))
            return Plan(agent=request.agent, legs=legs, total_cost=cost)
        for succ in graph.neighbours(node):
            if succ in settled:
                continue
            step = edge_cost((node, succ))
            if step < 0:
                raise InputError(f"negative edge cost on {(node, succ)}")
            heapq.heappush(heap, (cost + step, hops + 1, path + (succ,)))
    return None


def plan_cost(plan: Plan, edge_cost: EdgeCost) -> float:
    """Sum of per-leg costs; raises ConsistencyError if a leg is unknown."""
    total = 0.0
    for leg in plan.legs:
        try:
            total += edge_cost(leg)
        except KeyError as exc:
            raise ConsistencyError(f"plan leg {leg} not present in graph") from exc
    return total
