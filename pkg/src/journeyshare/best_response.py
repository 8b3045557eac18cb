"""Joint-plan merging and best-response optimisation under group discounts.

Sharing an edge with n-1 others cuts the edge cost to (0.8/n + 0.2) of the
solo duration.  Round-robin best-response replanning under that cost is a
congestion game with a Rosenthal-style potential, so it settles in a state
where no traveller can lower their own cost by rerouting alone.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .errors import InputError
from .planning import AgentId, AgentRequest, Edge, Plan, plan_individual
from .transit import RelaxedGraph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SharedCostModel:
    """Group-discount parameters: share discounted with group size, plus floor."""

    discount_share: float = 0.8
    floor_share: float = 0.2

    def __post_init__(self) -> None:
        if not (0.0 < self.discount_share < 1.0 and 0.0 < self.floor_share < 1.0):
            raise InputError("cost shares must lie strictly between 0 and 1")
        if abs(self.discount_share + self.floor_share - 1.0) > 1e-9:
            raise InputError("discount_share and floor_share must sum to 1")


def shared_cost(model: SharedCostModel, c_single: float, n: int) -> float:
    """Cost per traveller of an edge of solo cost c_single in a group of n."""
    if n < 1:
        raise InputError(f"group size must be >= 1, got {n}")
    if c_single < 0:
        raise InputError("cost must be nonnegative")
    return (model.discount_share / n + model.floor_share) * c_single


@dataclass(frozen=True)
class JointPlan:
    """Union of all travellers' plans; each edge is labelled with its users."""

    edges: Mapping[Edge, frozenset]
    per_agent: Mapping[AgentId, Plan]

    def agents_on(self, edge: Edge) -> frozenset:
        return self.edges.get(edge, frozenset())

    def to_dict(self) -> dict:
        return {
            "edges": [
                {"from": a, "to": b, "agents": sorted(self.edges[(a, b)])}
                for a, b in sorted(self.edges)
            ],
            "plans": {str(agent): [list(leg) for leg in plan.legs] for agent, plan in sorted(self.per_agent.items())},
        }


def merge_plans(plans: Iterable[Plan]) -> JointPlan:
    """Graph union of the plans, labelling every edge with the agents using it."""
    per_agent: dict[AgentId, Plan] = {}
    edges: dict[Edge, set] = {}
    for plan in plans:
        if plan.agent in per_agent:
            raise InputError(f"duplicate plan for agent {plan.agent!r}")
        if not plan.legs:
            raise InputError(f"agent {plan.agent!r} has an empty plan")
        for a, b in zip(plan.legs, plan.legs[1:]):
            if a[1] != b[0]:
                raise InputError(f"agent {plan.agent!r} plan legs are not chained at {a} -> {b}")
        if len(set(plan.stops())) != len(plan.stops()):
            raise InputError(f"agent {plan.agent!r} plan revisits a stop")
        per_agent[plan.agent] = plan
        for leg in plan.legs:
            edges.setdefault(leg, set()).add(plan.agent)
    return JointPlan(
        edges={leg: frozenset(users) for leg, users in edges.items()},
        per_agent=per_agent,
    )


def agent_cost(joint: JointPlan, agent: AgentId, model: SharedCostModel, graph: RelaxedGraph) -> float:
    """The agent's discounted plan cost given everyone's current routes."""
    if agent not in joint.per_agent:
        raise InputError(f"agent {agent!r} not present in joint plan")
    total = 0.0
    for leg in joint.per_agent[agent].legs:
        n = len(joint.edges[leg])
        total += shared_cost(model, float(graph.edges[leg]), n)
    return total


def total_cost(joint: JointPlan, model: SharedCostModel, graph: RelaxedGraph) -> float:
    return sum(agent_cost(joint, agent, model, graph) for agent in sorted(joint.per_agent))


def occupancy_cost(
    joint: JointPlan, agent: AgentId, model: SharedCostModel, graph: RelaxedGraph
) -> Callable[[Edge], float]:
    """Edge costs the agent faces when replanning while everyone else stays put."""

    def cost(edge: Edge) -> float:
        others = len(joint.agents_on(edge) - {agent})
        return shared_cost(model, float(graph.edges[edge]), 1 + others)

    return cost


def best_response_step(
    joint: JointPlan, agent: AgentId, graph: RelaxedGraph, model: SharedCostModel
) -> Plan:
    """The agent's cheapest route against the others' fixed routes.

    Falls back to the current plan (logged) if the destination became
    unreachable under the current graph.
    """
    current = joint.per_agent.get(agent)
    if current is None:
        raise InputError(f"agent {agent!r} not present in joint plan")
    request = AgentRequest(agent=agent, origin=current.legs[0][0], destination=current.legs[-1][1])
    best = plan_individual(graph, request, occupancy_cost(joint, agent, model, graph))
    if best is None:
        logger.warning("agent %r has no route in best-response step; keeping current plan", agent)
        return current
    return best


def _replace_plan(joint: JointPlan, agent: AgentId, new_plan: Plan) -> JointPlan:
    edges: dict[Edge, set] = {leg: set(users) for leg, users in joint.edges.items()}
    for leg in joint.per_agent[agent].legs:
        edges[leg].discard(agent)
        if not edges[leg]:
            del edges[leg]
    for leg in new_plan.legs:
        edges.setdefault(leg, set()).add(agent)
    per_agent = dict(joint.per_agent)
    per_agent[agent] = new_plan
    return JointPlan(
        edges={leg: frozenset(users) for leg, users in edges.items()},
        per_agent=per_agent,
    )


def run_br_phase(
    initial: Iterable[Plan],
    graph: RelaxedGraph,
    model: SharedCostModel,
    max_rounds: int = 100,
    on_step: Callable[[JointPlan], None] | None = None,
) -> JointPlan:
    """Round-robin best-response sweeps until no traveller improves.

    A plan change is adopted only when it strictly lowers that traveller's
    own cost, so a sweep without adoptions leaves the total joint cost
    unchanged (within the 1e-9 convergence epsilon) and certifies that no
    unilateral improvement remains.  max_rounds caps pathological cases.
    """
    joint = merge_plans(initial)
    agents = sorted(joint.per_agent)
    for round_no in range(1, max_rounds + 1):
        improved = False
        for agent in agents:
            candidate = best_response_step(joint, agent, graph, model)
            if candidate.total_cost < agent_cost(joint, agent, model, graph):
                joint = _replace_plan(joint, agent, candidate)
                improved = True
            if on_step is not None:
                on_step(joint)
        if not improved:
            logger.debug("best-response phase converged after %d sweep(s)", round_no)
            return joint
    logger.warning("best-response phase hit max_rounds=%d without converging", max_rounds)
    return joint


def rosenthal_potential(joint: JointPlan, model: SharedCostModel, graph: RelaxedGraph) -> float:
    """Potential that decreases whenever a traveller strictly improves.

    Per edge with n users it accumulates the costs a 1st, 2nd, ... nth user
    would pay, making unilateral cost changes equal potential changes.
    """
    value = 0.0
    for edge in sorted(joint.edges):
        base = float(graph.edges[edge])
        for k in range(1, len(joint.edges[edge]) + 1):
            value += shared_cost(model, base, k)
    return value
