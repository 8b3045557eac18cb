"""Evaluation quantities: relative cost improvement, journey prolongation,
and timetable success rates by group size."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .best_response import JointPlan, SharedCostModel, agent_cost
from .errors import InputError
from .planning import AgentId, Plan
from .scheduling import Itinerary
from .transit import RelaxedGraph

PROLONGATION_THRESHOLD = 0.30

RESULTS_COLUMNS = [
    "scenario",
    "n_agents",
    "direction",
    "seed",
    "delta_c",
    "group_id",
    "group_size",
    "matched",
    "timed_out",
    "delta_t",
    "t_initial_s",
    "t_br_s",
    "t_schedule_s",
    "t_total_s",
]


@dataclass(frozen=True)
class GroupRecord:
    """Per-group outcome of the timetabling phase."""

    group_id: int
    size: int
    matched: bool
    timed_out: bool
    group_durations: Mapping[AgentId, int] = field(default_factory=dict)
    solo_durations: Mapping[AgentId, int] = field(default_factory=dict)
    delta_t: float | None = None


@dataclass
class ExperimentResult:
    scenario: str
    n_agents: int
    direction: str
    seed: int
    initial_costs: dict[AgentId, float] = field(default_factory=dict)
    shared_costs: dict[AgentId, float] = field(default_factory=dict)
    delta_c: float | None = None
    groups: list[GroupRecord] = field(default_factory=list)
    unreachable_agents: list[AgentId] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)


def cost_improvement(
    initial: Iterable[Plan], joint: JointPlan, model: SharedCostModel, graph: RelaxedGraph
) -> float:
    """Relative saving of the shared joint plan over the solo plans.

    (sum of solo costs - sum of discounted costs) / sum of solo costs; agents
    are matched by id, and both sums run over the same agents.
    """
    initial_by_agent = {plan.agent: plan for plan in initial}
    if set(initial_by_agent) != set(joint.per_agent):
        raise InputError("initial plans and joint plan cover different agents")
    solo_total = 0.0
    shared_total = 0.0
    for agent in sorted(initial_by_agent):
        solo_total += initial_by_agent[agent].total_cost
        shared_total += agent_cost(joint, agent, model, graph)
    if solo_total == 0.0:
        raise InputError("total initial cost is zero; improvement undefined")
    return (solo_total - shared_total) / solo_total


def prolongation(
    group_itins: Mapping[AgentId, Itinerary], solo_itins: Mapping[AgentId, Itinerary | None]
) -> float | None:
    """Relative extra travel time of the shared schedule over solo schedules.

    Computable only when every member has both itineraries; returns None
    otherwise.
    """
    group_total = 0
    solo_total = 0
    for agent in sorted(group_itins, key=str):
        solo = solo_itins.get(agent)
        if solo is None:
            return None
        group_total += group_itins[agent].duration
        solo_total += solo.duration
    if solo_total == 0:
        raise InputError("total solo duration is zero; prolongation undefined")
    return (group_total - solo_total) / solo_total


def scenario_prolongation(result: ExperimentResult) -> float | None:
    """Duration-weighted prolongation over the experiment's matched groups.

    None when no group has a computable prolongation.
    """
    group_total = 0
    solo_total = 0
    for record in result.groups:
        if record.delta_t is None:
            continue
        group_total += sum(record.group_durations.values())
        solo_total += sum(record.solo_durations.values())
    if solo_total == 0:
        return None
    return (group_total - solo_total) / solo_total


def success_rates(results: Iterable[ExperimentResult]) -> dict[int, float]:
    """Fraction of groups with a timetable, per group size."""
    matched: dict[int, int] = {}
    totals: dict[int, int] = {}
    for result in results:
        for record in result.groups:
            totals[record.size] = totals.get(record.size, 0) + 1
            if record.matched:
                matched[record.size] = matched.get(record.size, 0) + 1
    return {size: matched.get(size, 0) / totals[size] for size in sorted(totals)}


def prolongation_threshold_share(
    results: Iterable[ExperimentResult], threshold: float = PROLONGATION_THRESHOLD
) -> dict[int, float]:
    """Share of groups whose schedule prolongs the journey less than threshold."""
    below: dict[int, int] = {}
    totals: dict[int, int] = {}
    for result in results:
        for record in result.groups:
            totals[record.size] = totals.get(record.size, 0) + 1
            if record.delta_t is not None and record.delta_t < threshold:
                below[record.size] = below.get(record.size, 0) + 1
    return {size: below.get(size, 0) / totals[size] for size in sorted(totals)}


def _format(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.9f}"
    return str(value)


def result_rows(result: ExperimentResult) -> list[list[str]]:
    """One summary row (empty group fields) plus one row per group."""
    base = [result.scenario, result.n_agents, result.direction, result.seed, result.delta_c]
    timing = [
        result.timings.get("initial"),
        result.timings.get("br"),
        result.timings.get("schedule"),
        result.timings.get("total"),
    ]
    rows = [[_format(v) for v in base + [None, None, None, None, None] + timing]]
    for record in result.groups:
        rows.append(
            [
                _format(v)
                for v in base
                + [record.group_id, record.size, record.matched, record.timed_out, record.delta_t]
                + timing
            ]
        )
    return rows


def write_results_csv(results: Iterable[ExperimentResult], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_COLUMNS)
        for result in results:
            writer.writerows(result_rows(result))
