"""Independent schedule validation, seeded workload generation, and metrics.

The validator works from the data model alone and never calls scheduling
code, so it can serve as an oracle for the engine's output.
"""

from __future__ import annotations

import random
from collections.abc import Sequence
from dataclasses import dataclass, field

from .errors import ValidationError
from .graph import TaskDag
from .model import (
    AgentSpec,
    Dependency,
    FinalSchedule,
    ResourceSpec,
    TaskSpec,
)

# Generated times sit on a quarter-second grid: every value and every sum of
# values is exactly representable in binary floating point, so schedule
# arithmetic and comparisons stay exact end to end.
TIME_GRID = 0.25


@dataclass(frozen=True)
class ViolationReport:
    """Everything wrong with a schedule; empty means valid.

    ``duration_mismatches`` flags rows whose end is not start + processing
    time — impossible for engine output, possible in hand-edited files.
    """

    overlaps: list[tuple[str, str, str]] = field(default_factory=list)
    precedence_violations: list[tuple[str, str, float, float]] = field(
        default_factory=list
    )
    eligibility_violations: list[tuple[str, str]] = field(default_factory=list)
    deadline_misses: list[tuple[str, float, float]] = field(default_factory=list)
    duration_mismatches: list[tuple[str, float, float]] = field(
        default_factory=list
    )

    def is_empty(self) -> bool:
        return not (
            self.overlaps
            or self.precedence_violations
            or self.eligibility_violations
            or self.deadline_misses
            or self.duration_mismatches
        )

    def lines(self) -> list[str]:
        out: list[str] = []
        for rid, a, b in self.overlaps:
            out.append(f"overlap on {rid}: {a} and {b}")
        for pred, succ, required, actual in self.precedence_violations:
            out.append(
                f"precedence {pred} -> {succ}: requires start >= {required}, "
                f"got {actual}"
            )
        for task_id, rid in self.eligibility_violations:
            out.append(f"eligibility: {task_id} cannot run on {rid}")
        for task_id, end, deadline in self.deadline_misses:
            out.append(f"deadline: {task_id} ends {end} after {deadline}")
        for task_id, expected, actual in self.duration_mismatches:
            out.append(
                f"duration: {task_id} should end at {expected}, row says {actual}"
            )
        return out


@dataclass(frozen=True)
class Metrics:
    """Load-balance and utilization summary of a schedule."""

    tasks_per_agent: dict[str, int]
    makespan: float
    per_resource_busy: dict[str, float]
    balance_spread: int

    def series(self) -> list[tuple[str, int]]:
        """Chart-ready (agentId, count) pairs, ascending agent id."""
        return sorted(self.tasks_per_agent.items())


def validate_schedule(
    schedule: FinalSchedule,
    dag: TaskDag,
    resources: Sequence[ResourceSpec],
    agents: Sequence[AgentSpec],
) -> ViolationReport:
    """Exhaustively check a schedule against the task DAG and resource pool.

    Checks resource overlaps (closed-open intervals), every dependency edge
    (communication time owed only across resources), task-resource
    eligibility including agent ownership, deadlines, and row durations.
    """
    by_task = {p.task_id: p for p in schedule.placements}
    if len(by_task) != len(schedule.placements):
        raise ValidationError("schedule places some task twice")
    missing = sorted(set(dag.tasks) - set(by_task))
    if missing:
        raise ValidationError("schedule misses tasks: " + ", ".join(missing))
    extra = sorted(set(by_task) - set(dag.tasks))
    if extra:
        raise ValidationError("schedule has unknown tasks: " + ", ".join(extra))

    report = ViolationReport()
    resource_by_id = {r.resource_id: r for r in resources}
    owner: dict[str, str] = {}
    for agent in agents:
        for rid in agent.resources:
            owner[rid] = agent.agent_id

    rows: dict[str, list] = {}
    for task_id in sorted(by_task):
        rows.setdefault(by_task[task_id].resource_id, []).append(by_task[task_id])
    for rid in sorted(rows):
        # zero-length rows are empty closed-open intervals: they never overlap
        group = sorted(
            (p for p in rows[rid] if p.end > p.start),
            key=lambda p: (p.start, p.task_id),
        )
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                if a.start < b.end and b.start < a.end:
                    report.overlaps.append((rid, a.task_id, b.task_id))

    for (pred, succ), comm in dag.edges.items():
        p, s = by_task[pred], by_task[succ]
        required = p.end if p.resource_id == s.resource_id else p.end + comm
        if s.start < required:
            report.precedence_violations.append((pred, succ, required, s.start))

    for task_id in sorted(by_task):
        placement = by_task[task_id]
        spec = dag.tasks[task_id]
        resource = resource_by_id.get(placement.resource_id)
        if (
            resource is None
            or resource.memory < spec.memory
            or resource.cpu_power < spec.cpu_power
            or owner.get(placement.resource_id) != placement.agent_id
        ):
            report.eligibility_violations.append((task_id, placement.resource_id))
        if spec.deadline_time is not None and placement.end > spec.deadline_time:
            report.deadline_misses.append(
                (task_id, placement.end, spec.deadline_time)
            )
        expected_end = placement.start + spec.processing_time
        if placement.end != expected_end:
            report.duration_mismatches.append((task_id, expected_end, placement.end))
    return report


def compute_metrics(schedule: FinalSchedule, assignment=None) -> Metrics:
    """Tasks per agent, makespan, per-resource busy time, and balance spread.

    ``assignment`` may be the broker's assignment (anything exposing a
    ``tasks_per_agent`` mapping) or a plain sequence of agent ids; either way
    it only widens the agent set so idle agents show up with a zero count.
    """
    if assignment is None:
        agent_ids: Sequence[str] = ()
    elif hasattr(assignment, "tasks_per_agent"):
        agent_ids = list(assignment.tasks_per_agent)
    else:
        agent_ids = list(assignment)
    counts: dict[str, int] = {a: 0 for a in sorted(agent_ids)}
    busy: dict[str, float] = {}
    for p in schedule.placements:
        counts[p.agent_id] = counts.get(p.agent_id, 0) + 1
        busy[p.resource_id] = busy.get(p.resource_id, 0.0) + p.duration
    counts = dict(sorted(counts.items()))
    busy = dict(sorted(busy.items()))
    spread = (max(counts.values()) - min(counts.values())) if counts else 0
    return Metrics(
        tasks_per_agent=counts,
        makespan=schedule.makespan,
        per_resource_busy=busy,
        balance_spread=spread,
    )


@dataclass(frozen=True)
class CostRanges:
    """Value ranges for the workload generator; all draws land on TIME_GRID.

    A task gets a deadline with probability ``deadline_probability``; the
    deadline is a loose critical-path estimate for the task plus a slack drawn
    from ``deadline_slack``, so generated workloads only miss deadlines when a
    test constructs the miss deliberately.
    """

    processing_time: tuple[float, float] = (1.0, 10.0)
    comm_time: tuple[float, float] = (0.0, 5.0)
    memory: tuple[float, float] = (0.0, 4.0)
    cpu_power: tuple[float, float] = (0.0, 4.0)
    deadline_probability: float = 0.0
    deadline_slack: tuple[float, float] = (10.0, 100.0)

    def __post_init__(self) -> None:
        for name in ("processing_time", "comm_time", "memory", "cpu_power",
                     "deadline_slack"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValidationError(f"bad range for {name}: ({lo}, {hi})")
        if not 0.0 <= self.deadline_probability <= 1.0:
            raise ValidationError("deadline_probability must be in [0, 1]")


def _draw(rng: random.Random, lo: float, hi: float) -> float:
    steps = int((hi - lo) / TIME_GRID)
    return lo + TIME_GRID * rng.randint(0, steps)


def generate_workload(
    seed: int,
    num_tasks: int,
    num_layers: int,
    edge_density: float,
    ranges: CostRanges | None = None,
) -> list[TaskSpec]:
    """Build a seeded, layered random task set; identical inputs, identical output.

    Tasks are spread over ``num_layers`` nonempty layers and edges point only
    from earlier to later layers, so the result is acyclic by construction.
    Each ordered cross-layer pair becomes an edge with probability
    ``edge_density``.
    """
    if num_tasks < 0:
        raise ValidationError("num_tasks must be nonnegative")
    if num_tasks == 0:
        return []
    if not 1 <= num_layers <= num_tasks:
        raise ValidationError(
            f"num_layers must be in [1, {num_tasks}], got {num_layers}"
        )
    if not 0.0 <= edge_density <= 1.0:
        raise ValidationError("edge_density must be in [0, 1]")
    ranges = ranges or CostRanges()
    rng = random.Random(seed)

    layer_of = list(range(num_layers))  # one pin per layer keeps all nonempty
    layer_of += [rng.randrange(num_layers) for _ in range(num_tasks - num_layers)]
    layer_of.sort()
    width = len(str(num_tasks))
    ids = [f"t{i + 1:0{width}d}" for i in range(num_tasks)]

    processing = {t: _draw(rng, *ranges.processing_time) for t in ids}
    memory = {t: _draw(rng, *ranges.memory) for t in ids}
    cpu_power = {t: _draw(rng, *ranges.cpu_power) for t in ids}

    deps: dict[str, list[Dependency]] = {t: [] for t in ids}
    for j, consumer in enumerate(ids):
        for i, producer in enumerate(ids[:j]):
            if layer_of[i] >= layer_of[j]:
                continue
            if rng.random() < edge_density:
                deps[consumer].append(
                    Dependency(producer, _draw(rng, *ranges.comm_time))
                )

    # Loose critical-path estimate: ignores resource contention entirely.
    estimate: dict[str, float] = {}
    for t in ids:
        reach = max(
            (estimate[d.task_id] + d.comm_time for d in deps[t]), default=0.0
        )
        estimate[t] = reach + processing[t]
    deadlines: dict[str, float | None] = {}
    for t in ids:
        if rng.random() < ranges.deadline_probability:
            deadlines[t] = estimate[t] + _draw(rng, *ranges.deadline_slack)
        else:
            deadlines[t] = None

    return [
        TaskSpec(
            task_id=t,
            processing_time=processing[t],
            memory=memory[t],
            cpu_power=cpu_power[t],
            deadline_time=deadlines[t],
            dependencies=tuple(deps[t]),
        )
        for t in ids
    ]
