"""Phase 2 and the agent half of phase 3: local scheduling on owned resources.

An agent owns a disjoint set of resources, each modeled as a capacity-1
reservation timeline. Assigned clusters are scheduled from time 0 by level
decomposition and earliest-start selection; when the broker later reports
inter-cluster readiness times, the agent rigidly shifts the whole cluster.
"""

from __future__ import annotations

import bisect
import dataclasses
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

from .clustering import Cluster
from .errors import InfeasibleTaskError, ProtocolError, StructuralError
from .graph import TaskDag, level_decompose
from .model import AgentSpec, Placement, ResourceSpec, TaskSpec
from . import protocol


class ResourceTimeline:
    """Reservation calendar for one resource: non-overlapping closed-open slots."""

    def __init__(self, resource: ResourceSpec):
        self.resource = resource
        self._slots: list[tuple[float, float, str]] = []  # (start, end, task)

    @property
    def resource_id(self) -> str:
        return self.resource.resource_id

    @property
    def reservations(self) -> tuple[tuple[float, float, str], ...]:
        return tuple(self._slots)

    def earliest_fit(self, ready: float, duration: float) -> float:
        """Earliest instant >= ready where a slot of ``duration`` fits.

        Gaps between existing reservations count; zero-length requests fit
        anywhere because closed-open intervals of zero length occupy nothing.
        """
        if duration == 0:
            return ready
        t = ready
        for start, end, _ in self._slots:
            if end <= start or end <= t:
                continue  # empty or entirely before the candidate instant
            if start - t >= duration:
                break
            t = max(t, end)
        return t

    def reserve(self, task_id: str, start: float, duration: float) -> None:
        end = start + duration
        if duration > 0:
            for s, e, other in self._slots:
                if e > s and start < e and s < end:
                    raise StructuralError(
                        f"reservation for {task_id!r} overlaps {other!r} "
                        f"on {self.resource_id}"
                    )
        bisect.insort(self._slots, (start, end, task_id))


@dataclass(frozen=True)
class PartialSchedule:
    """One cluster's placements, keyed by task id in decision order."""

    cluster_id: str
    placements: dict[str, Placement]

    def shifted(self, delta: float) -> "PartialSchedule":
        if delta == 0:
            return self
        moved = {
            t: dataclasses.replace(p, start=p.start + delta, end=p.end + delta)
            for t, p in self.placements.items()
        }
        return PartialSchedule(self.cluster_id, moved)


def eligible_resources(
    task: TaskSpec, resources: Iterable[ResourceSpec]
) -> list[str]:
    """Resource ids able to host the task (capacity >= requirement), ascending."""
    ok = [
        r.resource_id
        for r in resources
        if r.memory >= task.memory and r.cpu_power >= task.cpu_power
    ]
    return sorted(ok)


def schedule_cluster(
    cluster: Cluster,
    dag: TaskDag,
    timelines: Mapping[str, ResourceTimeline],
    agent_id: str,
) -> PartialSchedule:
    """Schedule a cluster's tasks on the given timelines, dependencies inside only.

    Tasks are taken block by block (level decomposition over intra-cluster
    edges), ascending task id within a block. Each task goes to the eligible
    resource offering the minimum earliest start; ties fall to the earlier
    finish, then the ascending resource id. A predecessor on the same
    resource is ready at its end time; on another resource the communication
    time is added. Reservations may fill gaps and persist on the timelines.
    """
    inside = set(cluster.tasks)
    specs = [tl.resource for _, tl in sorted(timelines.items())]
    placed: dict[str, Placement] = {}
    for block in level_decompose(dag, inside):
        for task_id in block:
            task = dag.tasks[task_id]
            options = eligible_resources(task, specs)
            if not options:
                raise InfeasibleTaskError(
                    task_id,
                    f"agent {agent_id} has no resource with memory >= "
                    f"{task.memory} and cpuPower >= {task.cpu_power}",
                )
            best: tuple[float, float, str] | None = None
            for rid in options:
                ready = 0.0
                for pred in dag.preds[task_id]:
                    if pred not in inside:
                        continue
                    prior = placed[pred]
                    need = prior.end
                    if prior.resource_id != rid:
                        need += dag.comm_time(pred, task_id)
                    ready = max(ready, need)
                start = timelines[rid].earliest_fit(ready, task.processing_time)
                candidate = (start, start + task.processing_time, rid)
                if best is None or candidate[:2] < best[:2]:
                    best = candidate
            start, end, rid = best
            timelines[rid].reserve(task_id, start, task.processing_time)
            placed[task_id] = Placement(task_id, rid, agent_id, start, end)
    return PartialSchedule(cluster.cluster_id, placed)


def apply_dependency_delays(
    partial: PartialSchedule, readiness: Sequence[tuple[str, float]]
) -> PartialSchedule:
    """Rigidly shift the cluster so every reported readiness time is met.

    The shift is the largest shortfall over the report; the whole schedule
    moves as one block, so every pairwise start/end difference and the local
    non-overlap are preserved exactly.
    """
    delta = 0.0
    for task_id, ready in readiness:
        placement = partial.placements.get(task_id)
        if placement is None:
            raise ProtocolError(
                f"readiness for {task_id!r} which is not in cluster "
                f"{partial.cluster_id!r}"
            )
        delta = max(delta, ready - placement.start)
    return partial.shifted(max(delta, 0.0))


class AgentActor:
    """One scheduling agent: owns resource timelines, reacts to broker messages."""

    def __init__(self, spec: AgentSpec, resources: Sequence[ResourceSpec]):
        by_id = {r.resource_id: r for r in resources}
        missing = sorted(set(spec.resources) - set(by_id))
        if missing:
            raise StructuralError(
                f"agent {spec.agent_id!r} given no spec for: " + ", ".join(missing)
            )
        self.spec = spec
        self.timelines = {
            rid: ResourceTimeline(by_id[rid]) for rid in sorted(spec.resources)
        }
        self._partials: dict[str, PartialSchedule] = {}

    @property
    def agent_id(self) -> str:
        return self.spec.agent_id

    def handle(self, message: protocol.Message) -> protocol.Message:
        """Process a broker message and produce the protocol reply."""
        if message.kind is protocol.MessageKind.ASSIGN_CLUSTER:
            payload = message.payload
            partial = schedule_cluster(
                payload.cluster, payload.dag, self.timelines, self.agent_id
            )
            self._partials[partial.cluster_id] = partial
            return protocol.Message(
                kind=protocol.MessageKind.CLUSTER_SCHEDULED,
                sender=self.agent_id,
                receiver=message.sender,
                payload=partial,
                cluster_id=partial.cluster_id,
            )
        if message.kind is protocol.MessageKind.DEPENDENCY_INFO:
            payload = message.payload
            stored = self._partials.get(payload.cluster_id)
            if stored is None:
                raise ProtocolError(
                    f"agent {self.agent_id} got readiness for unassigned "
                    f"cluster {payload.cluster_id!r}"
                )
            adjusted = apply_dependency_delays(stored, payload.entries)
            self._partials[payload.cluster_id] = adjusted
            return protocol.Message(
                kind=protocol.MessageKind.ADJUSTED_SCHEDULE,
                sender=self.agent_id,
                receiver=message.sender,
                payload=adjusted,
                cluster_id=payload.cluster_id,
            )
        raise ProtocolError(
            f"agent {self.agent_id} cannot handle {message.kind.value}"
        )
