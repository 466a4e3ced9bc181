"""Wire format for the user-broker and broker-agent exchanges.

Messages travel over an in-process channel; every send is recorded, in
order, in a :class:`MessageLog` so protocol conformance can be checked and
exported after a run.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

if TYPE_CHECKING:
    from .clustering import Cluster
    from .graph import TaskDag

USER = "user"
BROKER = "broker"


class MessageKind(enum.Enum):
    SUBMIT_TASKS = "SubmitTasks"
    SCHEDULE_RESULT = "ScheduleResult"
    ASSIGN_CLUSTER = "AssignCluster"
    CLUSTER_SCHEDULED = "ClusterScheduled"
    DEPENDENCY_INFO = "DependencyInfo"
    ADJUSTED_SCHEDULE = "AdjustedSchedule"


@dataclass(frozen=True)
class SubmitTasksPayload:
    task_count: int
    source: str = ""


@dataclass(frozen=True)
class ScheduleResultPayload:
    mappings: tuple[tuple[str, str], ...]  # (taskId, resourceId)
    makespan: float


@dataclass(frozen=True)
class AssignClusterPayload:
    cluster: "Cluster"
    dag: "TaskDag"  # fragment restricted to the cluster's tasks


@dataclass(frozen=True)
class DependencyInfoPayload:
    cluster_id: str
    entries: tuple[tuple[str, float], ...]  # (taskId, readyTime)


@dataclass(frozen=True)
class Message:
    kind: MessageKind
    sender: str
    receiver: str
    payload: Any
    cluster_id: str | None = None

    def summary(self) -> str:
        """Short payload description for the exported log."""
        kind = self.kind
        if kind is MessageKind.SUBMIT_TASKS:
            return f"tasks={self.payload.task_count}"
        if kind is MessageKind.SCHEDULE_RESULT:
            return (
                f"mappings={len(self.payload.mappings)} "
                f"makespan={self.payload.makespan}"
            )
        if kind is MessageKind.ASSIGN_CLUSTER:
            return (
                f"cluster={self.payload.cluster.cluster_id} "
                f"tasks={len(self.payload.cluster.tasks)}"
            )
        if kind is MessageKind.DEPENDENCY_INFO:
            return (
                f"cluster={self.payload.cluster_id} "
                f"entries={len(self.payload.entries)}"
            )
        # ClusterScheduled / AdjustedSchedule carry a PartialSchedule
        return (
            f"cluster={self.payload.cluster_id} "
            f"placements={len(self.payload.placements)}"
        )


@dataclass(frozen=True)
class LogEntry:
    seq: int
    message: Message

    @property
    def kind(self) -> MessageKind:
        return self.message.kind

    @property
    def sender(self) -> str:
        return self.message.sender

    @property
    def receiver(self) -> str:
        return self.message.receiver

    @property
    def cluster_id(self) -> str | None:
        return self.message.cluster_id

    @property
    def payload(self) -> Any:
        return self.message.payload

    def line(self) -> str:
        return "\t".join(
            [
                str(self.seq),
                self.sender,
                self.receiver,
                self.kind.value,
                self.message.summary(),
            ]
        )


@dataclass
class MessageLog:
    """Ordered record of every message sent during one orchestration."""

    entries: list[LogEntry] = field(default_factory=list)

    def record(self, message: Message) -> LogEntry:
        entry = LogEntry(seq=len(self.entries) + 1, message=message)
        self.entries.append(entry)
        return entry

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def for_cluster(self, cluster_id: str) -> list[LogEntry]:
        return [e for e in self.entries if e.cluster_id == cluster_id]

    def to_text(self) -> str:
        return "".join(entry.line() + "\n" for entry in self.entries)
