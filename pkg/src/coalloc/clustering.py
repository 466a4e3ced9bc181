"""Phase 1: partition the task DAG into size-bounded clusters.

Clusters start out as singletons and grow by absorbing clusters that depend
on them, as long as the merged size stays within the per-agent quota and the
quotient graph stays acyclic. Crossing communication costs are summed on the
quotient edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import StructuralError, ValidationError
from .graph import TaskDag, levelize

__all__ = [
    "Cluster",
    "ClusterDag",
    "max_cluster_size",
    "cluster_tasks",
    "quotient",
    "assignment_dump",
]


@dataclass(frozen=True)
class Cluster:
    """A named, nonempty set of tasks, stored in ascending task-id order."""

    cluster_id: str
    tasks: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.tasks:
            raise StructuralError(f"cluster {self.cluster_id!r} is empty")

    @property
    def min_task(self) -> str:
        return self.tasks[0]


@dataclass
class ClusterDag:
    """Quotient DAG: clusters as nodes, summed crossing costs as edge weights."""

    clusters: list[Cluster]
    edges: dict[tuple[str, str], float]
    by_id: dict[str, Cluster] = field(init=False, compare=False, repr=False)
    cluster_of: dict[str, str] = field(init=False, compare=False, repr=False)
    preds: dict[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    succs: dict[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.by_id = {c.cluster_id: c for c in self.clusters}
        self.cluster_of = {
            t: c.cluster_id for c in self.clusters for t in c.tasks
        }
        preds: dict[str, list[str]] = {c.cluster_id: [] for c in self.clusters}
        succs: dict[str, list[str]] = {c.cluster_id: [] for c in self.clusters}
        for a, b in self.edges:
            succs[a].append(b)
            preds[b].append(a)
        order = lambda cid: self.by_id[cid].min_task
        self.preds = {c: tuple(sorted(ps, key=order)) for c, ps in preds.items()}
        self.succs = {c: tuple(sorted(ss, key=order)) for c, ss in succs.items()}

    def levels(self) -> list[list[Cluster]]:
        """Dependency levels of the quotient graph, each sorted by min task id."""
        blocks = levelize(
            self.by_id, self.preds, key=lambda cid: self.by_id[cid].min_task
        )
        return [[self.by_id[cid] for cid in block] for block in blocks]

    def topological_order(self) -> list[Cluster]:
        """Topological order; among ready clusters the least min task id goes first."""
        indegree = {cid: len(ps) for cid, ps in self.preds.items()}
        ready = sorted(
            (cid for cid, deg in indegree.items() if deg == 0),
            key=lambda cid: self.by_id[cid].min_task,
            reverse=True,
        )
        out: list[Cluster] = []
        while ready:
            cid = ready.pop()
            out.append(self.by_id[cid])
            changed = False
            for succ in self.succs[cid]:
                indegree[succ] -= 1
                if indegree[succ] == 0:
                    ready.append(succ)
                    changed = True
            if changed:
                ready.sort(key=lambda c: self.by_id[c].min_task, reverse=True)
        if len(out) != len(self.clusters):
            raise StructuralError("cluster graph is not acyclic")
        return out


def max_cluster_size(num_tasks: int, num_agents: int) -> int:
    """Per-cluster task quota: number_of_tasks // number_of_agents + 1."""
    return num_tasks // num_agents + 1


def assignment_dump(cluster_dag: ClusterDag) -> str:
    """Debug listing: one ``taskId -> clusterId`` line per task, ascending."""
    lines = [
        f"{task_id} -> {cluster_dag.cluster_of[task_id]}"
        for task_id in sorted(cluster_dag.cluster_of)
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def quotient(dag: TaskDag, partition: list[set[str]]) -> ClusterDag:
    """Collapse a task partition into a cluster DAG.

    Crossing edge costs are summed per ordered cluster pair; self-edges are
    never emitted. Clusters are named C1, C2, ... in ascending order of their
    smallest task id.
    """
    seen: set[str] = set()
    groups: list[set[str]] = []
    for group in partition:
        g = set(group)
        if not g:
            raise StructuralError("partition contains an empty cluster")
        overlap = g & seen
        if overlap:
            raise StructuralError(
                "partition overlaps on tasks: " + ", ".join(sorted(overlap))
            )
        unknown = g - set(dag.tasks)
        if unknown:
            raise StructuralError(
                "partition names unknown tasks: " + ", ".join(sorted(unknown))
            )
        seen |= g
        groups.append(g)
    uncovered = set(dag.tasks) - seen
    if uncovered:
        raise StructuralError(
            "partition misses tasks: " + ", ".join(sorted(uncovered))
        )
    groups.sort(key=min)
    clusters = [
        Cluster(f"C{i}", tuple(sorted(g))) for i, g in enumerate(groups, start=1)
    ]
    owner = {t: c.cluster_id for c in clusters for t in c.tasks}
    edges: dict[tuple[str, str], float] = {}
    for (pred, succ), cost in dag.edges.items():
        a, b = owner[pred], owner[succ]
        if a == b:
            continue
        edges[(a, b)] = edges.get((a, b), 0.0) + cost
    return ClusterDag(clusters, edges)


def cluster_tasks(dag: TaskDag, num_agents: int) -> ClusterDag:
    """Greedily merge dependent tasks into clusters bounded by the quota.

    The current cluster is always the unfinished one holding the smallest
    task id. It repeatedly absorbs a cluster that depends on it — preferring
    the candidate with the least contained task id — whenever the merged size
    fits the quota and the quotient graph stays acyclic; when no candidate
    qualifies the cluster is final. The procedure is fully deterministic.
    """
    if num_agents < 1:
        raise ValidationError(f"num_agents must be >= 1, got {num_agents}")
    task_ids = list(dag.tasks)
    if not task_ids:
        return ClusterDag([], {})
    limit = max_cluster_size(len(task_ids), num_agents)

    index_of = {t: i for i, t in enumerate(task_ids)}
    members: list[set[str]] = [{t} for t in task_ids]
    low: list[str] = list(task_ids)  # smallest task id per part
    succs: list[set[int]] = [set() for _ in task_ids]
    preds: list[set[int]] = [set() for _ in task_ids]
    for pred, succ in dag.edges:
        a, b = index_of[pred], index_of[succ]
        succs[a].add(b)
        preds[b].add(a)

    alive = set(range(len(task_ids)))
    unfinished = set(alive)
    while unfinished:
        current = min(unfinished, key=lambda i: low[i])
        while True:
            chosen = _pick_candidate(current, members, low, succs, limit)
            if chosen is None:
                break
            _merge_parts(current, chosen, members, low, succs, preds)
            alive.discard(chosen)
            unfinished.discard(chosen)
        unfinished.discard(current)

    partition = [members[i] for i in sorted(alive, key=lambda i: low[i])]
    return quotient(dag, partition)


def _pick_candidate(
    current: int,
    members: list[set[str]],
    low: list[str],
    succs: list[set[int]],
    limit: int,
) -> int | None:
    # Candidates are clusters depending on the current one; reject any merge
    # that would exceed the quota or close a cycle in the quotient graph.
    fitting = [
        d for d in succs[current] if len(members[current]) + len(members[d]) <= limit
    ]
    for d in sorted(fitting, key=lambda i: low[i]):
        if not _merge_closes_cycle(current, d, succs):
            return d
    return None


def _merge_closes_cycle(current: int, candidate: int, succs: list[set[int]]) -> bool:
    # Contracting an edge C -> D cycles iff another path C ~> D exists.
    frontier = [s for s in succs[current] if s != candidate]
    seen = set(frontier)
    while frontier:
        node = frontier.pop()
        if node == candidate:
            return True
        for nxt in succs[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return False


def _merge_parts(
    current: int,
    other: int,
    members: list[set[str]],
    low: list[str],
    succs: list[set[int]],
    preds: list[set[int]],
) -> None:
    members[current] |= members[other]
    members[other] = set()
    if low[other] < low[current]:
        low[current] = low[other]
    succs[current].discard(other)
    preds[current].discard(other)
    for s in succs[other]:
        if s == current:
            continue
        preds[s].discard(other)
        preds[s].add(current)
        succs[current].add(s)
    for p in preds[other]:
        if p == current:
            continue
        succs[p].discard(other)
        succs[p].add(current)
        preds[current].add(p)
    succs[other].clear()
    preds[other].clear()
    succs[current].discard(current)
    preds[current].discard(current)
