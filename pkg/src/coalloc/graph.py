"""Task DAG construction, cycle detection, and level decomposition."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import TypeVar

from .errors import CycleError, StructuralError, UnknownReferenceError, ValidationError
from .model import TaskSpec

T = TypeVar("T")


@dataclass
class TaskDag:
    """Directed acyclic graph over tasks.

    Node cost is the task's processing time; edge cost is the declared
    communication time. ``preds``/``succs`` adjacency is derived, sorted
    ascending by task id, and must be treated as read-only.
    """

    tasks: dict[str, TaskSpec]
    edges: dict[tuple[str, str], float]
    preds: dict[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)
    succs: dict[str, tuple[str, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        preds: dict[str, list[str]] = {t: [] for t in self.tasks}
        succs: dict[str, list[str]] = {t: [] for t in self.tasks}
        for pred, succ in self.edges:
            preds[succ].append(pred)
            succs[pred].append(succ)
        self.preds = {t: tuple(sorted(ps)) for t, ps in preds.items()}
        self.succs = {t: tuple(sorted(ss)) for t, ss in succs.items()}

    def comm_time(self, pred: str, succ: str) -> float:
        return self.edges[(pred, succ)]

    def restrict(self, subset: Iterable[str]) -> "TaskDag":
        """Sub-DAG over ``subset``: only tasks and edges inside the subset.

        Task specs are rewritten so their dependency lists mention only
        in-subset predecessors, keeping the fragment self-consistent.
        """
        keep = set(subset)
        unknown = sorted(keep - set(self.tasks))
        if unknown:
            raise ValidationError("subset contains unknown tasks: " + ", ".join(unknown))
        tasks = {
            t: dataclasses.replace(
                spec,
                dependencies=tuple(
                    d for d in spec.dependencies if d.task_id in keep
                ),
            )
            for t, spec in self.tasks.items()
            if t in keep
        }
        edges = {
            (p, s): c for (p, s), c in self.edges.items() if p in keep and s in keep
        }
        return TaskDag(tasks, edges)


def find_cycle(adjacency: Mapping[T, Iterable[T]]) -> list[T] | None:
    """Return one directed cycle as a node sequence, or None if acyclic.

    Nodes and neighbors are visited in ascending order, so the witness is
    deterministic. A self-loop yields a length-1 cycle.
    """
    color: dict[T, int] = {}  # 1 = on stack, 2 = done
    for start in sorted(adjacency):
        if color.get(start):
            continue
        stack = [(start, iter(sorted(adjacency.get(start, ()))))]
        path = [start]
        color[start] = 1
        while stack:
            node, neighbors = stack[-1]
            nxt = next(neighbors, None)
            if nxt is None:
                color[node] = 2
                stack.pop()
                path.pop()
                continue
            state = color.get(nxt)
            if state == 1:
                return path[path.index(nxt):]
            if state is None:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(sorted(adjacency.get(nxt, ())))))
    return None


def is_acyclic(adjacency: Mapping[T, Iterable[T]]) -> tuple[bool, list[T] | None]:
    """True and None when the graph has no directed cycle, else False and a witness."""
    cycle = find_cycle(adjacency)
    return (cycle is None), cycle


def build_dag(tasks: Sequence[TaskSpec]) -> TaskDag:
    """Build the task DAG from a task set, resolving declared dependencies.

    Raises :class:`UnknownReferenceError` for a dependency on an id absent
    from the set, :class:`StructuralError` for duplicate ids or a duplicated
    edge, and :class:`CycleError` (with a witness) when the result would not
    be acyclic.
    """
    by_id: dict[str, TaskSpec] = {}
    for task in tasks:
        if task.task_id in by_id:
            raise StructuralError(f"duplicate taskId {task.task_id!r}")
        by_id[task.task_id] = task
    edges: dict[tuple[str, str], float] = {}
    for task in tasks:
        for dep in task.dependencies:
            if dep.task_id not in by_id:
                raise UnknownReferenceError(task.task_id, dep.task_id)
            key = (dep.task_id, task.task_id)
            if key in edges:
                raise StructuralError(
                    f"task {task.task_id!r} depends on {dep.task_id!r} twice"
                )
            edges[key] = dep.comm_time
    dag = TaskDag(by_id, edges)
    cycle = find_cycle(dag.succs)
    if cycle is not None:
        raise CycleError(cycle)
    return dag


def levelize(
    nodes: Iterable[T],
    preds: Mapping[T, Iterable[T]],
    *,
    key=None,
) -> list[list[T]]:
    """Group nodes into dependency levels: level(n) = 1 + max level of preds.

    Only predecessors inside ``nodes`` count. Each level is sorted by
    ``key`` (by the node itself when omitted).
    """
    members = set(nodes)
    preds_in = {n: [p for p in preds.get(n, ()) if p in members] for n in members}
    succs_in: dict[T, list[T]] = {n: [] for n in members}
    for n, ps in preds_in.items():
        for p in ps:
            succs_in[p].append(n)
    indegree = {n: len(ps) for n, ps in preds_in.items()}
    level: dict[T, int] = {}
    ready = [n for n in members if indegree[n] == 0]
    while ready:
        node = ready.pop()
        level[node] = 1 + max((level[p] for p in preds_in[node]), default=0)
        for succ in succs_in[node]:
            indegree[succ] -= 1
            if indegree[succ] == 0:
                ready.append(succ)
    if len(level) != len(members):
        cycle = find_cycle({n: succs_in[n] for n in members})
        raise CycleError(cycle if cycle is not None else [])
    blocks: list[list[T]] = [[] for _ in range(max(level.values(), default=0))]
    for node, lvl in level.items():
        blocks[lvl - 1].append(node)
    for block in blocks:
        block.sort(key=key)
    return blocks


def level_decompose(dag: TaskDag, subset: Iterable[str]) -> list[list[str]]:
    """Split ``subset`` into ordered blocks using only in-subset edges.

    The first block holds tasks with no in-subset predecessor; every later
    block depends only on earlier blocks. Block contents are in ascending
    task-id order.
    """
    wanted = set(subset)
    unknown = sorted(wanted - set(dag.tasks))
    if unknown:
        raise ValidationError(
            "subset contains unknown tasks: " + ", ".join(unknown)
        )
    return levelize(wanted, dag.preds)


def to_dot(dag: TaskDag, blocks: list[list[str]] | None = None) -> str:
    """Graphviz text export of the DAG, with optional block indices."""
    block_of: dict[str, int] = {}
    if blocks is not None:
        for i, block in enumerate(blocks, start=1):
            for task in block:
                block_of[task] = i
    lines = ["digraph tasks {"]
    for task_id in sorted(dag.tasks):
        spec = dag.tasks[task_id]
        label = f"{task_id} ({spec.processing_time})"
        if task_id in block_of:
            label += f" b{block_of[task_id]}"
        lines.append(f'  "{task_id}" [label="{label}"];')
    for (pred, succ) in sorted(dag.edges):
        cost = dag.edges[(pred, succ)]
        lines.append(f'  "{pred}" -> "{succ}" [label="{cost}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
