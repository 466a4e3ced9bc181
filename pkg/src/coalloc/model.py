"""Domain types and on-disk formats: task/resource XML, agent maps, schedule tables.

Numeric fields are decimal seconds (durations, times) or abstract capacity
units; all of them must be nonnegative. Parsers are strict about the
documented elements, ignore unknown elements with a warning, and report
malformed or negative numerics as :class:`~coalloc.errors.ValidationError`.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass

from .errors import StructuralError, ValidationError, XmlFormatError

logger = logging.getLogger(__name__)


def format_number(value: float) -> str:
    """Shortest decimal form that round-trips through float()."""
    return str(float(value))


def _require_number(text: str | None, what: str) -> float:
    if text is None or not text.strip():
        raise ValidationError(f"{what}: missing numeric value")
    try:
        value = float(text.strip())
    except ValueError:
        raise ValidationError(f"{what}: not a number: {text.strip()!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{what}: must be finite, got {text.strip()!r}")
    if value < 0:
        raise ValidationError(f"{what}: must be nonnegative, got {value}")
    return value


# ---------------------------------------------------------------------------
# Core types


@dataclass(frozen=True)
class Dependency:
    """One dependency edge as declared by the consuming task."""

    task_id: str
    comm_time: float

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValidationError("dependency taskId must be nonempty")
        if self.comm_time < 0:
            raise ValidationError(
                f"commTime must be nonnegative, got {self.comm_time}"
            )


@dataclass(frozen=True)
class TaskSpec:
    """One task: identity, duration, requirements, optional deadline, dependencies.

    ``deadline_time`` is an absolute time measured from the schedule origin 0;
    ``None`` means the task carries no deadline.
    """

    task_id: str
    processing_time: float
    memory: float = 0.0
    cpu_power: float = 0.0
    deadline_time: float | None = None
    dependencies: tuple[Dependency, ...] = ()

    def __post_init__(self) -> None:
        if not self.task_id:
            raise ValidationError("taskId must be nonempty")
        for name in ("processing_time", "memory", "cpu_power"):
            if getattr(self, name) < 0:
                raise ValidationError(
                    f"task {self.task_id!r}: {name} must be nonnegative"
                )
        if self.deadline_time is not None and self.deadline_time < 0:
            raise ValidationError(
                f"task {self.task_id!r}: deadlineTime must be nonnegative"
            )
        for dep in self.dependencies:
            if dep.task_id == self.task_id:
                raise ValidationError(
                    f"task {self.task_id!r} must not depend on itself"
                )


@dataclass(frozen=True)
class ResourceSpec:
    """One resource (node): identity, naming, and capacity parameters.

    ``cpu_idle`` is parsed and reported but never drives scheduling decisions.
    """

    resource_id: str
    node_name: str = ""
    cluster_name: str = ""
    farm_name: str = ""
    cpu_power: float = 0.0
    memory: float = 0.0
    cpu_idle: float = 0.0

    def __post_init__(self) -> None:
        if not self.resource_id:
            raise ValidationError("resource Id must be nonempty")
        for name in ("cpu_power", "memory", "cpu_idle"):
            if getattr(self, name) < 0:
                raise ValidationError(
                    f"resource {self.resource_id!r}: {name} must be nonnegative"
                )


@dataclass(frozen=True)
class AgentSpec:
    """One agent and the resource ids it manages (a disjoint, exhaustive slice)."""

    agent_id: str
    resources: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.agent_id:
            raise ValidationError("agentId must be nonempty")
        if not self.resources:
            raise ValidationError(
                f"agent {self.agent_id!r} must manage at least one resource"
            )
        if len(set(self.resources)) != len(self.resources):
            raise StructuralError(
                f"agent {self.agent_id!r} lists a resource twice"
            )


@dataclass(frozen=True)
class Placement:
    """Where and when one task runs."""

    task_id: str
    resource_id: str
    agent_id: str
    start: float
    end: float

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValidationError(
                f"placement of {self.task_id!r}: start must be nonnegative"
            )
        if self.end < self.start:
            raise ValidationError(
                f"placement of {self.task_id!r}: end precedes start"
            )

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class FinalSchedule:
    """Complete schedule: one placement per task, sorted by (start, taskId)."""

    placements: tuple[Placement, ...]
    makespan: float
    deadline_violations: tuple[str, ...] = ()

    def by_task(self) -> dict[str, Placement]:
        return {p.task_id: p for p in self.placements}


# ---------------------------------------------------------------------------
# Task XML


_REQUIREMENT_TAGS = {"memory", "cpuPower", "deadlineTime"}
_TASK_TAGS = {"taskId", "requirements", "processingTime", "depends"}


def _parse_xml(xml_text: str) -> ET.Element:
    try:
        return ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise XmlFormatError(
            f"malformed XML at line {line}, column {col}: {exc.msg}"
        ) from None


def _warn_unknown(tag: str, where: str) -> None:
    logger.warning("ignoring unknown element <%s> in %s", tag, where)


def _parse_dependency(elem: ET.Element, where: str) -> Dependency:
    dep_id: str | None = None
    comm: float | None = None
    for child in elem:
        if child.tag == "taskId":
            dep_id = (child.text or "").strip()
        elif child.tag == "commTime":
            comm = _require_number(child.text, f"{where}: depends/commTime")
        else:
            _warn_unknown(child.tag, f"{where}/depends")
    if not dep_id:
        raise ValidationError(f"{where}: depends element lacks a taskId")
    if comm is None:
        raise ValidationError(f"{where}: depends element lacks a commTime")
    return Dependency(dep_id, comm)


def _parse_task(elem: ET.Element, index: int) -> TaskSpec:
    where = f"task #{index + 1}"
    task_id: str | None = None
    processing: float | None = None
    memory: float | None = None
    cpu_power: float | None = None
    deadline: float | None = None
    saw_requirements = False
    deps: list[Dependency] = []
    for child in elem:
        if child.tag == "taskId":
            task_id = (child.text or "").strip()
            where = f"task {task_id!r}" if task_id else where
        elif child.tag == "requirements":
            saw_requirements = True
            for req in child:
                if req.tag == "memory":
                    memory = _require_number(req.text, f"{where}: memory")
                elif req.tag == "cpuPower":
                    cpu_power = _require_number(req.text, f"{where}: cpuPower")
                elif req.tag == "deadlineTime":
                    deadline = _require_number(req.text, f"{where}: deadlineTime")
                else:
                    _warn_unknown(req.tag, f"{where}/requirements")
        elif child.tag == "processingTime":
            processing = _require_number(child.text, f"{where}: processingTime")
        elif child.tag == "depends":
            deps.append(_parse_dependency(child, where))
        else:
            _warn_unknown(child.tag, where)
    if not task_id:
        raise ValidationError(f"{where}: missing taskId")
    if processing is None:
        raise ValidationError(f"{where}: missing processingTime")
    if not saw_requirements:
        raise ValidationError(f"{where}: missing requirements")
    if memory is None:
        raise ValidationError(f"{where}: requirements lack memory")
    if cpu_power is None:
        raise ValidationError(f"{where}: requirements lack cpuPower")
    return TaskSpec(
        task_id=task_id,
        processing_time=processing,
        memory=memory,
        cpu_power=cpu_power,
        deadline_time=deadline,
        dependencies=tuple(deps),
    )


def parse_task_file(xml_text: str) -> list[TaskSpec]:
    """Parse a task XML document into a task set, preserving file order.

    Dependencies naming ids absent from the file are kept as-is; resolving
    them is the DAG builder's job.
    """
    root = _parse_xml(xml_text)
    tasks: list[TaskSpec] = []
    for child in root:
        if child.tag != "task":
            _warn_unknown(child.tag, f"<{root.tag}>")
            continue
        tasks.append(_parse_task(child, len(tasks)))
    seen: set[str] = set()
    for task in tasks:
        if task.task_id in seen:
            raise StructuralError(f"duplicate taskId {task.task_id!r}")
        seen.add(task.task_id)
    return tasks


def serialize_task_set(tasks: list[TaskSpec]) -> str:
    """Render a task set in the task XML format, deterministically."""
    root = ET.Element("tasks")
    for task in tasks:
        el = ET.SubElement(root, "task")
        ET.SubElement(el, "taskId").text = task.task_id
        req = ET.SubElement(el, "requirements")
        ET.SubElement(req, "memory").text = format_number(task.memory)
        ET.SubElement(req, "cpuPower").text = format_number(task.cpu_power)
        if task.deadline_time is not None:
            ET.SubElement(req, "deadlineTime").text = format_number(
                task.deadline_time
            )
        ET.SubElement(el, "processingTime").text = format_number(
            task.processing_time
        )
        for dep in task.dependencies:
            dp = ET.SubElement(el, "depends")
            ET.SubElement(dp, "taskId").text = dep.task_id
            ET.SubElement(dp, "commTime").text = format_number(dep.comm_time)
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0"?>\n' + body + "\n"


# ---------------------------------------------------------------------------
# Resource XML


def _parse_node(elem: ET.Element, index: int) -> ResourceSpec:
    where = f"Node #{index + 1}"
    resource_id: str | None = None
    names = {"nodeName": "", "ClusterName": "", "FarmName": ""}
    cpu_power: float | None = None
    memory: float | None = None
    cpu_idle: float | None = None
    for child in elem:
        if child.tag == "Id":
            resource_id = (child.text or "").strip()
            where = f"Node {resource_id!r}" if resource_id else where
        elif child.tag in names:
            names[child.tag] = (child.text or "").strip()
        elif child.tag == "Parameters":
            for par in child:
                if par.tag == "CPUPower":
                    cpu_power = _require_number(par.text, f"{where}: CPUPower")
                elif par.tag == "Memory":
                    memory = _require_number(par.text, f"{where}: Memory")
                elif par.tag == "CPU_idle":
                    cpu_idle = _require_number(par.text, f"{where}: CPU_idle")
                else:
                    _warn_unknown(par.tag, f"{where}/Parameters")
        else:
            _warn_unknown(child.tag, where)
    if not resource_id:
        raise ValidationError(f"{where}: missing Id")
    if cpu_power is None or memory is None or cpu_idle is None:
        raise ValidationError(
            f"{where}: Parameters must contain CPUPower, Memory and CPU_idle"
        )
    return ResourceSpec(
        resource_id=resource_id,
        node_name=names["nodeName"],
        cluster_name=names["ClusterName"],
        farm_name=names["FarmName"],
        cpu_power=cpu_power,
        memory=memory,
        cpu_idle=cpu_idle,
    )


def parse_resource_file(xml_text: str) -> list[ResourceSpec]:
    """Parse a resource XML document into a resource set, in file order."""
    root = _parse_xml(xml_text)
    resources: list[ResourceSpec] = []
    for child in root:
        if child.tag != "Node":
            _warn_unknown(child.tag, f"<{root.tag}>")
            continue
        resources.append(_parse_node(child, len(resources)))
    seen: set[str] = set()
    for res in resources:
        if res.resource_id in seen:
            raise StructuralError(f"duplicate resource Id {res.resource_id!r}")
        seen.add(res.resource_id)
    return resources


def serialize_resource_set(resources: list[ResourceSpec]) -> str:
    """Render a resource set in the resource XML format, deterministically."""
    root = ET.Element("resources")
    for res in resources:
        el = ET.SubElement(root, "Node")
        ET.SubElement(el, "Id").text = res.resource_id
        ET.SubElement(el, "FarmName").text = res.farm_name
        ET.SubElement(el, "ClusterName").text = res.cluster_name
        ET.SubElement(el, "nodeName").text = res.node_name
        par = ET.SubElement(el, "Parameters")
        ET.SubElement(par, "CPUPower").text = format_number(res.cpu_power)
        ET.SubElement(par, "Memory").text = format_number(res.memory)
        ET.SubElement(par, "CPU_idle").text = format_number(res.cpu_idle)
    ET.indent(root, space="  ")
    body = ET.tostring(root, encoding="unicode")
    return '<?xml version="1.0"?>\n' + body + "\n"


# ---------------------------------------------------------------------------
# Agent map


def parse_agent_map(text: str) -> list[AgentSpec]:
    """Parse an agent map: one ``agentId: res1, res2`` line per agent.

    Blank lines and ``#`` comments are skipped. Resource ids must not repeat
    across agents; coverage of a concrete resource set is checked separately
    by :func:`validate_agent_map`.
    """
    agents: list[AgentSpec] = []
    seen_agents: set[str] = set()
    seen_resources: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValidationError(
                f"agent map line {lineno}: expected 'agentId: resource, ...'"
            )
        agent_id, rest = line.split(":", 1)
        agent_id = agent_id.strip()
        resources = tuple(tok.strip() for tok in rest.split(",") if tok.strip())
        if agent_id in seen_agents:
            raise StructuralError(
                f"agent map line {lineno}: duplicate agentId {agent_id!r}"
            )
        for rid in resources:
            if rid in seen_resources:
                raise StructuralError(
                    f"agent map line {lineno}: resource {rid!r} assigned twice"
                )
            seen_resources.add(rid)
        seen_agents.add(agent_id)
        agents.append(AgentSpec(agent_id, resources))
    return agents


def serialize_agent_map(agents: list[AgentSpec]) -> str:
    lines = [f"{a.agent_id}: {', '.join(a.resources)}" for a in agents]
    return "\n".join(lines) + "\n"


def validate_agent_map(
    agents: list[AgentSpec], resources: list[ResourceSpec]
) -> None:
    """Check that the agents partition the resource set exactly."""
    known = {r.resource_id for r in resources}
    claimed: set[str] = set()
    for agent in agents:
        for rid in agent.resources:
            if rid not in known:
                raise StructuralError(
                    f"agent {agent.agent_id!r} manages unknown resource {rid!r}"
                )
            if rid in claimed:
                raise StructuralError(f"resource {rid!r} managed by two agents")
            claimed.add(rid)
    missing = sorted(known - claimed)
    if missing:
        raise StructuralError(
            "resources not covered by any agent: " + ", ".join(missing)
        )


# ---------------------------------------------------------------------------
# Schedule table (delimited text)


SCHEDULE_FIELDS = ("taskId", "resourceId", "agentId", "start", "end")


def schedule_to_csv(schedule: FinalSchedule) -> str:
    """Render placements as CSV rows sorted by (start, taskId)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCHEDULE_FIELDS)
    for p in sorted(schedule.placements, key=lambda p: (p.start, p.task_id)):
        writer.writerow(
            [
                p.task_id,
                p.resource_id,
                p.agent_id,
                format_number(p.start),
                format_number(p.end),
            ]
        )
    return buf.getvalue()


def placements_from_csv(text: str) -> list[Placement]:
    """Read schedule rows back into placements."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return []
    missing = [f for f in SCHEDULE_FIELDS if f not in reader.fieldnames]
    if missing:
        raise ValidationError(
            "schedule file lacks columns: " + ", ".join(missing)
        )
    placements: list[Placement] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            start = float(row["start"])
            end = float(row["end"])
        except (TypeError, ValueError):
            raise ValidationError(
                f"schedule line {lineno}: start/end must be numbers"
            ) from None
        placements.append(
            Placement(
                task_id=row["taskId"],
                resource_id=row["resourceId"],
                agent_id=row["agentId"],
                start=start,
                end=end,
            )
        )
    return placements
