"""Command-line frontend: schedule, generate, validate, metrics.

Exit codes: 0 success, 1 input error, 2 infeasible task, 3 deadline
violation under --strict-deadlines.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

from . import broker, clustering, harness, render
from .errors import InfeasibleTaskError, SchedulingError
from .graph import build_dag
from .model import (
    FinalSchedule,
    format_number,
    parse_agent_map,
    parse_resource_file,
    parse_task_file,
    placements_from_csv,
    schedule_to_csv,
    serialize_task_set,
    validate_agent_map,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_DEADLINE = 3


@dataclass
class RunConfig:
    """Everything a subcommand needs; unused fields stay at their defaults."""

    task_file: Path | None = None
    resource_file: Path | None = None
    agent_map_file: Path | None = None
    schedule_file: Path | None = None
    out_dir: Path | None = None
    strict_deadlines: bool = False
    emit_gantt: bool = False
    emit_log: bool = False
    parallel: bool = False
    seed: int = 0
    num_tasks: int = 20
    layers: int = 4
    density: float = 0.2
    deadline_prob: float = 0.0


def _fail(message: str, code: int = EXIT_INPUT) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _read(path: Path, what: str) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise SchedulingError(f"cannot read {what} {path}: {exc}") from None


def _load_inputs(cfg: RunConfig):
    tasks = parse_task_file(_read(cfg.task_file, "task file"))
    resources = parse_resource_file(_read(cfg.resource_file, "resource file"))
    agents = parse_agent_map(_read(cfg.agent_map_file, "agent map"))
    validate_agent_map(agents, resources)
    return tasks, resources, agents


def _metrics_csv(metrics: harness.Metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["metric", "key", "value"])
    writer.writerow(["makespan", "", format_number(metrics.makespan)])
    writer.writerow(["balanceSpread", "", str(metrics.balance_spread)])
    for agent_id, count in metrics.series():
        writer.writerow(["tasksPerAgent", agent_id, str(count)])
    for rid, busy in sorted(metrics.per_resource_busy.items()):
        writer.writerow(["resourceBusy", rid, format_number(busy)])
    return buf.getvalue()


def _series_csv(metrics: harness.Metrics) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["agentId", "count"])
    for agent_id, count in metrics.series():
        writer.writerow([agent_id, str(count)])
    return buf.getvalue()


def _write_metrics_artifacts(out: Path, metrics: harness.Metrics) -> None:
    (out / "metrics.csv").write_text(_metrics_csv(metrics))
    (out / "tasks_per_agent.csv").write_text(_series_csv(metrics))
    (out / "tasks_per_agent.svg").write_text(
        render.bar_chart_svg(metrics.series(), "tasks per agent")
    )


def cmd_schedule(cfg: RunConfig) -> int:
    """Run the full pipeline and write schedule, metrics, and optional charts."""
    try:
        tasks, resources, agents = _load_inputs(cfg)
    except SchedulingError as exc:
        return _fail(str(exc))
    try:
        result = broker.orchestrate(
            tasks,
            resources,
            agents,
            parallel=cfg.parallel,
            source=str(cfg.task_file),
        )
    except InfeasibleTaskError as exc:
        return _fail(str(exc), EXIT_INFEASIBLE)
    except SchedulingError as exc:
        return _fail(str(exc))

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    schedule = result.schedule
    (out / "schedule.csv").write_text(schedule_to_csv(schedule))
    metrics = harness.compute_metrics(schedule, result.assignment)
    _write_metrics_artifacts(out, metrics)
    if cfg.emit_gantt:
        (out / "gantt.svg").write_text(render.gantt_svg(schedule))
        (out / "gantt.txt").write_text(render.gantt_text(schedule))
    if cfg.emit_log:
        (out / "protocol.log").write_text(result.log.to_text())
        (out / "clusters.txt").write_text(
            clustering.assignment_dump(result.cluster_dag)
        )

    counts = " ".join(f"{a}={c}" for a, c in metrics.series())
    print(
        f"scheduled {len(schedule.placements)} tasks in "
        f"{len(result.cluster_dag.clusters)} clusters; "
        f"makespan {format_number(schedule.makespan)}; {counts}"
    )
    if schedule.deadline_violations:
        print(
            "deadline violations: " + ", ".join(schedule.deadline_violations)
        )
        if cfg.strict_deadlines:
            return EXIT_DEADLINE
    return EXIT_OK


def cmd_generate(cfg: RunConfig) -> int:
    """Write a seeded random workload in the task XML format."""
    try:
        ranges = harness.CostRanges(deadline_probability=cfg.deadline_prob)
        tasks = harness.generate_workload(
            cfg.seed, cfg.num_tasks, cfg.layers, cfg.density, ranges
        )
    except SchedulingError as exc:
        return _fail(str(exc))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    path = cfg.out_dir / "tasks.xml"
    path.write_text(serialize_task_set(tasks))
    print(f"wrote {len(tasks)} tasks to {path}")
    return EXIT_OK


def _load_schedule_rows(cfg: RunConfig) -> FinalSchedule:
    rows = placements_from_csv(_read(cfg.schedule_file, "schedule file"))
    makespan = max((p.end for p in rows), default=0.0)
    return FinalSchedule(tuple(rows), makespan)


def cmd_validate(cfg: RunConfig) -> int:
    """Check a schedule file against its inputs; nonzero exit iff violations."""
    try:
        tasks, resources, agents = _load_inputs(cfg)
        schedule = _load_schedule_rows(cfg)
        dag = build_dag(tasks)
        report = harness.validate_schedule(schedule, dag, resources, agents)
    except SchedulingError as exc:
        return _fail(str(exc))
    if report.is_empty():
        print("schedule valid")
        return EXIT_OK
    for line in report.lines():
        print(line)
    return EXIT_INPUT


def cmd_metrics(cfg: RunConfig) -> int:
    """Recompute metrics from a schedule file."""
    try:
        schedule = _load_schedule_rows(cfg)
    except SchedulingError as exc:
        return _fail(str(exc))
    metrics = harness.compute_metrics(schedule)
    if cfg.out_dir is not None:
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        _write_metrics_artifacts(cfg.out_dir, metrics)
    print(_metrics_csv(metrics), end="")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coalloc",
        description="Co-allocation scheduler for dependent-task workloads.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sched = sub.add_parser("schedule", help="schedule a task file end to end")
    sched.add_argument("--tasks", required=True, type=Path)
    sched.add_argument("--resources", required=True, type=Path)
    sched.add_argument("--agents", required=True, type=Path)
    sched.add_argument("--out", required=True, type=Path)
    sched.add_argument("--strict-deadlines", action="store_true")
    sched.add_argument("--emit-gantt", action="store_true")
    sched.add_argument("--emit-log", action="store_true")
    sched.add_argument("--parallel", action="store_true")

    gen = sub.add_parser("generate", help="generate a random workload XML")
    gen.add_argument("--out", required=True, type=Path)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--num-tasks", type=int, default=20)
    gen.add_argument("--layers", type=int, default=4)
    gen.add_argument("--density", type=float, default=0.2)
    gen.add_argument("--deadline-prob", type=float, default=0.0)

    val = sub.add_parser("validate", help="validate a schedule file")
    val.add_argument("--tasks", required=True, type=Path)
    val.add_argument("--resources", required=True, type=Path)
    val.add_argument("--agents", required=True, type=Path)
    val.add_argument("--schedule", required=True, type=Path)

    met = sub.add_parser("metrics", help="recompute metrics from a schedule file")
    met.add_argument("--schedule", required=True, type=Path)
    met.add_argument("--out", type=Path)

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    for src, dst in [
        ("tasks", "task_file"),
        ("resources", "resource_file"),
        ("agents", "agent_map_file"),
        ("schedule", "schedule_file"),
        ("out", "out_dir"),
        ("strict_deadlines", "strict_deadlines"),
        ("emit_gantt", "emit_gantt"),
        ("emit_log", "emit_log"),
        ("parallel", "parallel"),
        ("seed", "seed"),
        ("num_tasks", "num_tasks"),
        ("layers", "layers"),
        ("density", "density"),
        ("deadline_prob", "deadline_prob"),
    ]:
        if hasattr(args, src):
            setattr(cfg, dst, getattr(args, src))
    return cfg


_COMMANDS = {
    "schedule": cmd_schedule,
    "generate": cmd_generate,
    "validate": cmd_validate,
    "metrics": cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    cfg = _config_from_args(args)
    return _COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
