"""Local scheduling: eligibility, earliest-start selection, rigid delays."""

import random

import pytest

from coalloc import (
    Cluster,
    Dependency,
    InfeasibleTaskError,
    PartialSchedule,
    Placement,
    ProtocolError,
    ResourceSpec,
    ResourceTimeline,
    TaskSpec,
    apply_dependency_delays,
    build_dag,
    eligible_resources,
    generate_workload,
    schedule_cluster,
)
from conftest import make_pool
from oracles import check_selection_rule


def resource(rid, memory=8.0, cpu=8.0):
    return ResourceSpec(rid, rid, "c", "f", cpu, memory, 90.0)


def timelines(*specs):
    return {r.resource_id: ResourceTimeline(r) for r in specs}


def task(task_id, processing=1.0, memory=0.0, cpu=0.0, deps=()):
    return TaskSpec(
        task_id, processing, memory, cpu, None,
        tuple(Dependency(p, c) for p, c in deps),
    )


def test_eligible_filters_on_both_requirements():
    t = task("t", memory=2.0, cpu=1.0)
    pool = [resource("P01", memory=4.0, cpu=2.0), resource("P02", memory=1.0, cpu=2.0)]
    assert eligible_resources(t, pool) == ["P01"]


def test_zero_requirements_match_everything():
    pool = [resource("P02"), resource("P01")]
    assert eligible_resources(task("t"), pool) == ["P01", "P02"]


def test_impossible_requirement_matches_nothing():
    pool = [resource("P01", memory=4.0), resource("P02", memory=4.0)]
    assert eligible_resources(task("t", memory=8.0), pool) == []


def test_same_resource_beats_cross_resource_comm():
    dag = build_dag([task("t1", 2.0), task("t2", 3.0, deps=[("t1", 1.0)])])
    tls = timelines(resource("r1"), resource("r2"))
    partial = schedule_cluster(Cluster("C1", ("t1", "t2")), dag, tls, "a1")
    assert partial.placements["t1"] == Placement("t1", "r1", "a1", 0.0, 2.0)
    # staying on r1 (ready at 2) beats moving to r2 (ready at 2 + 1)
    assert partial.placements["t2"] == Placement("t2", "r1", "a1", 2.0, 5.0)


def test_single_task_starts_at_origin():
    dag = build_dag([task("only", 4.0)])
    tls = timelines(resource("r1"))
    partial = schedule_cluster(Cluster("C1", ("only",)), dag, tls, "a1")
    assert partial.placements["only"] == Placement("only", "r1", "a1", 0.0, 4.0)


def test_independent_tasks_spread_over_resources():
    dag = build_dag([task("a", 2.0), task("b", 3.0)])
    tls = timelines(resource("r1"), resource("r2"))
    partial = schedule_cluster(Cluster("C1", ("a", "b")), dag, tls, "a1")
    assert partial.placements["a"].start == 0.0
    assert partial.placements["b"].start == 0.0
    assert {partial.placements["a"].resource_id,
            partial.placements["b"].resource_id} == {"r1", "r2"}
    # a (decided first) takes the lowest resource id
    assert partial.placements["a"].resource_id == "r1"


def test_gap_filling_between_reservations():
    r1 = resource("r1")
    tls = timelines(r1)
    tls["r1"].reserve("warm", 0.0, 2.0)
    tls["r1"].reserve("late", 5.0, 4.0)
    dag = build_dag([task("t", 3.0)])
    partial = schedule_cluster(Cluster("C1", ("t",)), dag, tls, "a1")
    assert partial.placements["t"].start == 2.0  # the [2, 5) hole fits exactly


def test_zero_duration_task_placed_at_ready_time():
    tls = timelines(resource("r1"))
    tls["r1"].reserve("busy", 0.0, 10.0)
    dag = build_dag([task("z", 0.0)])
    partial = schedule_cluster(Cluster("C1", ("z",)), dag, tls, "a1")
    assert partial.placements["z"].start == 0.0
    assert partial.placements["z"].end == 0.0


def test_infeasible_task_is_named():
    dag = build_dag([task("heavy", 1.0, memory=8.0)])
    tls = timelines(resource("r1", memory=4.0))
    with pytest.raises(InfeasibleTaskError) as err:
        schedule_cluster(Cluster("C1", ("heavy",)), dag, tls, "a1")
    assert err.value.task_id == "heavy"


def test_timelines_persist_across_clusters():
    dag = build_dag([task("a", 3.0), task("b", 3.0)])
    tls = timelines(resource("r1"))
    first = schedule_cluster(Cluster("C1", ("a",)), dag, tls, "a1")
    second = schedule_cluster(Cluster("C2", ("b",)), dag, tls, "a1")
    assert first.placements["a"].start == 0.0
    assert second.placements["b"].start == 3.0  # r1 already booked by C1
    starts_ends = [(s, e) for s, e, _ in tls["r1"].reservations]
    assert starts_ends == [(0.0, 3.0), (3.0, 6.0)]


def test_reserve_rejects_overlap():
    from coalloc import StructuralError

    tl = ResourceTimeline(resource("r1"))
    tl.reserve("a", 0.0, 2.0)
    with pytest.raises(StructuralError, match="overlaps"):
        tl.reserve("b", 1.0, 2.0)


def test_intra_cluster_constraints_hold_and_selection_is_optimal():
    rng = random.Random(5)
    for seed in range(30):
        n = rng.randint(1, 10)
        tasks = generate_workload(seed, n, rng.randint(1, min(n, 3)), 0.4)
        resources, _ = make_pool(rng, 1, rng.randint(1, 4))
        tls = timelines(*resources)
        dag = build_dag(tasks)
        cluster = Cluster("C1", tuple(sorted(dag.tasks)))
        partial = schedule_cluster(cluster, dag, tls, "a1")

        # every edge constraint holds, with comm owed only across resources
        for (p, s), comm in dag.edges.items():
            pp, ss = partial.placements[p], partial.placements[s]
            required = pp.end if pp.resource_id == ss.resource_id else pp.end + comm
            assert ss.start >= required
        # no overlapping reservations anywhere
        for tl in tls.values():
            busy = [(s, e) for s, e, _ in tl.reservations if e > s]
            for i, (s1, e1) in enumerate(busy):
                for s2, e2 in busy[i + 1:]:
                    assert not (s1 < e2 and s2 < e1)
        # exchange property: no eligible resource offered a strictly earlier start
        assert check_selection_rule(
            cluster.tasks, dag, resources, {}, partial.placements
        ) == []


def shifted_gaps(partial):
    items = sorted(partial.placements.items())
    return [
        (a, b, pb.start - pa.start, pb.end - pa.end, pb.end - pa.start)
        for a, pa in items
        for b, pb in items
    ]


def test_delay_with_empty_report_is_identity():
    partial = PartialSchedule(
        "C1", {"t": Placement("t", "r1", "a1", 3.0, 5.0)}
    )
    assert apply_dependency_delays(partial, []) == partial


def test_delay_shifts_whole_cluster():
    partial = PartialSchedule(
        "C1",
        {
            "t": Placement("t", "r1", "a1", 3.0, 5.0),
            "u": Placement("u", "r2", "a1", 4.0, 6.0),
        },
    )
    moved = apply_dependency_delays(partial, [("t", 7.0)])
    assert moved.placements["t"].start == 7.0
    assert moved.placements["u"].start == 8.0
    assert shifted_gaps(moved) == shifted_gaps(partial)


def test_delay_already_satisfied_is_noop():
    partial = PartialSchedule(
        "C1", {"t": Placement("t", "r1", "a1", 5.0, 6.0)}
    )
    assert apply_dependency_delays(partial, [("t", 2.0)]) == partial


def test_delay_takes_worst_shortfall():
    partial = PartialSchedule(
        "C1",
        {
            "t": Placement("t", "r1", "a1", 0.0, 1.0),
            "u": Placement("u", "r1", "a1", 2.0, 3.0),
        },
    )
    moved = apply_dependency_delays(partial, [("t", 1.0), ("u", 6.0)])
    assert moved.placements["t"].start == 4.0  # shift by 6 - 2 = 4
    assert moved.placements["u"].start == 6.0


def test_delay_rejects_unknown_task():
    partial = PartialSchedule(
        "C1", {"t": Placement("t", "r1", "a1", 0.0, 1.0)}
    )
    with pytest.raises(ProtocolError, match="ghost"):
        apply_dependency_delays(partial, [("ghost", 1.0)])
