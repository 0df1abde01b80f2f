"""
Tests for the free construction: procedures A, B, C, the round driver,
task enumeration and progress metrics.
"""

import networkx as nx
import numpy as np
import pytest

from forge.config import Caps
from forge.diagram import standard_diagram
from forge.errors import InvariantViolation, PreconditionError, TaskNotViable
from forge.free_construction import (
    apply_task,
    build_free,
    enumerate_tasks,
    is_stage_embedding,
    procedure_a,
    procedure_b,
    procedure_c,
    progress_metrics,
    run_round,
    start_state,
)
from forge.free_properties import first_failure
from forge.geometry import Geometry, girth

SMALL = Caps(a=8, b=8, c=8)


@pytest.fixture(scope="module", params=["C3", "H3", "F4"])
def grown(request):
    return build_free(standard_diagram(request.param), None, 3, SMALL)


def _points(d, k):
    g = Geometry(d.types)
    for _ in range(k):
        g.add_vertex(d.types[0])
    return start_state(d, g)


@pytest.mark.parametrize("name", ["A3", "C4", "H4", "B5"])
def test_rejects_diagrams_with_A3(name):
    with pytest.raises(PreconditionError):
        build_free(standard_diagram(name), None, 1)


@pytest.mark.parametrize("name", ["C3", "H3", "F4", "I2(2)", "I2(3)", "I2(8)", "I2(inf)"])
def test_accepts_A3_free_diagrams(name):
    state = build_free(standard_diagram(name), None, 2, SMALL)
    assert state.stage == 2
    assert first_failure(state.geometry, state.diagram) is None


def test_seed_checks():
    d = standard_diagram("C3")
    with pytest.raises(PreconditionError):
        start_state(d, Geometry(["1", "2"]))
    bad = Geometry(d.types)
    bad.add_vertex("1")
    bad.add_vertex("3")
    with pytest.raises(InvariantViolation) as err:
        start_state(d, bad)
    assert err.value.verdict.property_name == 'F'


def test_procedure_a_completes_a_flag():
    d = standard_diagram("C3")
    s = _points(d, 1)
    procedure_a(s, [0], "3")
    g = s.geometry
    assert g.type_of(1) == "3"
    assert g.incident(0, 1)
    assert s.task_log[-1].task.kind == 'A'
    assert s.task_log[-1].created == [1]
    with pytest.raises(PreconditionError):
        procedure_a(s, [0], "1")


def test_procedure_a_adds_forced_incidences():
    d = standard_diagram("C3")
    s = _points(d, 2)
    procedure_a(s, [], "3")
    plane = s.geometry.vertices_of_type("3")[0]
    assert s.geometry.neighbours(plane) == {0, 1}


def test_procedure_b_adds_a_path_of_m_minus_one_edges():
    d = standard_diagram("I2(3)")
    s = _points(d, 2)
    procedure_b(s, [], "1", "2", 0, 1)
    record = s.task_log[-1]
    assert record.created == [2]
    assert record.post_distance == 2
    assert s.geometry.incidences() == [(0, 2), (1, 2)]
    with pytest.raises(TaskNotViable):
        procedure_b(s, [], "1", "2", 0, 1)


def test_procedure_b_even_bond_joins_opposite_types():
    d = standard_diagram("I2(4)")
    g = Geometry(d.types)
    x, y = g.add_vertex("1"), g.add_vertex("2")
    s = start_state(d, g)
    procedure_b(s, [], "1", "2", x, y)
    assert s.task_log[-1].post_distance == 3
    assert len(s.task_log[-1].created) == 2
    assert girth(s.geometry) == float('inf')


def test_procedure_b_preconditions():
    d = standard_diagram("I2(4)")
    s = _points(d, 2)
    with pytest.raises(PreconditionError):
        procedure_b(s, [], "1", "2", 0, 1)
    c3 = _points(standard_diagram("C3"), 2)
    with pytest.raises(PreconditionError):
        procedure_b(c3, [], "1", "2", 0, 1)
    with pytest.raises(PreconditionError):
        procedure_b(c3, [], "1", "3", 0, 1)


def test_procedure_c_connects_components():
    d = standard_diagram("I2(4)")
    s = _points(d, 2)
    procedure_c(s, [], "1", "2", 0, 1)
    g = s.geometry
    assert len(s.task_log[-1].created) == 3
    assert nx.shortest_path_length(g.graph, 0, 1) == 4
    assert first_failure(g, d) is None
    with pytest.raises(TaskNotViable):
        procedure_c(s, [], "1", "2", 0, 1)


def test_procedure_c_mixed_endpoints_uses_five_edges():
    d = standard_diagram("I2(5)")
    g = Geometry(d.types)
    x, y = g.add_vertex("1"), g.add_vertex("2")
    s = start_state(d, g)
    procedure_c(s, [], "1", "2", x, y)
    assert nx.shortest_path_length(s.geometry.graph, x, y) == 5


def test_procedure_c_needs_corank_two():
    d = standard_diagram("C3")
    s = _points(d, 1)
    procedure_a(s, [0], "3")
    with pytest.raises(PreconditionError):
        procedure_c(s, [0, 1], "2", "2", 0, 1)


def test_task_lists_are_ordered_and_capped(grown):
    caps = Caps(a=5, b=7, c=3)
    tasks = enumerate_tasks(grown, caps)
    kinds = [t.kind for t in tasks]
    assert kinds == sorted(kinds)
    assert kinds.count('A') <= 5 and kinds.count('B') <= 7 and kinds.count('C') <= 3
    assert enumerate_tasks(grown, caps) == tasks
    assert enumerate_tasks(grown, Caps.zero()) == []


def test_rounds_keep_invariants_and_embed(grown):
    d = grown.diagram
    s = grown.copy()
    before = s.geometry.copy()
    run_round(s, SMALL, check_every_task=True)
    assert s.stage == grown.stage + 1
    assert first_failure(s.geometry, d) is None
    assert is_stage_embedding(before, s.geometry)
    summary = s.rounds[-1]
    for kind in 'ABC':
        assert summary.applied[kind] + summary.skipped[kind] == summary.enumerated[kind]


def test_b_records_reach_distance_m_minus_one(grown):
    d = grown.diagram
    for record in grown.task_log:
        if record.task.kind == 'B':
            assert record.post_distance == d.m(record.task.i, record.task.j) - 1


def _preservation_states():
    """Stage-3 states over C3, H3 and F4 grown with randomly drawn caps"""
    rng = np.random.default_rng(2024)
    for _ in range(4):
        for name in ("C3", "H3", "F4"):
            a, b, c = (int(v) for v in rng.integers(8, 17, size=3))
            yield build_free(standard_diagram(name), None, 3, Caps(a=a, b=b, c=c)), rng


def _apply_sampled(kind, quota, per_state, check):
    applied = 0
    for state, rng in _preservation_states():
        caps = Caps(a=0, b=500, c=0) if kind == 'B' else Caps(a=0, b=0, c=500)
        tasks = enumerate_tasks(state, caps)
        s = state.copy()
        taken = 0
        for k in rng.permutation(len(tasks)):
            if taken == per_state or applied == quota:
                break
            task = tasks[int(k)]
            try:
                apply_task(s, task)
            except TaskNotViable:
                continue
            assert first_failure(s.geometry, s.diagram) is None
            check(s, task)
            taken += 1
            applied += 1
        if applied == quota:
            break
    return applied


def test_procedure_b_preserves_properties():
    def check(s, task):
        m = s.diagram.m(task.i, task.j)
        members = [
            v for v in s.geometry.common_neighbours(task.flag)
            if s.geometry.type_of(v) in (task.i, task.j)
        ]
        assert girth(s.geometry.graph.subgraph(members)) >= 2 * m
        assert s.task_log[-1].post_distance == m - 1

    assert _apply_sampled('B', 200, 40, check) == 200


def test_procedure_c_preserves_properties():
    def check(s, task):
        residue = s.geometry.graph.subgraph(s.geometry.common_neighbours(task.flag))
        assert nx.has_path(residue, task.x, task.y)

    assert _apply_sampled('C', 100, 20, check) == 100


def test_stage_embedding_detects_new_incidence():
    d = standard_diagram("I2(4)")
    s = _points(d, 1)
    line = s.geometry.add_vertex("2")
    before = s.geometry.copy()
    s.geometry.add_incidence(0, line)
    assert not is_stage_embedding(before, s.geometry)
    assert is_stage_embedding(before, before)


def test_builds_are_deterministic():
    d = standard_diagram("H3")
    a = build_free(d, None, 3, SMALL)
    b = build_free(d, None, 3, SMALL)
    assert a.geometry == b.geometry
    assert [r.model_dump() for r in a.task_log] == [r.model_dump() for r in b.task_log]


def test_progress_metrics_shape(grown):
    metrics = progress_metrics(grown)
    g = grown.geometry
    assert metrics.stage == grown.stage
    assert metrics.vertices == len(g)
    assert metrics.incidences == g.number_of_incidences()
    assert metrics.flags == metrics.corank1_flags + metrics.corank2plus_flags
    assert set(metrics.max_residue_diameter) == {f"{i},{j}" for i, j in grown.diagram.pairs()}
    assert metrics.non_thick_corank1 <= metrics.corank1_flags


@pytest.fixture(scope="module", params=["C3", "H3", "F4"])
def full(request):
    return build_free(standard_diagram(request.param), None, 3)


def test_default_caps_keep_invariants_every_round(full):
    assert full.stage == 3
    assert [r.stage for r in full.rounds] == [1, 2, 3]
    assert first_failure(full.geometry, full.diagram) is None


def test_carried_defects_never_grow(full):
    for summary in full.rounds:
        carried = summary.carried
        assert carried.non_thick_after <= carried.non_thick_before
        assert carried.disconnected_after <= carried.disconnected_before
        ratios = carried.ratios()
        assert ratios['non_thick_after'] <= ratios['non_thick_before']
        assert ratios['disconnected_after'] <= ratios['disconnected_before']
    assert progress_metrics(full).carried == full.rounds[-1].carried


def test_carried_population_is_the_previous_stage(full):
    stage2 = build_free(full.diagram, None, 2)
    before = progress_metrics(stage2)
    carried = full.rounds[2].carried
    assert carried.flags == before.flags
    assert carried.non_thick_before == before.non_thick_corank1
    assert carried.disconnected_before == before.disconnected_residues


def test_b_postconditions_over_the_default_task_log(full):
    g, d = full.geometry, full.diagram
    for record in (r for r in full.task_log if r.task.kind == 'B'):
        task = record.task
        m = d.m(task.i, task.j)
        assert record.post_distance == m - 1
        members = [v for v in g.common_neighbours(task.flag) if g.type_of(v) in (task.i, task.j)]
        assert girth(g.graph.subgraph(members)) >= 2 * m


def test_carried_defects_on_a_single_round():
    s = _points(standard_diagram("I2(4)"), 2)
    run_round(s, Caps(a=0, b=0, c=1))
    carried = s.rounds[-1].carried
    # the empty flag and the two point flags
    assert carried.flags == 3
    assert (carried.disconnected_before, carried.disconnected_after) == (1, 0)
    assert (carried.non_thick_before, carried.non_thick_after) == (2, 2)
