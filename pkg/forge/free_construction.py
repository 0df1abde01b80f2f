"""
Free Construction for A3-free Coxeter Diagrams

This module implements the three extension procedures (completing flags,
adding paths, connecting residues) and the round-based driver that builds
a stage Delta_k of the direct limit. Every procedure mutates the state it
is given and returns it; callers that need the previous stage keep a copy.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, Iterator, List, Literal, Optional, Sequence, Tuple

import networkx as nx
from pydantic import BaseModel

from .config import Caps
from .diagram import INFINITY, CoxeterDiagram
from .errors import InvariantViolation, PreconditionError, TaskNotViable
from .free_properties import first_failure
from .geometry import Flag, Geometry, diameter

logger = logging.getLogger(__name__)


class Task(BaseModel):
    """One application of procedure A, B or C"""

    kind: Literal['A', 'B', 'C']
    flag: Tuple[int, ...]
    i: str
    j: Optional[str] = None
    x: Optional[int] = None
    y: Optional[int] = None

    def describe(self) -> str:
        ends = "" if self.x is None else f" {self.x}->{self.y}"
        types = self.i if self.j is None else f"{self.i},{self.j}"
        return f"{self.kind}[{list(self.flag)}; {types}{ends}]"


class TaskRecord(BaseModel):
    stage: int
    task: Task
    created: List[int]
    post_distance: Optional[int] = None


class CarriedDefects(BaseModel):
    """Defects among the flags a round started from, before and after the round"""

    flags: int
    non_thick_before: int
    non_thick_after: int
    disconnected_before: int
    disconnected_after: int

    def ratios(self) -> Dict[str, float]:
        n = max(self.flags, 1)
        return {
            'non_thick_before': self.non_thick_before / n,
            'non_thick_after': self.non_thick_after / n,
            'disconnected_before': self.disconnected_before / n,
            'disconnected_after': self.disconnected_after / n,
        }


class RoundSummary(BaseModel):
    stage: int
    enumerated: Dict[str, int]
    applied: Dict[str, int]
    skipped: Dict[str, int]
    vertices: int
    incidences: int
    carried: Optional[CarriedDefects] = None


class ProgressMetrics(BaseModel):
    stage: int
    vertices: int
    incidences: int
    flags: int
    corank1_flags: int
    corank2plus_flags: int
    non_completable: int
    non_thick_corank1: int
    disconnected_residues: int
    max_residue_diameter: Dict[str, Optional[int]]
    carried: Optional[CarriedDefects] = None


@dataclass
class ConstructionState:
    geometry: Geometry
    diagram: CoxeterDiagram
    stage: int = 0
    task_log: List[TaskRecord] = field(default_factory=list)
    rounds: List[RoundSummary] = field(default_factory=list)

    def copy(self) -> "ConstructionState":
        return ConstructionState(
            geometry=self.geometry.copy(),
            diagram=self.diagram,
            stage=self.stage,
            task_log=[r.model_copy(deep=True) for r in self.task_log],
            rounds=[r.model_copy(deep=True) for r in self.rounds],
        )


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _other(t: str, i: str, j: str) -> str:
    return j if t == i else i


def _residue_members(g: Geometry, flag: Iterable[int], wanted: Sequence[str]) -> List[int]:
    keep = set(wanted)
    return sorted(v for v in g.common_neighbours(flag) if g.type_of(v) in keep)


def _attach_new(s: ConstructionState, new: Sequence[int], flag: Iterable[int], path: Sequence[int] = ()) -> None:
    """Incidences of freshly added vertices: the flag, path neighbours, and Property (F)"""
    g, d = s.geometry, s.diagram
    members = list(flag)
    fresh = set(new)
    for v in new:
        tv = g.type_of(v)
        for x in members:
            g.add_incidence(v, x)
        for t in d.types:
            if not d.forces_incidence(tv, t):
                continue
            for u in g.vertices_of_type(t):
                if u not in fresh or u > v:
                    g.add_incidence(v, u)
    for a, b in zip(path, path[1:]):
        g.add_incidence(a, b)


def _log(s: ConstructionState, task: Task, created: List[int], post_distance: Optional[int] = None) -> None:
    s.task_log.append(TaskRecord(stage=s.stage, task=task, created=created, post_distance=post_distance))
    logger.debug(f"stage {s.stage}: applied {task.describe()} -> {created}")


# ---------------------------------------------------------------------------
# Procedures
# ---------------------------------------------------------------------------

def procedure_a(s: ConstructionState, X: Iterable[int], i: str) -> ConstructionState:
    """Add one vertex of type i completing the flag X"""
    g = s.geometry
    flag = g.require_flag(X)
    i = str(i)
    if i not in g.cotype(flag):
        raise PreconditionError(f"type {i!r} is not missing from flag {sorted(flag)}")
    x = g.add_vertex(i)
    _attach_new(s, [x], flag)
    _log(s, Task(kind='A', flag=tuple(sorted(flag)), i=i), [x])
    return s


def _check_b(s: ConstructionState, flag: Flag, i: str, j: str, x: int, y: int) -> int:
    g, d = s.geometry, s.diagram
    if i == j:
        raise PreconditionError("procedure B needs two distinct types")
    m = d.m(i, j)
    if m < 3:
        raise PreconditionError(f"types {i}, {j} are not adjacent")
    if m == INFINITY:
        raise PreconditionError(f"procedure B needs a finite bond, m_{{{i},{j}}} is infinite")
    if g.flag_type(flag) != d.neighbourhood(i, j):
        raise PreconditionError(
            f"flag type {list(g.flag_type(flag))} differs from N({i},{j}) = {list(d.neighbourhood(i, j))}"
        )
    ends = {g.type_of(x), g.type_of(y)}
    if not ends <= {i, j}:
        raise PreconditionError(f"endpoints {x}, {y} are not of types {i}, {j}")
    if (len(ends) == 1) != (m % 2 == 1):
        raise PreconditionError(f"endpoint types {sorted(ends)} do not match the parity of m = {m}")
    members = _residue_members(g, flag, (i, j))
    if x not in members or y not in members:
        raise TaskNotViable(f"endpoints {x}, {y} are not in the residue of {sorted(flag)}")
    near = nx.single_source_shortest_path_length(g.graph.subgraph(members), x, cutoff=m)
    if y in near:
        raise TaskNotViable(f"distance({x}, {y}) = {near[y]} < {m + 1}")
    return int(m)


def procedure_b(s: ConstructionState, X: Iterable[int], i: str, j: str, x: int, y: int) -> ConstructionState:
    """Join x and y by a path of m-1 edges alternating types i and j"""
    g = s.geometry
    flag = g.require_flag(X)
    i, j = str(i), str(j)
    m = _check_b(s, flag, i, j, x, y)

    start = g.type_of(x)
    interior = []
    for k in range(1, m - 1):
        interior.append(g.add_vertex(start if k % 2 == 0 else _other(start, i, j)))
    path = [x, *interior, y]
    _attach_new(s, interior, flag, path)

    members = _residue_members(g, flag, (i, j))
    post = nx.shortest_path_length(g.graph.subgraph(members), x, y)
    _log(s, Task(kind='B', flag=tuple(sorted(flag)), i=i, j=j, x=x, y=y), interior, post_distance=post)
    return s


def _check_c(s: ConstructionState, flag: Flag, i: str, j: str, x: int, y: int) -> None:
    g = s.geometry
    cotype = g.cotype(flag)
    if len(cotype) < 2:
        raise PreconditionError(f"flag {sorted(flag)} has corank {len(cotype)} < 2")
    if i == j or i not in cotype or j not in cotype:
        raise PreconditionError(f"types {i}, {j} must be distinct and missing from the flag")
    if not {g.type_of(x), g.type_of(y)} <= {i, j}:
        raise PreconditionError(f"endpoints {x}, {y} are not of types {i}, {j}")
    members = g.common_neighbours(flag)
    if x not in members or y not in members:
        raise TaskNotViable(f"endpoints {x}, {y} are not in the residue of {sorted(flag)}")
    if nx.has_path(g.graph.subgraph(members), x, y):
        raise TaskNotViable(f"{x} and {y} are already connected in the residue of {sorted(flag)}")


def procedure_c(s: ConstructionState, X: Iterable[int], i: str, j: str, x: int, y: int) -> ConstructionState:
    """Connect two components of a residue by a path of length 4 (same types) or 5"""
    g = s.geometry
    flag = g.require_flag(X)
    i, j = str(i), str(j)
    _check_c(s, flag, i, j, x, y)

    start = g.type_of(x)
    length = 4 if start == g.type_of(y) else 5
    interior = []
    for k in range(1, length):
        interior.append(g.add_vertex(start if k % 2 == 0 else _other(start, i, j)))
    path = [x, *interior, y]
    _attach_new(s, interior, flag, path)
    _log(s, Task(kind='C', flag=tuple(sorted(flag)), i=i, j=j, x=x, y=y), interior)
    return s


def apply_task(s: ConstructionState, task: Task) -> ConstructionState:
    if task.kind == 'A':
        return procedure_a(s, task.flag, task.i)
    if task.kind == 'B':
        return procedure_b(s, task.flag, task.i, task.j, task.x, task.y)
    return procedure_c(s, task.flag, task.i, task.j, task.x, task.y)


# ---------------------------------------------------------------------------
# Task enumeration
# ---------------------------------------------------------------------------

def _flag_key(flag: Iterable[int]) -> Tuple[int, ...]:
    return tuple(sorted(flag))


def _flags_of_rank(g: Geometry, r: int) -> List[Flag]:
    found = [f for combo in combinations(g.types, r) for f in g.flags_of_type(combo)]
    return sorted(found, key=_flag_key)


def _a_tasks(s: ConstructionState, cap: int) -> List[Task]:
    g = s.geometry
    ranks = len(g.types)
    if cap <= 0 or ranks == 0:
        return []
    share, extra = divmod(cap, ranks)
    tasks: List[Task] = []
    carry = 0
    for r in range(ranks):
        budget = share + (1 if r < extra else 0) + carry
        taken = 0
        if budget:
            for flag in _flags_of_rank(g, r):
                for t in g.cotype(flag):
                    if taken == budget:
                        break
                    tasks.append(Task(kind='A', flag=_flag_key(flag), i=t))
                    taken += 1
                if taken == budget:
                    break
        carry = budget - taken
    return tasks


def _b_tasks(s: ConstructionState, cap: int) -> List[Task]:
    g, d = s.geometry, s.diagram
    if cap <= 0:
        return []
    contexts = []
    for i, j in d.pairs():
        m = d.m(i, j)
        if m < 3 or m == INFINITY:
            continue
        for flag in g.flags_of_type(d.neighbourhood(i, j)):
            contexts.append((_flag_key(flag), d.index(i), d.index(j), i, j, int(m)))
    contexts.sort()

    tasks: List[Task] = []
    for key, _, _, i, j, m in contexts:
        members = _residue_members(g, key, (i, j))
        view = g.graph.subgraph(members)
        for a, x in enumerate(members):
            near = nx.single_source_shortest_path_length(view, x, cutoff=m)
            tx = g.type_of(x)
            for y in members[a + 1:]:
                if y in near or (g.type_of(y) == tx) != (m % 2 == 1):
                    continue
                tasks.append(Task(kind='B', flag=key, i=i, j=j, x=x, y=y))
                if len(tasks) == cap:
                    return tasks
    return tasks


def _c_tasks(s: ConstructionState, cap: int) -> List[Task]:
    g, d = s.geometry, s.diagram
    if cap <= 0 or len(g.types) < 2:
        return []
    flags = [f for r in range(len(g.types) - 1) for f in _flags_of_rank(g, r)]
    flags.sort(key=_flag_key)

    tasks: List[Task] = []
    for flag in flags:
        members = g.common_neighbours(flag)
        components = sorted(min(c) for c in nx.connected_components(g.graph.subgraph(members)))
        if len(components) < 2:
            continue
        cotype = g.cotype(flag)
        for x, y in combinations(components, 2):
            tx, ty = g.type_of(x), g.type_of(y)
            if tx != ty:
                i, j = tx, ty
            else:
                others = [t for t in cotype if t != tx]
                preferred = [t for t in others if d.adjacent(tx, t)]
                i, j = tx, (preferred or others)[0]
            tasks.append(Task(kind='C', flag=_flag_key(flag), i=i, j=j, x=x, y=y))
            if len(tasks) == cap:
                return tasks
    return tasks


def enumerate_tasks(s: ConstructionState, caps: Caps) -> List[Task]:
    """Deterministic task list for one round: A-tasks, then B, then C, each capped"""
    return _a_tasks(s, caps.a) + _b_tasks(s, caps.b) + _c_tasks(s, caps.c)


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

def _assert_invariants(s: ConstructionState, task: Optional[Task] = None) -> None:
    failure = first_failure(s.geometry, s.diagram)
    if failure is not None:
        where = f" after {task.describe()}" if task is not None else f" at stage {s.stage}"
        raise InvariantViolation(
            f"property {failure.property_name} failed{where}",
            verdict=failure,
            task=None if task is None else task.model_dump(),
        )


Cohort = List[Tuple[Flag, Tuple[str, ...], List[int]]]


def _cohort(g: Geometry) -> Cohort:
    """Every non-maximal flag of g with its cotype and current residue members"""
    return [(flag, g.cotype(flag), sorted(g.common_neighbours(flag))) for flag in _all_flags(g, len(g.types) - 1)]


def _cohort_defects(g: Geometry, cohort: Cohort) -> Tuple[int, int]:
    """Non-thick and disconnected counts over a fixed flag population.

    A flag counts as disconnected while its recorded residue members lie in
    more than one component of its current residue. Incidences are never
    removed, so neither count can grow as the geometry does.
    """
    non_thick = disconnected = 0
    for flag, cotype, members in cohort:
        common = g.common_neighbours(flag)
        if len(cotype) == 1:
            if sum(1 for v in common if g.type_of(v) == cotype[0]) < 3:
                non_thick += 1
        elif len(members) > 1:
            reach = nx.node_connected_component(g.graph.subgraph(common), members[0])
            if any(v not in reach for v in members[1:]):
                disconnected += 1
    return non_thick, disconnected


def run_round(s: ConstructionState, caps: Caps, check_every_task: bool = False) -> ConstructionState:
    """Snapshot the task list of the current stage, then apply it with re-validation"""
    cohort = _cohort(s.geometry)
    non_thick_before, disconnected_before = _cohort_defects(s.geometry, cohort)
    tasks = enumerate_tasks(s, caps)
    counts = {kind: {'A': 0, 'B': 0, 'C': 0} for kind in ('enumerated', 'applied', 'skipped')}
    for task in tasks:
        counts['enumerated'][task.kind] += 1
        try:
            apply_task(s, task)
        except TaskNotViable as e:
            counts['skipped'][task.kind] += 1
            logger.debug(f"stage {s.stage}: skipped {task.describe()}: {e}")
            continue
        counts['applied'][task.kind] += 1
        if check_every_task:
            _assert_invariants(s, task)

    _assert_invariants(s)
    s.stage += 1
    non_thick_after, disconnected_after = _cohort_defects(s.geometry, cohort)
    carried = CarriedDefects(
        flags=len(cohort),
        non_thick_before=non_thick_before,
        non_thick_after=non_thick_after,
        disconnected_before=disconnected_before,
        disconnected_after=disconnected_after,
    )
    summary = RoundSummary(
        stage=s.stage,
        enumerated=counts['enumerated'],
        applied=counts['applied'],
        skipped=counts['skipped'],
        vertices=len(s.geometry),
        incidences=s.geometry.number_of_incidences(),
        carried=carried,
    )
    s.rounds.append(summary)
    logger.info(
        f"stage {s.stage}: {summary.vertices} vertices, {summary.incidences} incidences, "
        f"applied {summary.applied}, skipped {summary.skipped}"
    )
    logger.info(
        f"stage {s.stage}: over {carried.flags} carried flags, non-thick "
        f"{non_thick_before} -> {non_thick_after}, disconnected {disconnected_before} -> {disconnected_after}"
    )
    return s


def start_state(d: CoxeterDiagram, seed: Optional[Geometry] = None) -> ConstructionState:
    if d.has_subdiagram_A3():
        raise PreconditionError(f"{d!r} contains a subdiagram of type A3")
    g = Geometry(d.types) if seed is None else seed.copy()
    if tuple(g.types) != tuple(d.types):
        raise PreconditionError(f"seed types {list(g.types)} do not match diagram types {list(d.types)}")
    state = ConstructionState(geometry=g, diagram=d)
    failure = first_failure(g, d)
    if failure is not None:
        raise InvariantViolation(f"seed fails property {failure.property_name}", verdict=failure)
    return state


def build_free(
    d: CoxeterDiagram,
    seed: Optional[Geometry],
    rounds: int,
    caps: Optional[Caps] = None,
    check_every_task: bool = False,
) -> ConstructionState:
    """Stage `rounds` of the free construction over an A3-free diagram"""
    caps = caps or Caps()
    state = start_state(d, seed)
    for _ in range(rounds):
        run_round(state, caps, check_every_task=check_every_task)
    return state


def is_stage_embedding(prev: Geometry, nxt: Geometry) -> bool:
    """Vertices of prev sit in nxt with the same types, incidences and non-incidences"""
    old = set(prev.vertices())
    for v in old:
        if v not in nxt or nxt.type_of(v) != prev.type_of(v):
            return False
        if nxt.neighbours(v) & old != prev.neighbours(v):
            return False
    return True


# ---------------------------------------------------------------------------
# Progress metrics
# ---------------------------------------------------------------------------

def _all_flags(g: Geometry, max_rank: int) -> Iterator[Flag]:
    for r in range(max_rank + 1):
        for combo in combinations(g.types, r):
            yield from g.flags_of_type(combo)


def progress_metrics(s: ConstructionState, sample: int = 32) -> ProgressMetrics:
    g, d = s.geometry, s.diagram
    rank = len(g.types)
    flags = corank1 = corank2 = 0
    non_completable = non_thick = disconnected = 0
    for flag in _all_flags(g, rank - 1):
        flags += 1
        common = g.common_neighbours(flag)
        cotype = g.cotype(flag)
        found = {t: 0 for t in cotype}
        for v in common:
            found[g.type_of(v)] += 1
        if any(n == 0 for n in found.values()):
            non_completable += 1
        if len(cotype) == 1:
            corank1 += 1
            if found[cotype[0]] < 3:
                non_thick += 1
        else:
            corank2 += 1
            sub = g.graph.subgraph(common)
            if sub.number_of_nodes() and nx.number_connected_components(sub) > 1:
                disconnected += 1

    diameters: Dict[str, Optional[int]] = {}
    for i, j in d.pairs():
        best: Optional[int] = None
        cotype = [t for t in d.types if t not in (i, j)]
        for k, flag in enumerate(g.flags_of_type(cotype)):
            if k == sample:
                break
            found = diameter(g.graph.subgraph(g.common_neighbours(flag)))
            if found != INFINITY:
                best = int(found) if best is None else max(best, int(found))
        diameters[f"{i},{j}"] = best

    return ProgressMetrics(
        stage=s.stage,
        vertices=len(g),
        incidences=g.number_of_incidences(),
        flags=flags,
        corank1_flags=corank1,
        corank2plus_flags=corank2,
        non_completable=non_completable,
        non_thick_corank1=non_thick,
        disconnected_residues=disconnected,
        max_residue_diameter=diameters,
        carried=s.rounds[-1].carried if s.rounds else None,
    )
