"""
Construction for Linear Diagrams with a Terminal m-Bond (C_n, H_3, H_4)

Starts from the flag geometry of Q^n (types 1..n-1 are subspace dimensions)
and grows new vertices of types n-1 and n by adding paths inside the
{n-1, n} residues of (n-2)-dimensional subspaces.

The substrate is never materialized. A subspace becomes a vertex of the
materialized geometry only when something references it ("interning").
Each type-n vertex carries a panel map precursor -> type-(n-1) vertex; only
the materialized entries are stored. Every hyperplane without an entry
stands for an implicit vertex that is incident with that type-n vertex and
the subspaces inside the hyperplane, and with nothing else. Implicit panel
vertices are leaves in every rank-2 residue, so they never change a girth
or a distance between materialized vertices.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

import networkx as nx
from pydantic import BaseModel

from .diagram import INFINITY
from .errors import FormatError, InvariantViolation, PreconditionError, TaskNotViable
from .geometry import Geometry, Verdict, shortest_cycle
from .projective import (
    Subspace,
    SubstrateHandle,
    canonicalize,
    hyperplane_key,
    hyperplanes_up_to,
    intersection,
    iter_hyperplanes_through,
    nested,
    subspaces_of_dim,
    subspaces_within,
)

logger = logging.getLogger(__name__)

Endpoint = Union[int, Subspace]

# Extra heights tried when a scheduler list runs dry
MAX_HEIGHT_RAISES = 2


def nu2(j: int) -> int:
    """2-adic valuation of a positive integer"""
    if j <= 0:
        raise PreconditionError(f"2-adic valuation needs j >= 1, got {j}")
    return (j & -j).bit_length() - 1


def _endpoint_json(e: Endpoint) -> object:
    return {'subspace': e.to_dict()} if isinstance(e, Subspace) else e


def _endpoint_from_json(raw: object) -> Endpoint:
    if isinstance(raw, dict):
        return Subspace.from_dict(raw['subspace'])
    return int(raw)


@dataclass(frozen=True)
class Triple:
    z: Subspace
    x: Endpoint
    y: Endpoint

    def to_dict(self) -> dict:
        return {'z': self.z.to_dict(), 'x': _endpoint_json(self.x), 'y': _endpoint_json(self.y)}

    @classmethod
    def from_dict(cls, data: dict) -> "Triple":
        return cls(
            z=Subspace.from_dict(data['z']),
            x=_endpoint_from_json(data['x']),
            y=_endpoint_from_json(data['y']),
        )


class PathRecord(BaseModel):
    step: int
    z: List[List[int]]
    path: List[int]
    created: List[int]


@dataclass
class Schedule:
    lists: List[List[Triple]] = field(default_factory=list)
    cursors: List[int] = field(default_factory=list)
    # created vertex ids that seeded each list; None means every triple
    sources: List[Optional[List[int]]] = field(default_factory=list)
    history: List[int] = field(default_factory=list)
    step: int = 0


@dataclass
class CnState:
    n: int
    m: int
    substrate: SubstrateHandle
    geometry: Geometry
    subspace_of: Dict[int, Subspace] = field(default_factory=dict)
    subspace_ids: Dict[Subspace, int] = field(default_factory=dict)
    precursor: Dict[int, Subspace] = field(default_factory=dict)
    new_hyperplanes: List[int] = field(default_factory=list)
    panels: Dict[int, Dict[Subspace, int]] = field(default_factory=dict)
    paths: List[PathRecord] = field(default_factory=list)
    schedule: Schedule = field(default_factory=Schedule)
    lambda0: Optional[int] = None
    bootstrap: Optional[int] = None

    @property
    def top(self) -> str:
        return str(self.n)

    @property
    def hyper(self) -> str:
        return str(self.n - 1)

    def type_n_vertices(self) -> List[int]:
        return self.geometry.vertices_of_type(self.top)

    def is_substrate_vertex(self, v: int) -> bool:
        return v in self.subspace_of

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        sched = self.schedule
        return {
            'n': self.n,
            'm': self.m,
            'height_bound': self.substrate.height_bound,
            'geometry': self.geometry.to_dict(),
            'subspaces': [{'id': v, **self.subspace_of[v].to_dict()} for v in sorted(self.subspace_of)],
            'precursors': [{'id': v, **self.precursor[v].to_dict()} for v in self.new_hyperplanes],
            'panels': [
                {
                    'id': w,
                    'lazy': True,
                    'entries': [
                        {'precursor': a.to_dict(), 'vertex': self.panels[w][a]}
                        for a in sorted(self.panels[w], key=hyperplane_key)
                    ],
                }
                for w in sorted(self.panels)
            ],
            'lambda0': self.lambda0,
            'bootstrap': self.bootstrap,
            'paths': [p.model_dump() for p in self.paths],
            'schedule': {
                'step': sched.step,
                'history': list(sched.history),
                'cursors': list(sched.cursors),
                'sources': [None if s is None else list(s) for s in sched.sources],
                'lists': [[t.to_dict() for t in lst] for lst in sched.lists],
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CnState":
        try:
            state = cls(
                n=int(data['n']),
                m=int(data['m']),
                substrate=SubstrateHandle(n=int(data['n']), height_bound=int(data['height_bound'])),
                geometry=Geometry.from_dict(data['geometry']),
                lambda0=data.get('lambda0'),
                bootstrap=data.get('bootstrap'),
            )
            for record in data['subspaces']:
                s = Subspace.from_dict(record)
                state.subspace_of[int(record['id'])] = s
                state.subspace_ids[s] = int(record['id'])
                if s.dim == state.n - 1:
                    state.precursor[int(record['id'])] = s
            for record in data['precursors']:
                state.precursor[int(record['id'])] = Subspace.from_dict(record)
                state.new_hyperplanes.append(int(record['id']))
            for panel in data['panels']:
                state.panels[int(panel['id'])] = {
                    Subspace.from_dict(e['precursor']): int(e['vertex']) for e in panel['entries']
                }
            state.paths = [PathRecord(**p) for p in data['paths']]
            sched = data['schedule']
            state.schedule = Schedule(
                lists=[[Triple.from_dict(t) for t in lst] for lst in sched['lists']],
                cursors=[int(c) for c in sched['cursors']],
                sources=[None if s is None else [int(v) for v in s] for s in sched['sources']],
                history=[int(k) for k in sched['history']],
                step=int(sched['step']),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"malformed C_n state: {e}") from e
        return state


# ---------------------------------------------------------------------------
# Materialization
# ---------------------------------------------------------------------------

def intern(s: CnState, S: Subspace) -> int:
    """Vertex id of a substrate subspace, materializing it with all rule-given incidences"""
    vid = s.subspace_ids.get(S)
    if vid is not None:
        return vid
    if S.n != s.n:
        raise PreconditionError(f"subspace lives in Q^{S.n}, state is over Q^{s.n}")
    g = s.geometry
    vid = g.add_vertex(str(S.dim))
    for other_id, T in s.subspace_of.items():
        if T.dim != S.dim and nested(S, T):
            g.add_incidence(vid, other_id)
    if S.dim <= s.n - 2:
        for w in s.type_n_vertices():
            g.add_incidence(vid, w)
        for v in s.new_hyperplanes:
            if s.precursor[v].contains(S):
                g.add_incidence(vid, v)
    else:
        s.precursor[vid] = S
    s.subspace_of[vid] = S
    s.subspace_ids[S] = vid
    return vid


def _new_hyperplane_vertex(s: CnState, precursor: Subspace) -> int:
    if precursor.dim != s.n - 1:
        raise PreconditionError(f"a precursor must be a hyperplane, got dim {precursor.dim}")
    g = s.geometry
    v = g.add_vertex(s.hyper)
    s.precursor[v] = precursor
    s.new_hyperplanes.append(v)
    for sid, S in s.subspace_of.items():
        if S.dim <= s.n - 2 and precursor.contains(S):
            g.add_incidence(v, sid)
    return v


def _new_type_n_vertex(s: CnState) -> int:
    g = s.geometry
    w = g.add_vertex(s.top)
    for sid, S in s.subspace_of.items():
        if S.dim <= s.n - 2:
            g.add_incidence(w, sid)
    s.panels[w] = {}
    return w


def _attach(s: CnState, w: int, v: int) -> None:
    """Incidence of a type-n vertex with a type-(n-1) vertex, recorded in w's panel"""
    a = s.precursor[v]
    current = s.panels[w].get(a)
    if current is not None and current != v:
        raise PreconditionError(f"vertex {w} already has panel vertex {current} with precursor {a!r}")
    s.geometry.add_incidence(w, v)
    s.panels[w][a] = v


def materialize_panel_vertex(s: CnState, w: int, a: Subspace) -> int:
    """The panel vertex of w with precursor a, materialized if it was implicit"""
    if s.geometry.type_of(w) != s.top:
        raise PreconditionError(f"vertex {w} is not of type {s.top}")
    current = s.panels[w].get(a)
    if current is not None:
        return current
    v = _new_hyperplane_vertex(s, a)
    _attach(s, w, v)
    return v


def incident_with_subspace(s: CnState, v: int, S: Subspace) -> bool:
    """Incidence of a materialized vertex with any substrate subspace, interned or not"""
    sid = s.subspace_ids.get(S)
    if sid is not None:
        return s.geometry.incident(v, sid)
    t = s.geometry.type_of(v)
    if t == s.top:
        return S.dim <= s.n - 2
    if v in s.subspace_of:
        return nested(s.subspace_of[v], S) and s.subspace_of[v] != S
    return S.dim <= s.n - 2 and s.precursor[v].contains(S)


def _type_n_degree(s: CnState, v: int) -> int:
    return sum(1 for u in s.geometry.graph.adj[v] if s.geometry.type_of(u) == s.top)


def materialized_geometry(s: CnState) -> Geometry:
    return s.geometry.copy()


# ---------------------------------------------------------------------------
# Initial state
# ---------------------------------------------------------------------------

def init_lambda0(n: int, m: int) -> CnState:
    """One new hyperplane vertex over span(e_1..e_{n-1}) plus a bootstrap type-n vertex"""
    if n < 3:
        raise PreconditionError(f"the construction needs n >= 3, got {n}")
    if m == INFINITY or m < 4:
        raise PreconditionError(f"the terminal bond must satisfy 4 <= m < inf, got {m}")
    state = CnState(
        n=n,
        m=int(m),
        substrate=SubstrateHandle(n=n),
        geometry=Geometry([str(k) for k in range(1, n + 1)]),
    )
    a = canonicalize([[1 if c == r else 0 for c in range(n)] for r in range(n - 1)], n)
    state.lambda0 = _new_hyperplane_vertex(state, a)
    state.bootstrap = _new_type_n_vertex(state)
    logger.info(f"initialized C_n state n={n}, m={m}: precursor {a!r}, bootstrap vertex {state.bootstrap}")
    return state


# ---------------------------------------------------------------------------
# Residues at (n-2)-dimensional subspaces
# ---------------------------------------------------------------------------

def residue_graph(s: CnState, z: Subspace) -> nx.Graph:
    """Materialized {n-1, n} residue of z"""
    members = list(s.type_n_vertices())
    for v in s.geometry.vertices_of_type(s.hyper):
        if s.precursor[v].contains(z):
            members.append(v)
    return s.geometry.graph.subgraph(members)


def _endpoint_type(s: CnState, e: Endpoint) -> str:
    if isinstance(e, Subspace):
        if e.dim != s.n - 1:
            raise PreconditionError(f"substrate endpoint {e!r} is not a hyperplane")
        return s.hyper
    t = s.geometry.type_of(e)
    if t not in (s.hyper, s.top):
        raise PreconditionError(f"endpoint {e} has type {t}, expected {s.hyper} or {s.top}")
    return t


def _resolve(s: CnState, e: Endpoint) -> Endpoint:
    if isinstance(e, Subspace):
        return s.subspace_ids.get(e, e)
    return e


def _in_residue(s: CnState, e: Endpoint, z: Subspace) -> bool:
    if isinstance(e, Subspace):
        return e.contains(z)
    if s.geometry.type_of(e) == s.top:
        return True
    return s.precursor[e].contains(z)


def _check_triple(s: CnState, t: Triple) -> Tuple[Endpoint, Endpoint, str, str]:
    if t.z.dim != s.n - 2:
        raise PreconditionError(f"z must have dimension {s.n - 2}, got {t.z.dim}")
    x, y = _resolve(s, t.x), _resolve(s, t.y)
    if x == y:
        raise PreconditionError("triple endpoints coincide")
    tx, ty = _endpoint_type(s, x), _endpoint_type(s, y)
    if (tx == ty) != (s.m % 2 == 1):
        raise PreconditionError(f"endpoint types {tx}, {ty} do not match the parity of m = {s.m}")
    for e in (x, y):
        if not _in_residue(s, e, t.z):
            raise PreconditionError(f"endpoint {e!r} is not incident with z = {t.z!r}")
    if isinstance(x, int) and isinstance(y, int):
        near = nx.single_source_shortest_path_length(residue_graph(s, t.z), x, cutoff=s.m)
        if y in near:
            raise TaskNotViable(f"distance({x}, {y}) = {near[y]} < {s.m + 1} at z = {t.z!r}")
    return x, y, tx, ty


def viable_triples(
    s: CnState,
    height: int,
    limit: int,
    involving: Optional[Iterable[int]] = None,
    exclude: Optional[Set[Triple]] = None,
) -> List[Triple]:
    """Triples (z, x, y) the extension procedure accepts, in (z, x, y) canonical order"""
    found: List[Triple] = []
    if limit <= 0:
        return found
    involved = None if involving is None else set(involving)
    odd = s.m % 2 == 1
    for z in subspaces_of_dim(s.n, s.n - 2, height):
        graph = residue_graph(s, z)
        ids = sorted(graph.nodes)
        fresh = [a for a in hyperplanes_up_to(s.substrate, z, height) if a not in s.subspace_ids]
        endpoints: List[Endpoint] = [*ids, *fresh]
        kinds = [s.geometry.type_of(v) for v in ids] + [s.hyper] * len(fresh)
        near: Dict[int, Dict[int, int]] = {}

        def close(a: int, b: int) -> bool:
            root = a if involved is None or a in involved else b
            other = b if root == a else a
            if root not in near:
                near[root] = nx.single_source_shortest_path_length(graph, root, cutoff=s.m)
            return other in near[root]

        for k, x in enumerate(endpoints):
            for q in range(k + 1, len(endpoints)):
                y = endpoints[q]
                if involved is not None and x not in involved and y not in involved:
                    continue
                if (kinds[k] == kinds[q]) != odd:
                    continue
                if isinstance(x, int) and isinstance(y, int) and close(x, y):
                    continue
                t = Triple(z, x, y)
                if exclude is not None and t in exclude:
                    continue
                found.append(t)
                if len(found) == limit:
                    return found
    return found


# ---------------------------------------------------------------------------
# Extension procedure
# ---------------------------------------------------------------------------

def select_fresh_panel_vertex(s: CnState, x: int, z: Subspace, avoid: Iterable[Subspace] = ()) -> int:
    """A panel vertex of x through z whose only type-n neighbour is x"""
    if s.geometry.type_of(x) != s.top:
        raise PreconditionError(f"vertex {x} is not of type {s.top}")
    if z.dim != s.n - 2:
        raise PreconditionError(f"z must have dimension {s.n - 2}, got {z.dim}")
    skip = set(avoid)
    panel = s.panels[x]
    for a in iter_hyperplanes_through(s.substrate, z):
        if a in skip:
            continue
        v = panel.get(a)
        if v is None:
            return materialize_panel_vertex(s, x, a)
        if _type_n_degree(s, v) == 1:
            return v
    raise AssertionError("unreachable: hyperplane enumeration is infinite")


def _next_precursor(s: CnState, z: Subspace, avoid: Set[Subspace]) -> Subspace:
    for a in iter_hyperplanes_through(s.substrate, z):
        if a not in avoid:
            return a
    raise AssertionError("unreachable: hyperplane enumeration is infinite")


def extend(s: CnState, t: Triple) -> CnState:
    """Join x and y by a path of m-1 edges alternating types n-1 and n inside the residue of z"""
    x, y, tx, ty = _check_triple(s, t)
    g = s.geometry
    before = len(g)
    intern(s, t.z)
    x = intern(s, x) if isinstance(x, Subspace) else x
    y = intern(s, y) if isinstance(y, Subspace) else y

    def type_at(k: int) -> str:
        return tx if k % 2 == 0 else (s.hyper if tx == s.top else s.top)

    path: List[Optional[int]] = [None] * s.m
    path[0], path[-1] = x, y
    avoid = {s.precursor[e] for e, te in ((x, tx), (y, ty)) if te == s.hyper}
    if tx == s.top:
        path[1] = select_fresh_panel_vertex(s, x, t.z, avoid)
        avoid.add(s.precursor[path[1]])
    if ty == s.top:
        path[-2] = select_fresh_panel_vertex(s, y, t.z, avoid)
        avoid.add(s.precursor[path[-2]])

    for k in range(1, s.m - 1):
        if path[k] is not None:
            continue
        if type_at(k) == s.hyper:
            p = _next_precursor(s, t.z, avoid)
            avoid.add(p)
            path[k] = _new_hyperplane_vertex(s, p)
        else:
            path[k] = _new_type_n_vertex(s)

    for a, b in zip(path, path[1:]):
        w, v = (a, b) if g.type_of(a) == s.top else (b, a)
        if s.panels[w].get(s.precursor[v]) != v:
            _attach(s, w, v)

    created = list(range(before, len(g)))
    record = PathRecord(
        step=s.schedule.step,
        z=[list(r) for r in t.z.rows],
        path=[int(v) for v in path],
        created=created,
    )
    s.paths.append(record)
    logger.debug(f"extended at z = {t.z!r}: path {record.path}, {len(created)} new vertices")
    return s


# ---------------------------------------------------------------------------
# Property suite
# ---------------------------------------------------------------------------

def _lower(s: CnState) -> List[Tuple[int, Subspace]]:
    return [(sid, S) for sid, S in sorted(s.subspace_of.items()) if S.dim <= s.n - 2]


def p_candidates(s: CnState) -> List[Subspace]:
    """Every (n-2)-subspace whose residue could hold a materialized cycle"""
    found: Dict[Subspace, None] = {}
    for _, S in _lower(s):
        if S.dim == s.n - 2:
            found[S] = None
    for w in s.type_n_vertices():
        flats = sorted(
            {s.precursor[u] for u in s.geometry.graph.adj[w] if s.geometry.type_of(u) == s.hyper},
            key=hyperplane_key,
        )
        for a, b in combinations(flats, 2):
            meet = intersection(a, b)
            if meet is not None and meet.dim == s.n - 2:
                found[meet] = None
    return list(found)


def check_cn_properties(s: CnState, sample: int = 3) -> List[Verdict]:
    g = s.geometry
    verdicts = []
    lower = _lower(s)
    tops = s.type_n_vertices()

    verdict = Verdict.ok('F')
    for w in tops:
        missing = next((sid for sid, _ in lower if not g.incident(w, sid)), None)
        if missing is not None:
            verdict = Verdict.fail('F', pair=[missing, w])
            break
    verdicts.append(verdict)

    verdicts.append(Verdict.ok('I'))

    verdict = Verdict.ok('V')
    for v in g.vertices():
        t = g.type_of(v)
        if v in s.subspace_of:
            if t != str(s.subspace_of[v].dim):
                verdict = Verdict.fail('V', vertex=v, type=t, dim=s.subspace_of[v].dim)
                break
        elif t not in (s.hyper, s.top):
            verdict = Verdict.fail('V', vertex=v, type=t)
            break
    verdicts.append(verdict)

    verdict = Verdict.ok('P')
    for z in p_candidates(s):
        cycle = shortest_cycle(residue_graph(s, z))
        if cycle is not None and len(cycle) < 2 * s.m:
            verdict = Verdict.fail('P', z=z.to_dict(), m=s.m, cycle=cycle)
            break
    verdicts.append(verdict)

    verdicts.append(_check_h(s, lower, sample))
    verdicts.append(_check_c(s, tops))
    return verdicts


def _check_h(s: CnState, lower: List[Tuple[int, Subspace]], sample: int) -> Verdict:
    g = s.geometry
    for v in g.vertices_of_type(s.hyper):
        p = s.precursor.get(v)
        if p is None or p.dim != s.n - 1:
            return Verdict.fail('H', vertex=v, clause='precursor')
        if v in s.subspace_of and s.subspace_of[v] != p:
            return Verdict.fail('H', vertex=v, clause='self-precursor')
        if v in s.subspace_of:
            continue
        for sid, S in lower:
            if g.incident(v, sid) != p.contains(S):
                return Verdict.fail('H', vertex=v, subspace=sid, clause='incidence')
        if sample > 0:
            for S in subspaces_within(s.substrate, p, s.n - 2, sample):
                if not incident_with_subspace(s, v, S):
                    return Verdict.fail('H', vertex=v, subspace=S.to_dict(), clause='sampled')
    return Verdict.ok('H')


def _check_c(s: CnState, tops: List[int]) -> Verdict:
    g = s.geometry
    for w in tops:
        panel = s.panels.get(w, {})
        if len(set(panel.values())) != len(panel):
            return Verdict.fail('C', vertex=w, clause='injective')
        for a, v in panel.items():
            if s.precursor.get(v) != a or not g.incident(w, v):
                return Verdict.fail('C', vertex=w, panel_vertex=v, clause='entry')
        for u in sorted(g.graph.adj[w]):
            if g.type_of(u) == s.hyper and panel.get(s.precursor[u]) != u:
                return Verdict.fail('C', vertex=w, panel_vertex=u, clause='unique')
    return Verdict.ok('C')


def first_cn_failure(s: CnState) -> Optional[Verdict]:
    return next((v for v in check_cn_properties(s) if not v.passed), None)


def verify_type_n_residue(s: CnState, x: int, sample: int) -> Verdict:
    """Panel map of x behaves as the flag geometry of the projective space on a sample of hyperplanes"""
    g = s.geometry
    if g.type_of(x) != s.top:
        raise PreconditionError(f"vertex {x} is not of type {s.top}")
    if sample <= 0:
        return Verdict.ok('typeNResidue')

    panel = s.panels[x]
    chosen = sorted(panel, key=hyperplane_key)[:sample]
    for a in iter_hyperplanes_through(s.substrate, None):
        if len(chosen) >= sample:
            break
        if a not in panel:
            chosen.append(a)

    lower = _lower(s)
    seen: Dict[int, Subspace] = {}
    for a in chosen:
        v = panel.get(a)
        if v is None:
            continue
        if v in seen:
            return Verdict.fail('typeNResidue', vertex=x, clause='bijection', panel_vertex=v)
        seen[v] = a
        if s.precursor.get(v) != a or not g.incident(x, v):
            return Verdict.fail('typeNResidue', vertex=x, clause='precursor', panel_vertex=v)
        for sid, S in lower:
            if g.incident(v, sid) != a.contains(S):
                return Verdict.fail('typeNResidue', vertex=x, clause='nesting', panel_vertex=v, subspace=sid)

    for sid, _ in lower:
        if not g.incident(x, sid):
            return Verdict.fail('typeNResidue', vertex=x, clause='flat', subspace=sid)
    for (i1, S1), (i2, S2) in combinations(lower, 2):
        if S1.dim != S2.dim and g.incident(i1, i2) != nested(S1, S2):
            return Verdict.fail('typeNResidue', vertex=x, clause='nesting', pair=[i1, i2])
    for u in sorted(g.graph.adj[x]):
        if g.type_of(u) == s.hyper and panel.get(s.precursor[u]) != u:
            return Verdict.fail('typeNResidue', vertex=x, clause='stray', panel_vertex=u)
    return Verdict.ok('typeNResidue')


# ---------------------------------------------------------------------------
# Scheduler
# ---------------------------------------------------------------------------

def _assert_properties(s: CnState, step: Optional[int] = None) -> None:
    failure = first_cn_failure(s)
    if failure is not None:
        where = f" after step {step}" if step is not None else ""
        raise InvariantViolation(f"property {failure.property_name} failed{where}", verdict=failure)


def _take(s: CnState, k: int, height: int, limit: int) -> bool:
    sched = s.schedule
    lst = sched.lists[k]
    h = height
    raises = 0
    while True:
        while sched.cursors[k] < len(lst):
            t = lst[sched.cursors[k]]
            sched.cursors[k] += 1
            try:
                extend(s, t)
                return True
            except TaskNotViable as e:
                logger.debug(f"step {sched.step}: skipped triple from S_{k}: {e}")
        if sched.sources[k] == []:
            break
        # refill at the current height first; lists are truncated at `limit`
        more = viable_triples(s, h, limit, involving=sched.sources[k], exclude=set(lst))
        if more:
            lst.extend(more)
            continue
        if raises == MAX_HEIGHT_RAISES:
            break
        raises += 1
        h += 1
        s.substrate.raise_to(h)
    logger.info(f"step {sched.step}: list S_{k} exhausted, idle step")
    return False


def run_cn(s: CnState, steps: int, height: int, limit: int, check_every_step: bool = False) -> CnState:
    """Run `steps` scheduler steps; step j serves the list S_{nu2(j)}"""
    if steps < 0:
        raise PreconditionError(f"steps must be >= 0, got {steps}")
    sched = s.schedule
    if not sched.lists:
        s.substrate.raise_to(height)
        sched.lists.append(viable_triples(s, height, limit))
        sched.cursors.append(0)
        sched.sources.append(None)

    for _ in range(steps):
        sched.step += 1
        k = nu2(sched.step)
        before = len(s.geometry)
        applied = _take(s, k, height, limit)
        sched.history.append(k)
        created = list(range(before, len(s.geometry))) if applied else []
        sched.lists.append(viable_triples(s, height, limit, involving=created) if created else [])
        sched.cursors.append(0)
        sched.sources.append(created)
        if check_every_step:
            _assert_properties(s, sched.step)
        logger.info(
            f"step {sched.step}: served S_{k}, {'applied' if applied else 'idle'}, "
            f"{len(s.geometry)} vertices, {len(s.type_n_vertices())} of type {s.top}"
        )
    if steps and not check_every_step:
        _assert_properties(s)
    return s
