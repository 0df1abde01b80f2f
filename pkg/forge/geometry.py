"""
Incidence Geometry Kernel for Coxeter Forge

This module provides finite incidence geometries over a type set together
with flags, residues, rank-2 restrictions, girth/diameter analysis and the
full "geometry of type M" verifier.
"""

import logging
from collections import deque
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Literal, Optional, Sequence, Set, Tuple

import networkx as nx
from pydantic import BaseModel, Field

from .diagram import INFINITY, Bond, CoxeterDiagram
from .errors import FlagError, GeometryError, PreconditionError

logger = logging.getLogger(__name__)

Flag = FrozenSet[int]


def bond_json(value: Bond) -> object:
    return "inf" if value == INFINITY else int(value)


class Verdict(BaseModel):
    """Outcome of a property check; failures carry a JSON-ready witness"""

    property_name: str = Field(serialization_alias='property')
    status: Literal['pass', 'fail']
    witness: Optional[dict] = None

    @classmethod
    def ok(cls, name: str) -> "Verdict":
        return cls(property_name=name, status='pass')

    @classmethod
    def fail(cls, name: str, **witness: object) -> "Verdict":
        return cls(property_name=name, status='fail', witness=dict(witness))

    @property
    def passed(self) -> bool:
        return self.status == 'pass'

    def to_dict(self) -> dict:
        return self.model_dump(by_alias=True, exclude_none=True)


class Geometry:
    """Finite typed vertex set with a symmetric, irreflexive incidence relation.

    Vertex ids are integers handed out in creation order. Induced geometries
    (residues, restrictions) keep the ids of the geometry they came from.
    """

    def __init__(self, types: Sequence[object]):
        self._types: Tuple[str, ...] = tuple(str(t) for t in types)
        if len(set(self._types)) != len(self._types):
            raise GeometryError(f"duplicate types in {list(self._types)}")
        self._graph = nx.Graph()
        self._by_type: Dict[str, List[int]] = {t: [] for t in self._types}
        self._next_id = 0

    # -- construction --------------------------------------------------------

    def add_vertex(self, vtype: object, vid: Optional[int] = None) -> int:
        vtype = str(vtype)
        if vtype not in self._by_type:
            raise GeometryError(f"type {vtype!r} is not in {list(self._types)}")
        if vid is None:
            vid = self._next_id
        elif vid in self._graph:
            raise GeometryError(f"vertex id {vid} already exists")
        self._graph.add_node(vid, type=vtype)
        bucket = self._by_type[vtype]
        bucket.append(vid)
        if len(bucket) > 1 and bucket[-2] > vid:
            bucket.sort()
        self._next_id = max(self._next_id, vid + 1)
        return vid

    def add_incidence(self, a: int, b: int) -> None:
        if a not in self._graph or b not in self._graph:
            raise GeometryError(f"incidence ({a}, {b}) references an unknown vertex")
        if a == b:
            raise GeometryError(f"incidence of vertex {a} with itself is implicit")
        if self.type_of(a) == self.type_of(b):
            raise GeometryError(f"vertices {a} and {b} share type {self.type_of(a)!r} and cannot be incident")
        self._graph.add_edge(a, b)

    def copy(self) -> "Geometry":
        other = Geometry(self._types)
        other._graph = self._graph.copy()
        other._by_type = {t: list(v) for t, v in self._by_type.items()}
        other._next_id = self._next_id
        return other

    def induced(self, ids: Iterable[int], types: Optional[Sequence[str]] = None) -> "Geometry":
        keep = set(ids)
        sub = Geometry(self._types if types is None else types)
        for v in sorted(keep):
            sub.add_vertex(self.type_of(v), vid=v)
        for a, b in self._graph.subgraph(keep).edges():
            sub._graph.add_edge(a, b)
        sub._next_id = max(sub._next_id, self._next_id)
        return sub

    # -- queries -------------------------------------------------------------

    @property
    def types(self) -> Tuple[str, ...]:
        return self._types

    @property
    def graph(self) -> nx.Graph:
        """Incidence graph; node attribute 'type'. Treat as read-only."""
        return self._graph

    def __len__(self) -> int:
        return self._graph.number_of_nodes()

    def __contains__(self, v: object) -> bool:
        return v in self._graph

    def vertices(self) -> List[int]:
        return sorted(self._graph.nodes)

    def vertices_of_type(self, t: str) -> List[int]:
        return list(self._by_type.get(str(t), []))

    def type_of(self, v: int) -> str:
        try:
            return self._graph.nodes[v]['type']
        except KeyError as e:
            raise GeometryError(f"unknown vertex {v}") from e

    def neighbours(self, v: int) -> Set[int]:
        return set(self._graph.adj[v])

    def incident(self, a: int, b: int) -> bool:
        return a == b or self._graph.has_edge(a, b)

    def incidences(self) -> List[Tuple[int, int]]:
        return sorted((min(a, b), max(a, b)) for a, b in self._graph.edges())

    def number_of_incidences(self) -> int:
        return self._graph.number_of_edges()

    # -- flags ---------------------------------------------------------------

    def is_flag(self, ids: Iterable[int]) -> bool:
        members = list(ids)
        if any(v not in self._graph for v in members):
            return False
        return all(self._graph.has_edge(a, b) for a, b in combinations(members, 2))

    def require_flag(self, ids: Iterable[int]) -> Flag:
        flag = frozenset(ids)
        if not self.is_flag(flag):
            raise FlagError(f"{sorted(flag)} is not a flag")
        return flag

    def flag_type(self, flag: Iterable[int]) -> Tuple[str, ...]:
        present = {self.type_of(v) for v in flag}
        return tuple(t for t in self._types if t in present)

    def cotype(self, flag: Iterable[int]) -> Tuple[str, ...]:
        present = {self.type_of(v) for v in flag}
        return tuple(t for t in self._types if t not in present)

    def corank(self, flag: Iterable[int]) -> int:
        return len(self.cotype(flag))

    def common_neighbours(self, flag: Iterable[int]) -> Set[int]:
        """Vertices outside the flag incident with every member of it"""
        members = list(flag)
        if not members:
            return set(self._graph.nodes)
        adj = self._graph.adj
        ordered = sorted(members, key=lambda v: len(adj[v]))
        result = set(adj[ordered[0]])
        for v in ordered[1:]:
            result.intersection_update(adj[v])
            if not result:
                break
        return result

    def flags_of_type(self, flag_types: Sequence[str]) -> Iterator[Flag]:
        """All flags whose type set is exactly flag_types (backtracking in the given order)"""
        wanted = [str(t) for t in flag_types]
        adj = self._graph.adj

        def extend(k: int, chosen: List[int], candidates: Optional[Set[int]]) -> Iterator[Flag]:
            if k == len(wanted):
                yield frozenset(chosen)
                return
            pool = self._by_type.get(wanted[k], [])
            for v in pool:
                if candidates is not None and v not in candidates:
                    continue
                nxt = set(adj[v]) if candidates is None else candidates.intersection(adj[v])
                chosen.append(v)
                yield from extend(k + 1, chosen, nxt)
                chosen.pop()

        yield from extend(0, [], None)

    def flags(self, max_rank: Optional[int] = None) -> Iterator[Flag]:
        """Every flag (including the empty one), rank by rank"""
        top = len(self._types) if max_rank is None else min(max_rank, len(self._types))
        for r in range(top + 1):
            for combo in combinations(self._types, r):
                yield from self.flags_of_type(combo)

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            'types': list(self._types),
            'vertices': [{'id': v, 'type': self.type_of(v)} for v in self.vertices()],
            'incidences': [list(p) for p in self.incidences()],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Geometry":
        try:
            g = cls(data['types'])
            for record in data['vertices']:
                g.add_vertex(record['type'], vid=int(record['id']))
            for a, b in data['incidences']:
                g.add_incidence(int(a), int(b))
        except (KeyError, TypeError, ValueError) as e:
            raise GeometryError(f"malformed geometry record: {e}") from e
        return g

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Geometry):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        counts = ", ".join(f"{t}:{len(self._by_type[t])}" for t in self._types)
        return f"Geometry({counts}; {self.number_of_incidences()} incidences)"


class Rank2View:
    """Bipartite restriction of a geometry to two types"""

    def __init__(self, left_type: str, right_type: str, left: Sequence[int], right: Sequence[int], graph: nx.Graph):
        self.left_type = left_type
        self.right_type = right_type
        self.left = list(left)
        self.right = list(right)
        self.graph = graph

    def swapped(self) -> "Rank2View":
        return Rank2View(self.right_type, self.left_type, self.right, self.left, self.graph)

    def __contains__(self, v: object) -> bool:
        return v in self.graph

    def __len__(self) -> int:
        return self.graph.number_of_nodes()

    def edges(self) -> List[Tuple[int, int]]:
        return sorted((min(a, b), max(a, b)) for a, b in self.graph.edges())


# ---------------------------------------------------------------------------
# Residues and restrictions
# ---------------------------------------------------------------------------

def residue(g: Geometry, flag: Iterable[int]) -> Geometry:
    """Residue of a flag: the vertices incident with every member, over the missing types"""
    x = g.require_flag(flag)
    return g.induced(g.common_neighbours(x), types=g.cotype(x))


def rank2_restriction(g: Geometry, i: str, j: str) -> Rank2View:
    i, j = str(i), str(j)
    if i == j:
        raise PreconditionError(f"rank-2 restriction needs two distinct types, got {i!r} twice")
    for t in (i, j):
        if t not in g.types:
            raise PreconditionError(f"type {t!r} is not in {list(g.types)}")
    left, right = g.vertices_of_type(i), g.vertices_of_type(j)
    view = nx.Graph(g.graph.subgraph(left + right))
    return Rank2View(i, j, left, right, view)


def _as_graph(v: object) -> nx.Graph:
    return v.graph if isinstance(v, (Rank2View, Geometry)) else v


def canonical_cycle(cycle: Sequence[int]) -> List[int]:
    """Rotate to the least id, then walk towards its smaller neighbour"""
    if not cycle:
        return []
    k = min(range(len(cycle)), key=lambda idx: cycle[idx])
    rotated = list(cycle[k:]) + list(cycle[:k])
    if len(rotated) > 2 and rotated[-1] < rotated[1]:
        rotated = [rotated[0]] + rotated[:0:-1]
    return rotated


def _tree_cycle(parent: Dict[int, Optional[int]], u: int, w: int) -> List[int]:
    path_u = [u]
    while parent[path_u[-1]] is not None:
        path_u.append(parent[path_u[-1]])
    on_u = {v: k for k, v in enumerate(path_u)}
    path_w = [w]
    while path_w[-1] not in on_u:
        path_w.append(parent[path_w[-1]])
    lca = path_w.pop()
    head = path_u[:on_u[lca] + 1]
    return list(reversed(head)) + path_w


def shortest_cycle(view: object) -> Optional[List[int]]:
    """A shortest cycle in canonical rotation, by breadth-first search from every vertex"""
    graph = _as_graph(view)
    adj = graph.adj
    best: Optional[List[int]] = None
    for root in sorted(graph.nodes):
        parent: Dict[int, Optional[int]] = {root: None}
        depth = {root: 0}
        queue = deque([root])
        while queue:
            u = queue.popleft()
            if best is not None and 2 * depth[u] >= len(best):
                break
            for w in sorted(adj[u]):
                if w not in depth:
                    depth[w] = depth[u] + 1
                    parent[w] = u
                    queue.append(w)
                elif w != parent[u]:
                    cycle = _tree_cycle(parent, u, w)
                    if best is None or len(cycle) < len(best):
                        best = cycle
    return canonical_cycle(best) if best is not None else None


def girth(view: object) -> Bond:
    cycle = shortest_cycle(view)
    return INFINITY if cycle is None else len(cycle)


def distance(view: object, a: int, b: int) -> Bond:
    graph = _as_graph(view)
    for v in (a, b):
        if v not in graph:
            raise PreconditionError(f"vertex {v} is not in the view")
    try:
        return nx.shortest_path_length(graph, a, b)
    except nx.NetworkXNoPath:
        return INFINITY


def component_count(view: object) -> int:
    graph = _as_graph(view)
    return nx.number_connected_components(graph) if graph.number_of_nodes() else 0


def is_connected(view: object) -> bool:
    """At most one connected component (the empty view counts as connected)"""
    return component_count(view) <= 1


def diameter(view: object) -> Bond:
    graph = _as_graph(view)
    if graph.number_of_nodes() == 0:
        return 0
    if component_count(graph) > 1:
        return INFINITY
    return nx.diameter(graph)


# ---------------------------------------------------------------------------
# Rank-2 and global axioms
# ---------------------------------------------------------------------------

def completions(g: Geometry, flag: Iterable[int], missing: str) -> List[int]:
    x = frozenset(flag)
    return sorted(v for v in g.common_neighbours(x) if g.type_of(v) == missing)


def is_thick_corank1(g: Geometry, flag: Iterable[int]) -> bool:
    x = g.require_flag(flag)
    missing = g.cotype(x)
    if len(missing) != 1:
        raise PreconditionError(f"flag {sorted(x)} has corank {len(missing)}, expected 1")
    return len(completions(g, x, missing[0])) >= 3


def _ngon_failure(view: object, n: Bond) -> Optional[dict]:
    """First violated clause of the generalized n-gon axioms, or None"""
    graph = _as_graph(view)
    thin = sorted(v for v in graph.nodes if graph.degree(v) < 3)
    if thin:
        return {'clause': 'thickness', 'vertex': thin[0], 'degree': graph.degree(thin[0])}
    cycle = shortest_cycle(graph)
    if n == INFINITY:
        if cycle is not None:
            return {'clause': 'girth', 'expected': 'inf', 'found': len(cycle), 'cycle': cycle}
        if not graph.number_of_nodes() or component_count(graph) > 1:
            return {'clause': 'connectivity', 'components': component_count(graph)}
        return None
    if cycle is None or len(cycle) != 2 * n:
        return {
            'clause': 'girth',
            'expected': 2 * int(n),
            'found': 'inf' if cycle is None else len(cycle),
            'cycle': cycle or [],
        }
    found = diameter(graph)
    if found != n:
        return {'clause': 'diameter', 'expected': int(n), 'found': bond_json(found)}
    return None


def is_generalized_ngon(view: object, n: Bond) -> bool:
    if n != INFINITY and n < 2:
        raise PreconditionError(f"generalized n-gons need n >= 2, got {n}")
    return _ngon_failure(view, n) is None


def is_residually_connected(g: Geometry) -> bool:
    for i, j in combinations(g.types, 2):
        cotype = [t for t in g.types if t not in (i, j)]
        for flag in g.flags_of_type(cotype):
            if not is_connected(g.graph.subgraph(g.common_neighbours(flag))):
                return False
    return True


def is_geometry_of_type_M(g: Geometry, d: CoxeterDiagram) -> Verdict:
    """Thick, residually connected, and every cotype-{i,j} residue a generalized m_{i,j}-gon"""
    if tuple(g.types) != tuple(d.types):
        raise PreconditionError(f"geometry types {list(g.types)} do not match diagram types {list(d.types)}")

    for t in d.types:
        cotype = [s for s in d.types if s != t]
        for flag in g.flags_of_type(cotype):
            found = completions(g, flag, t)
            if len(found) < 3:
                return Verdict.fail('typeM', flag=sorted(flag), clause='thickness', missing=t, completions=found)

    for i, j in d.pairs():
        cotype = [t for t in d.types if t not in (i, j)]
        for flag in g.flags_of_type(cotype):
            res = g.graph.subgraph(g.common_neighbours(flag))
            if not is_connected(res):
                return Verdict.fail(
                    'typeM', flag=sorted(flag), clause='connectivity', types=[i, j],
                    components=component_count(res),
                )

    for i, j in d.pairs():
        m = d.m(i, j)
        cotype = [t for t in d.types if t not in (i, j)]
        for flag in g.flags_of_type(cotype):
            failure = _ngon_failure(g.graph.subgraph(g.common_neighbours(flag)), m)
            if failure is not None:
                logger.debug(f"type M failure at flag {sorted(flag)} on ({i}, {j}): {failure['clause']}")
                return Verdict.fail('typeM', flag=sorted(flag), types=[i, j], m=bond_json(m), **failure)
    return Verdict.ok('typeM')
