"""
Stage Invariants for the Free Construction

Decides the three properties every intermediate geometry of the free
construction must have relative to its Coxeter diagram:

- F (flat): vertices of distinct, non-adjacent types are incident.
- P (partial): for adjacent i, j and a flag X of type N(i,j), the {i,j}
  restriction of the residue of X has no cycle shorter than 2*m_{i,j}.
- D (digons): for m_{i,j} >= 4 the whole {i,j} restriction has no 4-cycle.
"""

import logging
from typing import List, Optional

from .diagram import INFINITY, CoxeterDiagram
from .errors import PreconditionError
from .geometry import Geometry, Verdict, bond_json, shortest_cycle

logger = logging.getLogger(__name__)


def _require_types(g: Geometry, d: CoxeterDiagram) -> None:
    if tuple(g.types) != tuple(d.types):
        raise PreconditionError(f"geometry types {list(g.types)} do not match diagram types {list(d.types)}")


def check_F(g: Geometry, d: CoxeterDiagram) -> Verdict:
    _require_types(g, d)
    for i, j in d.pairs():
        if d.adjacent(i, j):
            continue
        right = g.vertices_of_type(j)
        for u in g.vertices_of_type(i):
            for v in right:
                if not g.incident(u, v):
                    return Verdict.fail('F', pair=[u, v], types=[i, j])
    return Verdict.ok('F')


def check_P(g: Geometry, d: CoxeterDiagram) -> Verdict:
    _require_types(g, d)
    for i, j in d.pairs():
        m = d.m(i, j)
        if m < 3:
            continue
        wanted = {i, j}
        for flag in g.flags_of_type(d.neighbourhood(i, j)):
            members = [v for v in g.common_neighbours(flag) if g.type_of(v) in wanted]
            cycle = shortest_cycle(g.graph.subgraph(members))
            if cycle is not None and (m == INFINITY or len(cycle) < 2 * m):
                return Verdict.fail('P', types=[i, j], m=bond_json(m), flag=sorted(flag), cycle=cycle)
    return Verdict.ok('P')


def check_D(g: Geometry, d: CoxeterDiagram) -> Verdict:
    _require_types(g, d)
    for i, j in d.pairs():
        if d.m(i, j) < 4:
            continue
        digon = find_digon(g, i, j)
        if digon is not None:
            return Verdict.fail('D', types=[i, j], cycle=digon)
    return Verdict.ok('D')


def find_digon(g: Geometry, i: str, j: str) -> Optional[List[int]]:
    """A 4-cycle on types i, j in canonical rotation, if there is one"""
    adj = g.graph.adj
    right = set(g.vertices_of_type(j))
    left = g.vertices_of_type(i)
    seen = {}
    for u in left:
        partners = sorted(w for w in adj[u] if w in right)
        for a in range(len(partners)):
            for b in range(a + 1, len(partners)):
                key = (partners[a], partners[b])
                if key in seen:
                    return shortest_cycle(g.graph.subgraph([seen[key], u, *key]))
                seen[key] = u
    return None


def check_all(g: Geometry, d: CoxeterDiagram) -> List[Verdict]:
    return [check_F(g, d), check_P(g, d), check_D(g, d)]


def first_failure(g: Geometry, d: CoxeterDiagram) -> Optional[Verdict]:
    for verdict in check_all(g, d):
        if not verdict.passed:
            return verdict
    return None
