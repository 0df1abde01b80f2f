"""
Reference geometries used by the verifiers and the test-suite.
"""

import logging
from itertools import combinations, permutations
from typing import FrozenSet, List, Sequence, Set

from .errors import PreconditionError
from .geometry import Geometry

logger = logging.getLogger(__name__)

Line = FrozenSet[int]

# Lines {i, i+1, i+3} mod 7
FANO_LINES: List[Line] = [frozenset({i, (i + 1) % 7, (i + 3) % 7}) for i in range(7)]


def _is_even(perm: Sequence[int]) -> bool:
    seen = [False] * len(perm)
    transpositions = 0
    for start in range(len(perm)):
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length:
            transpositions += length - 1
    return transpositions % 2 == 0


def fano_orbit() -> List[FrozenSet[Line]]:
    """The 15 Fano planes on {0..6} in the alternating-group orbit of FANO_LINES"""
    planes: Set[FrozenSet[Line]] = set()
    for perm in permutations(range(7)):
        if _is_even(perm):
            planes.add(frozenset(frozenset(perm[p] for p in line) for line in FANO_LINES))
    return sorted(planes, key=lambda plane: sorted(sorted(line) for line in plane))


def fixture_neumaier() -> Geometry:
    """The C3 geometry on 7 points, 35 lines and 15 planes.

    Points are 0..6, lines 7..41 (3-subsets in lexicographic order), planes
    42..56. Every point lies on every plane; a line lies on a plane when it
    is one of the seven lines of that Fano plane.
    """
    g = Geometry(["1", "2", "3"])
    points = [g.add_vertex("1") for _ in range(7)]
    triples = [frozenset(c) for c in combinations(range(7), 3)]
    line_ids = {t: g.add_vertex("2") for t in triples}
    for t, lid in line_ids.items():
        for p in sorted(t):
            g.add_incidence(points[p], lid)
    for plane in fano_orbit():
        pid = g.add_vertex("3")
        for p in points:
            g.add_incidence(p, pid)
        for line in sorted(plane, key=sorted):
            g.add_incidence(line_ids[line], pid)
    logger.debug(f"Neumaier fixture: {g!r}")
    return g


def fano_flag_geometry() -> Geometry:
    """Points 0..6 and lines 7..13 of the Fano plane, 21 incidences"""
    g = Geometry(["1", "2"])
    for _ in range(7):
        g.add_vertex("1")
    for line in FANO_LINES:
        lid = g.add_vertex("2")
        for p in sorted(line):
            g.add_incidence(p, lid)
    return g


def complete_bipartite(left: int, right: int) -> Geometry:
    """Generalized digon with `left` type-1 and `right` type-2 vertices"""
    g = Geometry(["1", "2"])
    a = [g.add_vertex("1") for _ in range(left)]
    b = [g.add_vertex("2") for _ in range(right)]
    for u in a:
        for v in b:
            g.add_incidence(u, v)
    return g


def cycle_geometry(n: int) -> Geometry:
    """The 2n-cycle as a rank-2 geometry: a thin generalized n-gon"""
    if n < 2:
        raise PreconditionError(f"cycle geometry needs n >= 2, got {n}")
    g = Geometry(["1", "2"])
    ids = [g.add_vertex("1" if k % 2 == 0 else "2") for k in range(2 * n)]
    for k in range(2 * n):
        g.add_incidence(ids[k], ids[(k + 1) % (2 * n)])
    return g


def disjoint_union(a: Geometry, b: Geometry) -> Geometry:
    """Copy of a followed by b with ids shifted past a"""
    if tuple(a.types) != tuple(b.types):
        raise PreconditionError(f"type sets differ: {list(a.types)} vs {list(b.types)}")
    g = a.copy()
    shift = {v: g.add_vertex(b.type_of(v)) for v in b.vertices()}
    for p, q in b.incidences():
        g.add_incidence(shift[p], shift[q])
    return g
