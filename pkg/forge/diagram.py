"""
Coxeter Diagrams for Coxeter Forge

This module represents Coxeter diagrams over a finite type set and answers
the structural queries the constructions gate on: adjacency, A3 subdiagrams,
and the linear C_n/H_n shape with a terminal m-bond.
"""

import json
import logging
import math
import re
from itertools import permutations
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

from .errors import DiagramError

logger = logging.getLogger(__name__)

# Ordered above every integer bond
INFINITY = math.inf

Bond = Union[int, float]


class CnShape(NamedTuple):
    n: int
    m: int
    order: Tuple[str, ...]


class CoxeterDiagram:
    """Symmetric bond-label matrix over an ordered finite type set"""

    __slots__ = ('_types', '_index', '_bonds')

    def __init__(self, types: Sequence[object], bonds: Optional[Dict[Tuple[str, str], Bond]] = None):
        labels = tuple(str(t) for t in types)
        if not labels:
            raise DiagramError("a diagram needs at least one type")
        if len(set(labels)) != len(labels):
            raise DiagramError(f"duplicate type labels in {list(labels)}")
        self._types = labels
        self._index = {t: k for k, t in enumerate(labels)}
        self._bonds: Dict[Tuple[str, str], Bond] = {}
        for (i, j), m in (bonds or {}).items():
            i, j = str(i), str(j)
            self._require(i)
            self._require(j)
            if i == j:
                raise DiagramError(f"bond on the diagonal ({i}, {i})")
            if m != INFINITY and (not isinstance(m, int) or isinstance(m, bool) or m < 2):
                raise DiagramError(f"bond ({i}, {j}) must be an integer >= 2 or INFINITY, got {m!r}")
            key = self._key(i, j)
            if key in self._bonds and self._bonds[key] != m:
                raise DiagramError(f"conflicting bonds for ({i}, {j}): {self._bonds[key]} and {m}")
            if m != 2:
                self._bonds[key] = m

    # -- basic queries -----------------------------------------------------

    @property
    def types(self) -> Tuple[str, ...]:
        return self._types

    @property
    def rank(self) -> int:
        return len(self._types)

    def index(self, t: str) -> int:
        self._require(t)
        return self._index[t]

    def _require(self, t: str) -> None:
        if t not in self._index:
            raise DiagramError(f"unknown type {t!r}")

    def _key(self, i: str, j: str) -> Tuple[str, str]:
        return (i, j) if self._index[i] < self._index[j] else (j, i)

    def m(self, i: str, j: str) -> Bond:
        """Bond label m_{i,j} for distinct types"""
        self._require(i)
        self._require(j)
        if i == j:
            raise DiagramError(f"m_{{i,j}} is undefined for i = j = {i!r}")
        return self._bonds.get(self._key(i, j), 2)

    def adjacent(self, i: str, j: str) -> bool:
        return self.m(i, j) >= 3

    def forces_incidence(self, i: str, j: str) -> bool:
        """Distinct, non-adjacent types: Property (F) makes such vertices incident"""
        return i != j and not self.adjacent(i, j)

    def neighbourhood(self, i: str, j: str) -> Tuple[str, ...]:
        """N(i,j): the types outside {i, j} adjacent to i or j, in diagram order"""
        return tuple(
            k for k in self._types
            if k not in (i, j) and (self.adjacent(i, k) or self.adjacent(j, k))
        )

    def bonds(self) -> List[Tuple[str, str, Bond]]:
        """Every bond with m >= 3, in diagram order"""
        return sorted(
            ((i, j, m) for (i, j), m in self._bonds.items()),
            key=lambda e: (self._index[e[0]], self._index[e[1]]),
        )

    def pairs(self) -> Iterable[Tuple[str, str]]:
        """Unordered pairs of distinct types, in diagram order"""
        for a in range(len(self._types)):
            for b in range(a + 1, len(self._types)):
                yield self._types[a], self._types[b]

    # -- structural queries --------------------------------------------------

    def has_subdiagram_A3(self) -> bool:
        return any(
            self.m(i, j) == 3 and self.m(j, k) == 3 and self.m(i, k) == 2
            for i, j, k in permutations(self._types, 3)
        )

    def is_cn_shape(self) -> Optional[CnShape]:
        n = len(self._types)
        if n < 3 or len(self._bonds) != n - 1:
            return None
        neighbours: Dict[str, List[str]] = {t: [] for t in self._types}
        for i, j in self._bonds:
            neighbours[i].append(j)
            neighbours[j].append(i)
        if any(len(v) > 2 for v in neighbours.values()):
            return None
        ends = [t for t in self._types if len(neighbours[t]) == 1]
        if len(ends) != 2:
            return None

        for start in ends:
            order = [start]
            while len(order) < n:
                nxt = [t for t in neighbours[order[-1]] if t not in order]
                if not nxt:
                    break
                order.append(nxt[0])
            if len(order) != n:
                return None
            chain = [self.m(order[k], order[k + 1]) for k in range(n - 1)]
            last = chain[-1]
            if all(b == 3 for b in chain[:-1]) and last != INFINITY and last >= 4:
                return CnShape(n=n, m=int(last), order=tuple(order))
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoxeterDiagram):
            return NotImplemented
        return self._types == other._types and self._bonds == other._bonds

    def __hash__(self) -> int:
        return hash((self._types, tuple(sorted(self._bonds.items()))))

    def __repr__(self) -> str:
        bonds = ", ".join(f"{i}-{j}:{_bond_text(m)}" for i, j, m in self.bonds())
        return f"CoxeterDiagram({list(self._types)}; {bonds})"


def adjacent(d: CoxeterDiagram, i: str, j: str) -> bool:
    return d.adjacent(i, j)


def has_subdiagram_A3(d: CoxeterDiagram) -> bool:
    return d.has_subdiagram_A3()


def is_cn_shape(d: CoxeterDiagram) -> Optional[CnShape]:
    return d.is_cn_shape()


def _bond_text(m: Bond) -> Union[int, str]:
    return "inf" if m == INFINITY else int(m)


def _parse_bond(raw: object) -> Bond:
    if isinstance(raw, str):
        if raw.strip().lower() in ('inf', 'infinity', '∞'):
            return INFINITY
        raise DiagramError(f"unrecognised bond label {raw!r}")
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise DiagramError(f"bond label must be an integer or 'inf', got {raw!r}")
    return raw


def parse_diagram(text: Union[str, dict]) -> CoxeterDiagram:
    """Parse the JSON diagram format (omitted pairs mean m = 2)"""
    try:
        data = json.loads(text) if isinstance(text, str) else text
    except json.JSONDecodeError as e:
        raise DiagramError(f"diagram is not valid JSON: {e}") from e
    if not isinstance(data, dict) or 'nodes' not in data:
        raise DiagramError("diagram must be an object with a 'nodes' list")

    nodes = [str(t) for t in data['nodes']]
    if len(set(nodes)) != len(nodes):
        raise DiagramError(f"duplicate node labels in {nodes}")
    known = set(nodes)

    bonds: Dict[Tuple[str, str], Bond] = {}
    for edge in data.get('edges', []):
        try:
            i, j = str(edge['i']), str(edge['j'])
            m = _parse_bond(edge['m'])
        except (KeyError, TypeError) as e:
            raise DiagramError(f"malformed edge {edge!r}") from e
        if i not in known or j not in known:
            raise DiagramError(f"edge ({i}, {j}) references an unknown node")
        if i == j:
            raise DiagramError(f"loop edge on node {i}")
        if m < 3:
            raise DiagramError(f"edge ({i}, {j}) lists m = {m}; only m >= 3 is listed")
        key = (i, j) if nodes.index(i) < nodes.index(j) else (j, i)
        if key in bonds and bonds[key] != m:
            raise DiagramError(f"conflicting duplicate edges for ({i}, {j})")
        bonds[key] = m
    return CoxeterDiagram(nodes, bonds)


def serialize_diagram(d: CoxeterDiagram) -> dict:
    return {
        'nodes': list(d.types),
        'edges': [{'i': i, 'j': j, 'm': _bond_text(m)} for i, j, m in d.bonds()],
    }


def _chain(bonds: Sequence[Bond]) -> CoxeterDiagram:
    types = [str(k + 1) for k in range(len(bonds) + 1)]
    return CoxeterDiagram(types, {(types[k], types[k + 1]): b for k, b in enumerate(bonds)})


_RANK2 = re.compile(r'^I2\((\d+|inf)\)$')


def standard_diagram(name: str) -> CoxeterDiagram:
    """Named diagrams on types "1".."n": A_n, B_n/C_n, H3, H4, F4, I2(m)"""
    key = name.strip().upper().replace('_', '')
    match = _RANK2.match(name.strip().replace('_', ''))
    if match:
        m = _parse_bond(match.group(1)) if match.group(1) == 'inf' else int(match.group(1))
        if m < 2:
            raise DiagramError(f"I2(m) needs m >= 2, got {m}")
        return _chain([m])
    family, digits = key[:1], key[1:]
    if not digits.isdigit():
        raise DiagramError(f"unknown diagram name {name!r}")
    n = int(digits)
    if family == 'A' and n >= 1:
        return _chain([3] * (n - 1)) if n > 1 else CoxeterDiagram(["1"])
    if family in ('B', 'C') and n >= 2:
        return _chain([3] * (n - 2) + [4])
    if family == 'H' and n in (3, 4):
        return _chain([3] * (n - 2) + [5])
    if family == 'F' and n == 4:
        return _chain([3, 4, 3])
    raise DiagramError(f"unknown diagram name {name!r}")
