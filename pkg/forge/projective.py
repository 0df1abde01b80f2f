"""
Projective Substrate over the Rationals

Proper nonzero subspaces of Q^n in a canonical exact form, nesting tests,
intersections, and the deterministic height-bounded enumerations used
wherever the construction has to "pick" a fresh subspace.

Canonical form: reduced row echelon form, each row then scaled to a
primitive integer vector with positive pivot. Enumeration order:

- hyperplanes through z: by primitive normal vector, height (max |entry|)
  first, then lexicographic with entries ranked 0, 1, -1, 2, -2, ...
- subspaces of a given dimension: by height of the canonical rows, then
  number of nonzero entries, then pivot columns, then the same entry ranking.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import combinations, product
from math import gcd
from typing import Iterable, Iterator, List, Optional, Sequence, Set, Tuple

from .errors import SubspaceError

logger = logging.getLogger(__name__)

Vector = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Exact elimination
# ---------------------------------------------------------------------------

def _rref(rows: Iterable[Sequence[object]], n: int) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form over Q; returns the nonzero rows and their pivot columns"""
    m = [[Fraction(v) for v in row] for row in rows]
    for row in m:
        if len(row) != n:
            raise SubspaceError(f"row {row} does not have length {n}")
    pivots: List[int] = []
    r = 0
    for c in range(n):
        pick = next((k for k in range(r, len(m)) if m[k][c] != 0), None)
        if pick is None:
            continue
        m[r], m[pick] = m[pick], m[r]
        lead = m[r][c]
        m[r] = [v / lead for v in m[r]]
        for k in range(len(m)):
            if k != r and m[k][c] != 0:
                f = m[k][c]
                m[k] = [a - f * b for a, b in zip(m[k], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def _primitive(vec: Sequence[Fraction]) -> Vector:
    scale = 1
    for v in vec:
        scale = scale * v.denominator // gcd(scale, v.denominator)
    ints = [int(v * scale) for v in vec]
    g = 0
    for v in ints:
        g = gcd(g, v)
    if g == 0:
        raise SubspaceError("zero vector has no primitive form")
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v != 0)
    return tuple(-v for v in ints) if lead < 0 else tuple(ints)


def rank(rows: Sequence[Sequence[object]], n: Optional[int] = None) -> int:
    if not rows:
        return 0
    reduced, _ = _rref(rows, len(rows[0]) if n is None else n)
    return len(reduced)


def nullspace(rows: Sequence[Sequence[object]], n: int) -> List[Vector]:
    """Primitive integer basis of {v : r . v = 0 for every row r}"""
    reduced, pivots = _rref(rows, n) if rows else ([], [])
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            v[p] = -row[f]
        basis.append(_primitive(v))
    return basis


def _dot(a: Sequence[int], b: Sequence[int]) -> int:
    return sum(x * y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# Subspaces
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subspace:
    """A proper nonzero subspace of Q^n in canonical form; build with canonicalize()"""

    n: int
    rows: Tuple[Vector, ...]

    @property
    def dim(self) -> int:
        return len(self.rows)

    @property
    def height(self) -> int:
        return max(abs(v) for row in self.rows for v in row)

    @cached_property
    def normal(self) -> Vector:
        if self.dim != self.n - 1:
            raise SubspaceError(f"only hyperplanes have a normal vector, dim = {self.dim}")
        return nullspace(self.rows, self.n)[0]

    def contains_vector(self, v: Sequence[int]) -> bool:
        if self.dim == self.n - 1:
            return _dot(self.normal, v) == 0
        return rank([*self.rows, tuple(v)], self.n) == self.dim

    def contains(self, other: "Subspace") -> bool:
        """other is a subspace of self"""
        _same_ambient(self, other)
        if other.dim > self.dim:
            return False
        return all(self.contains_vector(row) for row in other.rows)

    def to_dict(self) -> dict:
        return {'dim': self.dim, 'rows': [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "Subspace":
        try:
            s = canonicalize(data['rows'])
        except (KeyError, TypeError, IndexError) as e:
            raise SubspaceError(f"malformed subspace record {data!r}") from e
        if 'dim' in data and data['dim'] != s.dim:
            raise SubspaceError(f"subspace record says dim {data['dim']} but spans {s.dim}")
        return s

    def __repr__(self) -> str:
        return f"<{';'.join(','.join(map(str, r)) for r in self.rows)}>"


def _same_ambient(a: Subspace, b: Subspace) -> None:
    if a.n != b.n:
        raise SubspaceError(f"ambient dimensions differ: {a.n} and {b.n}")


def canonicalize(rows: Sequence[Sequence[object]], n: Optional[int] = None) -> Subspace:
    """Canonical form of span(rows); errors on the zero and the full span"""
    if n is None:
        if not rows:
            raise SubspaceError("cannot infer the ambient dimension of an empty row list")
        n = len(rows[0])
    reduced, _ = _rref(rows, n) if rows else ([], [])
    if not reduced:
        raise SubspaceError("rows span the zero subspace")
    if len(reduced) == n:
        raise SubspaceError(f"rows span all of Q^{n}")
    return Subspace(n=n, rows=tuple(_primitive(r) for r in reduced))


def nested(a: Subspace, b: Subspace) -> bool:
    _same_ambient(a, b)
    return rank([*a.rows, *b.rows], a.n) == max(a.dim, b.dim)


def intersection(a: Subspace, b: Subspace) -> Optional[Subspace]:
    """a meet b, or None when it is the zero subspace"""
    _same_ambient(a, b)
    perp = nullspace(a.rows, a.n) + nullspace(b.rows, b.n)
    basis = nullspace(perp, a.n)
    if not basis:
        return None
    return canonicalize(basis, a.n)


def hyperplane_from_normal(normal: Sequence[int]) -> Subspace:
    return canonicalize(nullspace([tuple(normal)], len(normal)), len(normal))


# ---------------------------------------------------------------------------
# Enumeration orders
# ---------------------------------------------------------------------------

def _ladder(h: int) -> List[int]:
    values = [0]
    for k in range(1, h + 1):
        values += [k, -k]
    return values


def entry_key(values: Iterable[int]) -> Tuple[Tuple[int, bool], ...]:
    return tuple((abs(v), v < 0) for v in values)


def normal_key(v: Sequence[int]) -> tuple:
    return (max(abs(c) for c in v), entry_key(v))


def hyperplane_key(a: Subspace) -> tuple:
    return normal_key(a.normal)


def _pivots(rows: Sequence[Vector]) -> Tuple[int, ...]:
    return tuple(next(c for c, v in enumerate(r) if v != 0) for r in rows)


def subspace_key(a: Subspace) -> tuple:
    flat = [v for r in a.rows for v in r]
    return (a.height, sum(1 for v in flat if v != 0), _pivots(a.rows), entry_key(flat))


def primitive_vectors(k: int, h: int) -> Iterator[Vector]:
    """Primitive vectors of height exactly h with positive first nonzero entry, in normal order"""
    for v in product(_ladder(h), repeat=k):
        if max(abs(c) for c in v) != h:
            continue
        lead = next((c for c in v if c != 0), 0)
        if lead <= 0:
            continue
        g = 0
        for c in v:
            g = gcd(g, c)
        if g == 1:
            yield v


@lru_cache(maxsize=None)
def canonical_forms(k: int, d: int, h: int) -> Tuple[Tuple[Vector, ...], ...]:
    """Canonical row tuples of d-dimensional subspaces of Q^k with height exactly h"""
    if not 1 <= d < k:
        return ()
    found = []
    for pivots in combinations(range(k), d):
        choices = []
        for r, p in enumerate(pivots):
            free = [c for c in range(p + 1, k) if c not in pivots]
            rows = []
            for lead in range(1, h + 1):
                for entries in product(_ladder(h), repeat=len(free)):
                    row = [0] * k
                    row[p] = lead
                    for c, v in zip(free, entries):
                        row[c] = v
                    g = 0
                    for v in row:
                        g = gcd(g, v)
                    if g == 1:
                        rows.append(tuple(row))
            choices.append(rows)
        for combo in product(*choices):
            if max(abs(v) for row in combo for v in row) == h:
                found.append(combo)
    found.sort(key=lambda rows: (
        sum(1 for row in rows for v in row if v != 0), _pivots(rows), entry_key(v for row in rows for v in row),
    ))
    return tuple(found)


@dataclass
class SubstrateHandle:
    """Ambient dimension plus the enumeration bound reached so far"""

    n: int
    height_bound: int = 1
    _hyperplane_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 3:
            raise SubspaceError(f"the substrate needs n >= 3, got {self.n}")
        if self.height_bound < 1:
            raise SubspaceError(f"height bound must be >= 1, got {self.height_bound}")

    def raise_to(self, h: int) -> None:
        if h > self.height_bound:
            logger.debug(f"substrate height bound raised to {h}")
            self.height_bound = h


def _check_dim(h: SubstrateHandle, z: Subspace) -> None:
    if z.n != h.n:
        raise SubspaceError(f"subspace lives in Q^{z.n}, substrate is Q^{h.n}")


def hyperplanes_at_height(h: SubstrateHandle, z: Optional[Subspace], height: int) -> List[Subspace]:
    """Hyperplanes containing z whose normal has height exactly `height`"""
    key = (z, height)
    cached = h._hyperplane_cache.get(key)
    if cached is None:
        cached = [
            hyperplane_from_normal(v)
            for v in primitive_vectors(h.n, height)
            if z is None or all(_dot(v, row) == 0 for row in z.rows)
        ]
        h._hyperplane_cache[key] = cached
    return cached


def hyperplanes_up_to(h: SubstrateHandle, z: Optional[Subspace], height: int) -> List[Subspace]:
    return [a for k in range(1, height + 1) for a in hyperplanes_at_height(h, z, k)]


def iter_hyperplanes_through(h: SubstrateHandle, z: Optional[Subspace] = None) -> Iterator[Subspace]:
    """Every hyperplane containing z (all hyperplanes when z is None), in canonical order; never ends"""
    if z is not None:
        _check_dim(h, z)
        if z.dim >= h.n - 1:
            raise SubspaceError(f"no hyperplane properly contains a subspace of dim {z.dim}")
    height = 1
    while True:
        h.raise_to(height)
        yield from hyperplanes_at_height(h, z, height)
        height += 1


def hyperplanes_through(h: SubstrateHandle, z: Subspace, skip: Set[Subspace], count: int) -> List[Subspace]:
    if count <= 0:
        if z.dim >= h.n - 1:
            raise SubspaceError(f"no hyperplane properly contains a subspace of dim {z.dim}")
        return []
    found = []
    for a in iter_hyperplanes_through(h, z):
        if a in skip:
            continue
        found.append(a)
        if len(found) == count:
            break
    return found


def subspaces_of_dim(n: int, d: int, height: int) -> List[Subspace]:
    """All d-dimensional subspaces of Q^n of height at most `height`, in canonical order"""
    return [Subspace(n=n, rows=rows) for k in range(1, height + 1) for rows in canonical_forms(n, d, k)]


def iter_subspaces_within(h: SubstrateHandle, a: Subspace, dim: int) -> Iterator[Subspace]:
    if not 1 <= dim < a.dim:
        raise SubspaceError(f"dim must lie in [1, {a.dim - 1}], got {dim}")
    height = 1
    while True:
        h.raise_to(height)
        for coords in canonical_forms(a.dim, dim, height):
            rows = [[sum(c * a.rows[k][col] for k, c in enumerate(coord)) for col in range(a.n)] for coord in coords]
            yield canonicalize(rows, a.n)
        height += 1


def subspaces_within(h: SubstrateHandle, a: Subspace, dim: int, count: int) -> List[Subspace]:
    """The first `count` dim-dimensional subspaces of a, ordered by their coordinates in a's basis"""
    found: List[Subspace] = []
    if count <= 0:
        if not 1 <= dim < a.dim:
            raise SubspaceError(f"dim must lie in [1, {a.dim - 1}], got {dim}")
        return found
    for s in iter_subspaces_within(h, a, dim):
        found.append(s)
        if len(found) == count:
            break
    return found
