"""
Geometries as First-Order Structures

Geometries satisfying (F), (P) and (D) over C3, H3 or F4 are read as
structures in a language with one predicate per type, ternary functions
f_k (k-th vertex of the unique shortest path between y and z in the
residue of x) and binary functions g_{i,j} (the unique common type-j
neighbour of two type-i vertices). This module evaluates those functions,
forms generated substructures and free amalgams, closes structures back
into the class with Procedure B only, and runs the sampled
amalgamation/hereditary harness.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Iterable, List, Literal, Optional, Set, Tuple

import networkx as nx
import numpy as np
from pydantic import BaseModel

from .config import Caps
from .diagram import CoxeterDiagram, serialize_diagram, standard_diagram
from .errors import InvariantViolation, IsomorphismError, PreconditionError
from .free_construction import build_free, run_round, start_state
from .free_properties import first_failure
from .geometry import Geometry

logger = logging.getLogger(__name__)

SUPPORTED = ('C3', 'H3', 'F4')


def family(d: CoxeterDiagram) -> Optional[str]:
    """Which of C3, H3, F4 the diagram is, up to relabelling of types"""

    def bond_graph(diagram: CoxeterDiagram) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(diagram.types)
        for i, j, m in diagram.bonds():
            g.add_edge(i, j, m=m)
        return g

    mine = bond_graph(d)
    for name in SUPPORTED:
        other = bond_graph(standard_diagram(name))
        if nx.is_isomorphic(mine, other, edge_match=lambda a, b: a['m'] == b['m']):
            return name
    return None


@dataclass
class LStructure:
    """A geometry read as a structure; substructures evaluate functions in their parent"""

    geometry: Geometry
    diagram: CoxeterDiagram
    stage: int = 0
    parent: Optional["LStructure"] = field(default=None, repr=False)

    def root(self) -> "LStructure":
        s = self
        while s.parent is not None:
            s = s.parent
        return s

    def vertices(self) -> List[int]:
        return self.geometry.vertices()

    def __len__(self) -> int:
        return len(self.geometry)


@dataclass
class Embedding:
    """Injective vertex map between two structures"""

    mapping: Dict[int, int]

    def __call__(self, v: int) -> int:
        return self.mapping[v]

    def image(self) -> Set[int]:
        return set(self.mapping.values())

    def compose(self, inner: "Embedding") -> "Embedding":
        """self after inner"""
        return Embedding({a: self.mapping[b] for a, b in inner.mapping.items()})

    def to_dict(self) -> dict:
        return {'map': [[a, b] for a, b in sorted(self.mapping.items())]}

    @classmethod
    def identity(cls, vertices: Iterable[int]) -> "Embedding":
        return cls({v: v for v in vertices})


# ---------------------------------------------------------------------------
# Function symbols
# ---------------------------------------------------------------------------

def unique_shortest_path(graph: nx.Graph, y: int, z: int) -> Optional[List[int]]:
    """The shortest y-z path when it is unique as a vertex sequence"""
    if y not in graph or z not in graph:
        return None
    if y == z:
        return [y]
    depth = {y: 0}
    count = {y: 1}
    parent: Dict[int, int] = {}
    queue = deque([y])
    while queue:
        u = queue.popleft()
        if u == z:
            break
        for w in graph.adj[u]:
            if w not in depth:
                depth[w] = depth[u] + 1
                count[w] = count[u]
                parent[w] = u
                queue.append(w)
            elif depth[w] == depth[u] + 1:
                count[w] = min(2, count[w] + count[u])
    if z not in depth or count[z] != 1:
        return None
    path = [z]
    while path[-1] != y:
        path.append(parent[path[-1]])
    return path[::-1]


def _residue_graph(s: LStructure, x: int) -> nx.Graph:
    g = s.geometry
    return g.graph.subgraph(g.neighbours(x))


def eval_f(s: LStructure, k: int, x: int, y: int, z: int) -> int:
    """a_k on the unique shortest path y = a_0, ..., a_l = z in the residue of x; x otherwise"""
    ambient = s.root()
    if x not in ambient.geometry or k < 0:
        return x
    path = unique_shortest_path(_residue_graph(ambient, x), y, z)
    if path is None or k >= len(path):
        return x
    return path[k]


def eval_g(s: LStructure, i: str, j: str, x: int, y: int) -> int:
    """The unique common type-j neighbour of two distinct type-i vertices; x otherwise"""
    d = s.diagram
    if d.m(i, j) < 4:
        raise PreconditionError(f"g_{{{i},{j}}} needs m >= 4, m_{{{i},{j}}} = {d.m(i, j)}")
    g = s.root().geometry
    if x == y or x not in g or y not in g:
        return x
    if g.type_of(x) != i or g.type_of(y) != i:
        return x
    common = [w for w in g.neighbours(x) & g.neighbours(y) if g.type_of(w) == j]
    return common[0] if len(common) == 1 else x


def _g_pairs(d: CoxeterDiagram) -> List[Tuple[str, str]]:
    found = []
    for i, j in d.pairs():
        if d.m(i, j) >= 4:
            found += [(i, j), (j, i)]
    return found


def _closure_additions(ambient: LStructure, members: Set[int]) -> Set[int]:
    g = ambient.geometry
    added: Set[int] = set()
    for x in sorted(members):
        local = sorted(v for v in g.neighbours(x) if v in members)
        if len(local) < 2:
            continue
        graph = _residue_graph(ambient, x)
        for y, z in combinations(local, 2):
            path = unique_shortest_path(graph, y, z)
            if path is not None:
                added.update(v for v in path if v not in members)
    for i, j in _g_pairs(ambient.diagram):
        of_type = [v for v in sorted(members) if g.type_of(v) == i]
        for x, y in combinations(of_type, 2):
            w = eval_g(ambient, i, j, x, y)
            if w != x and w not in members:
                added.add(w)
    return added


def closure(s: LStructure, seed: Iterable[int]) -> Set[int]:
    """Least superset of seed closed under every f_k and g_{i,j}"""
    ambient = s.root()
    members = set(seed)
    for v in members:
        if v not in ambient.geometry:
            raise PreconditionError(f"seed vertex {v} is not in the structure")
    while True:
        added = _closure_additions(ambient, members)
        if not added:
            return members
        members |= added


def generated_substructure(s: LStructure, seed: Iterable[int]) -> Tuple[LStructure, Embedding]:
    members = closure(s, seed)
    sub = LStructure(s.root().geometry.induced(members), s.diagram, stage=s.stage, parent=s.root())
    return sub, Embedding.identity(sorted(members))


# ---------------------------------------------------------------------------
# Embeddings and free amalgams
# ---------------------------------------------------------------------------

def embedding_failure(src: Geometry, dst: Geometry, emb: Embedding) -> Optional[str]:
    """Why emb is not a type-, incidence- and non-incidence-preserving injection, or None"""
    domain = src.vertices()
    if set(emb.mapping) != set(domain):
        return f"domain {sorted(emb.mapping)} differs from the vertex set {domain}"
    if len(emb.image()) != len(domain):
        return "map is not injective"
    for v in domain:
        w = emb(v)
        if w not in dst:
            return f"image {w} of {v} is not a vertex of the target"
        if src.type_of(v) != dst.type_of(w):
            return f"{v} -> {w} changes type {src.type_of(v)} to {dst.type_of(w)}"
    for a, b in combinations(domain, 2):
        if src.incident(a, b) != dst.incident(emb(a), emb(b)):
            return f"incidence of {a}, {b} is not preserved"
    return None


def is_embedding(src: Geometry, dst: Geometry, emb: Embedding) -> bool:
    return embedding_failure(src, dst, emb) is None


def _path_length(s: LStructure, x: int, y: int, z: int) -> int:
    ambient = s.root()
    if x not in ambient.geometry:
        return 0
    path = unique_shortest_path(_residue_graph(ambient, x), y, z)
    return 0 if path is None else len(path)


def function_mismatch(
    src: LStructure, dst: LStructure, emb: Embedding, rng: np.random.Generator, trials: int = 30
) -> Optional[str]:
    """The first sampled f_k or g_{i,j} application emb does not commute with, or None.

    Triples (x, y, z) are drawn with y, z in the residue of x whenever x has
    two neighbours in src; every k up to the longer of the two unique
    shortest paths is compared. The g_{i,j} are compared exhaustively.
    """
    domain = src.vertices()
    if not domain:
        return None
    g = src.geometry
    for _ in range(trials):
        x = int(rng.choice(domain))
        local = sorted(g.neighbours(x))
        pick = local if len(local) >= 2 else domain
        y, z = (int(v) for v in rng.choice(pick, size=2))
        fx, fy, fz = emb(x), emb(y), emb(z)
        longest = max(_path_length(src, x, y, z), _path_length(dst, fx, fy, fz))
        for k in range(longest + 1):
            left = emb.mapping.get(eval_f(src, k, x, y, z))
            right = eval_f(dst, k, fx, fy, fz)
            if left != right:
                return f"f_{k}({x}, {y}, {z}) maps to {left}, f_{k}({fx}, {fy}, {fz}) is {right}"
    for i, j in _g_pairs(src.diagram):
        of_type = [v for v in domain if g.type_of(v) == i]
        for x, y in combinations(of_type, 2):
            left = emb.mapping.get(eval_g(src, i, j, x, y))
            right = eval_g(dst, i, j, emb(x), emb(y))
            if left != right:
                return f"g_{i},{j}({x}, {y}) maps to {left}, g_{i},{j}({emb(x)}, {emb(y)}) is {right}"
    return None


def preserves_functions(
    src: LStructure, dst: LStructure, emb: Embedding, rng: np.random.Generator, trials: int = 30
) -> bool:
    return function_mismatch(src, dst, emb, rng, trials) is None


def free_amalgam(
    a: LStructure, b: LStructure, c: LStructure, iota: Embedding, kappa: Embedding
) -> Tuple[LStructure, Embedding, Embedding]:
    """Glue b and c along the images of a, adding only the incidences Property (F) forces"""
    for name, target, emb in (('iota', b, iota), ('kappa', c, kappa)):
        problem = embedding_failure(a.geometry, target.geometry, emb)
        if problem is not None:
            raise IsomorphismError(f"{name} is not an embedding: {problem}")
    d = b.diagram
    if c.diagram != d or a.diagram != d:
        raise PreconditionError("structures live over different diagrams")

    out = Geometry(d.types)
    for v in b.vertices():
        out.add_vertex(b.geometry.type_of(v), vid=v)
    lam = Embedding.identity(b.vertices())

    shared = {kappa(v): iota(v) for v in a.vertices()}
    mu: Dict[int, int] = dict(shared)
    offset = max(b.vertices(), default=-1) + 1
    for v in c.vertices():
        if v not in mu:
            mu[v] = out.add_vertex(c.geometry.type_of(v), vid=offset)
            offset += 1
    mu_emb = Embedding(mu)

    for p, q in b.geometry.incidences():
        out.add_incidence(p, q)
    for p, q in c.geometry.incidences():
        if not out.incident(mu[p], mu[q]):
            out.add_incidence(mu[p], mu[q])
    only_b = [v for v in b.vertices() if v not in iota.image()]
    only_c = [mu[v] for v in c.vertices() if v not in shared]
    for p in only_b:
        for q in only_c:
            if d.forces_incidence(out.type_of(p), out.type_of(q)):
                out.add_incidence(p, q)

    failure = first_failure(out, d)
    if failure is not None:
        raise InvariantViolation(f"free amalgam fails property {failure.property_name}", verdict=failure)
    return LStructure(out, d, stage=max(b.stage, c.stage)), lam, mu_emb


def close_into_class(s: LStructure, rounds: int, caps: Optional[Caps] = None) -> LStructure:
    """`rounds` rounds of the free construction restricted to Procedure B"""
    budget = Caps.b_only(caps.b if caps is not None else Caps().b)
    state = start_state(s.diagram, s.root().geometry.induced(s.vertices()) if s.parent else s.geometry)
    for _ in range(rounds):
        run_round(state, budget)
    return LStructure(state.geometry, s.diagram, stage=s.stage + rounds)


def relabel(s: LStructure, offset: int) -> Tuple[LStructure, Embedding]:
    """An isomorphic copy with vertex ids shifted past `offset`, as a standalone structure"""
    shift = {v: offset + k for k, v in enumerate(s.vertices())}
    g = Geometry(s.diagram.types)
    for v in s.vertices():
        g.add_vertex(s.geometry.type_of(v), vid=shift[v])
    for p, q in s.geometry.incidences():
        g.add_incidence(shift[p], shift[q])
    return LStructure(g, s.diagram, stage=s.stage), Embedding(shift)


# ---------------------------------------------------------------------------
# Harness
# ---------------------------------------------------------------------------

class SampleFailure(BaseModel):
    """One failed check; `seed` replays the sample through numpy.random.default_rng"""

    sample: int
    seed: List[int]
    check: str
    reason: str


class AmalgamationReport(BaseModel):
    diagram: dict
    family: str
    seed: int
    samples: int
    size_bound: int
    base_vertices: int
    hereditary_pass: int = 0
    hereditary_fail: int = 0
    amalgamation_pass: int = 0
    amalgamation_fail: int = 0
    joint_embedding_cases: int = 0
    joint_embedding_pass: int = 0
    function_preserving: int = 0
    function_mismatches: int = 0
    iso_extension_pass: int = 0
    iso_extension_fail: int = 0
    failures: List[SampleFailure] = []
    notes: List[str] = []


def _random_closure(base: LStructure, pool: List[int], size: int, bound: int, rng: np.random.Generator) -> Set[int]:
    """Closure of a random seed drawn from pool, shrinking the seed until it fits the bound"""
    if not pool:
        return set()
    size = min(size, len(pool))
    while size > 0:
        seed = [int(v) for v in rng.choice(pool, size=size, replace=False)]
        members = closure(base, seed)
        if len(members) <= bound:
            return members
        size -= 1
    return set()


def check_amalgamation_property(
    samples: int,
    size_bound: int,
    diagram: CoxeterDiagram,
    seed: int = 0,
    base_rounds: int = 3,
    base_caps: Optional[Caps] = None,
    close_rounds: int = 1,
) -> AmalgamationReport:
    name = family(diagram)
    if name is None:
        raise PreconditionError(f"{diagram!r} is not of type C3, H3 or F4")
    base_state = build_free(diagram, None, base_rounds, base_caps or Caps(a=6, b=6, c=6))
    base = LStructure(base_state.geometry, diagram, stage=base_state.stage)
    pool = base.vertices()
    report = AmalgamationReport(
        diagram=serialize_diagram(diagram),
        family=name,
        seed=seed,
        samples=samples,
        size_bound=size_bound,
        base_vertices=len(pool),
    )
    logger.info(f"amalgamation harness on {name}: base of {len(pool)} vertices, {samples} samples")

    for k in range(samples):
        rng = np.random.default_rng([seed, k])
        b_members = _random_closure(base, pool, int(rng.integers(1, 4)), size_bound, rng)
        b_sub = LStructure(base.geometry.induced(b_members), diagram, stage=base.stage, parent=base)

        a_size = int(rng.integers(0, 3))
        a_members = _random_closure(base, sorted(b_members), a_size, size_bound, rng) if a_size else set()
        a_sub = LStructure(base.geometry.induced(a_members), diagram, stage=base.stage, parent=base)
        if not a_members:
            report.joint_embedding_cases += 1

        # hereditary: a generated substructure of a member is again in the class
        failure = first_failure(a_sub.geometry, diagram)
        if failure is None:
            report.hereditary_pass += 1
        else:
            report.hereditary_fail += 1
            report.failures.append(SampleFailure(sample=k, seed=[seed, k], check='hereditary', reason=failure.property_name))

        c_extra = [int(v) for v in rng.choice(pool, size=min(2, len(pool)), replace=False)]
        c_members = closure(base, sorted(a_members) + c_extra)
        if len(c_members) > size_bound:
            c_members = a_members
        c_sub = LStructure(base.geometry.induced(c_members), diagram, stage=base.stage, parent=base)
        c_copy, shift = relabel(c_sub, offset=max(pool) + 1)

        iota = Embedding.identity(sorted(a_members))
        kappa = Embedding({v: shift(v) for v in sorted(a_members)})
        try:
            amalgam, lam, mu = free_amalgam(a_sub, b_sub, c_copy, iota, kappa)
            closed = close_into_class(amalgam, close_rounds)
            square = all(lam(iota(v)) == mu(kappa(v)) for v in a_members)
            lam_ok = is_embedding(b_sub.geometry, closed.geometry, lam)
            mu_ok = is_embedding(c_copy.geometry, closed.geometry, mu)
            if square and lam_ok and mu_ok:
                report.amalgamation_pass += 1
                if not a_members:
                    report.joint_embedding_pass += 1
            else:
                report.amalgamation_fail += 1
                report.failures.append(SampleFailure(
                    sample=k, seed=[seed, k], check='amalgamation',
                    reason=f"square={square} lambda={lam_ok} mu={mu_ok}",
                ))
            mismatch = function_mismatch(b_sub, closed, lam, rng) or function_mismatch(c_copy, closed, mu, rng)
            if mismatch is None:
                report.function_preserving += 1
            else:
                report.function_mismatches += 1
                report.failures.append(SampleFailure(sample=k, seed=[seed, k], check='functions', reason=mismatch))
                logger.debug(f"sample {k}: embeddings do not commute with the functions: {mismatch}")
        except (InvariantViolation, IsomorphismError) as e:
            report.amalgamation_fail += 1
            report.failures.append(SampleFailure(sample=k, seed=[seed, k], check='amalgamation', reason=str(e)))
            logger.warning(f"sample {k}: amalgamation failed: {e}")

        targets = sorted(set(pool) - a_members)
        if targets:
            target = int(rng.choice(targets))
            result = extend_partial_iso(base, Embedding.identity(sorted(a_members)), target)
            if result.status == 'extended':
                report.iso_extension_pass += 1
            else:
                report.iso_extension_fail += 1
                report.failures.append(SampleFailure(sample=k, seed=[seed, k], check='iso-extension', reason=result.status))

    if report.function_mismatches:
        report.notes.append(
            "function mismatches are not amalgamation failures: Procedure B joins residue vertices at "
            "distance above m by a path of m-1 edges, and the free amalgam adds the incidences (F) "
            "forces, so a unique shortest path of B or C can be shortened or duplicated in D"
        )
    logger.info(
        f"harness done: hereditary {report.hereditary_pass}/{samples}, "
        f"amalgamation {report.amalgamation_pass}/{samples}, iso extension {report.iso_extension_pass}, "
        f"function mismatches {report.function_mismatches}"
    )
    return report


# ---------------------------------------------------------------------------
# Back-and-forth
# ---------------------------------------------------------------------------

class IsoExtension(BaseModel):
    status: Literal['extended', 'budget', 'no-candidate']
    target: int
    image: Optional[int] = None
    mapping: Optional[Dict[int, int]] = None
    explored: int = 0


def _propagate(s: LStructure, mapping: Dict[int, int]) -> Optional[Dict[int, int]]:
    """Push the map through every function application until nothing new appears"""
    g = s.root().geometry
    if any(g.type_of(v) != g.type_of(w) for v, w in mapping.items()):
        return None
    result = dict(mapping)
    while True:
        domain = sorted(result)
        additions: Dict[int, int] = {}

        def assign(v: int, w: int) -> bool:
            known = result.get(v, additions.get(v))
            if known is not None:
                return known == w
            if g.type_of(v) != g.type_of(w):
                return False
            additions[v] = w
            return True

        for x in domain:
            local = [v for v in domain if g.incident(x, v) and v != x]
            for y, z in combinations(local, 2):
                src = unique_shortest_path(_residue_graph(s, x), y, z)
                dst = unique_shortest_path(_residue_graph(s, result[x]), result[y], result[z])
                if (src is None) != (dst is None) or (src is not None and len(src) != len(dst)):
                    return None
                for v, w in zip(src or [], dst or []):
                    if not assign(v, w):
                        return None
        for i, j in _g_pairs(s.diagram):
            of_type = [v for v in domain if g.type_of(v) == i]
            for x, y in combinations(of_type, 2):
                v = eval_g(s, i, j, x, y)
                w = eval_g(s, i, j, result[x], result[y])
                if (v == x) != (w == result[x]):
                    return None
                if v != x and not assign(v, w):
                    return None
        if not additions:
            break
        result.update(additions)

    if len(set(result.values())) != len(result):
        return None
    for a, b in combinations(sorted(result), 2):
        if g.incident(a, b) != g.incident(result[a], result[b]):
            return None
    return result


def extend_partial_iso(s: LStructure, iso: Embedding, target: int, budget: int = 1000) -> IsoExtension:
    """One forth step: an image for target so the map stays an isomorphism of generated closures"""
    g = s.root().geometry
    domain = set(iso.mapping)
    if target in domain:
        raise PreconditionError(f"target {target} is already in the domain")
    if target not in g:
        raise PreconditionError(f"target {target} is not a vertex")
    if closure(s, domain) != domain or closure(s, iso.image()) != iso.image():
        raise IsomorphismError("domain and image must be generated substructures")
    if _propagate(s, iso.mapping) != iso.mapping:
        raise IsomorphismError("map is not an isomorphism of the generated substructures")

    image = iso.image()
    kind = g.type_of(target)
    candidates = [target] if target not in image else []
    candidates += [v for v in g.vertices_of_type(kind) if v != target and v not in image]
    explored = 0
    for c in candidates:
        if explored == budget:
            return IsoExtension(status='budget', target=target, explored=explored)
        explored += 1
        extended = _propagate(s, {**iso.mapping, target: c})
        if extended is not None:
            return IsoExtension(status='extended', target=target, image=c, mapping=extended, explored=explored)
    return IsoExtension(status='no-candidate', target=target, explored=explored)
