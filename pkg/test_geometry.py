"""
Tests for the incidence geometry kernel: flags, residues, rank-2 analysis
and the geometry-of-type-M verifier.
"""

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from forge.diagram import INFINITY, standard_diagram
from forge.errors import FlagError, GeometryError, PreconditionError
from forge.fixtures import complete_bipartite, cycle_geometry, disjoint_union, fano_flag_geometry, fixture_neumaier
from forge.geometry import (
    Geometry,
    canonical_cycle,
    diameter,
    distance,
    girth,
    is_generalized_ngon,
    is_geometry_of_type_M,
    is_residually_connected,
    is_thick_corank1,
    rank2_restriction,
    residue,
    shortest_cycle,
)


@pytest.fixture(scope="module")
def neumaier():
    return fixture_neumaier()


def _typed_isomorphic(a: Geometry, b: Geometry) -> bool:
    return nx.is_isomorphic(a.graph, b.graph, node_match=lambda x, y: x['type'] == y['type'])


def test_vertices_get_sequential_ids():
    g = Geometry(["1", "2"])
    assert [g.add_vertex("1"), g.add_vertex("2"), g.add_vertex("1")] == [0, 1, 2]
    assert g.vertices_of_type("1") == [0, 2]
    assert g.type_of(1) == "2"


def test_incidence_rules():
    g = Geometry(["1", "2"])
    a, b, c = g.add_vertex("1"), g.add_vertex("1"), g.add_vertex("2")
    with pytest.raises(GeometryError):
        g.add_incidence(a, b)
    with pytest.raises(GeometryError):
        g.add_incidence(a, a)
    with pytest.raises(GeometryError):
        g.add_incidence(a, 99)
    with pytest.raises(GeometryError):
        g.add_vertex("7")
    g.add_incidence(c, a)
    assert g.incident(a, c) and g.incident(c, a)
    assert g.incidences() == [(a, c)]


def test_flags_and_residue():
    g = fano_flag_geometry()
    assert g.is_flag([0, 7])
    assert not g.is_flag([0, 1])
    res = residue(g, [0])
    assert res.types == ("2",)
    assert len(res) == 3
    assert residue(g, []) == g
    with pytest.raises(FlagError):
        residue(g, [0, 1])


def test_neumaier_counts(neumaier):
    assert [len(neumaier.vertices_of_type(t)) for t in ("1", "2", "3")] == [7, 35, 15]
    assert neumaier.number_of_incidences() == 7 * 15 + 35 * 3 + 15 * 7


def test_neumaier_plane_residue_is_fano(neumaier):
    fano = fano_flag_geometry()
    for plane in neumaier.vertices_of_type("3"):
        res = residue(neumaier, [plane])
        assert res.types == ("1", "2")
        assert _typed_isomorphic(res, fano)


def test_neumaier_point_residue_is_a_quadrangle(neumaier):
    res = residue(neumaier, [0])
    view = rank2_restriction(res, "2", "3")
    assert girth(view) == 8
    assert diameter(view) == 4
    assert is_generalized_ngon(view, 4)


def test_neumaier_line_residue_is_a_digon(neumaier):
    line = neumaier.vertices_of_type("2")[0]
    res = residue(neumaier, [line])
    assert res.types == ("1", "3")
    assert nx.is_isomorphic(res.graph, complete_bipartite(3, 3).graph)
    assert is_generalized_ngon(res, 2)


def test_neumaier_is_of_type_c3(neumaier):
    verdict = is_geometry_of_type_M(neumaier, standard_diagram("C3"))
    assert verdict.passed
    assert verdict.to_dict() == {'property': 'typeM', 'status': 'pass'}
    assert is_residually_connected(neumaier)


def test_thick_corank1(neumaier):
    point, line = 0, 7
    assert is_thick_corank1(neumaier, [point, line])
    with pytest.raises(PreconditionError):
        is_thick_corank1(neumaier, [point])
    assert not is_thick_corank1(cycle_geometry(3), [0])


def test_generalized_ngons():
    assert is_generalized_ngon(fano_flag_geometry(), 3)
    assert not is_generalized_ngon(fano_flag_geometry(), 4)
    assert is_generalized_ngon(complete_bipartite(3, 4), 2)
    assert not is_generalized_ngon(complete_bipartite(2, 3), 2)
    assert not is_generalized_ngon(cycle_geometry(5), 5)
    assert not is_generalized_ngon(fano_flag_geometry(), INFINITY)
    with pytest.raises(PreconditionError):
        is_generalized_ngon(fano_flag_geometry(), 1)


def test_type_m_witnesses():
    i2_3 = standard_diagram("I2(3)")
    thin = is_geometry_of_type_M(cycle_geometry(3), i2_3)
    assert not thin.passed
    assert thin.witness['clause'] == 'thickness'

    two = disjoint_union(fano_flag_geometry(), fano_flag_geometry())
    assert not is_residually_connected(two)
    split = is_geometry_of_type_M(two, i2_3)
    assert split.witness['clause'] == 'connectivity'

    assert is_geometry_of_type_M(fano_flag_geometry(), i2_3).passed
    assert is_geometry_of_type_M(complete_bipartite(3, 3), standard_diagram("I2(2)")).passed


def test_distance_in_cycle():
    c = cycle_geometry(4)
    assert distance(c, 0, 4) == 4
    assert distance(c, 0, 1) == 1
    two = disjoint_union(c, c)
    assert distance(two, 0, 8) == INFINITY
    assert diameter(two) == INFINITY
    with pytest.raises(PreconditionError):
        distance(c, 0, 99)


def test_shortest_cycle_is_canonical():
    assert shortest_cycle(fano_flag_geometry()) is not None
    assert shortest_cycle(complete_bipartite(1, 5)) is None
    assert girth(complete_bipartite(1, 5)) == INFINITY
    assert canonical_cycle([3, 1, 2]) == [1, 2, 3]
    assert canonical_cycle([1, 5, 2, 4]) == [1, 4, 2, 5]
    assert shortest_cycle(cycle_geometry(3)) == [0, 1, 2, 3, 4, 5]


@st.composite
def bipartite_graphs(draw):
    left = draw(st.integers(min_value=1, max_value=10))
    right = draw(st.integers(min_value=1, max_value=10))
    graph = nx.Graph()
    graph.add_nodes_from(range(left + right))
    for u in range(left):
        for v in range(left, left + right):
            if draw(st.booleans()):
                graph.add_edge(u, v)
    return graph


def _brute_girth(graph: nx.Graph):
    best = INFINITY
    for u, v in list(graph.edges()):
        graph.remove_edge(u, v)
        try:
            best = min(best, nx.shortest_path_length(graph, u, v) + 1)
        except nx.NetworkXNoPath:
            pass
        graph.add_edge(u, v)
    return best


@settings(deadline=None, max_examples=100)
@given(bipartite_graphs())
def test_girth_matches_brute_force(graph):
    assert girth(graph) == _brute_girth(graph)
    cycle = shortest_cycle(graph)
    if cycle is not None:
        assert len(set(cycle)) == len(cycle)
        assert cycle[0] == min(cycle)
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            assert graph.has_edge(a, b)


@settings(deadline=None, max_examples=100)
@given(bipartite_graphs())
def test_diameter_matches_floyd_warshall(graph):
    table = nx.floyd_warshall(graph)
    longest = max(max(row.values()) for row in table.values())
    assert diameter(graph) == longest
    for a in list(graph.nodes)[:3]:
        for b in graph.nodes:
            assert distance(graph, a, b) == table[a][b]
