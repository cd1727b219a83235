import pytest
from hypothesis import given, settings

from conftest import isolated, structures, tetrahedron, triangle
from flatgeom import SizeCapError, closed_sets, geometry_isomorphic, geometry_of, independent
from flatgeom.pregeometry import brute_force_isomorphic, flat_lattice_dot, is_matroid_rank


def test_free_geometry():
    G = geometry_of(isolated(4))
    assert len(G) == 4 and G.total_rank == 4
    assert independent(G, [0, 1, 2])


def test_tetrahedron_geometry_is_empty():
    G = geometry_of(tetrahedron())
    assert len(G) == 0 and G.base_closure == {1, 2, 3, 4}
    assert [F for F, _ in closed_sets(G)] == [frozenset()]


def test_triangle_is_a_line():
    G = geometry_of(triangle())
    assert len(G) == 3 and G.total_rank == 2
    assert all(independent(G, p) for p in ([0, 1], [0, 2], [1, 2]))
    assert not independent(G, [0, 1, 2])
    assert not independent(G, [0, 0])
    flats = [F for F, _ in closed_sets(G)]
    assert flats == [frozenset(), {0}, {1}, {2}, {0, 1, 2}]


def test_localised_triangle():
    G = geometry_of(triangle(), [1])
    assert G.points == (frozenset({2, 3}),)
    assert G.total_rank == 1


def test_free_on_two_flats():
    G = geometry_of(isolated(2))
    assert [F for F, _ in closed_sets(G)] == [frozenset(), {0}, {1}, {0, 1}]


def test_isomorphism_examples():
    free = geometry_of(isolated(3))
    pm = geometry_isomorphic(free, geometry_of(isolated(3)))
    assert pm is not None and sorted(pm.values()) == [0, 1, 2]
    empty = geometry_of(tetrahedron())
    assert geometry_isomorphic(empty, empty) == {}
    assert geometry_isomorphic(geometry_of(triangle()), free) is None


def test_flat_cap():
    with pytest.raises(SizeCapError):
        closed_sets(geometry_of(isolated(6)), max_points=5)


def test_dot_output():
    dot = flat_lattice_dot(geometry_of(triangle()))
    assert dot.startswith("digraph flats {") and dot.count("->") == 6


@given(structures(max_n=6))
@settings(max_examples=80)
def test_rank_is_a_matroid(S):
    G = geometry_of(S)
    assert is_matroid_rank(G.rank, range(len(G)))


@given(structures(max_n=5), structures(max_n=5))
@settings(max_examples=60)
def test_isomorphism_matches_brute_force(S, T):
    G, H = geometry_of(S), geometry_of(T)
    assert (geometry_isomorphic(G, H) is not None) == brute_force_isomorphic(G, H)
