import pytest
from hypothesis import given, settings

from conftest import TWO, isolated, structures, tetrahedron, triangle
from oracles import closure, self_sufficient, subsets
from flatgeom import (
    Structure,
    SizeCapError,
    d_closure,
    dimension,
    dimension_report,
    is_d_closed,
    is_self_sufficient,
    self_sufficient_closure,
)
from flatgeom.dimension import brute_force_dimension
from flatgeom.structures import predimension


def test_self_sufficiency_examples():
    ok, witness = is_self_sufficient([1, 2], tetrahedron())
    assert not ok and witness == {1, 2, 3, 4}
    assert is_self_sufficient([], tetrahedron()) == (True, None)
    assert is_self_sufficient([1, 2], triangle())[0]


def test_self_sufficient_closure_examples():
    assert self_sufficient_closure([1], tetrahedron()) == {1, 2, 3, 4}
    assert self_sufficient_closure([1, 2], triangle()) == {1, 2}
    assert self_sufficient_closure([], isolated(3)) == frozenset()


def test_dimension_examples():
    assert dimension([1], tetrahedron()) == 0
    assert dimension([1, 2], triangle()) == 2
    assert dimension(range(1, 6), isolated(5)) == 5
    assert dimension([3], triangle(), over=[1, 2]) == 0
    assert dimension([2], triangle(), over=[1]) == 1


def test_report_carries_a_witness():
    r = dimension_report([1], tetrahedron())
    assert r.to_json() == {"subset": [1], "dimension": 0, "witness": [1, 2, 3, 4]}


def test_d_closure_examples():
    assert d_closure([], tetrahedron()) == {1, 2, 3, 4}
    assert d_closure([1, 2], triangle()) == {1, 2, 3}
    assert d_closure([1], isolated(4)) == {1}
    assert is_d_closed([1, 2, 3], triangle())
    assert not is_d_closed([1, 2], triangle())


def test_size_cap(monkeypatch):
    monkeypatch.setenv("FLATGEOM_MAX_ELEMENTS", "3")
    with pytest.raises(SizeCapError):
        dimension([1], isolated(4))


def test_chain_dimension():
    # x with z1..z4 and edges {x, z_i, z_i+1}: delta 5 - 3
    S = Structure.ternary(range(5), [[0, i, i + 1] for i in range(1, 4)])
    assert dimension([0], S) == 1
    assert d_closure([0, 1], S) == S.elements


@given(structures(max_n=7, sig=TWO))
@settings(max_examples=150)
def test_dimension_matches_oracle(S):
    for A in subsets(S.elements, max_size=2):
        assert dimension(A, S) == brute_force_dimension(A, S)


@given(structures(max_n=6))
@settings(max_examples=100)
def test_closures_match_oracle(S):
    for A in subsets(S.elements, max_size=2):
        assert d_closure(A, S) == closure(A, S)
        assert is_self_sufficient(A, S)[0] == self_sufficient(A, S)


@given(structures(max_n=7))
@settings(max_examples=100)
def test_self_sufficient_closure_is_least(S):
    for A in subsets(S.elements, max_size=2):
        C = self_sufficient_closure(A, S)
        assert A <= C and self_sufficient(C, S)
        assert predimension(S, C) == dimension(A, S)
