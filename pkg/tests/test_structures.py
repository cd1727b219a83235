import json

import pytest
from hypothesis import given, settings

from conftest import TWO, fan, isolated, structures, tetrahedron, triangle
from flatgeom import (
    PointedStructure,
    Signature,
    Structure,
    StructureError,
    are_isomorphic,
    canonical_form,
    find_embeddings_over,
    free_amalgam,
    induced_substructure,
    predimension,
)


def test_predimension_examples():
    assert predimension(isolated(5), range(1, 6)) == 5
    assert predimension(tetrahedron(), [1, 2, 3, 4]) == 0
    assert predimension(tetrahedron(), [1, 2, 3]) == 2


def test_weights_count_per_edge():
    sig = Signature.of(("R", 3, 2))
    S = Structure.build(sig, [1, 2, 3], {"R": [[1, 2, 3]]})
    assert predimension(S, [1, 2, 3]) == 1


def test_unknown_elements_rejected():
    with pytest.raises(StructureError):
        predimension(triangle(), [1, 9])
    with pytest.raises(StructureError):
        induced_substructure(triangle(), [4])


def test_bad_hyperedges_rejected():
    with pytest.raises(StructureError):
        Structure.ternary([1, 2, 3], [[1, 2]])
    with pytest.raises(StructureError):
        Structure.ternary([1, 2], [[1, 2, 3]])
    with pytest.raises(StructureError):
        Signature.of(2)


def test_induced_substructure():
    F1 = tetrahedron()
    assert induced_substructure(F1, [1, 2, 3]) == triangle()
    assert induced_substructure(F1, F1.elements) == F1
    empty = induced_substructure(F1, [])
    assert len(empty) == 0 and predimension(empty, []) == 0


def test_free_amalgam_of_two_triangles():
    B1 = Structure.ternary([1, 2, 3], [[1, 2, 3]])
    B2 = Structure.ternary([1, 2, 4], [[1, 2, 4]])
    E = free_amalgam(B1, B2, [1, 2])
    assert len(E) == 4 and E.edge_count == 2
    assert predimension(E, E.elements) == 2


def test_free_amalgam_identity_and_disjoint():
    B = triangle()
    assert free_amalgam(B, B, B.elements) == B
    S2 = Structure.ternary([4, 5, 6, 7], [[4, 5, 6], [5, 6, 7]])
    E = free_amalgam(B, S2, [])
    assert predimension(E, E.elements) == 2 + 2


def test_free_amalgam_rejects_disagreement():
    B1 = Structure.ternary([1, 2, 3], [[1, 2, 3]])
    B2 = Structure.ternary([1, 2, 3, 4])
    with pytest.raises(StructureError):
        free_amalgam(B1, B2, [1, 2, 3])
    with pytest.raises(StructureError):
        free_amalgam(B1, Structure.ternary([3, 4]), [])


def test_embeddings_over_a_pair():
    pattern = PointedStructure(triangle(), [1, 2])
    assert len(find_embeddings_over(pattern, fan(), {1: 1, 2: 2})) == 3
    assert find_embeddings_over(pattern, isolated(3), {1: 1, 2: 2}) == []
    S = fan()
    ident = {x: x for x in S.elements}
    assert ident in find_embeddings_over(PointedStructure(S, S.elements), S, ident)


def test_embedding_base_map_must_be_isomorphism():
    pattern = PointedStructure(triangle(), [1, 2, 3])
    with pytest.raises(StructureError):
        find_embeddings_over(pattern, isolated(3), {1: 1, 2: 2, 3: 3})


def test_canonical_form_examples():
    F1 = tetrahedron()
    moved = F1.relabel({1: 7, 2: 3, 3: 9, 4: 1})
    assert canonical_form(PointedStructure(F1, [])) == canonical_form(PointedStructure(moved, []))
    assert canonical_form(PointedStructure(triangle(), [1, 2])) != canonical_form(PointedStructure(isolated(3), [1, 3]))


def test_base_position_matters():
    S = Structure.ternary([1, 2, 3, 4], [[1, 2, 3]])
    inside = PointedStructure(S, [1, 2])
    outside = PointedStructure(S, [1, 4])
    assert not are_isomorphic(inside, outside)
    assert are_isomorphic(inside, PointedStructure(S, [2, 3]))


@given(structures(max_n=6, sig=TWO))
def test_json_round_trip(S):
    assert Structure.from_json(json.loads(json.dumps(S.to_json()))) == S


@given(structures(max_n=6))
@settings(max_examples=60)
def test_canonical_form_ignores_labels(S):
    perm = dict(zip(S.order, reversed([x + 10 for x in S.order])))
    base = S.order[:2]
    P = PointedStructure(S, base)
    Q = PointedStructure(S.relabel(perm), [perm[x] for x in base])
    assert canonical_form(P) == canonical_form(Q)


@given(structures(max_n=5), structures(max_n=3))
@settings(max_examples=60)
def test_free_amalgam_is_additive(S1, S2):
    S2 = S2.relabel({x: x + 20 for x in S2.elements})
    E = free_amalgam(S1, S2, [])
    assert predimension(E, E.elements) == predimension(S1, S1.elements) + predimension(S2, S2.elements)
