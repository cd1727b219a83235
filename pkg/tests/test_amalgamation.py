import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import structures, tetrahedron, triangle
from flatgeom import (
    ClassSpec,
    Structure,
    StructureError,
    are_isomorphic,
    canonical_form,
    free_amalgam,
    induced_substructure,
    membership,
    predimension,
)
from flatgeom.amalgamation import (
    AmalgamationError,
    GeneratorError,
    GenericChain,
    algebraic_extension_generator,
    amalgamate,
    build_generic_approx,
    enumerate_extensions,
    strong_steps,
    verify_amalgam,
)
from flatgeom.classes import MuFunction, max_disjoint_copies
from flatgeom.dimension import d_closure, is_d_closed, is_self_sufficient, self_sufficient_closure
from flatgeom.structures import PointedStructure, is_embedding
from flatgeom.suites import _random_extension, random_cmu_problem

C0, CMU = ClassSpec.C0(), ClassSpec.Cmu()
TWO_COPIES = Structure.ternary([1, 2, 3, 4], [[1, 2, 3], [1, 2, 4]])


def test_identifies_copies_over_a_pair():
    am = amalgamate(TWO_COPIES, TWO_COPIES, [1, 2], CMU)
    assert am.structure == TWO_COPIES
    assert am.f2 == {x: x for x in TWO_COPIES.elements}
    assert all(s["how"] == "identified" for s in am.steps)
    free = TWO_COPIES.relabel({1: 1, 2: 2, 3: 5, 4: 6})
    assert not membership(free_amalgam(TWO_COPIES, free, [1, 2]), CMU)


def test_free_case():
    B1 = Structure.ternary([1, 2, 3], [[1, 2, 3]])
    B2 = Structure.ternary([1, 2, 4])
    am = amalgamate(B1, B2, [1, 2], C0)
    assert am.structure == free_amalgam(B1, B2.relabel({1: 1, 2: 2, 4: 4}), [1, 2])


def test_base_equal_to_one_side():
    B2 = triangle()
    am = amalgamate(Structure.ternary([1, 2]), B2, [1, 2], C0)
    assert are_isomorphic(PointedStructure(am.structure, [1, 2]), PointedStructure(B2, [1, 2]))


def test_inputs_are_checked():
    with pytest.raises(StructureError):
        amalgamate(triangle(), Structure.ternary([1, 2, 3]), [1, 2, 3], C0)
    with pytest.raises(StructureError):
        amalgamate(tetrahedron(), tetrahedron(), [1, 2], C0)


def test_tight_mu_has_no_amalgam():
    # mu = 0 on the pair type forbids the triangle over any pair
    code = canonical_form(PointedStructure(triangle(), [1, 2]))
    spec = ClassSpec.Cmu(MuFunction({code: 0}))
    with pytest.raises(StructureError):
        amalgamate(triangle(), triangle(), [1, 2], spec)


def test_strong_steps():
    F = Structure.ternary([1, 2, 3, 4, 5], [[1, 2, 3], [1, 4, 5]])
    steps = strong_steps([1], F)
    assert steps == [{1, 2}, {1, 2, 3}, {1, 2, 3, 4}, F.elements]
    assert all(is_self_sufficient(C, F)[0] for C in steps)
    with pytest.raises(StructureError):
        strong_steps([1], tetrahedron())


def test_extension_catalogue():
    assert enumerate_extensions(Structure.ternary([]), 1, C0) == [Structure.ternary([1])]
    two = enumerate_extensions(Structure.ternary([1, 2]), 1, C0)
    assert sorted(S.edge_count for S in two) == [0, 1]
    assert all(is_self_sufficient([1, 2], S)[0] for S in two)
    assert enumerate_extensions(triangle(), 0, C0) == [triangle()]


def test_generic_small_cases():
    chain = build_generic_approx(C0, 1, 2)
    assert [len(S) for S in chain.stages] == [0, 1, 2]
    chain = build_generic_approx(CMU, 3, 1)
    assert membership(chain.final, CMU)
    pair = PointedStructure(triangle(), [1, 2])
    S = chain.final
    for x in S.order:
        for y in S.order:
            if x < y:
                assert max_disjoint_copies(S, pair, {1: x, 2: y})[0] <= 2
    chain = build_generic_approx(C0, 0, 3)
    assert all(len(S) == 0 for S in chain.stages) and chain.log == []


def test_chain_round_trip(tmp_path):
    chain = build_generic_approx(CMU, 2, 2)
    path = tmp_path / "chain.json"
    chain.save(str(path))
    back = GenericChain.load(str(path))
    assert back.stages == chain.stages and back.spec == chain.spec
    with pytest.raises(StructureError):
        back.push(Structure.ternary([]))


def test_generator_examples():
    V = algebraic_extension_generator(Structure.ternary([1]), 4, C0)
    assert len(V) == 5 and predimension(V, V.elements) == 1
    assert is_self_sufficient([1], V)[0] and d_closure([1], V) == V.elements
    assert algebraic_extension_generator(Structure.ternary([]), 4, C0) == tetrahedron()
    X = triangle()
    assert algebraic_extension_generator(X, 0, CMU) == X


def test_generator_line_points():
    X = Structure.ternary([1, 2, 3])
    V = algebraic_extension_generator(X, 6, ClassSpec.Kmu())
    assert predimension(V, V.elements) == 3 and membership(V, ClassSpec.Kmu())
    with pytest.raises(GeneratorError):
        algebraic_extension_generator(Structure.ternary([]), 3, ClassSpec.K0())


@pytest.mark.parametrize("seed", range(25))
def test_random_cmu_problems(seed):
    B1, B2, A = random_cmu_problem(random.Random(seed))
    try:
        am = amalgamate(B1, B2, A, CMU)
    except AmalgamationError as exc:
        pytest.fail(f"no amalgam: {exc.obstruction}")
    verify_amalgam(am, B1, B2, CMU)
    C = am.structure
    assert membership(C, CMU)
    assert is_embedding(B2, C, am.f2) and is_self_sufficient(am.f2.values(), C)[0]


@given(structures(max_n=5), st.integers(0, 3), st.randoms(use_true_random=False))
@settings(max_examples=80)
def test_free_amalgam_over_a_strong_base(B1, extra, rnd):
    A = self_sufficient_closure(B1.order[: len(B1) // 2], B1)
    B2 = _random_extension(rnd, induced_substructure(B1, A), extra, B1.signature, C0, 50)
    E = free_amalgam(B1, B2, A)
    assert is_self_sufficient(B2.elements, E)[0]
    delta = lambda S: predimension(S, S.elements)
    assert delta(E) == delta(B1) + delta(B2) - predimension(B1, A)
    if is_d_closed(A, B1):
        assert is_d_closed(B2.elements, E)
