import pytest
from hypothesis import given, settings

from conftest import fan, isolated, structures, tetrahedron, triangle
from oracles import member
from flatgeom import (
    ClassSpec,
    ExtensionKind,
    MuFunction,
    PointedStructure,
    Structure,
    StructureError,
    Signature,
    canonical_form,
    induced_substructure,
    classify_extension,
    enumerate_msa_within,
    lemma21_check,
    max_disjoint_copies,
    membership,
)
from flatgeom.classes import ResourceCapError, brute_force_classify, brute_force_msa
from flatgeom.dimension import is_self_sufficient

PAIR_TYPE = PointedStructure(triangle(), [1, 2])


def test_classify_examples():
    assert classify_extension([1, 2], triangle()) is ExtensionKind.MSA
    assert classify_extension([], tetrahedron()) is ExtensionKind.MSA
    assert classify_extension([1], isolated(2)) is ExtensionKind.NOT_ALGEBRAIC
    assert classify_extension([1, 2, 3], triangle()) is ExtensionKind.NOT_EXTENSION


def test_two_copies_are_only_algebraic():
    # one copy already keeps delta at 2, so the pair sits inside properly
    assert classify_extension([1, 2], Structure.ternary([1, 2, 3, 4], [[1, 2, 3], [1, 2, 4]])) is ExtensionKind.ALGEBRAIC


def test_lemma21_examples():
    assert lemma21_check([1, 2], triangle())
    assert lemma21_check([], tetrahedron())
    with pytest.raises(StructureError):
        lemma21_check([1], isolated(2))


def test_msa_in_the_fan():
    found = enumerate_msa_within(fan())
    over_pair = [(sorted(i.base), sorted(i.new)) for i in found if i.base == {1, 2}]
    assert over_pair == [([1, 2], [3]), ([1, 2], [4]), ([1, 2], [5])]
    # {k, l} over 1 and 2 is also minimal: delta({1,2,k,l}) = 2 = delta({k,l})
    assert len(found) == 12
    assert found == brute_force_msa(fan())


def test_msa_small_cases():
    assert enumerate_msa_within(isolated(4)) == []
    assert len(enumerate_msa_within(triangle())) == 3
    assert len(enumerate_msa_within(fan(), max_base=2, max_ext=1)) == 9


def test_msa_cap():
    with pytest.raises(ResourceCapError) as err:
        enumerate_msa_within(fan(), limit=4)
    assert len(err.value.partial) == 5


def test_disjoint_copies():
    assert max_disjoint_copies(fan(), PAIR_TYPE, {1: 1, 2: 2})[0] == 3
    assert max_disjoint_copies(triangle(), PAIR_TYPE, {1: 1, 2: 2})[0] == 1
    assert max_disjoint_copies(isolated(3), PAIR_TYPE, {1: 1, 2: 2})[0] == 0


def test_fan_is_not_in_cmu():
    res = membership(fan(), ClassSpec.Cmu())
    assert not res
    assert res.witness["base"] == [1, 2] and res.witness["mu"] == 2
    assert len(res.witness["copies"]) == 3
    assert membership(fan(), ClassSpec.C0())


def test_k0_rejects_the_tetrahedron():
    assert membership(tetrahedron(), ClassSpec.C0())
    res = membership(tetrahedron(), ClassSpec.K0())
    assert not res
    T = res.witness["subset"]
    assert len(T) <= 3 and not is_self_sufficient(T, tetrahedron())[0]


def test_other_membership_examples():
    assert membership(triangle(), ClassSpec.C0prime(2))
    for spec in (ClassSpec.C0(), ClassSpec.Cmu(), ClassSpec.K0(), ClassSpec.Kmu()):
        assert membership(Structure.ternary([]), spec)
    assert not membership(tetrahedron(), ClassSpec.C0prime(2))
    negative = Structure.ternary([1, 2, 3, 4, 5], [[1, 2, 3], [1, 2, 4], [1, 2, 5], [3, 4, 5], [1, 3, 4], [2, 3, 5]])
    assert membership(negative, ClassSpec.C0()).reason == "negative predimension"


def test_mu_overrides():
    code = canonical_form(PAIR_TYPE)
    mu = MuFunction({code: 3})
    assert membership(fan(), ClassSpec.Cmu(mu))
    assert mu.to_json() == [{"code": code, "value": 3}]
    assert MuFunction.from_json(mu.to_json()) == mu
    with pytest.raises(ValueError):
        MuFunction({code: -1})


def test_signature_checks():
    S = Structure.build(Signature.of(4), [1, 2, 3, 4], {"R": [[1, 2, 3, 4]]})
    with pytest.raises(StructureError):
        membership(S, ClassSpec.K0())
    with pytest.raises(StructureError):
        membership(triangle(), ClassSpec.C0prime(3))
    assert membership(S, ClassSpec.C0prime(3))


def test_parse():
    assert ClassSpec.parse("c0prime:3") == ClassSpec.C0prime(3)
    assert str(ClassSpec.parse("KMU")) == "Kmu"
    with pytest.raises(ValueError):
        ClassSpec.parse("c1")


@given(structures(max_n=6))
@settings(max_examples=120)
def test_classify_matches_brute_force(S):
    for k in range(len(S)):
        Y = S.order[:k]
        assert classify_extension(Y, S) is brute_force_classify(Y, S)


@given(structures(max_n=6, max_edges=7))
@settings(max_examples=150)
def test_msa_matches_brute_force(S):
    assert enumerate_msa_within(S) == brute_force_msa(S)


@given(structures(max_n=7, max_edges=8))
@settings(max_examples=100)
def test_every_msa_passes_lemma21(S):
    for inst in enumerate_msa_within(S):
        assert lemma21_check(inst.base, induced_substructure(S, inst.elements))


SPECS = [ClassSpec.C0(), ClassSpec.Cmu(), ClassSpec.K0(), ClassSpec.Kmu(), ClassSpec.Cmu(MuFunction(floor=0))]


@given(structures(max_n=6, max_edges=7))
@settings(max_examples=100)
def test_membership_matches_brute_force(S):
    for spec in SPECS:
        assert bool(membership(S, spec)) == member(S, spec)


@given(structures(max_n=6, sig=Signature.of(4)))
@settings(max_examples=60)
def test_c0prime_matches_brute_force(S):
    spec = ClassSpec.C0prime(3)
    assert bool(membership(S, spec)) == member(S, spec)
