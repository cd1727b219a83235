import pytest

from conftest import tetrahedron
from flatgeom import ClassSpec, MuFunction, PointedStructure, Structure, canonical_form, membership
from flatgeom.amalgamation import build_generic_approx
from flatgeom.construction import (
    ConstructionTrace,
    ExtensionProblem,
    PreconditionError,
    back_and_forth,
    check_mu,
    construct_extension,
    decompose,
    drop_step2_edge,
    inject_copies,
    partial_iso_ok,
    random_problem,
    three_point_lines,
    verify_claims,
)
from flatgeom.dimension import is_self_sufficient
from flatgeom.pregeometry import geometry_of


def one_point_problem():
    # W empty, A = {a}, B = {a, b}; X = {x} inside A' = {x, a'}
    return ExtensionProblem([], Structure.ternary([1]), Structure.ternary([1, 2]), [10], Structure.ternary([10, 11]), {1: 11})


def test_decompose_examples():
    d = decompose(Structure.ternary([1, 2]), [])
    assert d.base == set() and d.classes == ({1}, {2}) and d.cross == ()
    assert decompose(tetrahedron(), []).classes == ()
    d = decompose(Structure.ternary([1, 2, 3, 4], [[1, 2, 3]]), [1, 2])
    assert d.base == {1, 2, 3} and d.classes == ({4},)
    with pytest.raises(Exception):
        decompose(tetrahedron(), [1])


def test_worked_example():
    p = one_point_problem()
    t = construct_extension(p)
    assert t.claims["all_pass"]
    Bp = t.Bprime
    assert p.Aprime.elements <= Bp.elements and is_self_sufficient(p.Aprime.elements, Bp)[0]
    assert membership(Bp, ClassSpec.Cmu())
    G = geometry_of(Bp, [10])
    assert len(G) == 2 and G.total_rank == 2
    assert (1, 11) in t.fprime
    a, b = dict(t.fprime)[1], dict(t.fprime)[2]
    assert G.point_of(a) != G.point_of(b)


def test_no_new_classes():
    A = Structure.ternary([1])
    p = ExtensionProblem([], A, A, [10], Structure.ternary([10, 11]), {1: 11})
    t = construct_extension(p)
    assert t.claims["all_pass"] and t.fprime == [(1, 11)]
    # Step 2 still hangs the b_1j on the A-class; nothing is left for Step 3
    assert len(t.step2_edges) == t.m and t.rho == []


def test_bad_problems_are_refused():
    p = one_point_problem()
    p.f = {}
    with pytest.raises(PreconditionError):
        construct_extension(p)
    p = one_point_problem()
    p.B = tetrahedron()
    with pytest.raises(Exception):
        construct_extension(p)


def test_mu_below_the_bound_is_refused():
    pair = canonical_form(PointedStructure(Structure.ternary([1, 2, 3], [[1, 2, 3]]), [1, 2]))
    with pytest.raises(PreconditionError):
        check_mu(MuFunction({pair: 1}), "Cmu")
    check_mu(MuFunction(), "Cmu")


def test_trace_round_trip():
    t = construct_extension(random_problem(2))
    back = ConstructionTrace.from_json(t.to_json())
    assert back.to_json() == t.to_json()


def test_problem_round_trip():
    p = random_problem(7, "kmu")
    assert ExtensionProblem.from_json(p.to_json()).to_json() == p.to_json()


@pytest.mark.parametrize("seed", range(12))
def test_standard_claims(seed):
    p = random_problem(seed)
    t = construct_extension(p)
    assert t.claims["all_pass"]
    assert verify_claims(t, p)["all_pass"]


@pytest.mark.parametrize("seed", range(6))
def test_mutations_are_caught(seed):
    p = random_problem(seed)
    t = construct_extension(p)
    if t.step2_edges:
        assert not verify_claims(drop_step2_edge(t), p)["C2"]["pass"]
    try:
        bad = inject_copies(t)
    except ValueError:
        return
    assert not verify_claims(bad, p)["C3"]["pass"]


@pytest.mark.parametrize("seed", range(6))
def test_kmu_variant(seed):
    p = random_problem(seed, "kmu")
    assert len(p.X) == 3
    t = construct_extension(p)
    Bp = t.Bprime
    assert membership(Bp, ClassSpec.Kmu())
    assert three_point_lines(Bp) is None


@pytest.mark.parametrize("variant", ["language", "c0prime:2", "c0prime:3"])
def test_other_variants(variant):
    for seed in range(4):
        p = random_problem(seed, variant)
        t = construct_extension(p)
        assert t.claims["all_pass"]
        assert membership(t.Bprime, p.target_spec())


def test_language_lifts_arity():
    p = random_problem(3, "language")
    t = construct_extension(p)
    assert all(len(e) >= 4 for _, e in t.rho)
    assert [s.arity for s in t.Bprime.signature.symbols] == [4]


def test_back_and_forth_zero_steps():
    c = build_generic_approx(ClassSpec.C0(), 2, 2)
    res = back_and_forth(c, c, [], 0)
    assert res.maps == [[]] and res.complete


def test_back_and_forth_two_c0_chains():
    c = build_generic_approx(ClassSpec.C0(), 3, 2)
    res = back_and_forth(c, c, [], 2)
    assert res.complete and len(res.maps[-1]) >= 2
    assert partial_iso_ok(res.source.final, [], res.target.final, [], res.maps[-1]) is None


def test_back_and_forth_into_cmu():
    src = build_generic_approx(ClassSpec.C0(), 3, 3)
    tgt = build_generic_approx(ClassSpec.Cmu(), 3, 3)
    res = back_and_forth(src, tgt, [1], 3)
    assert res.complete and len(res.maps[-1]) >= 3
    assert membership(res.target.final, ClassSpec.Cmu())
    assert partial_iso_ok(res.source.final, [], res.target.final, [1], res.maps[-1]) is None
    # the inputs are left alone
    assert len(tgt.stages) == 4
