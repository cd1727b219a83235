"""Isomorphism extension between geometries of finite structures.

Given ``W <= A <= B`` in the source class, ``X <= A'`` in the target class
and an isomorphism ``f : G_W(A) -> G_X(A')``, :func:`construct_extension`
builds ``B' >= A'`` in the target class whose localised geometry over ``X``
matches ``G_W(B)`` through a map extending ``f``.

The build runs in three steps.  Step 1 makes ``A''``, the free amalgam of
``A'`` with a large algebraic extension ``V`` of ``cl(X)``.  Step 2 adds one
new class per point of ``G_W(B)``, hung off ``V`` by hyperedges
``{b_i0, b_ij} u s_ij`` (classes that meet ``A``) or by chains
``{b_ij, b_i(j+1)} u s_i`` (the others).  Step 3 copies the remaining
relations onto pairwise disjoint sets of new elements.
:func:`verify_claims` re-checks the three claims of the proof on the output.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from functools import lru_cache

from .amalgamation import (
    GeneratorError,
    GenericChain,
    algebraic_extension_generator,
    amalgamate,
    delta_zero_cores,
    free_amalgam_disjoint,
)
from .canon import base_delta_of_code, canonical_form
from .classes import ClassSpec, MuFunction, membership
from .dimension import d_closure, dimension, is_d_closed, is_self_sufficient, self_sufficient_closure
from .pregeometry import Geometry, closed_sets, geometry_isomorphic, geometry_of
from .structures import (
    PointedStructure,
    Signature,
    Structure,
    StructureError,
    induced_substructure,
    predimension,
)

VARIANTS = ("standard", "kmu", "c0prime", "language")
DEFAULT_TARGET = {"standard": "cmu", "kmu": "kmu", "language": "c0"}


class PreconditionError(ValueError):
    """The problem or the mu-function does not meet the hypotheses."""


class ConstructionBug(RuntimeError):
    """A built B' failed its own claim checks.  Carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


# -- decomposition -----------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    base: frozenset
    classes: tuple[frozenset, ...]
    cross: tuple[tuple[str, frozenset], ...]

    def to_json(self) -> dict:
        return {
            "base": sorted(self.base),
            "classes": [sorted(c) for c in self.classes],
            "cross": [[n, sorted(e)] for n, e in self.cross],
        }


def decompose(B: Structure, W, A=None) -> Decomposition:
    """cl_B(W), the d-dependence classes over W outside it, and the cross relations.

    A relation is cross when it lies in no ``B_0 u B_i``; passing ``A``
    (a structure or element set) also drops those inside A.
    """
    W = B.check_subset(W)
    ok, _ = is_self_sufficient(W, B)
    if not ok:
        raise StructureError("W is not self-sufficient in B")
    G = geometry_of(B, W)
    B0 = G.base_closure
    classes = G.points
    inA = frozenset() if A is None else frozenset(A.elements if isinstance(A, Structure) else A)
    cross = []
    for name, e in B.edges():
        if e <= B0 or any(e <= B0 | C for C in classes):
            continue
        if A is not None and e <= inA:
            continue
        cross.append((name, e))
    return Decomposition(B0, classes, tuple(sorted(cross, key=lambda t: (t[0], sorted(t[1])))))


# -- problems and traces -----------------------------------------------------


def _variant_parts(variant: str) -> tuple[str, int | None]:
    v = variant.lower()
    if v.startswith("c0prime"):
        return "c0prime", int(v.split(":", 1)[1]) if ":" in v else None
    if v not in VARIANTS:
        raise PreconditionError(f"unknown variant {variant!r}")
    return v, None


@dataclass
class ExtensionProblem:
    """``W <= A <= B`` (source), ``X <= A'`` (target) and a point map ``f``.

    ``f`` sends an element of each class of G_W(A) to an element of the
    matching class of G_X(A').  ``target`` names the target class; when
    omitted it follows from the variant.
    """

    W: frozenset
    A: Structure
    B: Structure
    X: frozenset
    Aprime: Structure
    f: dict
    variant: str = "standard"
    target: str | None = None

    def __post_init__(self):
        self.W = frozenset(self.W)
        self.X = frozenset(self.X)
        self.f = {int(a): int(b) for a, b in dict(self.f).items()}

    def target_spec(self, mu: MuFunction | None = None) -> ClassSpec:
        kind, k = _variant_parts(self.variant)
        text = self.target or (f"c0prime:{k}" if kind == "c0prime" else DEFAULT_TARGET[kind])
        return ClassSpec.parse(text, mu)

    def to_json(self) -> dict:
        return {
            "W": sorted(self.W),
            "A": self.A.to_json(),
            "B": self.B.to_json(),
            "X": sorted(self.X),
            "Aprime": self.Aprime.to_json(),
            "f": sorted([a, b] for a, b in self.f.items()),
            "variant": self.variant,
            "target": self.target,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ExtensionProblem":
        return cls(
            W=data.get("W", []),
            A=Structure.from_json(data["A"]),
            B=Structure.from_json(data["B"]),
            X=data.get("X", []),
            Aprime=Structure.from_json(data["Aprime"]),
            f={a: b for a, b in data.get("f", [])},
            variant=data.get("variant", "standard"),
            target=data.get("target"),
        )

    @classmethod
    def load(cls, path: str) -> "ExtensionProblem":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass
class ConstructionTrace:
    """Everything built on the way to B'.

    Class lists are indexed alike: position i holds B_i, its A-part
    (empty for i >= r), A'_i and B'_i.
    """

    variant: str
    target: str
    symbol: str
    m: int
    r: int
    A0: frozenset
    B0: frozenset
    classes: list
    Aclasses: list
    cross: list
    A0prime: frozenset
    Aprime_classes: list
    V: Structure
    Asecond: frozenset
    b0: dict
    b: dict
    s: dict
    step2_edges: list
    rho: list
    Bprime: Structure
    Bprime0: frozenset
    Bprime_classes: list
    fprime: list
    claims: dict = field(default_factory=dict)
    attempts: int = 1

    def to_json(self) -> dict:
        srt = lambda c: sorted(c)
        return {
            "variant": self.variant,
            "target": self.target,
            "symbol": self.symbol,
            "m": self.m,
            "r": self.r,
            "decomposition": {
                "A0": srt(self.A0),
                "B0": srt(self.B0),
                "classes": [srt(c) for c in self.classes],
                "A_classes": [srt(c) for c in self.Aclasses],
                "cross": [[n, srt(e)] for n, e in self.cross],
                "A0prime": srt(self.A0prime),
                "Aprime_classes": [srt(c) for c in self.Aprime_classes],
            },
            "step1": {"V": self.V.to_json(), "Asecond": srt(self.Asecond)},
            "step2": {
                "b0": {str(i): v for i, v in sorted(self.b0.items())},
                "b": {str(i): v for i, v in sorted(self.b.items())},
                "s": {str(i): [srt(x) for x in v] for i, v in sorted(self.s.items())},
                "edges": [[n, srt(e)] for n, e in self.step2_edges],
            },
            "step3": {"rho": [[n, srt(e)] for n, e in self.rho]},
            "Bprime": self.Bprime.to_json(),
            "Bprime0": srt(self.Bprime0),
            "Bprime_classes": [srt(c) for c in self.Bprime_classes],
            "fprime": [list(p) for p in self.fprime],
            "claims": self.claims,
            "attempts": self.attempts,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ConstructionTrace":
        fz = frozenset
        dec = d["decomposition"]
        return cls(
            variant=d["variant"],
            target=d["target"],
            symbol=d["symbol"],
            m=d["m"],
            r=d["r"],
            A0=fz(dec["A0"]),
            B0=fz(dec["B0"]),
            classes=[fz(c) for c in dec["classes"]],
            Aclasses=[fz(c) for c in dec["A_classes"]],
            cross=[(n, fz(e)) for n, e in dec["cross"]],
            A0prime=fz(dec["A0prime"]),
            Aprime_classes=[fz(c) for c in dec["Aprime_classes"]],
            V=Structure.from_json(d["step1"]["V"]),
            Asecond=fz(d["step1"]["Asecond"]),
            b0={int(i): v for i, v in d["step2"]["b0"].items()},
            b={int(i): v for i, v in d["step2"]["b"].items()},
            s={int(i): [fz(x) for x in v] for i, v in d["step2"]["s"].items()},
            step2_edges=[(n, fz(e)) for n, e in d["step2"]["edges"]],
            rho=[(n, fz(e)) for n, e in d["step3"]["rho"]],
            Bprime=Structure.from_json(d["Bprime"]),
            Bprime0=fz(d["Bprime0"]),
            Bprime_classes=[fz(c) for c in d["Bprime_classes"]],
            fprime=[tuple(p) for p in d["fprime"]],
            claims=d.get("claims", {}),
            attempts=d.get("attempts", 1),
        )

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)


# -- preconditions -----------------------------------------------------------


def check_mu(mu: MuFunction, kind: str) -> None:
    """Raise unless mu meets the hypothesis of the theorem for this variant."""
    rule = "kmu" if kind == "Kmu" else "theorem"
    rep = mu.check_default()
    if not rep[rule]:
        raise PreconditionError(f"default mu fails the {rule} condition: {rep['failures'][:3]}")
    rep = mu.check((c, base_delta_of_code(c)) for c in mu.overrides)
    if not rep[rule]:
        raise PreconditionError(f"mu override fails the {rule} condition: {rep['failures'][:3]}")


def _point_map(GA: Geometry, GAp: Geometry, f: dict) -> dict[int, int]:
    """f as a map between point indices; raises when it is not a bijection of points."""
    pm = {}
    for a, ap in f.items():
        i, j = GA.point_of(a), GAp.point_of(ap)
        if i is None or j is None:
            raise PreconditionError(f"f pair ({a}, {ap}) is not a pair of geometry points")
        if pm.get(i, j) != j:
            raise PreconditionError(f"f sends the point of {a} to two points")
        pm[i] = j
    if sorted(pm) != list(range(len(GA))) or sorted(pm.values()) != list(range(len(GAp))):
        raise PreconditionError("f is not a bijection between the points")
    return pm


def flats_match(G1: Geometry, G2: Geometry, pm: dict[int, int]) -> tuple | None:
    """None when pm carries the flats of G1 (with ranks) exactly onto those of G2, else a witness."""
    F1 = {(frozenset(pm[i] for i in F), r) for F, r in closed_sets(G1)}
    F2 = set(closed_sets(G2))
    if F1 == F2:
        return None
    bad = sorted(F1 ^ F2, key=lambda t: (t[1], sorted(t[0])))[0]
    return (sorted(bad[0]), bad[1])


def check_problem(p: ExtensionProblem, spec: ClassSpec, check_target: bool = True) -> tuple[Geometry, Geometry, dict]:
    """Validate the problem.  Returns G_W(A), G_X(A') and f on point indices."""
    A, B, Ap = p.A, p.B, p.Aprime
    B.check_subset(A.elements)
    if induced_substructure(B, A.elements) != A:
        raise PreconditionError("A is not an induced substructure of B")
    A.check_subset(p.W)
    Ap.check_subset(p.X)
    if not membership(B, ClassSpec("C0")):
        raise PreconditionError("B is not in C0")
    if not is_self_sufficient(A.elements, B)[0]:
        raise PreconditionError("A is not self-sufficient in B")
    if not is_self_sufficient(p.W, A)[0]:
        raise PreconditionError("W is not self-sufficient in A")
    if not is_self_sufficient(p.X, Ap)[0]:
        raise PreconditionError("X is not self-sufficient in A'")
    spec.check_signature(Ap)
    if check_target and not membership(Ap, spec):
        raise PreconditionError(f"A' is not in {spec}")
    kind, k = _variant_parts(p.variant)
    if kind == "kmu" and (len(p.X) != 3 or dimension(p.X, Ap) != 3 or any(e <= p.X for _, e in Ap.edges())):
        raise PreconditionError("the Kmu variant needs X to be 3 independent points")
    if kind == "c0prime" and (len(p.X) != spec.k or dimension(p.X, Ap) != spec.k):
        raise PreconditionError(f"the C0prime variant needs X to be {spec.k} independent points")
    if kind == "language":
        for s in B.signature.symbols:
            Ap.signature.symbol_at_least(s.arity)
    elif kind != "language" and B.signature != Ap.signature:
        raise PreconditionError("source and target signatures differ; use the language variant")
    if any(s.weight != 1 for s in Ap.signature.symbols):
        raise PreconditionError("weighted target symbols are not supported")
    GA, GAp = geometry_of(A, p.W), geometry_of(Ap, p.X)
    pm = _point_map(GA, GAp, p.f)
    bad = flats_match(GA, GAp, pm)
    if bad is not None:
        raise PreconditionError(f"f is not an isomorphism of geometries; flat {bad}")
    return GA, GAp, pm


# -- step 1 ------------------------------------------------------------------


@lru_cache(maxsize=32)
def _core_catalogue(sym, count: int, spec: ClassSpec) -> tuple[Structure, ...]:
    return tuple(delta_zero_cores(sym, count, spec=spec))


def _cores_for(sym, count: int, spec: ClassSpec) -> tuple[Structure, ...]:
    size = 8
    while size < count:
        size *= 2
    return _core_catalogue(sym, size, spec)


def _step1_cores(base: Structure, needed: int, sym, spec: ClassSpec, nxt: int, rng) -> tuple[Structure, list, int]:
    """A'_0 plus ``needed`` disjoint delta-zero cores, one s-set drawn from each."""
    V, chosen = base, []
    want = needed + 4
    k = 0
    while len(chosen) < needed:
        cat = _cores_for(sym, want, spec)
        if k >= len(cat):
            want *= 2
            if want > 512:
                raise GeneratorError(f"only {len(chosen)} of {needed} cores fit into the class")
            continue
        K = cat[k]
        k += 1
        K = K.relabel({x: nxt + i for i, x in enumerate(K.order)})
        if K.signature != V.signature:
            K = Structure.build(V.signature, K.elements, {sym.name: K.rel(sym.name)})
        trial = free_amalgam_disjoint(V, K)
        if spec.collapsed and not membership(trial, spec, touching=K.elements):
            continue
        V = trial
        nxt += len(K)
        pool = sorted(K.order, key=lambda x: (K.degree(x), x))
        start = rng.randrange(len(pool) - (sym.arity - 2) + 1)
        chosen.append(frozenset(pool[start:start + sym.arity - 2]))
    return V, chosen, nxt


def _step1_points(base: Structure, needed: int, sym, spec: ClassSpec, nxt: int, reserve) -> tuple[Structure, list, int]:
    """A'_0 plus line points; s-sets are disjoint runs of the least used new points."""
    n2 = sym.arity - 2
    V = algebraic_extension_generator(base, needed * n2, spec, symbol=sym, reserve=set(reserve) | set(range(nxt)))
    fresh = sorted(V.elements - base.elements, key=lambda x: (V.degree(x), x))
    chosen = [frozenset(fresh[i * n2:(i + 1) * n2]) for i in range(needed)]
    return V, chosen, max(V.elements, default=0) + 1


# -- the construction --------------------------------------------------------


def _plan_rho(cross, class_of: dict, Bp_sig: Signature, language: bool) -> list[tuple[str, list[int]]]:
    """For each cross relation: target symbol and the class index of each slot."""
    plan = []
    for name, e in cross:
        met = sorted({class_of[x] for x in e if x in class_of})
        k = len(e)
        sym = Bp_sig.symbol_at_least(k) if (language or name not in Bp_sig) else Bp_sig[name]
        slots = list(met)
        i = 0
        while len(slots) < sym.arity:
            slots.append(met[i % len(met)])
            i += 1
        plan.append((sym.name, sorted(slots)))
    return plan


def _build(p: ExtensionProblem, spec: ClassSpec, m: int | None, seed: int, reserve) -> ConstructionTrace:
    rng = random.Random(seed)
    kind, _ = _variant_parts(p.variant)
    A, B, Ap = p.A, p.B, p.Aprime
    dec = decompose(B, p.W, A)
    decA = decompose(A, p.W)
    decAp = decompose(Ap, p.X)
    A0, B0 = decA.base, dec.base
    # classes meeting A first, in the order of the points of G_W(A)
    Acls = list(decA.classes)
    first = []
    for C in Acls:
        first.append(next(i for i, Bc in enumerate(dec.classes) if C <= Bc))
    order = first + [i for i in range(len(dec.classes)) if i not in first]
    classes = [dec.classes[i] for i in order]
    r = len(Acls)
    Aparts = Acls + [frozenset()] * (len(classes) - r)
    ap_of = {}
    for a, ap in p.f.items():
        ap_of[next(i for i, C in enumerate(Acls) if a in C)] = next(C for C in decAp.classes if ap in C)
    Ap_classes = [ap_of[i] for i in range(r)]
    s_count = len(classes)
    class_of = {x: i for i, C in enumerate(classes) for x in C}

    sig = Ap.signature
    sym = sig.smallest_symbol()
    n = sym.arity
    plan = _plan_rho(dec.cross, class_of, sig, kind == "language")
    demand = [0] * s_count
    for _, slots in plan:
        for i in slots:
            demand[i] += 1
    if m is None:
        m = max([2] + demand)
    distinct = kind in ("kmu", "c0prime")
    need_s = r * m + (s_count - r) * ((m - 1) if distinct else 1)

    # step 1
    used = set(Ap.elements) | set(reserve)
    nxt = max(used, default=0) + 1
    base = induced_substructure(Ap, decAp.base)
    if spec.kind in ("C0", "Cmu") and sym.weight == 1:
        V, s_sets, nxt = _step1_cores(base, need_s, sym, spec, nxt, rng)
    else:
        V, s_sets, nxt = _step1_points(base, need_s, sym, spec, nxt, used)
    Asecond = Ap.elements | V.elements
    rel = {name: set(Ap.rel(name)) | set(V.rel(name)) for name in sig.names}

    # step 2
    pool = iter(s_sets)
    b0, b, s, step2 = {}, {}, {}, []
    for i in range(s_count):
        b[i] = list(range(nxt, nxt + m))
        nxt += m
        if i < r:
            b0[i] = min(Ap_classes[i])
            s[i] = [next(pool) for _ in range(m)]
            for j in range(m):
                step2.append((sym.name, frozenset({b0[i], b[i][j]}) | s[i][j]))
        else:
            if distinct:
                s[i] = [next(pool) for _ in range(m - 1)]
            else:
                one = next(pool)
                s[i] = [one] * (m - 1)
            for j in range(m - 1):
                step2.append((sym.name, frozenset({b[i][j], b[i][j + 1]}) | s[i][j]))
    for name, e in step2:
        rel[name].add(e)

    # step 3
    free = {i: list(b[i]) for i in range(s_count)}
    rho = []
    for name, slots in plan:
        pick = []
        for i in slots:
            if not free[i]:
                raise _RetryLarger(f"class {i} has no free element for a copied relation")
            pick.append(free[i].pop(0))
        rho.append((name, frozenset(pick)))
        rel[name].add(frozenset(pick))

    new = [x for i in range(s_count) for x in b[i]]
    Bp = Structure.build(sig, Asecond | set(new), rel)
    Bp_classes = [(Ap_classes[i] if i < r else frozenset()) | frozenset(b[i]) for i in range(s_count)]
    fprime = [(min(classes[i]), min(Bp_classes[i])) for i in range(s_count)]
    return ConstructionTrace(
        variant=p.variant,
        target=str(spec),
        symbol=sym.name,
        m=m,
        r=r,
        A0=A0,
        B0=B0,
        classes=classes,
        Aclasses=Aparts,
        cross=list(dec.cross),
        A0prime=decAp.base,
        Aprime_classes=Ap_classes,
        V=V,
        Asecond=frozenset(Asecond),
        b0=b0,
        b=b,
        s=s,
        step2_edges=step2,
        rho=rho,
        Bprime=Bp,
        Bprime0=frozenset(V.elements),
        Bprime_classes=Bp_classes,
        fprime=fprime,
    )


class _RetryLarger(RuntimeError):
    pass


def construct_extension(
    p: ExtensionProblem,
    mu: MuFunction | None = None,
    m: int | None = None,
    seed: int = 0,
    reserve=(),
    check_inputs: bool = True,
    verify: bool = True,
    **verify_kw,
) -> ConstructionTrace:
    """Build B' and f' for the problem; the claims are checked before returning.

    ``m`` defaults to the smallest value that fits the copied relations (at
    least 2).  On a failed check the build is retried once with ``m + 2``.
    ``reserve`` lists ids that new elements must avoid.
    """
    spec = p.target_spec(mu)
    if spec.collapsed:
        check_mu(spec.mu, spec.kind)
    if check_inputs:
        check_problem(p, spec)
    trace = None
    for attempt in (1, 2):
        try:
            trace = _build(p, spec, m, seed, reserve)
        except _RetryLarger as exc:
            if attempt == 2:
                raise ConstructionBug(str(exc)) from None
            m = (m or 2) + 2
            continue
        trace.attempts = attempt
        if not verify:
            return trace
        trace.claims = verify_claims(trace, p, spec.mu, **verify_kw)
        if trace.claims["all_pass"]:
            return trace
        m = trace.m + 2
    raise ConstructionBug("claim checks failed after a retry", trace)


# -- claim checks ------------------------------------------------------------


def _result(failures: list, **extra) -> dict:
    return {"pass": not failures, "failures": failures[:5], **extra}


def _claim1(t: ConstructionTrace, p: ExtensionProblem) -> dict:
    A, B, Ap, Bp = p.A, p.B, p.Aprime, t.Bprime
    s = len(t.classes)
    failures = []
    closed_A, closed_Ap = {}, {}
    dB0 = predimension(B, t.B0)
    dBp0 = predimension(Bp, t.Bprime0)
    for k in range(s + 1):
        for U in itertools.combinations(range(s), k):
            U0 = tuple(i for i in U if i < t.r)
            if U0 not in closed_A:
                YA = t.A0.union(*(t.Aclasses[i] for i in U0))
                YAp = t.A0prime.union(*(t.Aprime_classes[i] for i in U0))
                closed_A[U0] = is_d_closed(YA, A)
                closed_Ap[U0] = is_d_closed(YAp, Ap)
            if closed_A[U0] != closed_Ap[U0]:
                failures.append({"U": list(U), "closed_in_A": closed_A[U0], "closed_in_Aprime": closed_Ap[U0]})
                continue
            if not closed_A[U0]:
                continue
            Y = t.B0.union(*(t.classes[i] for i in U))
            Yp = t.Bprime0.union(*(t.Bprime_classes[i] for i in U))
            d1 = predimension(B, Y) - dB0
            d2 = predimension(Bp, Yp) - dBp0
            if d1 != d2:
                failures.append({"U": list(U), "delta_Y_over_B0": d1, "delta_Yprime_over_Bprime0": d2})
    return _result(failures, subsets=2 ** s)


def localised_geometry(S: Structure, X, base: frozenset, classes: list) -> tuple[Geometry | None, list]:
    """G_X(S) with the given points, after checking they really are its points.

    ``base`` must be cl(X) and each ``base u C`` a d-closed set of dimension
    d(X) + 1, the classes partitioning the rest.  Returns (None, problems)
    when a check fails.
    """
    problems = []
    X = frozenset(X)
    dX = dimension(X, S)
    cl = d_closure(X, S)
    if cl != base:
        problems.append({"check": "base is cl(X)", "closure": sorted(cl), "base": sorted(base)})
    cover = set(base)
    for i, C in enumerate(classes):
        if cover & C:
            problems.append({"check": "classes disjoint", "class": i})
        cover |= C
        F = base | C
        if not is_d_closed(F, S):
            problems.append({"check": "class closed", "class": i, "closure": sorted(d_closure(F, S) - F)})
        if dimension(F, S) != dX + 1:
            problems.append({"check": "class dimension", "class": i, "dimension_over_X": dimension(F, S) - dX})
    if cover != S.elements:
        problems.append({"check": "classes cover", "missing": sorted(S.elements - cover)})
    if problems:
        return None, problems
    return Geometry(S, X, base, tuple(classes)), []


def _claim2(t: ConstructionTrace, p: ExtensionProblem) -> dict:
    Bp, B = t.Bprime, p.B
    failures = []
    if not membership(Bp, ClassSpec("C0")):
        failures.append({"check": "Bprime in C0"})
    ok, ssc = is_self_sufficient(t.Asecond, Bp)
    if not ok:
        failures.append({"check": "A'' <= B'", "ssc": sorted(ssc)})
    if not is_self_sufficient(p.Aprime.elements, Bp)[0]:
        failures.append({"check": "A' <= B'"})
    if not is_d_closed(t.Bprime0, Bp):
        failures.append({"check": "B'_0 d-closed"})
    # step-2 local facts: delta(B'_0 u B'_i / B'_0) = 1 and B'_0 closed in it
    for i, C in enumerate(t.Bprime_classes):
        sub = induced_substructure(Bp, t.Bprime0 | C)
        if predimension(sub, sub.elements) - predimension(sub, t.Bprime0) != 1:
            failures.append({"check": "step 2 delta", "class": i})
        elif not is_d_closed(t.Bprime0, sub):
            failures.append({"check": "step 2 closed", "class": i})
    Gp, problems = localised_geometry(Bp, p.X, t.Bprime0, t.Bprime_classes)
    failures.extend(problems)
    if Gp is not None:
        G = geometry_of(B, p.W)
        idx = {}
        for k, P in enumerate(G.points):
            idx[k] = next(i for i, C in enumerate(t.classes) if P == C)
        bad = flats_match(G, Gp, idx)
        if bad is not None:
            failures.append({"check": "f' carries flats to flats", "flat": bad})
    # f' extends f
    for a, ap in p.f.items():
        i = next((i for i, C in enumerate(t.classes) if a in C), None)
        if i is None or ap not in t.Bprime_classes[i]:
            failures.append({"check": "f' extends f", "pair": [a, ap]})
    return _result(failures)


def three_point_lines(S: Structure) -> dict | None:
    """In G(S) (points = elements): a triple has rank 2 iff it is a hyperedge.

    Returns a witness triple or None.  Assumes every element is a point and
    every pair independent, as in K0.
    """
    edges = set(S.rel(S.signature.symbols[0].name))
    rank2 = set()
    for x, y in itertools.combinations(S.order, 2):
        for z in d_closure((x, y), S) - {x, y}:
            rank2.add(frozenset((x, y, z)))
    if rank2 != edges:
        bad = sorted(rank2 ^ edges, key=sorted)[0]
        return {"triple": sorted(bad), "hyperedge": bad in edges}
    return None


def _claim3(t: ConstructionTrace, p: ExtensionProblem, spec: ClassSpec, kmu_pairs: bool, lines: bool) -> dict:
    if spec.kind == "C0":
        return {"pass": True, "failures": [], "skipped": "target is C0"}
    Bp = t.Bprime
    failures = []
    mem = membership(Bp, spec)
    if not mem:
        failures.append({"check": f"B' in {spec}", **mem.to_json()})
    extra = {}
    if spec.kind == "Kmu" and not failures:
        if kmu_pairs:
            for i, j in itertools.combinations(range(len(t.Bprime_classes)), 2):
                # substructures of a member are members, so only closedness is left
                U = t.Bprime0 | t.Bprime_classes[i] | t.Bprime_classes[j]
                if not is_self_sufficient(U, Bp)[0]:
                    failures.append({"check": "pair self-sufficient", "classes": [i, j]})
        if lines:
            w = three_point_lines(Bp)
            extra["three_point_lines"] = w is None
            if w is not None:
                failures.append({"check": "3-point lines", **w})
    return _result(failures, **extra)


def verify_claims(
    t: ConstructionTrace,
    p: ExtensionProblem,
    mu: MuFunction | None = None,
    kmu_pairs: bool = True,
    lines: bool = True,
) -> dict:
    """Per-claim pass/fail report for a trace, with witnesses on failure."""
    spec = p.target_spec(mu)
    report = {"C1": _claim1(t, p), "C2": _claim2(t, p), "C3": _claim3(t, p, spec, kmu_pairs, lines)}
    report["all_pass"] = all(report[c]["pass"] for c in ("C1", "C2", "C3"))
    return report


# -- mutations ---------------------------------------------------------------


def drop_step2_edge(t: ConstructionTrace, index: int = 0) -> ConstructionTrace:
    """Copy of the trace with one Step-2 hyperedge removed from B'."""
    name, e = t.step2_edges[index]
    return replace(
        t,
        Bprime=t.Bprime.without_edges([(name, e)]),
        step2_edges=[x for k, x in enumerate(t.step2_edges) if k != index],
        claims={},
    )


def inject_copies(t: ConstructionTrace, mu: MuFunction | None = None) -> ConstructionTrace:
    """Copy of the trace with extra one-point msa copies over a base inside A''.

    The base is n - 1 elements of V outside cl(X) in A' sharing no
    hyperedge, so delta(Y) = n - 1 >= 2.  Enough new points c with the
    hyperedge Y u {c} are added to exceed mu; they join B'_0.
    """
    Bp = t.Bprime
    sym = Bp.signature[t.symbol]
    n = sym.arity
    pool = sorted(t.Bprime0 - t.A0prime) or sorted(t.Bprime0)
    Y = None
    for cand in itertools.combinations(pool, n - 1):
        Yc = frozenset(cand)
        if not any(Yc <= e for _, e in Bp.edges()) and predimension(Bp, Yc) == n - 1:
            Y = Yc
            break
    if Y is None:
        raise ValueError("no base for an injected copy")
    mu = mu or MuFunction()
    c0 = max(Bp.elements) + 1
    pattern = Structure.build(Bp.signature, Y | {c0}, {sym.name: [Y | {c0}]})
    cap = mu(canonical_form(PointedStructure(pattern, Y)), n - 1)
    new = list(range(c0, c0 + cap + 1))
    Bp2 = Bp.with_edges({sym.name: [Y | {c} for c in new]}, new)
    return replace(t, Bprime=Bp2, Bprime0=t.Bprime0 | set(new), claims={})


# -- random problems ---------------------------------------------------------


def _random_c0(rng, sig: Signature, size: int, edges: int) -> Structure:
    while True:
        rel = {}
        for _ in range(edges):
            s = rng.choice(sig.symbols)
            if s.arity > size:
                continue
            rel.setdefault(s.name, set()).add(frozenset(rng.sample(range(1, size + 1), s.arity)))
        S = Structure.build(sig, range(1, size + 1), rel)
        if membership(S, ClassSpec("C0")):
            return S


def _source_triple(rng, sig: Signature, max_b: int, W_size: int):
    """W <= A <= B in C0 with |B| <= max_b; W empty or a singleton."""
    while True:
        size = rng.randint(max(1, W_size), max_b)
        B = _random_c0(rng, sig, size, rng.randint(0, size))
        W = frozenset()
        if W_size:
            cand = [x for x in B.order if dimension((x,), B) == 1]
            if not cand:
                continue
            W = frozenset([rng.choice(cand)])
        k = rng.randint(0, size)
        A_set = self_sufficient_closure(W | set(rng.sample(B.order, k)), B)
        if not is_self_sufficient(W, B)[0]:
            continue
        return W, induced_substructure(B, A_set), B


def _with_f(W, A, B, X, Ap, variant, target=None) -> ExtensionProblem | None:
    GA, GAp = geometry_of(A, W), geometry_of(Ap, X)
    pm = geometry_isomorphic(GA, GAp)
    if pm is None:
        return None
    f = {min(GA.points[i]): min(GAp.points[j]) for i, j in pm.items()}
    return ExtensionProblem(W, A, B, X, Ap, f, variant, target)


def random_problem(seed: int, variant: str = "standard", max_b: int = 8, mu: MuFunction | None = None) -> ExtensionProblem:
    """A valid problem for the variant, by rejection sampling.

    standard: ternary (sometimes with an extra 4-ary symbol) source over
    W = {} or a singleton, X = {} or a singleton, A' a relabelled copy of A
    (plus an isolated point when X is new) inside C_mu.
    kmu: W = {}, X = 3 isolated points beside a copy of A in K_mu.
    c0prime:k: the same with k points and one (k+1)-ary symbol.
    language: source over (3, 4)-ary symbols, target the 4-ary one;
    A' comes from a first construction over the empty base.
    """
    rng = random.Random(seed)
    kind, k = _variant_parts(variant)
    for _ in range(500):
        if kind == "language":
            sig = Signature.of(("R", 3), ("S", 4))
            W, A, B = _source_triple(rng, sig, max_b, 0)
            X = frozenset([100]) if rng.random() < 0.5 else frozenset()
            L0 = Signature.of(("S", 4))
            base = Structure.build(L0, X)
            empty = Structure.build(sig, ())
            boot = ExtensionProblem(frozenset(), empty, A, X, base, {}, "language")
            tr = construct_extension(boot, seed=seed, kmu_pairs=False)
            Ap = tr.Bprime
            p = _with_f(W, A, B, X, Ap, "language")
        elif kind in ("kmu", "c0prime"):
            width = 3 if kind == "kmu" else k
            sig = Signature.of(3 if kind == "kmu" else k + 1)
            W, A, B = _source_triple(rng, sig, max_b, 0)
            off = 100
            X = frozenset(range(off, off + width))
            copy = A.relabel({x: x + off + width for x in A.elements})
            Ap = Structure.build(sig, X | copy.elements, dict(copy.relations))
            spec = ClassSpec.Kmu(mu) if kind == "kmu" else ClassSpec.C0prime(k)
            if not membership(Ap, spec):
                continue
            p = _with_f(W, A, B, X, Ap, variant)
        else:
            sig = Signature.of(3) if rng.random() < 0.8 else Signature.of(("R", 3), ("S", 4))
            W_size = rng.randint(0, 1)
            W, A, B = _source_triple(rng, sig, max_b, W_size)
            off = 100
            mapping = {x: x + off for x in A.elements}
            copy = A.relabel(mapping)
            if W:
                X = frozenset(mapping[w] for w in W)
                Ap = copy
            elif rng.random() < 0.5 and len(A) < max_b:
                X = frozenset([off])
                Ap = Structure.build(sig, copy.elements | X, dict(copy.relations))
            else:
                X = frozenset()
                Ap = copy
            if not membership(Ap, ClassSpec.Cmu(mu)):
                continue
            p = _with_f(W, A, B, X, Ap, "standard")
        if p is not None:
            return p
    raise RuntimeError(f"no valid {variant} problem found from seed {seed}")


# -- back and forth ----------------------------------------------------------


@dataclass
class BafResult:
    maps: list
    complete: bool
    source: GenericChain
    target: GenericChain
    X: frozenset
    note: str = ""

    def to_json(self) -> dict:
        return {
            "maps": [[list(p) for p in m] for m in self.maps],
            "complete": self.complete,
            "X": sorted(self.X),
            "note": self.note,
            "source_sizes": [len(s) for s in self.source.stages],
            "target_sizes": [len(s) for s in self.target.stages],
        }


def partial_iso_ok(S: Structure, W, T: Structure, X, pairs) -> dict | None:
    """Check that pairs of representatives give rank-preserving point maps, or return a witness.

    Ranks are d(W u reps)-d(W) in S against d(X u reps')-d(X) in T over
    every subset of the pairs.
    """
    W, X = frozenset(W), frozenset(X)
    dW, dX = dimension(W, S), dimension(X, T)
    pairs = list(pairs)
    for k in range(1, len(pairs) + 1):
        for sub in itertools.combinations(pairs, k):
            r1 = dimension(W | {a for a, _ in sub}, S) - dW
            r2 = dimension(X | {b for _, b in sub}, T) - dX
            if r1 != r2:
                return {"pairs": [list(x) for x in sub], "rank_source": r1, "rank_target": r2}
    return None


def _new_point(S: Structure, base, rng):
    cl = d_closure(base, S)
    cands = sorted(S.elements - cl)
    return rng.choice(cands) if cands else None


def _merge(chain: GenericChain, Bp: Structure, Ap_set, spec: ClassSpec, budget: int) -> dict:
    """Push an amalgam of the last stage with Bp over Ap_set; returns the map on Bp."""
    T = chain.final
    am = amalgamate(T, Bp, Ap_set, spec, budget=budget, check_inputs=False)
    chain.push(am.structure)
    return am.f2


def back_and_forth(
    source: GenericChain,
    target: GenericChain,
    X,
    steps: int,
    mu: MuFunction | None = None,
    seed: int = 0,
    budget: int = 5000,
) -> BafResult:
    """Alternate forth (source point into target) and back steps, starting with forth.

    The source chain is read over the empty set and the target over X.
    Each step builds B' with construct_extension and amalgamates it into
    the other chain's last stage, which becomes a new stage.  The chains
    passed in are copied first.
    """
    rng = random.Random(seed)
    src = GenericChain.from_json(source.to_json())
    tgt = GenericChain.from_json(target.to_json())
    X = frozenset(X)
    tgt.final.check_subset(X)
    if not is_self_sufficient(X, tgt.final)[0]:
        raise PreconditionError("X is not self-sufficient in the target chain")
    A, Ap = frozenset(), X
    pairs: list[tuple[int, int]] = []
    maps = [list(pairs)]
    for step in range(steps):
        S, T = src.final, tgt.final
        forth = step % 2 == 0
        if forth:
            x = _new_point(S, A, rng)
            if x is None:
                return BafResult(maps, False, src, tgt, X, f"source stage exhausted at step {step}")
            Bset = self_sufficient_closure(A | {x}, S)
            p = ExtensionProblem(
                frozenset(), induced_substructure(S, A), induced_substructure(S, Bset), X,
                induced_substructure(T, Ap), dict(pairs), "standard", str(tgt.spec).lower(),
            )
            tr = construct_extension(p, mu, seed=seed + step, reserve=T.elements, check_inputs=False, kmu_pairs=False)
            g = _merge(tgt, tr.Bprime, Ap, tgt.spec, budget)
            for a, bp in tr.fprime[tr.r:]:
                pairs.append((a, g[bp]))
            A, Ap = Bset, frozenset(g[y] for y in tr.Bprime.elements)
        else:
            y = _new_point(T, Ap, rng)
            if y is None:
                return BafResult(maps, False, src, tgt, X, f"target stage exhausted at step {step}")
            Bset = self_sufficient_closure(Ap | {y}, T)
            p = ExtensionProblem(
                X, induced_substructure(T, Ap), induced_substructure(T, Bset), frozenset(),
                induced_substructure(S, A), {b: a for a, b in pairs}, "standard", str(src.spec).lower(),
            )
            tr = construct_extension(p, mu, seed=seed + step, reserve=S.elements, check_inputs=False, kmu_pairs=False)
            g = _merge(src, tr.Bprime, A, src.spec, budget)
            for b, a in tr.fprime[tr.r:]:
                pairs.append((g[a], b))
            A, Ap = frozenset(g[y] for y in tr.Bprime.elements), Bset
        bad = partial_iso_ok(src.final, (), tgt.final, X, pairs)
        if bad is not None:
            raise ConstructionBug(f"step {step} broke the partial isomorphism: {bad}")
        maps.append(list(pairs))
    return BafResult(maps, True, src, tgt, X)

