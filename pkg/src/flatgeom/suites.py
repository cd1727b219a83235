"""Acceptance suites: eight desk-scale property runs with pass/fail summaries.

Each ``criterion_*`` function returns a :class:`SuiteResult`.  A run passes
when every check holds and it finishes inside its time limit.  ``run_all``
is what ``flatgeom suite`` and ``tests/test_acceptance.py`` call.
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field

from .amalgamation import AmalgamationError, amalgamate, build_generic_approx
from .canon import structure_code
from .classes import ClassSpec, MuFunction, enumerate_msa_within, lemma21_check, membership
from .construction import (
    back_and_forth,
    check_mu,
    construct_extension,
    drop_step2_edge,
    inject_copies,
    partial_iso_ok,
    random_problem,
    three_point_lines,
    verify_claims,
)
from .dimension import d_closure, dimension, is_d_closed, is_self_sufficient, self_sufficient_closure
from .structures import Signature, Structure, delta_mask, free_amalgam, induced_substructure, is_embedding, predimension

LIMITS = {1: 120.0, 2: 60.0, 3: 60.0, 4: 180.0, 5: 300.0, 6: 300.0, 7: 300.0, 8: 120.0}
TITLES = {
    1: "matroid suite",
    2: "msa neighbourhood lemma",
    3: "free amalgam",
    4: "mu-amalgamation",
    5: "isomorphism extension",
    6: "K_mu variant",
    7: "back and forth",
    8: "language change",
}
TWO_SYMBOLS = Signature.of(("R", 3), ("S", 4))


@dataclass
class SuiteResult:
    number: int
    passed: bool
    seconds: float
    counts: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    @property
    def limit(self) -> float:
        return LIMITS[self.number]

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        counts = ", ".join(f"{k}={v}" for k, v in self.counts.items())
        return f"[{tag}] criterion {self.number} ({TITLES[self.number]}): {counts}; {self.seconds:.1f}s of {self.limit:.0f}s"

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "title": TITLES[self.number],
            "pass": self.passed,
            "seconds": round(self.seconds, 2),
            "limit": self.limit,
            "counts": self.counts,
            "failures": self.failures[:5],
        }


def _finish(number, start, counts, failures) -> SuiteResult:
    secs = time.perf_counter() - start
    return SuiteResult(number, not failures and secs < LIMITS[number], secs, counts, failures)


# -- generators --------------------------------------------------------------


def random_structure(rng: random.Random, sig: Signature, n: int, edges: int) -> Structure:
    rel: dict = {}
    for _ in range(edges):
        s = rng.choice(sig.symbols)
        if s.arity <= n:
            rel.setdefault(s.name, set()).add(frozenset(rng.sample(range(1, n + 1), s.arity)))
    return Structure.build(sig, range(1, n + 1), rel)


def random_c0(rng: random.Random, sig: Signature, max_n: int, min_n: int = 0) -> Structure:
    C0 = ClassSpec.C0()
    while True:
        n = rng.randint(min_n, max_n)
        S = random_structure(rng, sig, n, rng.randint(0, n + 1))
        if membership(S, C0):
            return S


def ternary_classes(max_n: int, only_c0: bool = True) -> list[Structure]:
    """One structure per isomorphism type over a ternary symbol, sizes 0..max_n.

    Types are grown one hyperedge at a time and deduplicated by canonical
    code.  Deleting a hyperedge keeps a structure in C0, so with
    ``only_c0`` the growth stops at the first structure outside it.
    """
    C0 = ClassSpec.C0()
    out = []
    for n in range(max_n + 1):
        triples = [frozenset(c) for c in itertools.combinations(range(1, n + 1), 3)]
        empty = Structure.ternary(range(1, n + 1))
        level = {structure_code(empty): empty}
        while level:
            out.extend(level.values())
            nxt: dict = {}
            for S in level.values():
                for e in triples:
                    if e in S.rel("R"):
                        continue
                    T = S.with_edges({"R": [e]})
                    code = structure_code(T)
                    if code in nxt:
                        continue
                    if only_c0 and not membership(T, C0):
                        continue
                    nxt[code] = T
            level = nxt
    return out


# -- 1: matroid -----------------------------------------------------------


def check_pregeometry(S: Structure, in_c0: bool = True) -> dict | None:
    """d against the min-delta oracle, rank axioms, and closure axioms on all subsets.

    The rank axioms are checked for d - d(empty set), which is the rank
    function of a matroid on any finite structure; ``in_c0`` adds d(empty) = 0.
    """
    n = len(S)
    full = (1 << n) - 1
    oracle = [delta_mask(S, m) for m in range(full + 1)]
    for m in range(full, -1, -1):
        for i in range(n):
            if not m >> i & 1:
                oracle[m] = min(oracle[m], oracle[m | 1 << i])
    d = [dimension(S.unmask(m), S) for m in range(full + 1)]
    cl = [S.mask(d_closure(S.unmask(m), S)) for m in range(full + 1)]
    if in_c0 and d[0] != 0:
        return {"check": "d(empty) = 0", "d": d[0]}
    for m in range(full + 1):
        A = sorted(S.unmask(m))
        if d[m] != oracle[m]:
            return {"check": "oracle", "subset": A, "d": d[m], "oracle": oracle[m]}
        if not 0 <= d[m] - d[0] <= m.bit_count():
            return {"check": "bounds", "subset": A}
        if cl[m] & m != m or cl[cl[m]] != cl[m]:
            return {"check": "closure", "subset": A}
        for i in range(n):
            x = 1 << i
            if m & x:
                continue
            if not d[m] <= d[m | x] <= d[m] + 1:
                return {"check": "unit increase", "subset": A, "add": S.order[i]}
            if (d[m | x] == d[m]) != bool(cl[m] & x):
                return {"check": "closure matches d", "subset": A, "add": S.order[i]}
            if cl[m] & ~cl[m | x]:
                return {"check": "closure monotone", "subset": A, "add": S.order[i]}
            for j in range(i + 1, n):
                y = 1 << j
                if m & y:
                    continue
                if d[m | x] + d[m | y] < d[m | x | y] + d[m]:
                    return {"check": "submodular", "subset": A, "pair": [S.order[i], S.order[j]]}
                if not cl[m] & (x | y) and bool(cl[m | x] & y) != bool(cl[m | y] & x):
                    return {"check": "exchange", "subset": A, "pair": [S.order[i], S.order[j]]}
    return None


def criterion_1(max_size: int = 6, samples: int = 500, sample_size: int = 8, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    exhaustive = ternary_classes(max_size, only_c0=False)
    c0 = ClassSpec.C0()
    members = 0
    for S in exhaustive:
        inside = bool(membership(S, c0))
        members += inside
        bad = check_pregeometry(S, inside)
        if bad:
            failures.append({"structure": S.to_json(), **bad})
    random_members = 0
    for _ in range(samples):
        n = rng.randint(0, sample_size)
        S = random_structure(rng, TWO_SYMBOLS, n, rng.randint(0, n + 2))
        inside = bool(membership(S, c0))
        random_members += inside
        bad = check_pregeometry(S, inside)
        if bad:
            failures.append({"structure": S.to_json(), **bad})
    counts = {
        "exhaustive": len(exhaustive),
        "exhaustive_in_C0": members,
        "random": samples,
        "random_in_C0": random_members,
        "failures": len(failures),
    }
    return _finish(1, start, counts, failures)


# -- 2: msa lemma ---------------------------------------------------------


def criterion_2(samples: int = 500, max_size: int = 7, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    found = 0
    for k in range(samples):
        sig = Signature.of(3) if k % 2 else TWO_SYMBOLS
        S = random_c0(rng, sig, max_size, 1)
        try:
            for inst in enumerate_msa_within(S):
                found += 1
                if not lemma21_check(inst.base, induced_substructure(S, inst.elements)):
                    failures.append({"structure": S.to_json(), **inst.to_json()})
        except Exception as exc:  # any exception is a failure of the run
            failures.append({"structure": S.to_json(), "error": repr(exc)})
    return _finish(2, start, {"structures": samples, "instances": found, "failures": len(failures)}, failures)


# -- 3: free amalgam ------------------------------------------------------


def _random_extension(rng, base: Structure, extra: int, sig: Signature, spec: ClassSpec, start: int) -> Structure:
    """base plus ``extra`` new points; every new hyperedge meets a new point."""
    new = list(range(start, start + extra))
    pool = sorted(base.elements) + new
    while True:
        rel = {}
        for _ in range(rng.randint(0, 2 * extra + 1)):
            s = rng.choice(sig.symbols)
            if s.arity > len(pool):
                continue
            e = frozenset(rng.sample(pool, s.arity))
            if e & set(new):
                rel.setdefault(s.name, set()).add(e)
        B = base.with_edges(rel, new)
        if membership(B, spec) and is_self_sufficient(base.elements, B)[0]:
            return B


def criterion_3(samples: int = 500, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    rng = random.Random(seed)
    failures = []
    closed = 0
    for k in range(samples):
        sig = Signature.of(3) if k % 3 else TWO_SYMBOLS
        B1 = random_c0(rng, sig, 6, 1)
        seedset = rng.sample(B1.order, rng.randint(0, len(B1)))
        A = d_closure(seedset, B1) if rng.random() < 0.5 else self_sufficient_closure(seedset, B1)
        base = induced_substructure(B1, A)
        B2 = _random_extension(rng, base, rng.randint(1, 3), sig, ClassSpec.C0(), 100)
        E = free_amalgam(B1, B2, A)
        row = {"B1": B1.to_json(), "A": sorted(A), "B2": B2.to_json()}
        if not is_self_sufficient(B2.elements, E)[0]:
            failures.append({**row, "check": "B2 <= E"})
        if predimension(E) != predimension(B1) + predimension(B2) - predimension(B1, A):
            failures.append({**row, "check": "delta additivity"})
        if is_d_closed(A, B1):
            closed += 1
            if not is_d_closed(B2.elements, E):
                failures.append({**row, "check": "d-closed"})
    return _finish(3, start, {"triples": samples, "d_closed_cases": closed, "failures": len(failures)}, failures)


# -- 4: mu-amalgamation ---------------------------------------------------


def _stacked_problem(rng: random.Random, max_size: int, spec: ClassSpec):
    """Both sides add one-point copies over the same pair of A, so the free amalgam may exceed mu."""
    sig = Signature.of(3)
    while True:
        base = random_structure(rng, sig, rng.randint(2, max(2, max_size - 3)), rng.randint(0, 2))
        if not membership(base, spec):
            continue
        y1, y2 = rng.sample(base.order, 2)
        if any({y1, y2} <= e for _, e in base.edges()):
            continue
        room = max_size - len(base)
        sides = []
        for start in (50, 100):
            new = list(range(start, start + rng.randint(1, min(2, room))))
            B = base.with_edges({"R": [{y1, y2, c} for c in new]}, new)
            sides.append(B)
        if all(membership(B, spec) and is_self_sufficient(base.elements, B)[0] for B in sides):
            return sides[0], sides[1], base.elements


def random_cmu_problem(rng: random.Random, max_size: int = 7, spec: ClassSpec | None = None):
    """(B1, B2, A) in C_mu with A <= both.

    Half the problems stack copies over a pair on both sides; B2 of the
    others sometimes stacks copies too.
    """
    spec = spec or ClassSpec.Cmu()
    sig = Signature.of(3)
    if rng.random() < 0.5:
        return _stacked_problem(rng, max_size, spec)
    while True:
        B1 = random_structure(rng, sig, rng.randint(2, max_size), rng.randint(1, max_size))
        if not membership(B1, spec):
            continue
        A = self_sufficient_closure(rng.sample(B1.order, rng.randint(1, min(3, len(B1)))), B1)
        room = max_size - len(A)
        if room < 1:
            continue
        base = induced_substructure(B1, A)
        if rng.random() < 0.4 and len(A) >= 2:
            y1, y2 = rng.sample(sorted(A), 2)
            new = list(range(100, 100 + min(room, rng.randint(1, 3))))
            B2 = base.with_edges({"R": [{y1, y2, c} for c in new]}, new)
            if not (membership(B2, spec) and is_self_sufficient(A, B2)[0]):
                continue
        else:
            B2 = _random_extension(rng, base, rng.randint(1, room), sig, spec, 100)
        return B1, B2, A


def certify_amalgam(am, B1: Structure, B2: Structure, A, spec: ClassSpec) -> str | None:
    C = am.structure
    if not membership(C, spec):
        return "output not in class"
    if induced_substructure(C, B1.elements) != B1 or not is_self_sufficient(B1.elements, C)[0]:
        return "B1 is not self-sufficient in C"
    if any(am.f2[a] != a for a in A):
        return "f2 moves A"
    if not is_embedding(B2, C, am.f2) or not is_self_sufficient(am.f2.values(), C)[0]:
        return "f2 is not a self-sufficient embedding"
    return None


def criterion_4(samples: int = 200, max_size: int = 7, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    rng = random.Random(seed)
    spec = ClassSpec.Cmu()
    failures = []
    counts = {"problems": samples, "free": 0, "identified": 0, "obstructions": 0}
    for _ in range(samples):
        B1, B2, A = random_cmu_problem(rng, max_size, spec)
        row = {"B1": B1.to_json(), "B2": B2.to_json(), "A": sorted(A)}
        try:
            am = amalgamate(B1, B2, A, spec)
        except AmalgamationError as exc:
            # certified only when the search ran to the end and the free amalgam really fails
            if "budget" in exc.obstruction or membership(free_amalgam(B1, B2, A), spec):
                failures.append({**row, "error": str(exc)})
            else:
                counts["obstructions"] += 1
            continue
        bad = certify_amalgam(am, B1, B2, A, spec)
        if bad:
            failures.append({**row, "check": bad})
        elif all(s["how"] == "free" for s in am.steps):
            counts["free"] += 1
        else:
            counts["identified"] += 1
    counts["failures"] = len(failures)
    return _finish(4, start, counts, failures)


# -- 5, 6, 8: the construction --------------------------------------------


def criterion_5(problems: int = 100, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    failures = []
    counts = {"problems": problems, "all_pass": 0, "drop_tested": 0, "drop_caught": 0, "inject_tested": 0, "inject_caught": 0}
    for k in range(problems):
        p = random_problem(seed + k, "standard", max_b=8)
        t = construct_extension(p, seed=seed + k)
        if t.claims["all_pass"]:
            counts["all_pass"] += 1
        else:
            failures.append({"seed": seed + k, "claims": t.claims})
            continue
        if t.step2_edges:
            counts["drop_tested"] += 1
            if not verify_claims(drop_step2_edge(t), p)["C2"]["pass"]:
                counts["drop_caught"] += 1
            else:
                failures.append({"seed": seed + k, "mutation": "drop step-2 edge"})
        try:
            mutant = inject_copies(t)
        except ValueError:
            continue
        counts["inject_tested"] += 1
        if not verify_claims(mutant, p)["C3"]["pass"]:
            counts["inject_caught"] += 1
        else:
            failures.append({"seed": seed + k, "mutation": "inject copies"})
    if not counts["drop_tested"] or not counts["inject_tested"]:
        failures.append({"check": "some mutation never applied"})
    return _finish(5, start, counts, failures)


def small_sets_self_sufficient(S: Structure) -> dict | None:
    """Every set of at most three elements is self-sufficient.

    Singletons and pairs are tested directly.  A triple {x, y, z} with
    z in cl(x, y) has d = 2, and otherwise d = 3, so it is self-sufficient
    exactly when that matches its predimension.
    """
    for x in S.order:
        if not is_self_sufficient([x], S)[0]:
            return {"subset": [x]}
    for x, y in itertools.combinations(S.order, 2):
        if not is_self_sufficient([x, y], S)[0]:
            return {"subset": [x, y]}
        cl = d_closure([x, y], S)
        for z in S.order:
            if z <= y or z == x:
                continue
            d = 2 if z in cl else 3
            if d != predimension(S, (x, y, z)):
                return {"subset": [x, y, z], "d": d}
    return None


def criterion_6(problems: int = 50, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    mu = MuFunction()
    check_mu(mu, "kmu")
    spec = ClassSpec.Kmu(mu)
    failures = []
    counts = {"problems": problems, "member": 0, "small_sets": 0, "lines": 0}
    for k in range(problems):
        p = random_problem(seed + k, "kmu", max_b=8, mu=mu)
        if dimension(p.X, p.Aprime) != 3:
            failures.append({"seed": seed + k, "check": "X is not 3 independent points"})
            continue
        t = construct_extension(p, mu, seed=seed + k)
        Bp = t.Bprime
        ok = True
        if membership(Bp, spec):
            counts["member"] += 1
        else:
            ok = False
        if small_sets_self_sufficient(Bp) is None:
            counts["small_sets"] += 1
        else:
            ok = False
        if three_point_lines(Bp) is None:
            counts["lines"] += 1
        else:
            ok = False
        if not ok or not t.claims["all_pass"]:
            failures.append({"seed": seed + k, "claims": t.claims})
    return _finish(6, start, counts, failures)


def criterion_8(problems: int = 50, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    failures = []
    counts = {"problems": problems, "C1": 0, "C2": 0, "lifted": 0}
    for k in range(problems):
        p = random_problem(seed + k, "language", max_b=8)
        t = construct_extension(p, seed=seed + k)
        for c in ("C1", "C2"):
            if t.claims[c]["pass"]:
                counts[c] += 1
            else:
                failures.append({"seed": seed + k, "claim": c, "report": t.claims[c]})
        # every rho' is a hyperedge of the target's only symbol, at least as wide as rho
        if any(len(e) < 4 for _, e in t.rho):
            failures.append({"seed": seed + k, "check": "rho' narrower than the target arity"})
        elif t.rho:
            counts["lifted"] += 1
    return _finish(8, start, counts, failures)


# -- 7: back and forth ----------------------------------------------------


def criterion_7(steps: int = 5, budget: int = 3, rounds: int = 4, seed: int = 0) -> SuiteResult:
    start = time.perf_counter()
    failures = []
    source = build_generic_approx(ClassSpec.C0(), budget, rounds)
    target = build_generic_approx(ClassSpec.Cmu(), budget, rounds)
    T = target.final
    x = next(y for y in T.order if dimension([y], T) == 1 and is_self_sufficient([y], T)[0])
    res = back_and_forth(source, target, [x], steps, seed=seed)
    pairs = res.maps[-1]
    if not res.complete:
        failures.append({"check": "incomplete", "note": res.note})
    if len(pairs) < 5:
        failures.append({"check": "fewer than 5 points", "pairs": pairs})
    bad = partial_iso_ok(res.source.final, (), res.target.final, res.X, pairs)
    if bad:
        failures.append({"check": "independence", **bad})
    cmu = ClassSpec.Cmu()
    if not membership(res.target.final, cmu):
        failures.append({"check": "target left C_mu"})
    counts = {
        "steps": len(res.maps) - 1,
        "points": len(pairs),
        "subsets_checked": 2 ** len(pairs) - 1,
        "X": sorted(res.X),
        "source_in_C_mu": bool(membership(res.source.final, cmu)),
    }
    return _finish(7, start, counts, failures)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(only=None, max_size: int = 6, seed: int = 0, echo=None) -> list[SuiteResult]:
    out = []
    for n in sorted(only or CRITERIA):
        res = criterion_1(max_size=max_size, seed=seed) if n == 1 else CRITERIA[n](seed=seed)
        if echo:
            echo(res.line())
        out.append(res)
    return out
