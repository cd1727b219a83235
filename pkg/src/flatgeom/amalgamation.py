"""Amalgamation inside a class, extension catalogues, generic chains.

``amalgamate`` adds B2 to B1 one minimal strong step at a time.  Each step
first tries the free amalgam; when that breaks the class, the step's new
part is sent onto a copy already present in the growing structure, and
only then does a bounded search over partial identifications run.  Every
accepted step is re-checked (embedding, self-sufficiency, membership), so
what comes back is certified rather than trusted.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .canon import canonical_form
from .classes import ClassSpec, ExtensionKind, Membership, ResourceCapError, classify_extension, membership
from .dimension import is_self_sufficient, self_sufficient_closure
from .structures import (
    PointedStructure,
    Signature,
    Structure,
    StructureError,
    find_embeddings_over,
    induced_substructure,
    is_embedding,
    predimension,
)


class AmalgamationError(RuntimeError):
    """No amalgam found; ``obstruction`` says why."""

    def __init__(self, message, obstruction=None):
        super().__init__(message)
        self.obstruction = obstruction or {}


@dataclass
class Amalgam:
    structure: Structure
    f1: dict
    f2: dict
    steps: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "structure": self.structure.to_json(),
            "f1": {str(k): v for k, v in sorted(self.f1.items())},
            "f2": {str(k): v for k, v in sorted(self.f2.items())},
            "steps": self.steps,
        }


def strong_steps(A: Iterable[int], B: Structure) -> list[frozenset]:
    """C_1 < ... < C_k = B above A = C_0, each C_i <= B and each step as small as possible."""
    C = B.check_subset(A)
    if not is_self_sufficient(C, B)[0]:
        raise StructureError("base is not self-sufficient")
    chain = []
    while C != B.elements:
        best = None
        for v in sorted(B.elements - C):
            nxt = self_sufficient_closure(C | {v}, B)
            if best is None or len(nxt) < len(best):
                best = nxt
        chain.append(best)
        C = best
    return chain


def _grow(C: Structure, sub: Structure, mapping: dict, new: Iterable[int]) -> tuple[Structure, list]:
    """C plus the images of the hyperedges of ``sub`` that meet ``new``."""
    new = set(new)
    extra: dict[str, set] = {}
    added = []
    for name, e in sub.edges():
        if e & new:
            img = frozenset(mapping[x] for x in e)
            if img not in C.rel(name):
                extra.setdefault(name, set()).add(img)
                added.append((name, img))
    return C.with_edges(extra, (mapping[x] for x in new)), added


def _step_ok(C_old: Structure, C_new: Structure, sub: Structure, mapping: dict, spec: ClassSpec, touching) -> Membership | None:
    """None if the step is acceptable, else the failed membership (or a plain refusal)."""
    if not is_embedding(sub, C_new, mapping):
        return Membership(False, "not an embedding")
    if induced_substructure(C_new, C_old.elements) != C_old:
        return Membership(False, "changes the structure already built")
    if not is_self_sufficient(C_old.elements, C_new)[0]:
        return Membership(False, "old part not self-sufficient")
    if not is_self_sufficient(mapping.values(), C_new)[0]:
        return Membership(False, "image not self-sufficient")
    m = membership(C_new, spec, touching=touching)
    return None if m else m


def amalgamate(
    B1: Structure,
    B2: Structure,
    A: Iterable[int],
    spec: ClassSpec,
    budget: int = 5000,
    check_inputs: bool = True,
    verify: bool = True,
) -> Amalgam:
    """C in the class with B1 <= C (identity) and f2: B2 -> C, f2(B2) <= C, f2 = id on A."""
    A = frozenset(A)
    B1.check_subset(A)
    B2.check_subset(A)
    if B1.signature != B2.signature:
        raise StructureError("signatures differ")
    if induced_substructure(B1, A) != induced_substructure(B2, A):
        raise StructureError("B1 and B2 induce different structures on A")
    for B in (B1, B2):
        if not is_self_sufficient(A, B)[0]:
            raise StructureError("A is not self-sufficient in both sides")
    if check_inputs:
        for B in (B1, B2):
            m = membership(B, spec)
            if not m:
                raise StructureError(f"input not in {spec}: {m.reason}")

    C = B1
    f2 = {a: a for a in A}
    nxt = max(B1.elements | B2.elements, default=0) + 1
    log = []
    for step in strong_steps(A, B2):
        base = frozenset(f2)
        new = sorted(step - base)
        sub = induced_substructure(B2, step)

        # free
        fresh = {}
        for x in new:
            if x in C.elements:
                fresh[x] = nxt
                nxt += 1
            else:
                fresh[x] = x
        mapping = {**f2, **fresh}
        trial, _ = _grow(C, sub, mapping, new)
        m = membership(trial, spec, touching=fresh.values())
        if m:
            C, f2 = trial, mapping
            log.append({"new": new, "how": "free"})
            continue
        obstruction = {"step": new, "reason": m.reason, "witness": m.witness}

        # onto an existing copy
        placed = False
        pattern = PointedStructure(sub, base)
        for emb in find_embeddings_over(pattern, C, {b: f2[b] for b in base}):
            if is_embedding(sub, C, emb) and is_self_sufficient(emb.values(), C)[0]:
                f2 = emb
                log.append({"new": new, "how": "identified", "onto": sorted(emb[x] for x in new)})
                placed = True
                break
        if placed:
            continue

        # bounded search over partial identifications, fewest first
        pool = sorted(C.elements - set(f2.values()))
        tries = 0
        for k in range(1, len(new) + 1):
            for glued in itertools.combinations(new, k):
                for targets in itertools.permutations(pool, k):
                    tries += 1
                    if tries > budget:
                        raise AmalgamationError("identification budget exhausted", {**obstruction, "budget": budget})
                    mapping = {**f2, **fresh, **dict(zip(glued, targets))}
                    trial, added = _grow(C, sub, mapping, new)
                    touched = set(fresh[x] for x in new if x not in glued)
                    for _, e in added:
                        touched |= e
                    if _step_ok(C, trial, sub, mapping, spec, touched) is None:
                        C, f2 = trial, mapping
                        log.append({"new": new, "how": "quotient", "glued": {str(x): t for x, t in zip(glued, targets)}})
                        placed = True
                        break
                if placed:
                    break
            if placed:
                break
        if not placed:
            raise AmalgamationError("no amalgam: every identification fails", obstruction)

    f1 = {x: x for x in B1.elements}
    out = Amalgam(C, f1, f2, log)
    if verify:
        verify_amalgam(out, B1, B2, spec)
    return out


def verify_amalgam(am: Amalgam, B1: Structure, B2: Structure, spec: ClassSpec) -> None:
    C = am.structure
    for B, f in ((B1, am.f1), (B2, am.f2)):
        if not is_embedding(B, C, f):
            raise AmalgamationError("embedding check failed", {"map": f})
        if not is_self_sufficient(f.values(), C)[0]:
            raise AmalgamationError("image not self-sufficient", {"map": f})
    m = membership(C, spec)
    if not m:
        raise AmalgamationError("amalgam left the class", m.to_json())


# -- extension catalogues ----------------------------------------------------


def _candidate_edges(sig: Signature, old: list[int], new: list[int]) -> list[tuple[str, frozenset]]:
    ground = old + new
    out = []
    for sym in sig.symbols:
        for combo in itertools.combinations(ground, sym.arity):
            if any(x in new for x in combo):
                out.append((sym.name, frozenset(combo)))
    return out


def enumerate_extensions(A: Structure, size_bound: int, spec: ClassSpec, limit: int = 200000) -> list[Structure]:
    """Proper extensions A <= B in the class with at most ``size_bound`` new elements, one per type over A.

    Bound 0 gives A alone.  Isomorphism is over A pointwise.
    """
    if size_bound < 0:
        raise ValueError("size_bound must be non-negative")
    if size_bound == 0:
        return [A]
    sig = A.signature
    old = sorted(A.elements)
    seen: dict[str, Structure] = {}
    tries = 0
    for k in range(1, size_bound + 1):
        new = A.fresh(k)
        cands = _candidate_edges(sig, old, new)
        # A <= B forces the new edges to weigh at most k
        for r in range(k + 1):
            for chosen in itertools.combinations(cands, r):
                if sum(sig[n].weight for n, _ in chosen) > k:
                    continue
                tries += 1
                if tries > limit:
                    raise ResourceCapError(f"more than {limit} candidate extensions", partial=_sorted_catalogue(seen))
                rel: dict[str, list] = {}
                for n, e in chosen:
                    rel.setdefault(n, []).append(e)
                B = A.with_edges(rel, new)
                code = canonical_form(PointedStructure(B, A.elements), fixed=old)
                if code in seen:
                    continue
                if not is_self_sufficient(A.elements, B)[0] or not membership(B, spec):
                    seen[code] = None
                    continue
                seen[code] = B
    return _sorted_catalogue(seen)


def _sorted_catalogue(seen: dict) -> list[Structure]:
    return [B for _, B in sorted(((len(B), c), B) for c, B in seen.items() if B is not None)]


# -- generic chains ----------------------------------------------------------


@dataclass
class GenericChain:
    """Finite approximation of a generic structure.  Each stage contains the previous one."""

    spec: ClassSpec
    budget: int
    stages: list[Structure]
    log: list[dict] = field(default_factory=list)
    pending: int = 0  # stages with unserved problems

    @property
    def final(self) -> Structure:
        return self.stages[-1]

    @property
    def embeddings(self) -> list[dict]:
        return [{x: x for x in S.elements} for S in self.stages[:-1]]

    def push(self, S: Structure) -> None:
        if not self.final.elements <= S.elements or induced_substructure(S, self.final.elements) != self.final:
            raise StructureError("new stage must extend the last one")
        self.stages.append(S)

    def to_json(self) -> dict:
        return {
            "class": str(self.spec),
            "mu": self.spec.mu.to_json() if self.spec.mu else None,
            "budget": self.budget,
            "stages": [S.to_json() for S in self.stages],
            "embeddings": [{str(k): v for k, v in sorted(e.items())} for e in self.embeddings],
            "log": self.log,
            "pending": self.pending,
        }

    @classmethod
    def from_json(cls, data: dict) -> "GenericChain":
        from .classes import MuFunction

        mu = MuFunction.from_json(data["mu"]) if data.get("mu") is not None else None
        spec = ClassSpec.parse(data["class"].replace("(", ":").replace(")", ""), mu)
        return cls(spec, data["budget"], [Structure.from_json(s) for s in data["stages"]], data.get("log", []), data.get("pending", 0))

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "GenericChain":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _problems(stage: Structure, index: int, budget: int, spec: ClassSpec) -> Iterator[tuple]:
    """(stage index, A, B, code) for every A <= stage with |A| <= budget, in a fixed order.

    Catalogues are computed once per type of A and carried over by relabelling.
    """
    cache: dict[str, tuple] = {}
    top = max(stage.elements, default=0)
    for size in range(min(budget, len(stage)) + 1):
        for A in itertools.combinations(stage.order, size):
            A = frozenset(A)
            if not is_self_sufficient(A, stage)[0]:
                continue
            sub = induced_substructure(stage, A)
            key = canonical_form(PointedStructure(sub, A), fixed=sorted(A))
            if key not in cache:
                cat = [B for B in enumerate_extensions(sub, budget - size, spec) if B != sub]
                cache[key] = (sorted(A), cat)
            src, cat = cache[key]
            for B0 in cat:
                mapping = dict(zip(src, sorted(A)))
                for i, x in enumerate(sorted(B0.elements - set(src))):
                    mapping[x] = top + 1 + i
                B = B0.relabel(mapping)
                yield index, A, B, canonical_form(PointedStructure(B, A), fixed=sorted(A))


def build_generic_approx(
    spec: ClassSpec,
    size_budget: int,
    rounds: int,
    per_round: int = 24,
    verify: bool = False,
    signature: Signature | None = None,
) -> GenericChain:
    """Stages 0..rounds; each round serves up to ``per_round`` problems.

    Every stage contributes a lazy stream of problems, and the streams are
    served round-robin, so later stages are not starved by earlier ones.
    ``pending`` counts the streams that were not used up.
    """
    sig = signature or (Signature.of(spec.k + 1) if spec.kind == "C0prime" else Signature.of(3))
    chain = GenericChain(spec, size_budget, [Structure.build(sig, [])])
    sources: deque = deque()
    for r in range(1, rounds + 1):
        stage = chain.final
        sources.append(_problems(stage, len(chain.stages) - 1, size_budget, spec))
        work = stage
        served = 0
        while served < per_round and sources:
            try:
                index, A, B, code = next(sources[0])
            except StopIteration:
                sources.popleft()
                continue
            sources.rotate(-1)
            am = amalgamate(work, B, A, spec, check_inputs=False, verify=verify)
            work = am.structure
            served += 1
            chain.log.append(
                {
                    "round": r,
                    "stage": index,
                    "base": sorted(A),
                    "code": code,
                    "extension": B.to_json(),
                    "map": {str(k): v for k, v in sorted(am.f2.items())},
                }
            )
        chain.stages.append(work)
    chain.pending = len(sources)
    return chain


# -- large algebraic extensions ---------------------------------------------


class GeneratorError(RuntimeError):
    """The requested algebraic extension cannot be built in the class."""


def _complete(sym, points: list[int]) -> Structure:
    sig = Signature((sym,))
    return Structure.build(sig, points, {sym.name: itertools.combinations(points, sym.arity)})


def delta_zero_cores(sym, count: int, seed: int = 0, spec: ClassSpec | None = None) -> list[Structure]:
    """``count`` pairwise non-isomorphic msa extensions of the empty set using one symbol.

    The first is the complete hypergraph on arity + 1 points; the rest come
    from a seeded search over hypergraphs with as many edges as points.
    With a collapsed ``spec`` only cores inside that class are kept.
    """
    import random

    rng = random.Random(seed)
    n = sym.arity
    out = [_complete(sym, list(range(1, n + 2)))]
    codes = {canonical_form(PointedStructure(out[0], ()))}
    size = n + 2
    stale = 0
    while len(out) < count:
        combos = list(itertools.combinations(range(1, size + 1), n))
        for _ in range(400):
            if len(out) >= count:
                break
            Z = Structure.build(Signature((sym,)), range(1, size + 1), {sym.name: rng.sample(combos, size)})
            if min(Z.degree(x) for x in Z.elements) < 2:
                continue
            if classify_extension((), Z) is not ExtensionKind.MSA:
                continue
            code = canonical_form(PointedStructure(Z, ()))
            if code in codes:
                continue
            codes.add(code)
            if spec is None or not spec.collapsed or membership(Z, spec):
                out.append(Z)
        size += 1
        stale += 1
        if stale > 6:
            raise GeneratorError(f"found only {len(out)} cores")
    return out


def _line_point_ok(V: Structure, sym, P: tuple, spec: ClassSpec) -> bool:
    """Can a new point r with the single hyperedge P u {r} be added without leaving the class?"""
    Pset = frozenset(P)
    if spec.kind in ("K0", "Kmu"):
        return not any(Pset <= e for _, e in V.edges())
    if spec.kind != "Cmu":
        return True
    # only the one-edge extension (P, {r}) can gain copies
    pattern = lambda z: canonical_form(PointedStructure(induced_substructure(V_plus, Pset | {z}), Pset))
    r = max(V.elements, default=0) + 1
    V_plus = V.with_edges({sym.name: [Pset | {r}]}, [r])
    code = pattern(r)
    copies = sum(1 for e in V.rel(sym.name) if Pset < e and pattern(next(iter(e - Pset))) == code)
    return copies + 1 <= spec.mu(code, predimension(V, Pset))


def algebraic_extension_generator(
    X: Structure,
    target_size: int,
    spec: ClassSpec,
    symbol=None,
    reserve: Iterable[int] = (),
) -> Structure:
    """V with X <= V, delta(V) = delta(X), V in the class and at least ``target_size`` new elements.

    New elements are line points: one hyperedge through n - 1 old
    elements.  A few of them become hubs that carry further line points;
    the rest are leaves hung on distinct unused hub sets, so most new
    elements lie in a single hyperedge.  When no hub set is free, disjoint
    delta-zero cores of distinct types are added (not available for the K
    and C0prime classes).  ``reserve`` lists ids the new elements must avoid.
    """
    if target_size <= 0:
        return X
    sym = symbol or X.signature.smallest_symbol()
    if sym.weight != 1:
        raise GeneratorError("line points need a symbol of weight 1")
    n = sym.arity
    avoid = set(reserve) | set(X.elements)
    nxt = max(avoid, default=0) + 1
    V = X
    hubs = list(X.order)
    used: set[frozenset] = set()
    cores_used = 0
    cores: list[Structure] = []

    def free_sets():
        out = []
        for P in itertools.combinations(sorted(hubs), n - 1):
            if frozenset(P) in used or not _line_point_ok(V, sym, P, spec):
                continue
            out.append(((max(V.degree(x) for x in P), sum(V.degree(x) for x in P), P), P))
        return [P for _, P in sorted(out)]

    while len(V) - len(X) < target_size:
        free = free_sets()
        if free:
            P = free[0]
            missing = target_size - (len(V) - len(X))
            leaf = len(free) >= missing
            V = V.with_edges({sym.name: [frozenset(P) | {nxt}]}, [nxt])
            used.add(frozenset(P))
            if not leaf:
                hubs.append(nxt)
            nxt += 1
            continue
        if spec.kind in ("K0", "Kmu", "C0prime"):
            raise GeneratorError(f"{spec} has no delta-zero cores and no room for a line point")
        placed = False
        while not placed:
            cores_used += 1
            if cores_used > 12:
                raise GeneratorError("ran out of delta-zero core types")
            if len(cores) < cores_used:
                cores = delta_zero_cores(sym, cores_used + 2)
            K = cores[cores_used - 1]
            ids = {x: nxt + i for i, x in enumerate(K.order)}
            K = K.relabel(ids)
            if K.signature != V.signature:
                K = Structure.build(V.signature, K.elements, {sym.name: K.rel(sym.name)})
            trial = free_amalgam_disjoint(V, K)
            if not spec.collapsed or membership(trial, spec, touching=K.elements):
                V = trial
                hubs.extend(K.order)
                nxt += len(K)
                placed = True
    return V


def free_amalgam_disjoint(V: Structure, K: Structure) -> Structure:
    rel = {n: set(V.rel(n)) | set(K.rel(n) if n in K.signature else ()) for n in V.signature.names}
    return Structure.build(V.signature, V.elements | K.elements, rel)
