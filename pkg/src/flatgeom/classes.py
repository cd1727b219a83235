"""Extension kinds, msa extensions, mu-functions and class membership.

Inside a structure an msa extension ``Y <= Z`` is recorded as a pair
(Y, D) with D = Z minus Y.  Three facts drive the search:

* Given that Y <= Z is simply algebraic, it is minimal exactly when every
  y in Y lies in a hyperedge of Z meeting D (drop such a y and the
  extension stops being algebraic; the converse is the adjacency lemma).
* D is connected through hyperedges of Z, and when |D| >= 3 no single
  element disconnects it: if x did, splitting D at x would give
  delta(Y u D) - delta(Y) >= 1 + 1 - 1.
* Every element of D lies on two hyperedges of Z once |D| >= 2.

So new parts of size >= 2 live inside one biconnected component of the
adjacency graph on elements of degree >= 2, and each component is searched
on its own.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import networkx as nx

from .canon import canonical_form
from .dimension import SizeCapError, _minimise_over, d_closure, dimension, min_closure, self_sufficient_closure
from .structures import (
    PointedStructure,
    Structure,
    StructureError,
    find_embeddings_over,
    induced_substructure,
    predimension,
)


class ExtensionKind(enum.Enum):
    NOT_EXTENSION = "not-extension"
    NOT_ALGEBRAIC = "not-algebraic"
    ALGEBRAIC = "algebraic"
    SIMPLY_ALGEBRAIC = "simply-algebraic"
    MSA = "minimally-simply-algebraic"


class ResourceCapError(SizeCapError):
    """Enumeration stopped at a cap; ``partial`` holds what was found."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


# -- mu-functions ------------------------------------------------------------


@dataclass(frozen=True)
class MuFunction:
    """Cap on the number of disjoint copies of each msa type.

    ``overrides`` maps a canonical code to its value; any other type gets
    ``max(delta(Y), floor)``.
    """

    overrides: Mapping[str, int] = field(default_factory=dict)
    floor: int = 1

    def __post_init__(self):
        object.__setattr__(self, "overrides", dict(self.overrides))
        if any(v < 0 for v in self.overrides.values()) or self.floor < 0:
            raise ValueError("mu values must be non-negative")

    def __hash__(self):
        return hash((tuple(sorted(self.overrides.items())), self.floor))

    def default(self, base_delta: int) -> int:
        return max(base_delta, self.floor)

    def __call__(self, code: str, base_delta: int) -> int:
        return self.overrides.get(code, self.default(base_delta))

    def lower_bound(self, base_delta: int) -> int:
        """Smallest value any type over a base of this predimension can get."""
        return min([self.default(base_delta), *self.overrides.values()])

    def check(self, types: Iterable[tuple[str, int]]) -> dict:
        """Sufficient conditions on the given (code, delta(Y)) types.

        ``amalgamation``: mu >= delta(Y) whenever delta(Y) >= 1.
        ``theorem``: mu >= 2 when delta(Y) >= 2 and mu >= 1 when delta(Y) = 1.
        ``kmu``: mu >= 3 when delta(Y) >= 3.
        """
        report = {"amalgamation": True, "theorem": True, "kmu": True, "failures": []}
        for code, dy in types:
            v = self(code, dy)
            bad = []
            if dy >= 1 and v < dy:
                bad.append("amalgamation")
            if (dy >= 2 and v < 2) or (dy == 1 and v < 1):
                bad.append("theorem")
            if dy >= 3 and v < 3:
                bad.append("kmu")
            for b in bad:
                report[b] = False
            if bad:
                report["failures"].append({"code": code, "delta": dy, "mu": v, "fails": bad})
        return report

    def check_default(self, max_delta: int = 12) -> dict:
        """The same conditions for the default policy on every delta(Y) up to ``max_delta``."""
        plain = MuFunction(floor=self.floor)
        return plain.check((None, dy) for dy in range(max_delta + 1))

    def to_json(self) -> list[dict]:
        return [{"code": c, "value": v} for c, v in sorted(self.overrides.items())]

    @classmethod
    def from_json(cls, data: list[dict], **kw) -> "MuFunction":
        values = {}
        for d in data:
            if d["code"] in values:
                raise ValueError(f"duplicate mu override for {d['code']!r}")
            values[d["code"]] = int(d["value"])
        return cls(values, **kw)

    @classmethod
    def load(cls, path: str, **kw) -> "MuFunction":
        with open(path) as fh:
            return cls.from_json(json.load(fh), **kw)


DEFAULT_MU = MuFunction()


@dataclass(frozen=True)
class ClassSpec:
    kind: str  # C0 | Cmu | K0 | Kmu | C0prime
    mu: MuFunction | None = None
    k: int | None = None

    KINDS = ("C0", "Cmu", "K0", "Kmu", "C0prime")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown class {self.kind!r}")
        if self.kind in ("Cmu", "Kmu") and self.mu is None:
            object.__setattr__(self, "mu", DEFAULT_MU)
        if self.kind == "C0prime" and (self.k is None or self.k < 2):
            raise ValueError("C0prime needs k >= 2")

    @classmethod
    def C0(cls):
        return cls("C0")

    @classmethod
    def Cmu(cls, mu: MuFunction | None = None):
        return cls("Cmu", mu or DEFAULT_MU)

    @classmethod
    def K0(cls):
        return cls("K0")

    @classmethod
    def Kmu(cls, mu: MuFunction | None = None):
        return cls("Kmu", mu or DEFAULT_MU)

    @classmethod
    def C0prime(cls, k: int):
        return cls("C0prime", k=k)

    @classmethod
    def parse(cls, text: str, mu: MuFunction | None = None) -> "ClassSpec":
        """Read ``c0``, ``cmu``, ``k0``, ``kmu`` or ``c0prime:K``."""
        t = text.strip().lower()
        if t.startswith("c0prime"):
            return cls.C0prime(int(t.split(":", 1)[1]))
        if t == "c0":
            return cls.C0()
        if t == "k0":
            return cls.K0()
        if t == "cmu":
            return cls.Cmu(mu)
        if t == "kmu":
            return cls.Kmu(mu)
        raise ValueError(f"unknown class {text!r}")

    @property
    def collapsed(self) -> bool:
        return self.kind in ("Cmu", "Kmu")

    def check_signature(self, S: Structure) -> None:
        syms = S.signature.symbols
        if self.kind in ("K0", "Kmu") and (len(syms) != 1 or syms[0].arity != 3):
            raise StructureError(f"{self} needs a single ternary symbol")
        if self.kind == "C0prime" and (len(syms) != 1 or syms[0].arity != self.k + 1):
            raise StructureError(f"{self} needs a single symbol of arity {self.k + 1}")

    def __str__(self):
        return f"C0prime({self.k})" if self.kind == "C0prime" else self.kind


# -- extension kinds ---------------------------------------------------------


def _local_traces(S: Structure, Y: frozenset, D: list[int]) -> list[tuple[int, int]]:
    """(weight, mask over D) for hyperedges inside Y u D that meet D."""
    pos = {x: i for i, x in enumerate(D)}
    inside = Y | set(D)
    seen = set()
    out = []
    for x in D:
        for name, e in S.incidence[x]:
            if e in seen or not e <= inside:
                continue
            seen.add(e)
            m = 0
            for z in e:
                if z in pos:
                    m |= 1 << pos[z]
            out.append((S.signature[name].weight, m))
    return out


def _min_proper_gain(traces: list[tuple[int, int]], n: int) -> int:
    """min over nonempty proper D' of |D'| - w(traces inside D'); huge when n == 1."""
    if n == 1:
        return 1 << 30
    best = 1 << 30
    if n <= 12:
        for m in range(1, (1 << n) - 1):
            g = m.bit_count()
            for w, t in traces:
                if t & m == t:
                    g -= w
            if g < best:
                best = g
        return best
    # either 0 is in D' and some u is not, or 0 is out and some v is in
    for u in range(1, n):
        rest = [i for i in range(n) if i != u]
        sub = [(w, [i for i in rest if t >> i & 1]) for w, t in traces if not t >> u & 1]
        best = min(best, min_closure(rest, sub, [0]).value)
    rest = list(range(1, n))
    sub = [(w, [i for i in rest if t >> i & 1]) for w, t in traces if not t & 1]
    for v in rest:
        best = min(best, min_closure(rest, sub, [v]).value)
    return best


def classify_extension(Y: Iterable[int], Z: Structure) -> ExtensionKind:
    Y = Z.check_subset(Y)
    if Y == Z.elements or dimension((), Z) != 0:
        return ExtensionKind.NOT_EXTENSION
    if dimension(Y, Z) < predimension(Z, Y):
        return ExtensionKind.NOT_EXTENSION
    if predimension(Z) != predimension(Z, Y):
        return ExtensionKind.NOT_ALGEBRAIC
    D = sorted(Z.elements - Y)
    if _min_proper_gain(_local_traces(Z, Y, D), len(D)) <= 0:
        return ExtensionKind.ALGEBRAIC
    Dset = frozenset(D)
    for y in Y:
        if not any(e & Dset for _, e in Z.incidence[y]):
            return ExtensionKind.SIMPLY_ALGEBRAIC
    return ExtensionKind.MSA


def _subsets(items):
    items = list(items)
    for k in range(len(items) + 1):
        for c in itertools.combinations(items, k):
            yield frozenset(c)


def brute_force_classify(Y: Iterable[int], Z: Structure) -> ExtensionKind:
    """Definitional check by scanning subsets.  Reference only."""
    Y = Z.check_subset(Y)
    rest = sorted(Z.elements - Y)
    if not rest or any(predimension(Z, s) < 0 for s in _subsets(Z.order)):
        return ExtensionKind.NOT_EXTENSION
    dy = predimension(Z, Y)
    mids = [Y | s for s in _subsets(rest)]
    if any(predimension(Z, m) < dy for m in mids):
        return ExtensionKind.NOT_EXTENSION
    if predimension(Z) != dy:
        return ExtensionKind.NOT_ALGEBRAIC
    if any(predimension(Z, m) <= dy for m in mids if m != Y and m != Z.elements):
        return ExtensionKind.ALGEBRAIC
    D = frozenset(rest)
    for Yp in _subsets(sorted(Y)):
        if Yp == Y:
            continue
        kind = brute_force_classify(Yp, induced_substructure(Z, Yp | D))
        if kind in (ExtensionKind.SIMPLY_ALGEBRAIC, ExtensionKind.MSA):
            return ExtensionKind.SIMPLY_ALGEBRAIC
    return ExtensionKind.MSA


def lemma21_check(Y: Iterable[int], Z: Structure) -> bool:
    """Each y meets the new part through a hyperedge, and new points lie on two hyperedges when there are several."""
    Y = Z.check_subset(Y)
    if classify_extension(Y, Z) is not ExtensionKind.MSA:
        raise StructureError("lemma21_check needs a minimally simply algebraic extension")
    D = Z.elements - Y
    if any(not any(e & D for _, e in Z.incidence[y]) for y in Y):
        return False
    return len(D) < 2 or all(Z.degree(z) >= 2 for z in D)


# -- msa enumeration ---------------------------------------------------------


@dataclass(frozen=True)
class MsaInstance:
    base: frozenset
    new: frozenset

    @property
    def elements(self) -> frozenset:
        return self.base | self.new

    def to_json(self) -> dict:
        return {"base": sorted(self.base), "new": sorted(self.new)}


def _bases_for(S: Structure, D: frozenset, max_base: int | None, within: frozenset | None = None) -> Iterator[frozenset]:
    """Bases Y making (Y, D) an msa instance in S.

    Y fixes the hyperedges of Y u D that meet D: the inner ones plus every
    boundary hyperedge whose outer part lies in Y.  Their weight must be
    exactly |D| and it only grows with Y, so Y is grown one outer part at a
    time (always covering an element of D still short of hyperedges) and
    abandoned as soon as the weight overshoots.  ``within`` limits which
    elements Y may use.
    """
    inner_w = 0
    cover0 = dict.fromkeys(D, 0)
    boundary = []
    seen = set()
    for d in D:
        for name, e in S.incidence[d]:
            if e in seen:
                continue
            seen.add(e)
            w = S.signature[name].weight
            out = e - D
            if out:
                boundary.append((w, e & D, out))
            else:
                inner_w += w
                for z in e:
                    cover0[z] += 1
    need = len(D) - inner_w
    if within is not None:
        boundary = [t for t in boundary if t[2] <= within]
    if need < 0 or sum(t[0] for t in boundary) < need:
        return
    need_cover = 2 if len(D) >= 2 else 1
    reach = dict(cover0)
    for _, inside, _ in boundary:
        for z in inside:
            reach[z] += 1
    if any(c < need_cover for c in reach.values()):
        return
    boundary.sort(key=lambda t: (sorted(t[2]), sorted(t[1])))
    Dl = sorted(D)
    visited = set()

    def rec(Y):
        if Y in visited:
            return
        visited.add(Y)
        weight = 0
        cov = dict(cover0)
        open_ = []
        for w, inside, out in boundary:
            if out <= Y:
                weight += w
                for z in inside:
                    cov[z] += 1
            else:
                open_.append((inside, out))
        if weight > need:
            return
        short = [z for z in Dl if cov[z] < need_cover]
        if weight == need:
            if not short and _min_proper_gain(_local_traces(S, Y, Dl), len(Dl)) >= 1:
                yield Y
            return
        if short:
            z = max(short, key=lambda z: (need_cover - cov[z], -z))
            options = [out for inside, out in open_ if z in inside]
        else:
            options = [out for _, out in open_]
        if within is not None:
            options = [out for out in options if out <= within]
        for out in options:
            nY = Y | out
            if max_base is None or len(nY) <= max_base:
                yield from rec(nY)

    yield from rec(frozenset())


def _grow_instances(S: Structure, order: list[int], starts, W, max_base, max_ext) -> Iterator[MsaInstance]:
    """Instances with |D| >= 2, grown one hyperedge at a time.

    For such an instance the hyperedges inside Y u D that meet D each meet
    it in at least two points, cover every point of D twice, and weigh
    exactly |D|, while every proper part D' gets weight below |D'|.  So
    starting from the least point of D we keep adding a hyperedge through
    a point not yet covered twice, deciding its other points as D or Y.
    A state whose closed weight already reaches |D| with a point still
    uncovered cannot grow into an instance, and neither can one with a
    proper part D' of weight |D'| or more.  The parent state had no such
    part, so a new one contains the trace of a newly closed hyperedge and
    one flow per such hyperedge finds it.
    """
    rank = {x: i for i, x in enumerate(order)}
    weight = {sym.name: sym.weight for sym in S.signature.symbols}

    def closed(D, Y):
        edges = set()
        for d in D:
            for name, e in S.incidence[d]:
                if (name, e) not in edges and all(x in D or x in Y for x in e):
                    if sum(1 for x in e if x in D) == 1:
                        return None
                    edges.add((name, e))
        return edges

    for v in starts:
        rv = rank[v]
        seen = set()
        stack = [(frozenset([v]), frozenset(), set())]
        while stack:
            D, Y, F0 = stack.pop()
            if (D, Y) in seen:
                continue
            seen.add((D, Y))
            if (max_ext is not None and len(D) > max_ext) or (max_base is not None and len(Y) > max_base):
                continue
            F = closed(D, Y)
            if F is None:
                continue
            w = sum(weight[n] for n, _ in F)
            if w <= len(D) and len(F) > len(F0):
                traces = [(weight[n], e & D) for n, e in F]
                if any(
                    (m := min_closure(D, traces, e & D)).value <= 0 and m.smallest != D
                    for n, e in F - F0
                ):
                    continue
            cover = dict.fromkeys(D, 0)
            for _, e in F:
                for x in e:
                    if x in cover:
                        cover[x] += 1
            short = [z for z in D if cover[z] < 2]
            if w > len(D) or (short and w >= len(D)):
                continue
            if not short and w == len(D):
                Dl = sorted(D)
                if len(D) >= 2 and _min_proper_gain(_local_traces(S, Y, Dl), len(Dl)) >= 1:
                    yield MsaInstance(Y, D)
                continue
            if short:
                z = min(short, key=rank.__getitem__)
                cands = [e for n, e in S.incidence[z] if (n, e) not in F]
            else:
                cands = list({e for d in D for n, e in S.incidence[d] if (n, e) not in F})
            for e in cands:
                todo = [x for x in e if x not in D and x not in Y]
                opts = []
                for x in todo:
                    o = []
                    if x in rank and rank[x] > rv:
                        o.append(0)
                    if W is None or x in W:
                        o.append(1)
                    opts.append(o)
                for pick in itertools.product(*opts):
                    nD = D | {x for x, c in zip(todo, pick) if c == 0}
                    if sum(1 for x in e if x in nD) < 2:
                        continue
                    nY = Y | {x for x, c in zip(todo, pick) if c == 1}
                    if (nD, nY) not in seen:
                        stack.append((nD, nY, F))


def _heavy_components(S: Structure, alive=None) -> list[frozenset]:
    G = nx.Graph()
    heavy = {x for x in S.elements if S.degree(x) >= 2 and (alive is None or x in alive)}
    for _, e in S.edges():
        G.add_edges_from(itertools.combinations(sorted(x for x in e if x in heavy), 2))
    return sorted((frozenset(c) for c in nx.biconnected_components(G)), key=sorted)


def iter_msa(
    S: Structure,
    max_base: int | None = None,
    max_ext: int | None = None,
    touching: Iterable[int] | None = None,
    base_within: Iterable[int] | None = None,
) -> Iterator[MsaInstance]:
    """Every msa instance (Y, D) of S within the caps.

    With ``touching=T`` the instances meeting T are all produced; others
    may be skipped.  ``base_within`` keeps only bases inside that set.
    """
    W = None if base_within is None else frozenset(base_within)
    max_ext = len(S) if max_ext is None else max_ext
    T = None if touching is None else S.check_subset(touching)
    in_c0 = dimension((), S) == 0

    def ok(inst):
        if T is not None and not inst.elements & T:
            return False
        return in_c0 or dimension((), induced_substructure(S, inst.elements)) == 0

    if T is not None:
        seeds = set(T)
        for t in T:
            for _, e in S.incidence[t]:
                seeds |= e
    else:
        seeds = set(S.elements)
    if max_ext >= 1:
        for d in sorted(seeds):
            for Y in _bases_for(S, frozenset([d]), max_base, W):
                inst = MsaInstance(Y, frozenset([d]))
                if ok(inst):
                    yield inst
    if max_ext < 2:
        return
    alive = None
    if W is not None:
        # every element of D lies in two hyperedges inside Y u D, a subset of W u D
        alive = set(S.elements)
        changed = True
        while changed:
            changed = False
            for z in list(alive):
                if sum(1 for _, e in S.incidence[z] if e <= W or all(x in alive or x in W for x in e)) < 2:
                    alive.discard(z)
                    changed = True
    # removing a point c of D cannot split the traces on D: the two sides
    # plus c would have gains summing to 1.  So D sits in one block.
    for comp in _heavy_components(S, alive):
        if not comp & seeds:
            continue
        order = sorted(comp, key=lambda x: (x not in seeds, x))
        starts = [x for x in order if x in seeds]
        for inst in _grow_instances(S, order, starts, W, max_base, max_ext):
            if ok(inst):
                yield inst


def _instance_key(i: MsaInstance):
    return (sorted(i.base), sorted(i.new))


def enumerate_msa_within(
    S: Structure,
    max_base: int | None = None,
    max_ext: int | None = None,
    limit: int | None = None,
) -> list[MsaInstance]:
    """All msa instances with |Y| <= max_base and |D| <= max_ext, sorted."""
    if (max_base is not None and max_base < 0) or (max_ext is not None and max_ext < 0):
        raise ValueError("caps must be non-negative")
    out = []
    for inst in iter_msa(S, max_base, max_ext):
        out.append(inst)
        if limit is not None and len(out) > limit:
            raise ResourceCapError(f"more than {limit} msa instances", partial=sorted(out, key=_instance_key))
    return sorted(out, key=_instance_key)


def brute_force_msa(S: Structure, max_base=None, max_ext=None) -> list[MsaInstance]:
    """Every (Y, D) tested with brute_force_classify.  Reference only."""
    out = []
    for Z in _subsets(S.order):
        sub = induced_substructure(S, Z)
        for D in _subsets(sorted(Z)):
            if not D or (max_ext is not None and len(D) > max_ext):
                continue
            Y = Z - D
            if max_base is not None and len(Y) > max_base:
                continue
            if brute_force_classify(Y, sub) is ExtensionKind.MSA:
                out.append(MsaInstance(Y, D))
    return sorted(out, key=_instance_key)


def msa_pattern(S: Structure, inst: MsaInstance) -> PointedStructure:
    return PointedStructure(induced_substructure(S, inst.elements), inst.base)


def max_disjoint_copies(
    S: Structure,
    pattern: PointedStructure,
    anchor: Mapping[int, int] | None = None,
    stop_at: int | None = None,
) -> tuple[int, list[frozenset]]:
    """Largest family of copies over the anchored base whose new parts are pairwise disjoint.

    Returns the size and one optimal family of new parts.  With ``stop_at``
    the search ends once a family of that size is found.
    """
    anchor = dict(anchor) if anchor is not None else {y: y for y in pattern.base}
    base_img = frozenset(anchor.values())
    images = sorted({frozenset(e.values()) - base_img for e in find_embeddings_over(pattern, S, anchor)}, key=sorted)
    best: list[frozenset] = []

    def rec(i, chosen, used):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        if stop_at is not None and len(best) >= stop_at:
            return True
        for j in range(i, len(images)):
            if len(chosen) + len(images) - j <= len(best):
                break
            if not images[j] & used:
                chosen.append(images[j])
                if rec(j + 1, chosen, used | images[j]):
                    return True
                chosen.pop()
        return False

    rec(0, [], frozenset())
    return len(best), best


# -- membership --------------------------------------------------------------


@dataclass
class Membership:
    member: bool
    reason: str = ""
    witness: dict | None = None

    def __bool__(self):
        return self.member

    def to_json(self) -> dict:
        return {"member": self.member, "reason": self.reason, "witness": self.witness}


def _negative_subset(S: Structure) -> frozenset | None:
    m = min_closure(S.order, [(S.signature[n].weight, e) for n, e in S.edges()])
    return m.smallest if m.value < 0 else None


def _k0_violation(S: Structure) -> dict | None:
    """First subset of size <= 3 that is not self-sufficient.

    One flow per pair gives d(pair) and cl(pair).  A pair is fine when
    d = 2 and its closure adds only third points of hyperedges through it;
    then every hyperedge has d = 2 and every other triple d = 3.
    """

    def report(T):
        return {"subset": sorted(T), "superset": sorted(self_sufficient_closure(T, S))}

    if len(S) == 1:
        x = S.order[0]
        return report((x,)) if dimension((x,), S) < 1 else None
    triples = S.rel(S.signature.symbols[0].name)
    for x, y in itertools.combinations(S.order, 2):
        mins = _minimise_over(S, frozenset((x, y)))
        if mins.value < 2:
            for z in (x, y):
                if dimension((z,), S) < 1:
                    return report((z,))
            return report((x, y))
        for z in sorted(mins.largest - {x, y}):
            if frozenset((x, y, z)) not in triples:
                return report((x, y, z))
    return None


def _c0prime_violation(S: Structure, k: int) -> dict | None:
    # a set with at least k points and delta below k carries a hyperedge,
    # so minimising over supersets of each hyperedge finds every violation
    for _, e in S.edges():
        m = _minimise_over(S, e)
        if m.value < k:
            T = sorted(m.smallest)[:k]
            return {"subset": T, "superset": sorted(self_sufficient_closure(T, S))}
    return None


def mu_violation(
    S: Structure,
    mu: MuFunction,
    min_base_delta: int = 0,
    touching: Iterable[int] | None = None,
) -> dict | None:
    """A base Y and msa type with more than mu(Y, Z) disjoint copies, or None."""
    done = set()
    # a family of k disjoint copies needs k distinct hyperedges at every base element
    lb = mu.lower_bound(min_base_delta)
    heavy = [x for x in S.elements if S.degree(x) > lb]
    if len(heavy) < min_base_delta:
        return None
    for inst in iter_msa(S, touching=touching, base_within=heavy):
        dy = predimension(S, inst.base)
        if dy < min_base_delta:
            continue
        # each copy uses its own hyperedge at every base element
        if inst.base and min(S.degree(y) for y in inst.base) <= mu.lower_bound(dy):
            continue
        pattern = msa_pattern(S, inst)
        code = canonical_form(pattern)
        if (inst.base, code) in done:
            continue
        done.add((inst.base, code))
        cap = mu(code, dy)
        count, family = max_disjoint_copies(S, pattern, stop_at=cap + 1)
        if count > cap:
            return {"base": sorted(inst.base), "code": code, "mu": cap, "copies": [sorted(c) for c in family]}
    return None


def membership(S: Structure, spec: ClassSpec, touching: Iterable[int] | None = None) -> Membership:
    """Decide whether S lies in the class.

    ``touching=T`` restricts the msa part of the check to instances meeting
    T.  That is only sound when S minus T is already known to be in the
    class, as for a free amalgam over a self-sufficient base.
    """
    spec.check_signature(S)
    bad = _negative_subset(S)
    if bad is not None:
        return Membership(False, "negative predimension", {"subset": sorted(bad), "delta": predimension(S, bad)})
    if spec.kind in ("K0", "Kmu"):
        v = _k0_violation(S)
        if v is not None:
            return Membership(False, "small subset not self-sufficient", v)
    if spec.kind == "C0prime":
        v = _c0prime_violation(S, spec.k)
        if v is not None:
            return Membership(False, "predimension below min(|B|, k)", v)
    if spec.collapsed:
        v = mu_violation(S, spec.mu, 3 if spec.kind == "Kmu" else 0, touching)
        if v is not None:
            return Membership(False, "too many disjoint msa copies", v)
    return Membership(True)


def realized_types(S: Structure) -> list[tuple[str, int]]:
    """(code, delta(Y)) for each msa type realised in S."""
    return sorted({(canonical_form(msa_pattern(S, i)), predimension(S, i.base)) for i in iter_msa(S)})
