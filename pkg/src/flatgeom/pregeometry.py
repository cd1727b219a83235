"""Pregeometries of finite structures and their combinatorial geometries.

``geometry_of(B, Y)`` is the localisation of PG(B) over Y: its points are
the interdependence classes of B outside cl(Y), with rank given by the
dimension over Y.  ``Y = {}`` gives G(B).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .dimension import d_closure, dimension, SizeCapError
from .structures import Structure

MAX_FLAT_POINTS = 24


@dataclass(frozen=True)
class Geometry:
    ambient: Structure
    base: frozenset
    base_closure: frozenset
    points: tuple[frozenset, ...]
    _rank_cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def reps(self) -> list[int]:
        return [min(p) for p in self.points]

    def point_of(self, x: int) -> int | None:
        """Index of the point whose class contains element ``x`` (None inside cl(base))."""
        for i, p in enumerate(self.points):
            if x in p:
                return i
        return None

    def rank(self, idx: Iterable[int]) -> int:
        key = frozenset(idx)
        if key not in self._rank_cache:
            elems = set(self.base)
            for i in key:
                elems.add(min(self.points[i]))
            self._rank_cache[key] = dimension(elems, self.ambient) - dimension(self.base, self.ambient)
        return self._rank_cache[key]

    @property
    def total_rank(self) -> int:
        return self.rank(range(len(self.points)))

    def closure(self, idx: Iterable[int]) -> frozenset:
        idx = frozenset(idx)
        r = self.rank(idx)
        return frozenset(i for i in range(len(self.points)) if i in idx or self.rank(idx | {i}) == r)

    def to_json(self) -> dict:
        return {
            "base": sorted(self.base),
            "base_closure": sorted(self.base_closure),
            "points": [sorted(p) for p in self.points],
            "rank": self.total_rank,
        }


def geometry_of(B: Structure, base: Iterable[int] = ()) -> Geometry:
    base = B.check_subset(base)
    cl0 = d_closure(base, B)
    classes: dict[frozenset, set] = {}
    for x in B.order:
        if x in cl0:
            continue
        cx = d_closure(base | {x}, B)
        classes.setdefault(cx, set()).add(x)
    # interdependent elements share the closure; classes are those elements outside cl(base)
    points = sorted((frozenset(v) for v in classes.values()), key=min)
    return Geometry(B, base, cl0, tuple(points))


def independent(G: Geometry, points: Sequence[int]) -> bool:
    """Points are given by index; repeated points make the list dependent."""
    if len(set(points)) != len(points):
        return False
    return G.rank(points) == len(points)


def closed_sets(G: Geometry, max_points: int = MAX_FLAT_POINTS) -> list[tuple[frozenset, int]]:
    """All flats of G as (point-index set, rank), by closing flats under one-point extensions."""
    if len(G) > max_points:
        raise SizeCapError(f"geometry has {len(G)} points; flat enumeration cap is {max_points}")
    bottom = G.closure(())
    flats = {bottom}
    frontier = [bottom]
    while frontier:
        nxt = []
        for F in frontier:
            for i in range(len(G)):
                if i not in F:
                    H = G.closure(F | {i})
                    if H not in flats:
                        flats.add(H)
                        nxt.append(H)
        frontier = nxt
    return sorted(((F, G.rank(F)) for F in flats), key=lambda t: (t[1], sorted(t[0])))


def _flat_masks(G: Geometry) -> list[int]:
    return [sum(1 << i for i in F) for F, _ in closed_sets(G)]


def geometry_isomorphic(G1: Geometry, G2: Geometry) -> dict[int, int] | None:
    """A point bijection carrying flats onto flats, or None if there is none."""
    n = len(G1)
    if n != len(G2) or G1.total_rank != G2.total_rank:
        return None
    f1, f2 = _flat_masks(G1), _flat_masks(G2)
    if len(f1) != len(f2):
        return None
    rank1 = {m: G1.rank(i for i in range(n) if m >> i & 1) for m in f1}
    rank2 = {m: G2.rank(i for i in range(n) if m >> i & 1) for m in f2}

    def signature(flats, rank, p):
        return tuple(sorted((rank[m], bin(m).count("1")) for m in flats if m >> p & 1))

    sig1 = [signature(f1, rank1, p) for p in range(n)]
    sig2 = [signature(f2, rank2, p) for p in range(n)]
    if sorted(sig1) != sorted(sig2):
        return None
    set2 = set(f2)
    order = sorted(range(n), key=lambda p: sum(1 for q in range(n) if sig1[q] == sig1[p]))
    mapping: dict[int, int] = {}
    used = set()

    def restrict(flats, mask):
        return {m & mask for m in flats}

    def consistent():
        dom = sum(1 << p for p in mapping)
        img = sum(1 << q for q in mapping.values())
        left = set()
        for r in restrict(f1, dom):
            left.add(sum(1 << mapping[p] for p in range(n) if r >> p & 1))
        return left == restrict(f2, img)

    def rec(k):
        if k == n:
            return all(sum(1 << mapping[p] for p in range(n) if m >> p & 1) in set2 for m in f1)
        p = order[k]
        for q in range(n):
            if q in used or sig2[q] != sig1[p]:
                continue
            mapping[p] = q
            used.add(q)
            if consistent() and rec(k + 1):
                return True
            used.discard(q)
            del mapping[p]
        return False

    return dict(mapping) if rec(0) else None


def brute_force_isomorphic(G1: Geometry, G2: Geometry) -> bool:
    """Exhaustive check over all bijections preserving the rank of every subset.  Reference only."""
    n = len(G1)
    if n != len(G2):
        return False
    subsets = [s for k in range(n + 1) for s in itertools.combinations(range(n), k)]
    r1 = {s: G1.rank(s) for s in subsets}
    for perm in itertools.permutations(range(n)):
        if all(G2.rank(perm[i] for i in s) == r1[s] for s in subsets):
            return True
    return False


def is_matroid_rank(rank, ground: Sequence) -> bool:
    """Check rank axioms (bounded, monotone, submodular) exhaustively on a small ground set."""
    subsets = [frozenset(s) for k in range(len(ground) + 1) for s in itertools.combinations(ground, k)]
    r = {s: rank(s) for s in subsets}
    for s in subsets:
        if not 0 <= r[s] <= len(s):
            return False
        for x in ground:
            if x not in s and r[s | {x}] < r[s]:
                return False
    for a in subsets:
        for b in subsets:
            if r[a | b] + r[a & b] > r[a] + r[b]:
                return False
    return True


def flat_lattice_dot(G: Geometry) -> str:
    """Hasse diagram of the flats in Graphviz DOT, bottom flat first."""
    flats = closed_sets(G)
    lines = ["digraph flats {", "  rankdir=BT;", "  node [shape=box];"]
    for k, (F, r) in enumerate(flats):
        label = "{" + ",".join(str(G.reps[i]) for i in sorted(F)) + "}"
        lines.append(f'  f{k} [label="{label} r={r}"];')
    for k, (F, r) in enumerate(flats):
        for j, (H, s) in enumerate(flats):
            if s == r + 1 and F < H:
                lines.append(f"  f{k} -> f{j};")
    lines.append("}")
    return "\n".join(lines) + "\n"
