"""Self-sufficiency, dimension and d-closure.

The predimension is submodular on subsets, so minimising it over the
supersets of a fixed set is a maximum-weight closure problem: choosing a
hyperedge earns its weight and forces its members in, each new element
costs 1.  A single max-flow gives the minimum together with the smallest
minimiser (the self-sufficient closure) and the largest minimiser (the
d-closure).
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .structures import Structure, StructureError, delta_mask, predimension

DEFAULT_MAX_ELEMENTS = 400


class SizeCapError(RuntimeError):
    """Structure exceeds the configured size cap."""


def max_elements() -> int:
    return int(os.environ.get("FLATGEOM_MAX_ELEMENTS", DEFAULT_MAX_ELEMENTS))


class _FlowNetwork:
    __slots__ = ("n", "head", "cap", "adj")

    def __init__(self, n):
        self.n = n
        self.head = []
        self.cap = []
        self.adj = [[] for _ in range(n)]

    def add(self, u, v, c):
        self.adj[u].append(len(self.head))
        self.head.append(v)
        self.cap.append(c)
        self.adj[v].append(len(self.head))
        self.head.append(u)
        self.cap.append(0)

    def maxflow(self, s, t):
        head, cap, adj = self.head, self.cap, self.adj
        flow = 0
        while True:
            level = [-1] * self.n
            level[s] = 0
            q = deque([s])
            while q:
                u = q.popleft()
                for a in adj[u]:
                    if cap[a] > 0 and level[head[a]] < 0:
                        level[head[a]] = level[u] + 1
                        q.append(head[a])
            if level[t] < 0:
                return flow
            it = [0] * self.n

            def push(u, f):
                if u == t:
                    return f
                while it[u] < len(adj[u]):
                    a = adj[u][it[u]]
                    v = head[a]
                    if cap[a] > 0 and level[v] == level[u] + 1:
                        got = push(v, min(f, cap[a]))
                        if got:
                            cap[a] -= got
                            cap[a ^ 1] += got
                            return got
                    it[u] += 1
                return 0

            while True:
                f = push(s, 1 << 60)
                if not f:
                    break
                flow += f

    def reachable_from(self, s):
        seen = {s}
        q = deque([s])
        while q:
            u = q.popleft()
            for a in self.adj[u]:
                v = self.head[a]
                if self.cap[a] > 0 and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen

    def reaching(self, t):
        seen = {t}
        q = deque([t])
        while q:
            u = q.popleft()
            for a in self.adj[u]:
                # residual arc v -> u is the reverse of arc a
                v = self.head[a]
                if self.cap[a ^ 1] > 0 and v not in seen:
                    seen.add(v)
                    q.append(v)
        return seen


@dataclass(frozen=True)
class _Minimisers:
    value: int
    smallest: frozenset
    largest: frozenset


def min_closure(elements, hyperedges, forced=()) -> _Minimisers:
    """Minimise |C| - w(hyperedges inside C) over forced <= C <= elements.

    ``hyperedges`` is a list of (weight, members); members of any size.
    """
    forced = frozenset(forced)
    outside = [x for x in elements if x not in forced]
    node = {x: 2 + i for i, x in enumerate(outside)}
    hyper = []
    w_inside = 0
    for w, e in hyperedges:
        rest = [x for x in e if x not in forced]
        if rest:
            hyper.append((w, rest))
        else:
            w_inside += w
    net = _FlowNetwork(2 + len(outside) + len(hyper))
    w_out = sum(w for w, _ in hyper)
    inf = w_out + len(outside) + 1
    for k, (w, rest) in enumerate(hyper):
        h = 2 + len(outside) + k
        net.add(0, h, w)
        for x in rest:
            net.add(h, node[x], inf)
    for x in outside:
        net.add(node[x], 1, 1)
    cut = net.maxflow(0, 1)
    value = len(forced) - w_inside + cut - w_out
    src = net.reachable_from(0)
    snk = net.reaching(1)
    smallest = forced | {x for x in outside if node[x] in src}
    largest = forced | {x for x in outside if node[x] not in snk}
    return _Minimisers(value, frozenset(smallest), frozenset(largest))


def _minimise_over(B: Structure, A: frozenset) -> _Minimisers:
    """min delta(C) over A <= C <= B, with smallest and largest minimisers."""
    if len(B) > max_elements():
        raise SizeCapError(f"structure has {len(B)} elements; cap is {max_elements()}")
    return min_closure(B.order, [(B.signature[n].weight, e) for n, e in B.edges()], A)


@dataclass(frozen=True)
class DimensionReport:
    subset: frozenset
    dimension: int
    witness: frozenset

    def to_json(self) -> dict:
        return {"subset": sorted(self.subset), "dimension": self.dimension, "witness": sorted(self.witness)}


def self_sufficient_closure(A: Iterable[int], B: Structure) -> frozenset:
    """Least C with A <= C <= B."""
    A = B.check_subset(A)
    return _minimise_over(B, A).smallest


def is_self_sufficient(A: Iterable[int], B: Structure) -> tuple[bool, frozenset | None]:
    """Whether A <= B; on failure also the self-sufficient closure, which has smaller predimension."""
    A = B.check_subset(A)
    mins = _minimise_over(B, A)
    if mins.value < predimension(B, A):
        return False, mins.smallest
    return True, None


def dimension(A: Iterable[int], B: Structure, over: Iterable[int] | None = None) -> int:
    """d_B(A), or d_B(A/C) = d(A u C) - d(C) when ``over`` is given."""
    A = B.check_subset(A)
    if over is not None:
        C = B.check_subset(over)
        return _minimise_over(B, A | C).value - _minimise_over(B, C).value
    return _minimise_over(B, A).value


def dimension_report(A: Iterable[int], B: Structure) -> DimensionReport:
    A = B.check_subset(A)
    mins = _minimise_over(B, A)
    return DimensionReport(A, mins.value, mins.smallest)


def d_closure(A: Iterable[int], B: Structure) -> frozenset:
    """{c : d(A u {c}) = d(A)}."""
    A = B.check_subset(A)
    return _minimise_over(B, A).largest


def is_d_closed(A: Iterable[int], B: Structure) -> bool:
    A = B.check_subset(A)
    return d_closure(A, B) == A


def brute_force_dimension(A: Iterable[int], B: Structure) -> int:
    """Minimum predimension over all supersets of A, by enumeration.  Reference only."""
    A = B.check_subset(A)
    am = B.mask(A)
    rest = [1 << B.index[x] for x in B.order if x not in A]
    best = None
    for bits in range(1 << len(rest)):
        m = am
        for i, b in enumerate(rest):
            if bits >> i & 1:
                m |= b
        v = delta_mask(B, m)
        if best is None or v < best:
            best = v
    return best


__all__ = [
    "DimensionReport",
    "SizeCapError",
    "StructureError",
    "brute_force_dimension",
    "d_closure",
    "dimension",
    "dimension_report",
    "is_d_closed",
    "is_self_sufficient",
    "self_sufficient_closure",
]
