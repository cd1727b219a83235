"""Canonical codes for pointed structures.

Colour refinement on elements (a hyperedge tells each member the colours of
its co-members) with individualisation on ties.  The code is the least
relabelled structure over all leaves of the search tree; leaves equal to the
first leaf yield automorphisms, which prune sibling orbits and let the
search jump back to where it left the first path.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .structures import PointedStructure, Structure


def _rerank(keys: dict) -> dict:
    order = {k: i for i, k in enumerate(sorted(set(keys.values())))}
    return {x: order[k] for x, k in keys.items()}


def _refine(S: Structure, colour: dict) -> dict:
    ncol = len(set(colour.values()))
    while True:
        keys = {}
        for x in S.elements:
            sig = sorted(
                (name, tuple(sorted(colour[y] for y in e if y != x))) for name, e in S.incidence[x]
            )
            keys[x] = (colour[x], tuple(sig))
        colour = _rerank(keys)
        n = len(set(colour.values()))
        if n == ncol:
            return colour
        ncol = n


def _leaf_code(S: Structure, base: frozenset, colour: dict) -> tuple:
    b = tuple(sorted(colour[x] for x in base))
    edges = tuple(sorted((name, tuple(sorted(colour[x] for x in e))) for name, e in S.edges()))
    return (b, edges)


def _orbits(points: Iterable[int], autos: list[dict]) -> dict:
    parent = {p: p for p in points}

    def find(p):
        while parent[p] != p:
            parent[p] = parent[parent[p]]
            p = parent[p]
        return p

    for g in autos:
        for p in list(parent):
            q = g.get(p, p)
            if q in parent:
                a, b = find(p), find(q)
                if a != b:
                    parent[max(a, b)] = min(a, b)
    return {p: find(p) for p in parent}


def canonical_labelling(P: PointedStructure, fixed: Sequence[int] | None = None) -> tuple[tuple, dict]:
    """(code tuple, element -> canonical position) for a pointed structure.

    With ``fixed`` (an ordering of the base) isomorphisms must respect that
    ordering, so the base is fixed pointwise rather than setwise.
    """
    S, base = P.structure, P.base
    if not S.elements:
        return ((), ()), {}
    if fixed is None:
        start = {x: (0 if x in base else 1) for x in S.elements}
    else:
        pos = {x: i for i, x in enumerate(fixed)}
        start = {x: (0, pos[x]) if x in pos else (1, 0) for x in S.elements}
    start = _refine(S, _rerank(start))

    first: dict = {}
    best: dict = {}
    autos: list[dict] = []

    def leaf(colour, path):
        code = _leaf_code(S, base, colour)
        if not first:
            first.update(code=code, colour=colour, path=path)
            best.update(code=code, colour=colour)
            return None
        for ref in (first, best):
            if code == ref["code"]:
                inv = {c: x for x, c in ref["colour"].items()}
                autos.append({x: inv[colour[x]] for x in S.elements})
                if ref is first:
                    k = 0
                    while k < len(path) and path[k] == first["path"][k]:
                        k += 1
                    return k
                return None
        if code < best["code"]:
            best.update(code=code, colour=colour)
        return None

    def search(colour, path):
        cells: dict = {}
        for x, c in colour.items():
            cells.setdefault(c, []).append(x)
        target = next((sorted(cells[c]) for c in sorted(cells) if len(cells[c]) > 1), None)
        if target is None:
            return leaf(colour, path)
        done: list[int] = []
        for v in target:
            if done:
                stab = [g for g in autos if all(g[p] == p for p in path)]
                orb = _orbits(target, stab)
                if any(orb[v] == orb[u] for u in done):
                    continue
            child = _refine(S, {x: (colour[x], 0 if x == v else 1) for x in S.elements})
            jump = search(child, path + (v,))
            done.append(v)
            if jump is not None and jump < len(path):
                return jump
        return None

    search(start, ())
    return best["code"], best["colour"]


def canonical_form(P: PointedStructure, fixed: Sequence[int] | None = None) -> str:
    """Deterministic string, equal for two pointed structures iff they are isomorphic over their bases.

    ``fixed`` lists the base in order and asks for isomorphisms fixing it pointwise.
    """
    S = P.structure
    (b, edges), _ = canonical_labelling(P, fixed)
    sig = ",".join(f"{s.name}/{s.arity}/{s.weight}" for s in sorted(S.signature.symbols))
    body = ";".join(f"{name}:" + ".".join(map(str, e)) for name, e in edges)
    return f"{sig}|n={len(S)}|b={'.'.join(map(str, b))}|{body}"


def structure_code(S: Structure, base: Iterable[int] = ()) -> str:
    return canonical_form(PointedStructure(S, frozenset(base)))


def are_isomorphic(P: PointedStructure, Q: PointedStructure) -> bool:
    return canonical_form(P) == canonical_form(Q)


def base_delta_of_code(code: str) -> int:
    """delta of the base recorded in a canonical code."""
    sig, _, b, *body = code.split("|")
    weights = {}
    for part in sig.split(","):
        name, _, w = part.split("/")
        weights[name] = int(w)
    base = {int(x) for x in b[2:].split(".") if x}
    total = len(base)
    for chunk in ("|".join(body)).split(";"):
        if not chunk:
            continue
        name, members = chunk.split(":")
        if {int(x) for x in members.split(".")} <= base:
            total -= weights[name]
    return total
