"""Exhaustive reference implementations, slow on purpose."""

import itertools

from flatgeom import canonical_form
from flatgeom.classes import brute_force_msa, max_disjoint_copies, msa_pattern
from flatgeom.dimension import brute_force_dimension
from flatgeom.structures import predimension


def subsets(items, min_size=0, max_size=None):
    items = sorted(items)
    top = len(items) if max_size is None else max_size
    for k in range(min_size, top + 1):
        yield from (frozenset(c) for c in itertools.combinations(items, k))


def closure(A, S):
    dA = brute_force_dimension(A, S)
    return frozenset(x for x in S.elements if brute_force_dimension(set(A) | {x}, S) == dA)


def self_sufficient(A, S):
    dA = predimension(S, A)
    return all(predimension(S, T) >= dA for T in subsets(S.elements) if set(A) <= T)


def member(S, spec):
    if any(predimension(S, T) < 0 for T in subsets(S.elements)):
        return False
    if spec.kind in ("K0", "Kmu"):
        if not all(self_sufficient(T, S) for T in subsets(S.elements, 1, 3)):
            return False
    if spec.kind == "C0prime":
        if any(predimension(S, T) < min(len(T), spec.k) for T in subsets(S.elements, 1)):
            return False
    if spec.collapsed:
        least = 3 if spec.kind == "Kmu" else 0
        for inst in brute_force_msa(S):
            dy = predimension(S, inst.base)
            if dy < least:
                continue
            pattern = msa_pattern(S, inst)
            cap = spec.mu(canonical_form(pattern), dy)
            if max_disjoint_copies(S, pattern, stop_at=cap + 1)[0] > cap:
                return False
    return True
