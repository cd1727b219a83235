"""Finite symmetric relational structures.

A structure is a finite set of integer element ids together with, for each
relation symbol, a set of hyperedges.  Hyperedges are unordered sets whose
size equals the arity of the symbol.  Everything here is an immutable value.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping


class StructureError(ValueError):
    """Raised on malformed structures or invalid element references."""


@dataclass(frozen=True, order=True)
class Symbol:
    name: str
    arity: int
    weight: int = 1


@dataclass(frozen=True)
class Signature:
    symbols: tuple[Symbol, ...]

    def __post_init__(self):
        if not self.symbols:
            raise StructureError("a signature needs at least one symbol")
        names = [s.name for s in self.symbols]
        if len(set(names)) != len(names):
            raise StructureError(f"duplicate symbol names in {names}")
        for s in self.symbols:
            if s.arity < 3:
                raise StructureError(f"symbol {s.name} has arity {s.arity} < 3")
            if s.weight < 1:
                raise StructureError(f"symbol {s.name} has non-positive weight")

    @classmethod
    def of(cls, *specs) -> "Signature":
        """``Signature.of(("R", 3), ("S", 4, 2))`` or ``Signature.of(3)``."""
        syms = []
        for i, spec in enumerate(specs):
            if isinstance(spec, int):
                syms.append(Symbol(f"R{i + 1}" if len(specs) > 1 else "R", spec))
            else:
                syms.append(Symbol(*spec))
        return cls(tuple(syms))

    def __getitem__(self, name: str) -> Symbol:
        for s in self.symbols:
            if s.name == name:
                return s
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return any(s.name == name for s in self.symbols)

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.symbols]

    @property
    def max_arity(self) -> int:
        return max(s.arity for s in self.symbols)

    def smallest_symbol(self) -> Symbol:
        return min(self.symbols, key=lambda s: (s.arity, s.name))

    def symbol_at_least(self, k: int) -> Symbol:
        """Symbol of least arity >= k (ties by name)."""
        cands = [s for s in self.symbols if s.arity >= k]
        if not cands:
            raise StructureError(f"no symbol of arity >= {k}")
        return min(cands, key=lambda s: (s.arity, s.name))

    def to_json(self) -> list[dict]:
        return [{"name": s.name, "arity": s.arity, "weight": s.weight} for s in self.symbols]

    @classmethod
    def from_json(cls, data: list[dict]) -> "Signature":
        return cls(tuple(Symbol(d["name"], int(d["arity"]), int(d.get("weight", 1))) for d in data))


TERNARY = Signature.of(3)

Edge = frozenset
Relations = tuple  # tuple[(name, frozenset[frozenset[int]]), ...] sorted by name


def _freeze_relations(signature: Signature, relations: Mapping[str, Iterable[Iterable[int]]]) -> Relations:
    out = {s.name: set() for s in signature.symbols}
    for name, edges in relations.items():
        if name not in out:
            raise StructureError(f"unknown symbol {name!r}")
        arity = signature[name].arity
        for e in edges:
            items = list(e)
            fe = frozenset(items)
            if len(fe) != len(items):
                raise StructureError(f"hyperedge {items} of {name} repeats an element")
            if len(fe) != arity:
                raise StructureError(f"hyperedge {sorted(fe)} of {name} has size {len(fe)} != {arity}")
            out[name].add(fe)
    return tuple(sorted((n, frozenset(es)) for n, es in out.items()))


@dataclass(frozen=True)
class Structure:
    signature: Signature
    elements: frozenset
    relations: Relations = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "elements", frozenset(self.elements))
        if isinstance(self.relations, Mapping):
            object.__setattr__(self, "relations", _freeze_relations(self.signature, self.relations))
        elif [n for n, _ in self.relations] != sorted(self.signature.names):
            object.__setattr__(self, "relations", _freeze_relations(self.signature, dict(self.relations)))
        for name, edges in self.relations:
            for e in edges:
                if not e <= self.elements:
                    raise StructureError(f"hyperedge {sorted(e)} of {name} leaves the element set")

    @classmethod
    def build(cls, signature: Signature, elements: Iterable[int], relations=None) -> "Structure":
        return cls(signature, frozenset(elements), _freeze_relations(signature, relations or {}))

    @classmethod
    def ternary(cls, elements: Iterable[int], edges: Iterable[Iterable[int]] = ()) -> "Structure":
        """Structure over the single ternary symbol ``R``."""
        return cls.build(TERNARY, elements, {"R": edges})

    # -- access -----------------------------------------------------------

    def rel(self, name: str) -> frozenset:
        for n, es in self.relations:
            if n == name:
                return es
        raise KeyError(name)

    def edges(self) -> Iterator[tuple[str, frozenset]]:
        for name, es in self.relations:
            for e in sorted(es, key=sorted):
                yield name, e

    @property
    def edge_count(self) -> int:
        return sum(len(es) for _, es in self.relations)

    def __len__(self) -> int:
        return len(self.elements)

    def __repr__(self) -> str:
        rels = ", ".join(f"{n}{sorted(e)}" for n, e in self.edges())
        return f"Structure({sorted(self.elements)}; {rels})"

    @cached_property
    def order(self) -> tuple[int, ...]:
        return tuple(sorted(self.elements))

    @cached_property
    def index(self) -> dict[int, int]:
        return {x: i for i, x in enumerate(self.order)}

    @cached_property
    def edge_masks(self) -> tuple[tuple[int, int], ...]:
        """(bitmask, weight) per hyperedge, bits indexed by :attr:`index`."""
        idx = self.index
        out = []
        for name, es in self.relations:
            w = self.signature[name].weight
            for e in es:
                m = 0
                for x in e:
                    m |= 1 << idx[x]
                out.append((m, w))
        return tuple(out)

    @cached_property
    def incidence(self) -> dict[int, tuple[tuple[str, frozenset], ...]]:
        inc = {x: [] for x in self.elements}
        for name, e in self.edges():
            for x in e:
                inc[x].append((name, e))
        return {x: tuple(v) for x, v in inc.items()}

    def degree(self, x: int) -> int:
        return len(self.incidence[x])

    def mask(self, subset: Iterable[int]) -> int:
        idx = self.index
        m = 0
        for x in subset:
            try:
                m |= 1 << idx[x]
            except KeyError:
                raise StructureError(f"element {x} is not in the structure") from None
        return m

    def unmask(self, m: int) -> frozenset:
        return frozenset(x for i, x in enumerate(self.order) if m >> i & 1)

    def check_subset(self, subset: Iterable[int]) -> frozenset:
        s = frozenset(subset)
        extra = s - self.elements
        if extra:
            raise StructureError(f"elements {sorted(extra)} are not in the structure")
        return s

    def fresh(self, count: int = 1, start: int | None = None) -> list[int]:
        lo = max(self.elements, default=0) + 1
        if start is not None:
            lo = max(lo, start)
        return list(range(lo, lo + count))

    # -- derived structures ----------------------------------------------

    def with_edges(self, extra: Mapping[str, Iterable[Iterable[int]]], new_elements: Iterable[int] = ()) -> "Structure":
        rel = {n: set(es) for n, es in self.relations}
        for n, es in extra.items():
            rel.setdefault(n, set()).update(frozenset(e) for e in es)
        return Structure.build(self.signature, self.elements | set(new_elements), rel)

    def without_edges(self, drop: Iterable[tuple[str, Iterable[int]]]) -> "Structure":
        rel = {n: set(es) for n, es in self.relations}
        for n, e in drop:
            rel[n].discard(frozenset(e))
        return Structure.build(self.signature, self.elements, rel)

    def relabel(self, mapping: Mapping[int, int]) -> "Structure":
        if len(set(mapping[x] for x in self.elements)) != len(self.elements):
            raise StructureError("relabelling is not injective")
        rel = {n: [[mapping[x] for x in e] for e in es] for n, es in self.relations}
        return Structure.build(self.signature, (mapping[x] for x in self.elements), rel)

    # -- serialisation ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "signature": self.signature.to_json(),
            "elements": sorted(self.elements),
            "relations": {n: sorted(sorted(e) for e in es) for n, es in self.relations},
        }

    @classmethod
    def from_json(cls, data: dict) -> "Structure":
        sig = Signature.from_json(data["signature"])
        elements = [int(x) for x in data["elements"]]
        if len(set(elements)) != len(elements):
            raise StructureError("duplicate element ids")
        rel = {}
        for name, edges in data.get("relations", {}).items():
            keys = [tuple(sorted(int(x) for x in e)) for e in edges]
            if len(set(keys)) != len(keys):
                raise StructureError(f"duplicate hyperedge in {name}")
            rel[name] = keys
        return cls.build(sig, elements, rel)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def to_dot(self) -> str:
        """Element-hyperedge incidence graph in Graphviz DOT."""
        lines = ["graph incidence {", "  node [shape=circle];"]
        for x in self.order:
            lines.append(f'  e{x} [label="{x}"];')
        for k, (name, e) in enumerate(self.edges()):
            lines.append(f'  h{k} [shape=box, label="{name}"];')
            for x in sorted(e):
                lines.append(f"  h{k} -- e{x};")
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class PointedStructure:
    """A structure with a distinguished base subset (the ``Y`` of ``Y <= Z``)."""

    structure: Structure
    base: frozenset

    def __post_init__(self):
        object.__setattr__(self, "base", frozenset(self.base))
        self.structure.check_subset(self.base)

    @property
    def extension(self) -> frozenset:
        return self.structure.elements - self.base


# -- operations --------------------------------------------------------------


def predimension(S: Structure, subset: Iterable[int] | None = None, over: Iterable[int] | None = None) -> int:
    """|A| minus the weighted number of hyperedges inside A.

    With ``over=C`` returns the relative value delta(A u C) - delta(C).
    """
    A = S.elements if subset is None else S.check_subset(subset)
    if over is not None:
        C = S.check_subset(over)
        return predimension(S, A | C) - predimension(S, C)
    return delta_mask(S, S.mask(A))


def delta_mask(S: Structure, m: int) -> int:
    total = m.bit_count()
    for em, w in S.edge_masks:
        if em & m == em:
            total -= w
    return total


def induced_substructure(S: Structure, subset: Iterable[int]) -> Structure:
    A = S.check_subset(subset)
    rel = {n: [e for e in es if e <= A] for n, es in S.relations}
    return Structure.build(S.signature, A, rel)


def free_amalgam(B1: Structure, B2: Structure, A: Iterable[int]) -> Structure:
    """Union of B1 and B2 over their common part A with no new hyperedges."""
    A = frozenset(A)
    if B1.signature != B2.signature:
        raise StructureError("signatures differ")
    if B1.elements & B2.elements != A:
        raise StructureError("B1 and B2 must intersect exactly in A")
    if induced_substructure(B1, A) != induced_substructure(B2, A):
        raise StructureError("B1 and B2 induce different structures on A")
    rel = {n: set(B1.rel(n)) | set(B2.rel(n)) for n in B1.signature.names}
    return Structure.build(B1.signature, B1.elements | B2.elements, rel)


def disjoint_copy(S: Structure, keep: Iterable[int], avoid: Iterable[int]) -> tuple[Structure, dict[int, int]]:
    """Relabel ``S`` so elements outside ``keep`` avoid the ids in ``avoid``."""
    keep = frozenset(keep)
    avoid = set(avoid) | set(keep)
    nxt = max(avoid | S.elements, default=0) + 1
    mapping = {}
    for x in S.order:
        if x in keep:
            mapping[x] = x
        else:
            mapping[x] = nxt
            nxt += 1
    return S.relabel(mapping), mapping


def is_induced_isomorphism(P: Structure, base: Iterable[int], T: Structure, mapping: Mapping[int, int]) -> bool:
    """Does ``mapping`` carry the structure induced on ``base`` in P exactly onto its image in T?"""
    base = frozenset(base)
    image = frozenset(mapping[x] for x in base)
    if len(image) != len(base) or not image <= T.elements:
        return False
    for name in P.signature.names:
        src = {frozenset(mapping[x] for x in e) for e in P.rel(name) if e <= base}
        tgt = {e for e in T.rel(name) if e <= image}
        if src != tgt:
            return False
    return True


def is_embedding(P: Structure, T: Structure, mapping: Mapping[int, int]) -> bool:
    """Injective and an isomorphism onto the induced substructure of the image."""
    return set(mapping) == set(P.elements) and is_induced_isomorphism(P, P.elements, T, mapping)


def find_embeddings_over(
    pattern: PointedStructure,
    target: Structure,
    base_map: Mapping[int, int] | None = None,
    limit: int | None = None,
) -> list[dict[int, int]]:
    """All injections extending ``base_map`` that send hyperedges of the pattern onto hyperedges of the target.

    Extra target hyperedges on the image are allowed: only the positive
    diagram of the pattern has to be realised.
    """
    P = pattern.structure
    if base_map is None:
        base_map = {y: y for y in pattern.base}
    base_map = dict(base_map)
    if set(base_map) != set(pattern.base):
        raise StructureError("base_map must be defined exactly on the pattern base")
    if not is_induced_isomorphism(P, pattern.base, target, base_map):
        raise StructureError("base_map is not an isomorphism of the induced bases")
    if P.signature.names != target.signature.names and not set(P.signature.names) <= set(target.signature.names):
        return []

    free = [x for x in P.order if x not in pattern.base]
    # order free elements so each is as constrained as possible by earlier ones
    placed = set(pattern.base)
    ordering = []
    remaining = set(free)
    while remaining:
        best = max(
            sorted(remaining),
            key=lambda x: (sum(1 for _, e in P.incidence[x] if len(e & placed) > 0), P.degree(x)),
        )
        ordering.append(best)
        placed.add(best)
        remaining.remove(best)

    # hyperedges that become fully mapped when the k-th free element is placed
    position = {x: i for i, x in enumerate(ordering)}
    checks: list[list[tuple[str, frozenset]]] = [[] for _ in ordering]
    for name, e in P.edges():
        last = max((position[x] for x in e if x in position), default=None)
        if last is not None:
            checks[last].append((name, e))
    target_rel = {n: target.rel(n) for n in P.signature.names}
    used = set(base_map.values())
    current = dict(base_map)
    results: list[dict[int, int]] = []

    def candidates(x):
        # prefer candidates constrained by an already-mapped hyperedge
        best = None
        for name, e in P.incidence[x]:
            mapped = [current[y] for y in e if y in current]
            if not mapped:
                continue
            pool = set()
            for tname, te in target.incidence[mapped[0]]:
                if tname == name and all(v in te for v in mapped):
                    pool |= te
            pool -= used
            if best is None or len(pool) < len(best):
                best = pool
        if best is None:
            best = target.elements - used
        return sorted(best)

    def rec(k):
        if limit is not None and len(results) >= limit:
            return
        if k == len(ordering):
            results.append(dict(current))
            return
        x = ordering[k]
        for v in candidates(x):
            current[x] = v
            used.add(v)
            if all(frozenset(current[y] for y in e) in target_rel[n] for n, e in checks[k]):
                rec(k + 1)
            used.discard(v)
            del current[x]

    rec(0)
    return results


def powerset(items: Iterable, min_size: int = 0, max_size: int | None = None) -> Iterator[frozenset]:
    items = sorted(items)
    top = len(items) if max_size is None else min(max_size, len(items))
    for k in range(min_size, top + 1):
        for c in itertools.combinations(items, k):
            yield frozenset(c)
