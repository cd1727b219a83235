"""Predimension, dimension and geometry on three small structures."""

import itertools

from flatgeom import ClassSpec, Structure, closed_sets, d_closure, dimension, geometry_of, membership, predimension

shapes = {
    "tetrahedron": Structure.ternary([1, 2, 3, 4], itertools.combinations([1, 2, 3, 4], 3)),
    "triangle": Structure.ternary([1, 2, 3], [[1, 2, 3]]),
    "fan": Structure.ternary([1, 2, 3, 4, 5], [[1, 2, 3], [1, 2, 4], [1, 2, 5]]),
}

for name, S in shapes.items():
    G = geometry_of(S)
    print(f"{name}: delta={predimension(S, S.elements)} d(1)={dimension([1], S)} cl(1,2)={sorted(d_closure([1, 2], S))}")
    print(f"  geometry: {len(G)} points, rank {G.total_rank}")
    for F, r in closed_sets(G):
        print(f"    flat r={r}: {[G.reps[i] for i in sorted(F)]}")
    for spec in (ClassSpec.C0(), ClassSpec.Cmu(), ClassSpec.K0()):
        m = membership(S, spec)
        print(f"  in {spec}: {m.member}" + (f" ({m.reason})" if not m else ""))
