"""Extend a map between one-point geometries to B = {a, b}, then check the claims.

Writes the full trace to one_point_trace.json next to this script.
"""

import json
from pathlib import Path

from flatgeom import ExtensionProblem, Structure, construct_extension, geometry_of

p = ExtensionProblem(
    W=[],
    A=Structure.ternary([1]),
    B=Structure.ternary([1, 2]),
    X=[10],
    Aprime=Structure.ternary([10, 11]),
    f={1: 11},
)
t = construct_extension(p)
Bp = t.Bprime
G = geometry_of(Bp, p.X)
print(f"B' has {len(Bp)} elements and {Bp.edge_count} hyperedges; m = {t.m}")
print(f"G_X(B') has {len(G)} points of rank {G.total_rank}")
print("f':", t.fprime)
for key in ("C1", "C2", "C3"):
    print(f"claim {key[1]}: {'pass' if t.claims[key]['pass'] else 'FAIL'}")
out = Path(__file__).with_name("one_point_trace.json")
out.write_text(json.dumps({"problem": p.to_json(), "trace": t.to_json()}, sort_keys=True, indent=1))
print("trace written to", out.name)
