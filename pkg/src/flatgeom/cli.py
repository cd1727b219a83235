"""``flatgeom`` command line: JSON in, JSON out.

Exit codes: 0 success, 1 negative answer, 2 input error, 3 resource or
budget error.  Output is written to stdout once, at the end.
"""

from __future__ import annotations

import argparse
import json
import sys

from .amalgamation import AmalgamationError, GeneratorError, GenericChain, amalgamate, build_generic_approx
from .classes import ClassSpec, MuFunction, enumerate_msa_within, membership
from .construction import (
    ConstructionBug,
    ExtensionProblem,
    PreconditionError,
    back_and_forth,
    construct_extension,
    random_problem,
)
from .dimension import SizeCapError, d_closure, dimension_report
from .pregeometry import closed_sets, flat_lattice_dot, geometry_of
from .structures import Structure, StructureError, predimension

OK, NO, BAD_INPUT, RESOURCE = 0, 1, 2, 3


class InputError(ValueError):
    pass


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _structure(path) -> Structure:
    return Structure.from_json(_read_json(path))


def _ids(text) -> list[int]:
    if text is None or text.strip() == "":
        return []
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated integers, got {text!r}") from None


def _mu(args):
    return MuFunction.from_json(_read_json(args.mu)) if getattr(args, "mu", None) else None


def _spec(args) -> ClassSpec:
    return ClassSpec.parse(args.cls, _mu(args))


def _write(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, sort_keys=True)


# -- subcommands: each returns (exit code, payload or text) ------------------


def cmd_delta(args):
    S = _structure(args.structure)
    A = S.elements if args.subset is None else S.check_subset(_ids(args.subset))
    return OK, {"delta": predimension(S, A)}


def cmd_dim(args):
    S = _structure(args.structure)
    return OK, dimension_report(_ids(args.subset), S).to_json()


def cmd_closure(args):
    S = _structure(args.structure)
    A = _ids(args.subset)
    return OK, {"subset": sorted(A), "closure": sorted(d_closure(A, S))}


def cmd_geom(args):
    S = _structure(args.structure)
    G = geometry_of(S, _ids(args.base))
    if args.dot:
        return OK, flat_lattice_dot(G)
    flats = [{"points": [G.reps[i] for i in sorted(F)], "rank": r} for F, r in closed_sets(G)]
    if args.pretty:
        lines = [f"base {sorted(G.base)}, cl(base) {sorted(G.base_closure)}, rank {G.total_rank}", "points:"]
        lines += [f"  {G.reps[i]}: {sorted(p)}" for i, p in enumerate(G.points)]
        lines.append("flats:")
        lines += [f"  r={f['rank']} {{{', '.join(map(str, f['points']))}}}" for f in flats]
        return OK, "\n".join(lines) + "\n"
    return OK, {**G.to_json(), "flats": flats}


def cmd_member(args):
    S = _structure(args.structure)
    res = membership(S, _spec(args))
    return (OK if res else NO), res.to_json()


def cmd_msa(args):
    S = _structure(args.structure)
    found = enumerate_msa_within(S, args.max_base, args.max_ext)
    return OK, {"count": len(found), "instances": [i.to_json() for i in found]}


def cmd_amalgam(args):
    B1, B2 = _structure(args.b1), _structure(args.b2)
    try:
        am = amalgamate(B1, B2, _ids(args.base), _spec(args), budget=args.budget)
    except AmalgamationError as exc:
        code = RESOURCE if "budget" in exc.obstruction else NO
        return code, {"amalgam": None, "reason": str(exc), "obstruction": exc.obstruction}
    return OK, am.to_json()


def cmd_generic(args):
    chain = build_generic_approx(_spec(args), args.budget, args.rounds, per_round=args.per_round)
    if args.out:
        chain.save(args.out)
    return OK, {
        "class": str(chain.spec),
        "stage_sizes": [len(S) for S in chain.stages],
        "problems_served": len(chain.log),
        "pending": chain.pending,
        "out": args.out,
    }


def cmd_extend(args):
    if args.problem:
        p = ExtensionProblem.from_json(_read_json(args.problem))
        if args.variant:
            p.variant = args.variant
    else:
        p = random_problem(args.seed, args.variant or "standard")
    try:
        t = construct_extension(p, _mu(args), seed=args.seed)
    except ConstructionBug as exc:
        return NO, {"ok": False, "reason": str(exc)}
    data = t.to_json()
    if args.trace:
        _write(args.trace, {"problem": p.to_json(), "trace": data})
    return OK, {
        "ok": True,
        "all_pass": t.claims.get("all_pass"),
        "Bprime": data["Bprime"],
        "fprime": data["fprime"],
        "claims": t.claims,
    }


def cmd_baf(args):
    src = GenericChain.from_json(_read_json(args.source))
    tgt = GenericChain.from_json(_read_json(args.target))
    res = back_and_forth(src, tgt, _ids(args.x), args.steps, _mu(args), seed=args.seed)
    out = res.to_json()
    out["points"] = len(res.maps[-1])
    return (OK if res.complete else NO), out


def cmd_suite(args):
    from .suites import run_all

    only = _ids(args.only) or None
    echo = (lambda s: print(s, file=sys.stderr)) if args.verbose else None
    results = run_all(only, max_size=args.max_size, seed=args.seed, echo=echo)
    ok = all(r.passed for r in results)
    if args.pretty:
        return (OK if ok else NO), "\n".join(r.line() for r in results) + "\n"
    return (OK if ok else NO), {"all_pass": ok, "criteria": [r.to_json() for r in results]}


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every randomised generator (default 0)")
    common.add_argument("--pretty", action="store_true", help="human-readable text instead of JSON (geom, suite)")
    ap = argparse.ArgumentParser(prog="flatgeom", description=__doc__.splitlines()[0], epilog=__doc__.split("\n\n")[1])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help):
        return sub.add_parser(name, help=help, parents=[common])

    def structure(p):
        p.add_argument("-s", "--structure", required=True, help="structure JSON file")

    def klass(p, required=True):
        p.add_argument("--class", dest="cls", required=required, default="c0", help="c0, cmu, k0, kmu or c0prime:K")
        p.add_argument("--mu", help='mu override file: [{"code": ..., "value": ...}]')

    p = add("delta", "predimension of a subset (default: the whole structure)")
    structure(p)
    p.add_argument("--subset", help="comma-separated element ids")
    p.set_defaults(run=cmd_delta)

    p = add("dim", "dimension report d(A) with a witness")
    structure(p)
    p.add_argument("--subset", default="", help="comma-separated element ids")
    p.set_defaults(run=cmd_dim)

    p = add("closure", "d-closure of a subset")
    structure(p)
    p.add_argument("--subset", default="", help="comma-separated element ids")
    p.set_defaults(run=cmd_closure)

    p = add("geom", "points, rank and flats of the (localised) geometry")
    structure(p)
    p.add_argument("--base", default="", help="localise over these element ids")
    p.add_argument("--dot", action="store_true", help="emit the flat lattice as Graphviz DOT")
    p.set_defaults(run=cmd_geom)

    p = add("member", "class membership with a witness on failure")
    structure(p)
    klass(p)
    p.set_defaults(run=cmd_member)

    p = add("msa", "minimally simply algebraic instances inside a structure")
    structure(p)
    p.add_argument("--max-base", type=int, help="cap on |Y|")
    p.add_argument("--max-ext", type=int, help="cap on |D|")
    p.set_defaults(run=cmd_msa)

    p = add("amalgam", "amalgamate B1 and B2 over a common base in a class")
    p.add_argument("--b1", required=True, help="structure JSON file")
    p.add_argument("--b2", required=True, help="structure JSON file")
    p.add_argument("--base", default="", help="ids of the common self-sufficient substructure")
    p.add_argument("--budget", type=int, default=5000, help="cap on identification attempts")
    klass(p)
    p.set_defaults(run=cmd_amalgam)

    p = add("generic", "finite approximation of a generic structure")
    klass(p)
    p.add_argument("--budget", type=int, default=3, help="size bound on extension problems")
    p.add_argument("--rounds", type=int, default=4)
    p.add_argument("--per-round", type=int, default=24, help="problems served per round")
    p.add_argument("--out", help="write the chain JSON here")
    p.set_defaults(run=cmd_generic)

    p = add("extend", "isomorphism-extension construction of B' and f'")
    p.add_argument("--problem", help="problem JSON file (default: a random problem from --seed)")
    p.add_argument("--mu", help="mu override file")
    p.add_argument("--variant", help="standard, kmu, language or c0prime:K")
    p.add_argument("--trace", help="write the problem and full trace JSON here")
    p.set_defaults(run=cmd_extend)

    p = add("baf", "back and forth between two chains")
    p.add_argument("--source", required=True, help="C0 chain JSON")
    p.add_argument("--target", required=True, help="C_mu chain JSON")
    p.add_argument("--x", default="", help="ids of X in the target chain")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--mu", help="mu override file")
    p.set_defaults(run=cmd_baf)

    p = add("suite", "run the acceptance criteria")
    p.add_argument("--max-size", type=int, default=6, help="size bound of the exhaustive matroid run")
    p.add_argument("--only", default="", help="comma-separated criterion numbers")
    p.add_argument("-v", "--verbose", action="store_true", help="echo each result line to stderr")
    p.set_defaults(run=cmd_suite)
    return ap


def dispatch(argv=None) -> tuple[int, object]:
    args = build_parser().parse_args(argv)
    try:
        return args.run(args)
    except (SizeCapError, GeneratorError) as exc:
        return RESOURCE, {"error": type(exc).__name__, "message": str(exc)}
    except (InputError, StructureError, PreconditionError, KeyError, ValueError, TypeError) as exc:
        return BAD_INPUT, {"error": type(exc).__name__, "message": str(exc)}
    except AmalgamationError as exc:
        return (RESOURCE if "budget" in exc.obstruction else NO), {"error": "AmalgamationError", "message": str(exc)}


def main(argv=None) -> int:
    try:
        code, out = dispatch(argv)
    except SystemExit as exc:  # argparse: --help is 0, bad flags are 2
        return int(exc.code or 0)
    if isinstance(out, str):
        sys.stdout.write(out)
    else:
        sys.stdout.write(json.dumps(out, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
