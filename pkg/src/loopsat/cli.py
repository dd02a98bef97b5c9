"""``loopsat`` command line.

Exit codes: 0 positive (found / yes / verified), 1 negative, 2 undecided
or budget hit, 3 usage or I/O error. JSON goes to stdout, the one-line
summary and errors to stderr.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from . import families, homsearch, loopcond
from .algebra import (
    DEFAULT_MAX_APPLICATIONS,
    DEFAULT_MAX_ELEMENTS,
    FiniteAlgebra,
    extract_term,
    free_algebra,
    term_to_dict,
)
from .digraph import (
    BASIC_KINDS,
    INFINITY,
    Digraph,
    algebraic_length,
    is_strongly_connected,
    make_basic,
    strong_components,
    verify_isomorphism,
)
from .errors import AlgebraError, BudgetExceeded, InvalidParameter, LoopsatError, VerificationFailed

EXIT_OK, EXIT_NEGATIVE, EXIT_UNDECIDED, EXIT_USAGE = 0, 1, 2, 3
SAMPLE_LIMIT = 100_000  # above this many entries, maps are summarized unless --full


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(payload, summary: str, code: int) -> int:
    json.dump(payload, sys.stdout, indent=2, default=_json_default)
    sys.stdout.write("\n")
    print(summary, file=sys.stderr)
    return code


def _json_default(x):
    if x == INFINITY:
        return "inf"
    if hasattr(x, "item"):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _al_json(al):
    return "inf" if al == INFINITY else al


# -- input parsing ----------------------------------------------------------------

def _read_json(path: str):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _ints(parts):
    try:
        return [int(x) for x in parts]
    except ValueError as exc:
        raise UsageError(f"expected integers, got {parts}") from exc


def load_graph(spec: str) -> Digraph:
    """A JSON file, ``-`` for stdin, or an inline family spec like ``dcp:2:3`` or ``dir_cycle:6``."""
    if spec == "-" or os.path.exists(spec):
        return Digraph.from_dict(_read_json(spec))
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "basic":
        parts = parts[1:]
        kind = parts[0].lower() if parts else ""
    if kind in BASIC_KINDS and len(parts) == 2:
        return make_basic(kind, *_ints(parts[1:]))
    builders = {"dcp": (families.dcp, 2), "cclw": (families.cclw, 3), "clqp": (families.clqp, 3)}
    if kind in builders and len(parts) == builders[kind][1] + 1:
        fn, _ = builders[kind]
        return fn(*_ints(parts[1:]))
    raise UsageError(f"{spec!r} is neither a file nor a graph spec such as dcp:2:3 or dir_cycle:6")


def load_algebra(spec: str) -> FiniteAlgebra:
    if spec == "-" or os.path.exists(spec):
        return FiniteAlgebra.from_dict(_read_json(spec), os.path.basename(spec))
    return loopcond.builtin_algebra(spec)


def load_condition(spec: str) -> loopcond.LoopCondition:
    if spec == "-" or os.path.exists(spec):
        return loopcond.LoopCondition.from_dict(_read_json(spec), os.path.basename(spec))
    return loopcond.builtin_condition(spec)


def _load_pins(spec: str | None) -> dict[int, int]:
    if spec is None:
        return {}
    data = _read_json(spec) if os.path.exists(spec) else json.loads(spec)
    if isinstance(data, dict) and "map" in data:
        return homsearch.pins_from_list(data["map"])
    if isinstance(data, list):
        return homsearch.pins_from_list(data)
    if isinstance(data, dict):
        return {int(k): int(v) for k, v in data.items()}
    raise UsageError("pins must be a list, a {\"map\": [...]} object or a {source: target} object")


# -- gen ------------------------------------------------------------------------

def cmd_gen(args) -> int:
    family = args.family
    if family == "basic":
        if len(args.params) != 2:
            raise UsageError("gen basic KIND N")
        g = make_basic(args.params[0], *_ints(args.params[1:]))
    else:
        params = _ints(args.params)
        fn, count = {"dcp": (families.dcp, 2), "cclw": (families.cclw, 3), "clqp": (families.clqp, 3)}[family]
        if len(params) != count:
            raise UsageError(f"gen {family} takes {count} integers")
        g = fn(*params)
    payload = g.to_dict()
    summary = f"{family} {' '.join(args.params)}: {len(g)} nodes, {len(g.edges)} edges"
    if args.stats:
        payload["stats"] = {
            "nodes": len(g),
            "edges": len(g.edges),
            "algebraic_length": _al_json(algebraic_length(g)),
            "scc_count": len(strong_components(g)),
        }
    return _emit(payload, summary, EXIT_OK)


# -- hom ----------------------------------------------------------------------

def cmd_hom(args) -> int:
    g = load_graph(args.source)
    if args.edge_surjective is not None:
        lengths = sorted(homsearch.edge_surjective_cycle_lengths(g, args.edge_surjective, args.edge_cap))
        code = EXIT_OK if lengths else EXIT_NEGATIVE
        return _emit({"lengths": lengths}, f"edge-surjective closed walks of lengths {lengths}", code)
    if args.cycle_target is not None:
        f = homsearch.hom_to_dir_cycle(g, args.cycle_target)
        if f is None:
            return _emit({"map": None}, f"no homomorphism to D_{args.cycle_target}", EXIT_NEGATIVE)
        if not homsearch.verify_hom(g, make_basic("dir_cycle", args.cycle_target), f):
            raise VerificationFailed("cycle map failed re-verification")
        return _emit({"map": f}, f"homomorphism to D_{args.cycle_target} found", EXIT_OK)
    if args.target is None:
        raise UsageError("hom needs a TARGET unless --cycle-target or --edge-surjective is given")
    h = load_graph(args.target)
    problem = homsearch.HomProblem(g, h, _load_pins(args.pins))
    if args.enumerate is not None:
        maps = homsearch.enumerate_homs(problem, args.enumerate, args.budget)
        if not all(homsearch.verify_hom(g, h, f) for f in maps):
            raise VerificationFailed("enumerated map failed re-verification")
        return _emit({"maps": maps}, f"{len(maps)} homomorphisms", EXIT_OK if maps else EXIT_NEGATIVE)
    f = homsearch.find_hom(problem, args.budget)
    if f is None:
        return _emit({"map": None}, "no homomorphism", EXIT_NEGATIVE)
    if not homsearch.verify_hom(g, h, f):
        raise VerificationFailed("homomorphism failed re-verification")
    return _emit({"map": f}, "homomorphism found", EXIT_OK)


# -- check / classify ---------------------------------------------------------------

_VERDICT_CODE = {"yes": EXIT_OK, "no": EXIT_NEGATIVE, "undecided": EXIT_UNDECIDED}


def cmd_check(args) -> int:
    a = load_algebra(args.algebra)
    c = load_condition(args.condition)
    v = loopcond.satisfies(a, c, args.max_elements, args.max_applications)
    payload = v.to_dict()
    summary = f"{a.name or args.algebra} {c}: {v.status.upper()}"
    if v.yes:
        # satisfies already checked the witness; check again from the printed form
        if loopcond.witness_counterexample(a, c, v.witness) is not None:
            raise VerificationFailed("witness failed re-verification")
        lhs, rhs = v.identity()
        payload["identity"] = {"lhs": term_to_dict(lhs), "rhs": term_to_dict(rhs)}
        summary += f" via t = {v.witness}"
    elif v.status == "undecided":
        summary += f" ({v.reason})"
    return _emit(payload, summary, _VERDICT_CODE[v.status])


def cmd_classify(args) -> int:
    c = load_condition(args.condition)
    k = loopcond.classify_condition(c)
    al = _al_json(k.algebraic_length)
    kind = f"CYCLIC(rad {k.radical})" if k.kind == "CYCLIC" else k.kind
    summary = (
        f"{c}: {'trivial' if k.trivial else 'nontrivial'}, "
        f"{'strongly connected' if k.strongly_connected else 'not strongly connected'}, al {al}, {kind}"
    )
    return _emit(k.to_dict(), summary, EXIT_OK)


# -- verify -------------------------------------------------------------------

def _verify_clqp_raise(args):
    cases = [(args.k, args.s)] if args.k is not None else [(1, 3), (2, 3)]
    out = []
    for k, s in cases:
        g, h, mapping = families.clqp_raise_iso(k, s)
        if not verify_isomorphism(g, h, mapping):
            raise VerificationFailed(f"raise map for k={k}, s={s} failed re-verification")
        out.append({
            "k": k, "s": s, "nodes": len(g), "edges": len(g.edges),
            "isomorphism": {g.nodes[i]: h.nodes[t] for i, t in enumerate(mapping)},
        })
    return {"cases": out}, f"CLQP raise isomorphisms verified for {cases}", EXIT_OK


def _reduce_payload(w: families.ReduceWitness) -> dict:
    return {
        "source": {"nodes": len(w.source), "edges": len(w.source.edges)},
        "target": {"nodes": len(w.target), "edges": len(w.target.edges)},
        "pairs": w.pairs,
        "edges_checked": w.edges_checked,
    }


def _verify_clqp_reduce(args):
    k, l, s = args.k or 2, args.l or 1, args.s or 2
    w = families.clqp_reduce_witness(k, l, s)
    return _reduce_payload(w), f"CLQP({k},{l},{s}) reduce witness: triangle verified on {w.edges_checked} edges", EXIT_OK


def _verify_cclw_reduce(args):
    k, l, c = args.k or 2, args.l or 1, args.c or 3
    w = families.cclw_reduce_witness(k, l, c)
    return _reduce_payload(w), f"CCLW({k},{l},{c}) reduce witness: symmetric {c}-cycle verified on {w.edges_checked} edges", EXIT_OK


def _verify_cclw_dcp(args):
    c = args.c or 3
    w = families.cclw_to_dcp_hom(c, args.window_cap)
    payload = {"c": c, "k": w.k, "walks_checked": w.walks_checked, "windows": len(w.images)}
    if args.full or len(w.images) <= SAMPLE_LIMIT:
        labels = families.dcp_labels(2, c)
        payload["images"] = [labels[int(i)] for i in w.images]
    else:
        payload["samples"] = w.samples()
    return payload, f"CCLW({2 * w.k + 1},0,{c}) -> DCP(2,{c}): {w.walks_checked} walks checked, no violations", EXIT_OK


def _verify_cycle_cover(args):
    g = load_graph(args.graph)
    lengths = sorted(homsearch.edge_surjective_cycle_lengths(g, args.max_n, args.edge_cap))
    al = algebraic_length(g)
    payload = {"lengths": lengths, "algebraic_length": _al_json(al), "strongly_connected": is_strongly_connected(g)}
    if al == INFINITY:
        ok = not lengths
    else:
        ok = all(n % al == 0 for n in lengths)
        missing = [n for n in range(al, args.max_n + 1, al) if n not in lengths]
        payload["missing_multiples"] = missing
    if not ok:
        return payload, "an edge-surjective length is not a multiple of the algebraic length", EXIT_NEGATIVE
    return payload, f"lengths {lengths} are all multiples of al = {_al_json(al)}", EXIT_OK


def _verify_equiv_suite(args):
    caps = {"max_elements": args.max_elements, "max_applications": args.max_applications}
    matrix = loopcond.equivalence_matrix(**caps)
    rows = {an: {cn: v.status for cn, v in row.items()} for an, row in matrix.items()}
    seen = [set(r.values()) for r in rows.values()]
    if any(len(v - {"undecided"}) > 1 for v in seen):
        code = EXIT_NEGATIVE
    elif any("undecided" in v for v in seen):
        code = EXIT_UNDECIDED
    else:
        code = EXIT_OK
    table = "; ".join(f"{an}: {'/'.join(sorted(set(r.values())))}" for an, r in rows.items())
    return {"conditions": list(loopcond.EQUIVALENCE_CONDITIONS), "rows": rows}, table, code


def _verify_example2(args):
    m = args.m
    checks = {
        "median_order": loopcond.median_order_check(m),
        "majority_of_steps_is_median_step": loopcond.majority_threshold_check(m),
    }
    ok = all(checks.values())
    return {"m": m, "checks": checks}, f"median checks on 0..{m - 1}: {'ok' if ok else 'FAILED'}", EXIT_OK if ok else EXIT_NEGATIVE


def _verify_sim_transitive(args):
    r = loopcond.sim_transitivity()
    payload = {
        "cycles": list(r.cycles), "tuples": r.tuples, "related_pairs": r.related_pairs,
        "transitive": r.transitive, "successor_compatible": r.successor_compatible,
        "tuples_related_to_successor": r.fixed_classes,
    }
    ok = r.transitive and r.successor_compatible and r.fixed_classes == 0
    return payload, f"~ on (cycles {r.cycles})^6: transitive={r.transitive}, no tuple ~ its successor={r.fixed_classes == 0}", (
        EXIT_OK if ok else EXIT_NEGATIVE)


VERIFIERS = {
    "clqp-raise": _verify_clqp_raise,
    "clqp-reduce": _verify_clqp_reduce,
    "cclw-reduce": _verify_cclw_reduce,
    "cclw-dcp": _verify_cclw_dcp,
    "cycle-cover": _verify_cycle_cover,
    "equiv-suite": _verify_equiv_suite,
    "example2": _verify_example2,
    "sim-transitive": _verify_sim_transitive,
}


def cmd_verify(args) -> int:
    try:
        payload, summary, code = VERIFIERS[args.construction](args)
    except VerificationFailed as exc:
        return _emit({"verified": False, "counterexample": exc.counterexample}, f"verification failed: {exc}",
                     EXIT_NEGATIVE)
    payload = {"verified": code == EXIT_OK, **payload}
    return _emit(payload, summary, code)


# -- alg ------------------------------------------------------------------------

def cmd_alg(args) -> int:
    a = load_algebra(args.algebra)
    if args.action == "show":
        return _emit(a.to_dict(), f"{a.name or args.algebra}: size {a.size}, {len(a.ops)} operations", EXIT_OK)
    if args.g is None:
        raise UsageError("alg free ALGEBRA G")
    names = [f"x{i + 1}" for i in range(args.g)]
    trace = free_algebra(a, names, args.max_elements, args.max_applications)
    payload = {"size": len(trace), "generators": names}
    if args.full or len(trace) * a.size ** args.g <= SAMPLE_LIMIT:
        payload["elements"] = [
            {"values": list(trace.element(i)), "term": str(extract_term(trace, i, names))}
            for i in range(len(trace))
        ]
    return _emit(payload, f"free algebra on {args.g} generators: {len(trace)} elements", EXIT_OK)


# -- parser ------------------------------------------------------------------------

def _add_caps(p):
    p.add_argument("--max-elements", type=int, default=DEFAULT_MAX_ELEMENTS)
    p.add_argument("--max-applications", type=int, default=DEFAULT_MAX_APPLICATIONS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="loopsat", description="Loop conditions, digraph homomorphisms and their witnesses.")
    parser.add_argument("--seed", type=int, default=None, help="accepted for interface stability; unused")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a digraph")
    p.add_argument("family", choices=["dcp", "cclw", "clqp", "basic"])
    p.add_argument("params", nargs="+")
    p.add_argument("--stats", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("hom", help="homomorphism search between digraphs")
    p.add_argument("source")
    p.add_argument("target", nargs="?")
    p.add_argument("--pins", help="JSON list/object or file fixing some images")
    p.add_argument("--enumerate", type=int, metavar="N")
    p.add_argument("--cycle-target", type=int, metavar="N")
    p.add_argument("--edge-surjective", type=int, metavar="MAX_N")
    p.add_argument("--edge-cap", type=int, default=homsearch.DEFAULT_EDGE_CAP)
    p.add_argument("--budget", type=int, default=homsearch.DEFAULT_BUDGET)
    p.set_defaults(func=cmd_hom)

    p = sub.add_parser("check", help="decide a loop condition for a finite algebra")
    p.add_argument("algebra")
    p.add_argument("condition")
    _add_caps(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="classify a loop condition by its digraph")
    p.add_argument("condition")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("verify", help="run a witness construction and its check")
    p.add_argument("construction", choices=sorted(VERIFIERS))
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--c", type=int)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--graph", default="dcp:2:3")
    p.add_argument("--max-n", type=int, default=20)
    p.add_argument("--edge-cap", type=int, default=homsearch.DEFAULT_EDGE_CAP)
    p.add_argument("--window-cap", type=int, default=families.DEFAULT_WINDOW_CAP)
    p.add_argument("--full", action="store_true")
    _add_caps(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("alg", help="inspect an algebra")
    p.add_argument("action", choices=["free", "show"])
    p.add_argument("algebra")
    p.add_argument("g", type=int, nargs="?")
    p.add_argument("--full", action="store_true")
    _add_caps(p)
    p.set_defaults(func=cmd_alg)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceeded as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except VerificationFailed as exc:
        print(f"verification failed: {exc} (counterexample: {exc.counterexample})", file=sys.stderr)
        return EXIT_NEGATIVE
    except (UsageError, InvalidParameter, AlgebraError, LoopsatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
