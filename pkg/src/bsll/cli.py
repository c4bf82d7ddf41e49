"""Command-line entry point: ``bsll <command> ...``.

Every command writes one JSON document (stdout or ``--out``), except
``ball --format tree``.  Exit codes: 0 success, 1 a bound or validation
failure, 2 malformed input or a resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .counting import (FamilyConstructionError, cache_dir, cached_count, check_domain,
                       count_overlattices, coverings_for, lower_bound_family)
from .covering import LoopCovering, make_loop_base, sheets, validate
from .covertree import degree_profile, universal_ball
from .cosets import order_oracle
from .errors import BsllError, CapExceededError, InputError
from .gog import (GraphOfGroups, covolume, edge_indexed, family_violations, is_faithful,
                  is_faithful_loop, loop_gog, validate_gog)
from .groups import DEFAULT_MAX_ORDER
from .pcgroups import MatrixA, build_group, enumerate_matrices, is_prime, shift_data

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _rational(q: Fraction) -> dict:
    return {"num": q.numerator, "den": q.denominator}


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def prime_power(n: int) -> tuple[int, int] | None:
    if n < 2:
        return None
    p = next(d for d in range(2, n + 1) if n % d == 0)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return (p, k) if n == 1 else None


# ------------------------------------------------------------ commands

def cmd_count(args) -> int:
    p, k = args.p, args.k
    if args.n is not None:
        pk = prime_power(args.n)
        if pk is None:
            raise InputError(f"n = {args.n} is not a prime power; only prime-power sheet counts "
                             "are enumerated (composite n is out of scope)")
        if (p is not None and p != pk[0]) or (k is not None and k != pk[1]):
            raise InputError(f"n = {args.n} disagrees with --p/--k")
        p, k = pk
    if p is None or k is None:
        raise InputError("give --p and --k, or --n")
    report, hit = cached_count(p, k, jobs=args.jobs, max_order=args.max_order,
                               cache=cache_dir(args.cache))
    doc = report.to_dict()
    doc["timings"]["cache_hit"] = hit
    _emit(doc, args.out)
    return EXIT_OK if all(report.bounds_ok.values()) else EXIT_FAIL


def cmd_matrices(args) -> int:
    check_domain(args.p, args.k, args.max_order)
    rows = []
    for A in enumerate_matrices(args.p, args.k):
        g = build_group(A, max_order=args.max_order)
        rec = {"matrix": [list(r) for r in A.rows], "consistent": g.consistent, "faithful": None}
        if g.consistent:
            covs, faithful, _ = coverings_for(g)
            rec["faithful"] = faithful
            rec["u"] = [c.u for c in covs]
        if args.consistent_only and not g.consistent:
            continue
        if args.faithful_only and not rec["faithful"]:
            continue
        rows.append(rec)
    _emit({"p": args.p, "k": args.k, "matrices": rows}, args.out)
    return EXIT_OK


def cmd_example(args) -> int:
    A = MatrixA.load(args.matrix)
    if (A.p, A.k) != (args.p, args.k):
        raise InputError(f"matrix file is for p={A.p}, k={A.k}")
    check_domain(A.p, A.k, args.max_order)
    g = build_group(A, max_order=args.max_order)
    doc = {"matrix": A.to_dict(), "consistent": g.consistent, "failure": g.failure}
    if not g.consistent:
        _emit(doc, args.out)
        return EXIT_FAIL
    sd = shift_data(g)
    us = [args.u] if args.u is not None else [
        u for u in range(g.table.order)
        if g.table.element_orders[u] == A.p and u not in sd.G1 and u not in sd.G2]
    base = covolume(make_loop_base(A.p))
    results, bad = [], False
    for u in us:
        if not 0 <= u < g.table.order:
            raise InputError(f"u = {u} is not an element id")
        c = LoopCovering(A.p, g.table, sd.G1, sd.G2, sd.shift, u, A)
        problems = validate(c)
        rec = {"u": u, "word": str(g.word(u)), "valid": not problems, "problems": problems}
        if not problems:
            rec["sheets"] = sheets(c)
            rec["covolume_ratio"] = _rational(base / covolume(c.target_gog()))
            rec["covering"] = c.to_dict()
        else:
            bad = True
        results.append(rec)
    doc["coverings"] = results
    _emit(doc, args.out)
    return EXIT_FAIL if bad or not results else EXIT_OK


def cmd_family(args) -> int:
    try:
        report = lower_bound_family(args.p, args.k, max_order=args.max_order, strict=True)
    except FamilyConstructionError as exc:
        report = dict(exc.report, error=str(exc))
    _emit(report, args.out)
    return EXIT_OK if report["ok"] and report["bound_ok"] else EXIT_FAIL


def cmd_ball(args) -> int:
    if not is_prime(args.p):
        raise InputError(f"p = {args.p} is not prime")
    eig = edge_indexed(make_loop_base(args.p))
    b = universal_ball(eig, "x", args.radius)
    if args.format == "tree":
        text = b.to_text()
        if args.out:
            Path(args.out).write_text(text + "\n")
        else:
            print(text)
        return EXIT_OK
    doc = b.to_dict()
    doc["vertex_count"] = len(b)
    if args.radius >= 1:
        doc["degree_profile"] = {str(d): n for d, n in degree_profile(b).items()}
    _emit(doc, args.out)
    return EXIT_OK


def cmd_faithful(args) -> int:
    g = GraphOfGroups.load(args.gog)
    problems = validate_gog(g)
    if problems:
        _emit({"valid": False, "problems": problems}, args.out)
        return EXIT_FAIL
    ok, fam = is_faithful(g, max_order=args.max_order)
    doc = {"valid": True, "faithful": ok, "covolume": _rational(covolume(g)), "witness": None}
    if fam is not None:
        doc["witness"] = {
            "edge": {"|".join(map(str, e)): list(s.elements) for e, s in fam.edge.items()},
            "vertex": {str(x): list(s.elements) for x, s in fam.vertex.items()},
            "rechecked": not family_violations(g, fam),
        }
    _emit(doc, args.out)
    return EXIT_OK


def selftest_checks() -> list[tuple[str, bool, str]]:
    """Fast invariant checks over small parameters."""
    out = []

    disagree, axioms, shifts = [], [], []
    for p, k in ((2, 1), (2, 2), (2, 3), (3, 2)):
        for A in enumerate_matrices(p, k):
            g = build_group(A)
            if g.consistent != (order_oracle(A) == p ** (k + 1)):
                disagree.append([list(r) for r in A.rows])
            if g.consistent:
                if g.table.axiom_violations():
                    axioms.append([list(r) for r in A.rows])
                try:
                    shift_data(g)
                except BsllError:
                    shifts.append([list(r) for r in A.rows])
    out.append(("oracle agreement", not disagree, f"disagreements {disagree}"))
    out.append(("group axioms", not axioms, f"violations {axioms}"))
    out.append(("shift data", not shifts, f"failures {shifts}"))

    mismatch = []
    for k in (1, 2, 3):
        for A in enumerate_matrices(2, k):
            g = build_group(A)
            if not g.consistent:
                continue
            sd = shift_data(g)
            fl, _ = is_faithful_loop(g.table, sd.G1, sd.G2, sd.shift)
            fg, _ = is_faithful(loop_gog(g.table, sd.G1, sd.shift))
            if fl != fg:
                mismatch.append([list(r) for r in A.rows])
    out.append(("faithfulness equivalence", not mismatch, f"mismatches {mismatch}"))

    for p in (2, 3):
        b = universal_ball(edge_indexed(make_loop_base(p)), "x", 3)
        prof = degree_profile(b)
        out.append((f"ball regularity p={p}", list(prof) == [2 * p], f"profile {prof}"))

    rep, _, _ = count_overlattices(2, 1)
    out.append(("base case bracket", (rep.classes_necessary, rep.classes_sufficient) == (1, 1),
                f"bracket [{rep.classes_necessary}, {rep.classes_sufficient}]"))
    return out


def cmd_selftest(args) -> int:
    checks = selftest_checks()
    _emit({"checks": [{"name": n, "ok": ok, "detail": "" if ok else d} for n, ok, d in checks],
           "ok": all(ok for _, ok, _ in checks)}, args.out)
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_FAIL


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bsll", description="Count loop coverings of p-group lattices.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON document here instead of stdout")
        sp.add_argument("--max-order", type=int, default=DEFAULT_MAX_ORDER,
                        help=f"largest group order to tabulate (default {DEFAULT_MAX_ORDER})")

    sp = sub.add_parser("count", help="class-count bracket for n = p^k")
    sp.add_argument("--p", type=int)
    sp.add_argument("--k", type=int)
    sp.add_argument("--n", type=int, help="sheet count; must be a prime power")
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--cache", help="cache directory (default: $BSLL_CACHE)")
    common(sp)
    sp.set_defaults(func=cmd_count)

    sp = sub.add_parser("matrices", help="list matrices with consistency and faithfulness")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--consistent-only", action="store_true")
    g.add_argument("--faithful-only", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_matrices)

    sp = sub.add_parser("example", help="coverings for one matrix file")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--matrix", required=True, help="JSON file {p, k, rows}")
    sp.add_argument("--u", type=int, help="element id of u (default: all candidates)")
    common(sp)
    sp.set_defaults(func=cmd_example)

    sp = sub.add_parser("family", help="explicit family with last matrix row zero")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_family)

    sp = sub.add_parser("ball", help="ball in the covering tree of the loop base")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--format", choices=("tree", "json"), default="json")
    common(sp)
    sp.set_defaults(func=cmd_ball)

    sp = sub.add_parser("faithful", help="faithfulness of a graph of groups from JSON")
    sp.add_argument("--gog", required=True)
    common(sp)
    sp.set_defaults(func=cmd_faithful)

    sp = sub.add_parser("selftest", help="run the fast invariant checks")
    common(sp)
    sp.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, CapExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BsllError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


def run_cli(argv) -> int:
    return main(list(argv))


if __name__ == "__main__":
    sys.exit(main())
