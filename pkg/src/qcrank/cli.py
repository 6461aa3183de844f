"""Command-line front end.

Subcommands expand expressions, tabulate partition statistics, dissect
series, run verification suites, enumerate cusps, recompute order
bounds, and certify the vanishing identities.  Results go to stdout,
progress and diagnostics to stderr.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 resource guard.
"""

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .modular import InsufficientPrecision, NotModular, certify, cusp_set
from .partitions import ResourceLimit, stats_table
from .qproducts import Call, EvalError, Num, ParseError, eval_expr, parse
from .verifier import (
    DATA_DIR,
    SUITE_NAMES,
    bound_table,
    certification_input_from_dict,
    load_records,
    make_resolver,
    run_records,
    run_suite,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _nonnegative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return value


def _print_parse_error(text: str, exc: ParseError) -> int:
    """Caret diagnostics for a rejected expression."""
    lines = text.splitlines() or [""]
    bad = lines[min(exc.line, len(lines)) - 1]
    print(f"parse error: {exc}", file=sys.stderr)
    print(f"  {bad}", file=sys.stderr)
    print("  " + " " * (exc.col - 1) + "^", file=sys.stderr)
    return EXIT_USAGE


def _emit_series(series, order: int, args, payload: dict) -> None:
    # print from q^0 (or below, for Laurent tails) through q^(order-1)
    start = min(series.lo, 0)
    stop = min(order, series.prec)
    vals = []
    for e in range(start, stop):
        c = series.coeff(e) if e >= series.lo else Fraction(0)
        vals.append(str(c))
    if args.json:
        payload = dict(payload)
        payload.update({"lo": start, "order": stop, "coefficients": vals})
        print(json.dumps(payload, indent=2))
        return
    if start < 0:
        print(f"series begins at q^{start}", file=sys.stderr)
    print(",".join(vals))


def cmd_expand(args) -> int:
    try:
        node = parse(args.expression)
    except ParseError as exc:
        return _print_parse_error(args.expression, exc)
    try:
        series = eval_expr(node, args.order, make_resolver(args.allow_large))
    except EvalError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit_series(series, args.order, args, {"expression": args.expression})
    return EXIT_OK


def cmd_dissect(args) -> int:
    if args.residue >= args.modulus:
        print("dissect: residue must satisfy 0 <= r < M", file=sys.stderr)
        return EXIT_USAGE
    try:
        node = parse(args.expression)
    except ParseError as exc:
        return _print_parse_error(args.expression, exc)
    call = Call("dissect", (node, Num(Fraction(args.modulus)),
                            Num(Fraction(args.residue))))
    try:
        series = eval_expr(call, args.order, make_resolver(args.allow_large))
    except EvalError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit_series(series, args.order, args, {
        "expression": args.expression,
        "modulus": args.modulus,
        "residue": args.residue,
    })
    return EXIT_OK


def cmd_mw(args) -> int:
    stats = stats_table(args.n, args.level, allow_large=args.allow_large)
    note = ""
    if args.n == 0:
        note = ("p(0) = 1: crank and rank are undefined for the empty "
                "partition, so all residue tables stay at zero")
    rows = [
        ("M", stats.crank_counts),
        ("N", stats.rank_counts),
        ("M_omega", stats.ones_by_crank),
        ("NT", stats.parts_by_rank),
    ]
    if args.json:
        payload = {"n": stats.n, "modulus": stats.m,
                   "partitions": stats.partitions}
        payload.update({name: list(vals) for name, vals in rows})
        if note:
            payload["note"] = note
        print(json.dumps(payload, indent=2))
        return EXIT_OK
    print(f"n={stats.n} modulus={stats.m} partitions={stats.partitions}")
    width = max(2, *(len(str(v)) for _, vals in rows for v in vals))
    head = "class    " + " ".join(f"{r:>{width}}" for r in range(stats.m))
    print(head)
    for name, vals in rows:
        print(f"{name:<8} " + " ".join(f"{v:>{width}}" for v in vals))
    if note:
        print(note)
    return EXIT_OK


def cmd_verify(args) -> int:
    if bool(args.suite) == bool(args.identity):
        print("verify: pass exactly one of --suite or --identity",
              file=sys.stderr)
        return EXIT_USAGE
    targets = []
    if args.suite:
        for name in args.suite:
            if name == "all":
                targets.extend((s, None) for s in SUITE_NAMES)
            else:
                targets.append((name, None))
    else:
        path = Path(args.identity)
        try:
            targets.append((str(path), load_records(path)))
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            print(f"verify: cannot load {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    results = []
    all_ok = True
    for label, records in targets:
        def progress(done, total, rep, label=label):
            print(f"[{label} {done}/{total}] {rep.id}: {rep.status}",
                  file=sys.stderr)
        kwargs = dict(jobs=args.jobs, allow_large=args.allow_large,
                      max_order=args.order, progress=progress)
        reports = (run_suite(label, **kwargs) if records is None
                   else run_records(records, **kwargs))
        passed = sum(1 for r in reports if r.ok)
        all_ok = all_ok and passed == len(reports)
        results.append({"source": label, "total": len(reports),
                        "passed": passed,
                        "reports": [r.to_dict() for r in reports]})
        if not args.json:
            for r in reports:
                line = f"{'ok  ' if r.ok else 'FAIL'}  {r.id} (checked {r.checked})"
                if r.detail:
                    line += f" :: {r.detail}"
                print(line)
            print(f"{label}: {passed}/{len(reports)} passed")
        for r in reports:
            if not r.ok:
                print(f"failure: {label} {r.id}: {r.detail or 'mismatch'}",
                      file=sys.stderr)
    if args.json:
        print(json.dumps({"ok": all_ok, "results": results}, indent=2))
    return EXIT_OK if all_ok else EXIT_FAIL


def cmd_cusps(args) -> int:
    cusps = cusp_set(args.level)
    if args.json:
        print(json.dumps({
            "level": args.level,
            "count": len(cusps),
            "cusps": [{"label": s.label(), "a": s.a, "c": s.c,
                       "width": s.width} for s in cusps],
        }, indent=2))
        return EXIT_OK
    print(f"level {args.level}: {len(cusps)} cusps")
    for s in cusps:
        print(f"  {s.label():>10}  width {s.width}")
    return EXIT_OK


def cmd_bound(args) -> int:
    rows = bound_table()
    if args.json:
        print(json.dumps({"identities": [
            {"b": r["b"], "weight": r["weight"], "B": str(r["B"]),
             "requiredOrder": r["requiredOrder"]} for r in rows
        ]}, indent=2))
        return EXIT_OK
    print("b  weight      B     required order")
    for r in rows:
        print(f"{r['b']}  {r['weight']:<9} {str(r['B']):>6}  {r['requiredOrder']}")
    return EXIT_OK


def _resolve_certification_input(target: str) -> Path | None:
    for cand in (Path(target), DATA_DIR / target, DATA_DIR / f"{target}.json"):
        if cand.is_file():
            return cand
    return None


def cmd_certify(args) -> int:
    path = _resolve_certification_input(args.target)
    if path is None:
        print(f"certify: no identity file named {args.target!r}",
              file=sys.stderr)
        return EXIT_USAGE
    try:
        inp = certification_input_from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"certify: cannot load {path}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.level is not None and args.level != inp.level:
        print(f"certify: {path.name} declares level {inp.level}, "
              f"not {args.level}", file=sys.stderr)
        return EXIT_USAGE

    def progress(done, total):
        print(f"[{done}/{total}] constituents expanded", file=sys.stderr)

    try:
        cert = certify(inp, prec=args.order, progress=progress,
                       jobs=args.jobs)
    except (NotModular, InsufficientPrecision) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(cert.to_json())
    return EXIT_OK if cert.status == "certified" else EXIT_FAIL


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcrank",
        description="exact q-series expansion and identity verification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, order=None, level=None, jobs=False, allow_large=False):
        if order is not None:
            p.add_argument("--order", type=_positive_int, default=order,
                           help="number of q-exponents to work through")
        if level is not None:
            p.add_argument("--level", type=_positive_int, default=level,
                           help="modulus / level parameter")
        if jobs:
            p.add_argument("--jobs", type=_positive_int, default=1,
                           help="worker processes")
        if allow_large:
            p.add_argument("--allow-large", action="store_true",
                           help="lift the partition enumeration guard")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output")

    p = sub.add_parser("expand", help="print series coefficients")
    p.add_argument("expression")
    common(p, order=20, allow_large=True)
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("dissect", help="extract one residue class")
    p.add_argument("expression")
    p.add_argument("modulus", type=_positive_int)
    p.add_argument("residue", type=_nonnegative_int)
    common(p, order=20, allow_large=True)
    p.set_defaults(func=cmd_dissect)

    p = sub.add_parser("mw", help="partition statistics per residue class")
    p.add_argument("n", type=_nonnegative_int)
    common(p, level=11, allow_large=True)
    p.set_defaults(func=cmd_mw)

    p = sub.add_parser("verify", help="run identity records")
    p.add_argument("--suite", action="append",
                   choices=SUITE_NAMES + ("all",),
                   help="named suite (repeatable), or all")
    p.add_argument("--identity", help="JSON file with identity records")
    p.add_argument("--order", type=_positive_int, default=None,
                   help="cap the checked order of every record")
    common(p, jobs=True, allow_large=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("cusps", help="enumerate cusps with fan widths")
    common(p, level=121)
    p.set_defaults(func=cmd_cusps)

    p = sub.add_parser("bound", help="order bounds of the weight identities")
    common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("certify", help="certify one vanishing identity")
    p.add_argument("target",
                   help="identity file, or a name resolved in the data directory")
    p.add_argument("--order", type=_positive_int, default=None,
                   help="declared expansion capability (must exceed -B)")
    p.add_argument("--level", type=_positive_int, default=None,
                   help="cross-check the input's declared level")
    p.add_argument("--jobs", type=_positive_int, default=1,
                   help="worker processes for ratio expansion")
    p.set_defaults(func=cmd_certify, json=False)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
