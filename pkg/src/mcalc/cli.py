"""Command-line front end.

    mcalc diff "tr(X'*A*X)" --wrt X
    mcalc grad "logdet(X)" --sym X:4x4:var
    mcalc expand 3
    mcalc verify "tr(X'*A*X)" --samples 50 --seed 1
    mcalc counterexample --n-max 1000

Exit status: 0 on success, 1 when a verification fails, 2 on usage,
parse or shape errors. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from mcalc import frechet, numcheck
from mcalc.errors import ExprSyntaxError, MCalcError
from mcalc.expr import (
    ScalarExpr, format_expr, format_latex, parse, parse_decl, simplify, symbol_table, to_json_obj,
)
from mcalc import opcalc

DEFAULT_SYMS = ("A:3x3:const", "B:3x3:const", "X:3x3:var")
MAX_ORDER = 3

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _table(syms: list[str] | None):
    """Defaults, overridden name by name by ``--sym``; conflicting ``--sym`` flags are an error."""
    user = symbol_table(parse_decl(s) for s in (syms or []))
    table = {d.name: d for d in map(parse_decl, DEFAULT_SYMS) if d.name not in user}
    table.update(user)
    return table


def _emit_expr(e, fmt: str, prefix: str = "") -> str:
    if fmt == "json":
        return json.dumps(to_json_obj(e))
    if fmt == "latex":
        return (prefix.replace("↦", r"\mapsto") if prefix else "") + format_latex(e)
    return prefix + format_expr(e)


def _parse_target(args):
    table = _table(args.sym)
    e = parse(args.expr, table)
    if args.wrt not in table or table[args.wrt].role != "var":
        raise UsageError(f"--wrt {args.wrt}: not a declared var (declare it with --sym {args.wrt}:RxC:var)")
    return e, table


# --- commands -------------------------------------------------------------------


def cmd_diff(args) -> int:
    if not 1 <= args.order <= MAX_ORDER:
        raise UsageError(f"--order must be between 1 and {MAX_ORDER}")
    e, table = _parse_target(args)
    dd = frechet.directional(e, args.wrt, args.order, table[args.wrt].shape)
    print(_emit_expr(simplify(dd.expr), args.format))
    return EXIT_OK


def cmd_grad(args) -> int:
    e, table = _parse_target(args)
    if not isinstance(e, ScalarExpr):
        raise UsageError("grad needs a scalar-valued expression")
    print(_emit_expr(frechet.gradient(e, args.wrt, table[args.wrt].shape), args.format))
    return EXIT_OK


def cmd_hess(args) -> int:
    e, table = _parse_target(args)
    if not isinstance(e, ScalarExpr):
        raise UsageError("hess needs a scalar-valued expression")
    h = frechet.hessian(e, args.wrt, table[args.wrt].shape)
    print(_emit_expr(h.expr, args.format, prefix="T ↦ "))
    return EXIT_OK


def cmd_expand(args) -> int:
    if args.k < 1:
        raise UsageError("order must be >= 1")
    u, v, w = (opcalc.SpaceLabel(s) for s in ("U", "V", "W"))
    f, g = opcalc.FuncSymbol("f", v, w), opcalc.FuncSymbol("g", u, v)
    style = {"text": "unicode", "latex": "latex", "json": None}[args.format]
    if args.steps:
        steps = opcalc.derivation(f, g, args.k)
        if style is None:
            print(json.dumps([{"order": i + 1, "raw": opcalc.to_json_obj(raw), "normalized": opcalc.to_json_obj(n)}
                              for i, (raw, n) in enumerate(steps)]))
            return EXIT_OK
        for i, (raw, n) in enumerate(steps, 1):
            print(f"D^{i} raw:        {opcalc.format_term(raw, style)}")
            print(f"D^{i} normalized: {opcalc.format_term(n, style)}")
        return EXIT_OK
    s = opcalc.expand_composition(f, g, args.k)
    print(json.dumps(opcalc.to_json_obj(s)) if style is None else opcalc.format_term(s, style))
    return EXIT_OK


def cmd_verify(args) -> int:
    e, table = _parse_target(args)
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    try:
        reports = numcheck.verify_expression(e, args.wrt, table, args.samples, args.seed,
                                             perturb=args.perturb, square=args.square)
    except MCalcError as err:
        print(f"verification aborted: {err}", file=sys.stderr)
        return EXIT_FAIL
    _print_reports(reports, args.format)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def cmd_counterexample(args) -> int:
    if args.n_max < 10:
        raise UsageError("--n-max must be >= 10")
    demo = numcheck.counterexample_demo(args.n_max, args.seed)
    _print_reports(demo.reports, args.format)
    if args.format != "json":
        print(demo.summary)
    return EXIT_OK if demo.passed else EXIT_FAIL


def _print_reports(reports, fmt: str) -> None:
    for r in reports:
        if fmt == "json":
            print(r.to_json())
        else:
            print(f"{r.verdict.upper():4}  {r.name:<30} rel_error={r.rel_error:.3e}  tol={r.tolerance:.0e}")


# --- argument parsing ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcalc", description="Coordinate-free matrix calculus.")
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json", "latex"), default="text")
    common.add_argument("--seed", type=int, default=0)

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("expr", help="expression text, e.g. \"tr(X'*A*X)\"")
    target.add_argument("--wrt", default="X", help="variable to differentiate (default X)")
    target.add_argument("--sym", action="append", metavar="NAME:RxC:ROLE",
                        help="declare a symbol; repeatable; role is const, var or dir "
                             f"(defaults: {' '.join(DEFAULT_SYMS)})")

    d = sub.add_parser("diff", parents=[common, target], help="directional derivative of order k")
    d.add_argument("--order", type=int, default=1)
    d.set_defaults(func=cmd_diff)
    sub.add_parser("grad", parents=[common, target], help="gradient under <A, B> = tr(B'A)").set_defaults(func=cmd_grad)
    sub.add_parser("hess", parents=[common, target], help="Hessian operator T -> H(T)").set_defaults(func=cmd_hess)

    e = sub.add_parser("expand", parents=[common], help="expand D^k(f o g)")
    e.add_argument("k", type=int)
    e.add_argument("--steps", action="store_true", help="also show each raw step before normalization")
    e.set_defaults(func=cmd_expand)

    v = sub.add_parser("verify", parents=[common, target], help="check derivatives against finite differences")
    v.add_argument("--samples", type=int, default=20)
    v.add_argument("--square", choices=("well_conditioned", "spd"), default="well_conditioned",
                   help="distribution of random square symbols")
    v.add_argument("--perturb", type=float, default=0.0, help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("counterexample", parents=[common], help="Gateaux-but-not-Frechet demonstration")
    c.add_argument("--n-max", type=int, default=1000)
    c.set_defaults(func=cmd_counterexample)
    return p


def _diagnose(err: Exception) -> str:
    msg = f"error: {err}"
    if isinstance(err, ExprSyntaxError) and err.text:
        line = err.text.splitlines()[err.line - 1] if err.text.splitlines() else ""
        msg += f"\n  {line}\n  {' ' * (err.col - 1)}^"
    return msg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MCalcError, UsageError) as err:
        print(_diagnose(err), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
