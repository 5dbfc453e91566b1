"""Command-line interface.

Exit codes:
  0  success
  1  numerical failure (no convergence and the like)
  2  invalid flags or parameters
  3  evaluation requested on the diagonal r == r'
  4  grid requested for an expression with delta terms, without --regular-only
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from .dist_algebra import eval_regular, singular_part
from .double_sbf import DoubleSpec, closed_form, evaluate, gr_direct
from .errors import DiagonalPoint, DivergenceDetected, SBFError
from .multi_sbf import MultiSpec, evaluate_multi
from .oracle import Accel, QuadratureConfig, oscillatory_integral
from .triple_sbf import TripleSpec, reduce_triple

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIAGONAL, EXIT_SINGULAR = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(v < 0 for v in vals):
        raise argparse.ArgumentTypeError("orders must be non-negative")
    return vals


def _float_list(text):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("radii must be positive")
    return vals


def _nonneg_int(text):
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be > 0")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sbfoverlap",
                                description="Overlap integrals of spherical Bessel functions.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("double", help="evaluate int k^n j_l(kr) j_l'(kr') dk at a point")
    d.add_argument("--l", type=_nonneg_int, required=True)
    d.add_argument("--lp", type=_nonneg_int, required=True)
    d.add_argument("--n", type=_nonneg_int, required=True)
    d.add_argument("--r", type=_pos_float, required=True)
    d.add_argument("--rp", type=_pos_float, required=True)
    d.add_argument("--json", action="store_true")

    c = sub.add_parser("closed-form", help="print the canonical closed form as JSON")
    c.add_argument("--l", type=_nonneg_int, required=True)
    c.add_argument("--lp", type=_nonneg_int, required=True)
    c.add_argument("--n", type=_nonneg_int, required=True)

    g = sub.add_parser("grid", help="write ladder and direct values on an (r, r') grid as CSV")
    g.add_argument("--l", type=_nonneg_int, required=True)
    g.add_argument("--lp", type=_nonneg_int, required=True)
    g.add_argument("--n", type=_nonneg_int, required=True)
    g.add_argument("--rmax", type=_pos_float, default=2.0)
    g.add_argument("--steps", type=int, default=50)
    g.add_argument("--out", required=True)
    g.add_argument("--regular-only", action="store_true")

    t = sub.add_parser("triple", help="evaluate a triple overlap integral")
    t.add_argument("--orders", type=_int_list, required=True)
    t.add_argument("--n", type=_nonneg_int, required=True)
    t.add_argument("--radii", type=_float_list, required=True)
    t.add_argument("--json", action="store_true")

    m = sub.add_parser("multi", help="evaluate an overlap integral of four or more factors")
    m.add_argument("--orders", type=_int_list, required=True)
    m.add_argument("--n", type=_nonneg_int, required=True)
    m.add_argument("--radii", type=_float_list, required=True)
    m.add_argument("--json", action="store_true")

    o = sub.add_parser("oracle", help="numerical quadrature of the k-integral")
    o.add_argument("--orders", type=_int_list, required=True)
    o.add_argument("--n", type=_nonneg_int, required=True)
    o.add_argument("--radii", type=_float_list, required=True)
    o.add_argument("--method", choices=["partition", "damping"], default="partition")
    o.add_argument("--json", action="store_true")
    return p


def _emit(obj, as_json, human):
    if as_json:
        print(json.dumps(obj, sort_keys=True))
    else:
        print(human)


def cmd_double(args):
    res = evaluate(DoubleSpec(args.l, args.lp, args.n), args.r, args.rp)
    if args.json:
        _emit(res.to_json(), True, None)
        return EXIT_OK
    lines = [f"regular: {res.value:.17g}"]
    if res.singular:
        lines.append("singular: " + " + ".join(s.render() for s in res.singular))
    else:
        lines.append("singular: none")
    print("\n".join(lines))
    return EXIT_OK


def cmd_closed_form(args):
    print(closed_form(args.l, args.lp, args.n).dumps())
    return EXIT_OK


def cmd_grid(args):
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    expr = closed_form(args.l, args.lp, args.n)
    if singular_part(expr) and not args.regular_only:
        print("expression has delta terms; pass --regular-only to write the regular part",
              file=sys.stderr)
        return EXIT_SINGULAR
    axis = args.rmax * np.arange(1, args.steps + 1) / args.steps
    R, RP = np.meshgrid(axis, axis, indexing="ij")
    R, RP = R.ravel(), RP.ravel()
    off = R != RP
    ladder = np.full(R.shape, np.nan)
    direct = np.full(R.shape, np.nan)
    if np.any(off):
        ladder[off] = eval_regular(expr, R[off], RP[off])
        direct[off] = gr_direct(args.l, args.lp, args.n, R[off], RP[off])
    fmt = lambda v: "" if not np.isfinite(v) else f"{v:.17g}"  # noqa: E731
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r", "rp", "value_ladder", "value_direct"])
        for a, b, x, y in zip(R, RP, ladder, direct):
            w.writerow([f"{a:.17g}", f"{b:.17g}", fmt(x), fmt(y)])
    return EXIT_OK


def cmd_triple(args):
    if len(args.orders) != 3 or len(args.radii) != 3:
        raise UsageError("triple needs three orders and three radii")
    res = reduce_triple(TripleSpec(*args.orders, args.n), *args.radii)
    d = res.to_json()
    _emit(d, args.json, f"value: {res.value:.17g}\ntriangle_ok: {str(res.triangle_ok).lower()}\n"
                        f"window: [{d['window'][0]:.17g}, {d['window'][1]:.17g}]\nL: {d['L']}")
    return EXIT_OK


def cmd_multi(args):
    res = evaluate_multi(MultiSpec(tuple(args.orders), tuple(args.radii), args.n))
    _emit(res.to_json(), args.json,
          f"value: {res.value:.17g}\nerror_estimate: {res.error_estimate:.3g}")
    return EXIT_OK


def cmd_oracle(args):
    if len(args.orders) != len(args.radii):
        raise UsageError("orders and radii must have equal length")
    accel = Accel.PARTITION_EPSILON if args.method == "partition" else Accel.DAMPING_RICHARDSON
    try:
        rep = oscillatory_integral(args.orders, args.radii, args.n, QuadratureConfig(accel=accel))
    except DivergenceDetected as exc:
        rep = exc.report
    d = rep.to_dict()
    if rep.diverged:
        human = f"diverged: true ({d['diagnostics'].get('reason', '')})"
    else:
        human = f"{rep.value:.10g} ± {rep.error_estimate:.2g}"
    _emit({k: d[k] for k in ("value", "error_estimate", "method", "panels", "diverged")},
          args.json, human)
    return EXIT_OK


_COMMANDS = {"double": cmd_double, "closed-form": cmd_closed_form, "grid": cmd_grid,
             "triple": cmd_triple, "multi": cmd_multi, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except DiagonalPoint as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIAGONAL
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SBFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
