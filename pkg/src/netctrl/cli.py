"""``netctrl`` command-line front end.

Exit codes: 0 Controllable (or success for ``scan``/``discretize``),
1 Uncontrollable, 2 Inconclusive, 64 usage error, 65 unreadable or invalid
input, 70 internal inconsistency.
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import fixtures
from .analyzer import Verdict, analyze, to_jsonable
from .errors import InternalInconsistency, NetCtrlError
from .multirate import analyze_multirate
from .numkernel import DEFAULT_TOL
from .oracle import period_grid, scan_csv, scan_periods
from .sysmodel import MultiRateSpec, discretize, parse_document

EXIT_OK = 0
EXIT_UNCONTROLLABLE = 1
EXIT_INCONCLUSIVE = 2
EXIT_USAGE = 64
EXIT_DATAERR = 65
EXIT_SOFTWARE = 70

VERDICT_EXIT = {
    Verdict.CONTROLLABLE: EXIT_OK,
    Verdict.UNCONTROLLABLE: EXIT_UNCONTROLLABLE,
    Verdict.INCONCLUSIVE: EXIT_INCONCLUSIVE,
}


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default=None,
                        help="output format (default json; scan defaults to CSV)")
    common.add_argument("--tol-rank", type=float, default=None, metavar="F",
                        help="relative singular-value cutoff")
    common.add_argument("--tol-eig", type=float, default=None, metavar="F",
                        help="eigenvalue clustering radius")
    common.add_argument("--tol-chain", type=float, default=None, metavar="F",
                        help="Jordan-chain residual bound")
    common.add_argument("--lenient", action="store_true",
                        help="warn about unknown keys instead of rejecting them")
    common.add_argument("--exhaustive", action="store_true",
                        help="run every applicable criterion, not just up to the first verdict")

    parser = _Parser(prog="netctrl",
                     description="Controllability of networked sampled-data systems.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("analyze", parents=[common], help="analyze a system document")
    p.add_argument("path", help="JSON file, or - for stdin")

    p = sub.add_parser("scan", parents=[common], help="analyze over a grid of periods")
    p.add_argument("path")
    p.add_argument("--h-min", type=float, required=True)
    p.add_argument("--h-max", type=float, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--workers", type=int, default=None,
                   help="evaluate grid points in parallel threads")

    p = sub.add_parser("discretize", parents=[common], help="print the sampled matrices")
    p.add_argument("path")

    p = sub.add_parser("demo", parents=[common], help="analyze a built-in reference network")
    p.add_argument("name", choices=fixtures.NAMES)
    return parser


def _tolerance(args, doc_tol):
    base = doc_tol or DEFAULT_TOL
    try:
        return base.replace(rank_rel=args.tol_rank, eig_cluster=args.tol_eig,
                            chain_residual=args.tol_chain)
    except ValueError as exc:
        raise UsageError(f"invalid tolerance: {exc}") from None


def _read(path):
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load(args):
    data = _read(args.path)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            obj, doc_tol = parse_document(data, lenient=args.lenient)
        except NetCtrlError as exc:
            raise InputError(f"{args.path}: {exc}") from None
    for w in caught:
        print(f"netctrl: warning: {w.message}", file=sys.stderr)
    return obj, _tolerance(args, doc_tol)


def _real(m):
    m = np.asarray(m)
    if np.max(np.abs(m.imag), initial=0.0) == 0:
        return m.real
    return m


def _format_matrix(m):
    m = _real(m)
    return "\n".join("  " + "  ".join(f"{x:>12.6g}" if np.isrealobj(m) else f"{x:>24.6g}"
                                      for x in row) for row in m)


def _report_text(rep):
    d = rep.to_dict()
    lines = [f"verdict: {d['verdict']}", f"criterion: {d['criterion']}"]
    for key in ("kind", "l", "period"):
        if key in d:
            lines.append(f"{key}: {d[key]}")
    lines.append("flags: " + (", ".join(d["flags"]) if d["flags"] else "none"))
    for name, m in d["margins"]:
        lines.append(f"margin {name}: {m}")
    ev = {k: v for k, v in d["evidence"].items() if k != "criteria"}
    for key in sorted(ev):
        lines.append(f"{key}: {json.dumps(ev[key], sort_keys=True)}")
    for c in d["evidence"].get("criteria", []):
        lines.append(f"  {c['criterion']}: {c['verdict']}")
    return "\n".join(lines) + "\n"


def _emit_report(rep, fmt):
    if fmt == "text":
        sys.stdout.write(_report_text(rep))
    else:
        sys.stdout.write(rep.to_json() + "\n")
    return VERDICT_EXIT[rep.verdict]


def _run_analysis(obj, tol, exhaustive):
    if isinstance(obj, MultiRateSpec):
        return analyze_multirate(obj, tol)
    return analyze(obj, tol, exhaustive=exhaustive)


def cmd_analyze(args):
    obj, tol = _load(args)
    return _emit_report(_run_analysis(obj, tol, args.exhaustive), args.format)


def cmd_demo(args):
    tol = _tolerance(args, None)
    rep = analyze(fixtures.fixture(args.name), tol, exhaustive=args.exhaustive)
    return _emit_report(rep, args.format)


def cmd_scan(args):
    obj, tol = _load(args)
    if isinstance(obj, MultiRateSpec):
        obj = obj.base
    try:
        period_grid(args.h_min, args.h_max, args.count)
    except ValueError as exc:
        raise UsageError(f"invalid scan grid: {exc}") from None
    rows = scan_periods(obj, args.h_min, args.h_max, args.count, tol, workers=args.workers)
    if args.format == "json":
        doc = [{"h": r.h, "verdict": r.verdict, "criterion": r.criterion,
                "pathological_node": r.pathological_node} for r in rows]
        sys.stdout.write(json.dumps(to_jsonable(doc), indent=2) + "\n")
    else:
        sys.stdout.write(scan_csv(rows))
    return EXIT_OK


def cmd_discretize(args):
    obj, _ = _load(args)
    sys_ = obj.base if isinstance(obj, MultiRateSpec) else obj
    ss = discretize(sys_)
    mats = {"eAh": ss.eAh, "Hh": ss.Hh, "Bh": ss.Bh, "phi_s": ss.phi_s, "psi_s": ss.psi_s}
    if args.format == "text":
        out = [f"h: {ss.h:.12g}"]
        for k, m in mats.items():
            out.append(f"{k}:")
            out.append(_format_matrix(m))
        sys.stdout.write("\n".join(out) + "\n")
    else:
        doc = {"h": ss.h}
        doc.update({k: _real(m) for k, m in mats.items()})
        sys.stdout.write(json.dumps(to_jsonable(doc), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "scan": cmd_scan, "discretize": cmd_discretize,
            "demo": cmd_demo}


def run(argv):
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"netctrl: {exc}", file=sys.stderr)
        return EXIT_DATAERR
    except InternalInconsistency as exc:
        print(f"netctrl: internal inconsistency: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE
    except NetCtrlError as exc:
        print(f"netctrl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE


def main(argv=None):
    try:
        return run(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:  # --help and friends
        return exc.code if isinstance(exc.code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
