"""Command-line entry point.

Exit status: 0 when every acceptance residual passes, 1 when one fails (or,
with --strict, when any warning was raised), 2 on usage, config or runtime
errors. ``check-truncation`` exits 0 when the condition holds and 1 when it
is violated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def _set_threads(n):
    # must happen before numpy loads its BLAS
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(n)


def _print_report(rep, strict):
    status = "PASS" if rep.passed else "FAIL"
    print(f"{rep.name} ({rep.kind}): {status}  [{rep.wall_clock:.1f} s]")
    for line in rep.summary_lines():
        print(line)
    for w in rep.warnings:
        print(f"  warning: {w}")
    if not rep.passed:
        return EXIT_FAIL
    if strict and rep.warnings:
        print("  strict: failing on warnings")
        return EXIT_FAIL
    return EXIT_PASS


def cmd_run(args):
    from .config import load_config
    from .experiments import run
    cfg = load_config(args.config)
    rep = run(cfg, args.out_dir)
    print(f"output: {Path(args.out_dir) / cfg.name}")
    return _print_report(rep, args.strict)


def cmd_audit(args):
    from .config import load_config
    from .experiments import run
    overrides = {("audit", "seed"): args.seed, ("audit", "count"): args.count}
    cfg = load_config("constraint-audit", overrides)
    rep = run(cfg, args.out_dir)
    return _print_report(rep, args.strict)


def cmd_symbol(args):
    from .algebra import OperatorPolynomial, anti_wick_symbol, antinormal_order
    op = OperatorPolynomial.from_text(Path(args.operator_file).read_text(), args.modes)
    if args.ordered:
        print(antinormal_order(op).to_text(), end="")
    else:
        print(anti_wick_symbol(op).to_text(), end="")
    return EXIT_PASS


def cmd_check_truncation(args):
    from .algebra import PhaseSpacePolynomial, check_truncation
    h = PhaseSpacePolynomial.from_text(Path(args.symbol_file).read_text(), args.modes)
    res = check_truncation(h)
    if res.satisfied:
        print("satisfied: every third derivative of the symbol vanishes")
        return EXIT_PASS
    slot, triple, poly = res.witness
    print(f"violated: third {slot} derivative along modes {list(triple)} is nonzero")
    print(poly.to_text(), end="")
    return EXIT_FAIL


def cmd_compare(args):
    from .experiments import compare_files
    metrics = compare_files(args.snap_a, args.snap_b)
    if args.json:
        print(json.dumps(metrics, indent=2))
    else:
        for k, v in metrics.items():
            print(f"{k:16s} {v:.6e}")
    return EXIT_PASS


def cmd_presets(args):
    from .presets import PRESETS
    if args.name:
        if args.name not in PRESETS:
            print(f"unknown preset {args.name!r}", file=sys.stderr)
            return EXIT_ERROR
        print(PRESETS[args.name].strip())
        return EXIT_PASS
    for name in PRESETS:
        print(name)
    return EXIT_PASS


def build_parser():
    p = argparse.ArgumentParser(prog="tsfp", description="Phase-space Fokker-Planck experiments "
                                "with traceless diffusion, checked against Fock-space dynamics.")
    p.add_argument("--out-dir", default="runs", help="output root (default: runs)")
    p.add_argument("--threads", type=int, default=0, help="BLAS/OpenMP thread count")
    p.add_argument("--strict", action="store_true", help="fail when any warning is raised")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a config file or named preset")
    r.add_argument("config")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("symbol", help="anti-Wick symbol of an operator polynomial file")
    s.add_argument("operator_file")
    s.add_argument("--modes", type=int, default=None)
    s.add_argument("--ordered", action="store_true", help="print the anti-normal ordered operator")
    s.set_defaults(func=cmd_symbol)

    c = sub.add_parser("check-truncation", help="test whether a symbol's series stops at order two")
    c.add_argument("symbol_file")
    c.add_argument("--modes", type=int, default=None)
    c.set_defaults(func=cmd_check_truncation)

    m = sub.add_parser("compare", help="distance metrics between two snapshots")
    m.add_argument("snap_a")
    m.add_argument("snap_b")
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_compare)

    a = sub.add_parser("audit", help="structural-identity audit over random Hamiltonians")
    a.add_argument("--seed", type=int, default=20261016)
    a.add_argument("--count", type=int, default=100)
    a.set_defaults(func=cmd_audit)

    ps = sub.add_parser("presets", help="list presets or print one")
    ps.add_argument("name", nargs="?")
    ps.set_defaults(func=cmd_presets)
    return p


def main(argv=None):
    parser = build_parser()
    # global flags are accepted after the subcommand too
    args, rest = parser.parse_known_args(argv)
    if rest:
        glob = argparse.ArgumentParser(add_help=False)
        glob.add_argument("--out-dir")
        glob.add_argument("--threads", type=int)
        glob.add_argument("--strict", action="store_true")
        extra, unknown = glob.parse_known_args(rest)
        if unknown:
            parser.error(f"unrecognized arguments: {' '.join(unknown)}")
        if extra.out_dir:
            args.out_dir = extra.out_dir
        if extra.threads:
            args.threads = extra.threads
        args.strict = args.strict or extra.strict
    _set_threads(args.threads)
    try:
        return args.func(args)
    except Exception as exc:   # noqa: BLE001  report and map to the error exit code
        from .config import ConfigError
        kind = "config error" if isinstance(exc, ConfigError) else type(exc).__name__
        print(f"tsfp: {kind}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
