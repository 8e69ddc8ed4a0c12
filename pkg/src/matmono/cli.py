"""Command-line front end.

Examples::

    matmono certify --fn pow:2 --order 2 --interval 0:10 --seed 7
    matmono witness --fn pow:2 --order 2 --seed 7 --fixture w.json
    matmono verify-fixture --fixture w.json
    matmono alpha --n 2 --resolution 1e-3 --seed 7
    matmono mclass --fn sqrt --n 2 --samples 10000 --seed 1
    matmono algebra test --spec spec.json --fn pow:2
    matmono gap-table --max-n 3 --format csv --out gap.csv

The exit status is 0 whenever the run completes, whatever the verdict.
Thread count for sweeps comes from ``MATMONO_THREADS``.
"""
from __future__ import annotations

import argparse
import sys

from . import __version__
from .reporting import EXIT_OK, RunConfig, exit_code_for, parse_algebra, parse_orders, render, run


def _common(p, seed=True, interval=True):
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if interval:
        p.add_argument("--interval", default=None, help="LO:HI, inf allowed (default 0:10)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--timing", action="store_true", help="add wall time (breaks byte identity)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="matmono", description="Numerical matrix-monotonicity checks.")
    ap.add_argument("--version", action="version", version=f"matmono {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", help="Loewner-matrix sweep at one or more orders")
    p.add_argument("--fn", required=True)
    p.add_argument("--order", required=True, help="e.g. 2, 1,3 or 1-6")
    p.add_argument("--node-sets", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)

    p = sub.add_parser("witness", help="search for a violating pair A <= B")
    p.add_argument("--fn", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--budget", type=int, default=None, help="proposals (default 100000)")
    p.add_argument("--rtol", type=float, default=1e-13)
    p.add_argument("--fixture", default=None, help="write the witness fixture here")
    _common(p)

    p = sub.add_parser("verify-fixture", help="re-check a saved witness")
    p.add_argument("--fixture", required=True)
    _common(p, seed=False)

    p = sub.add_parser("alpha", help="bisect the gap threshold for g_n")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--node-sets", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p, interval=False)

    p = sub.add_parser("mclass", help="sample the rational-combination class M_n")
    p.add_argument("--fn", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples", type=int, default=10_000)
    _common(p, interval=False)

    p = sub.add_parser("algebra", help="A-monotonicity for a fibered algebra")
    p.add_argument("action", choices=("test",))
    p.add_argument("--spec", required=True, help="JSON file, JSON text, or shorthand like M2+M2")
    p.add_argument("--fn", required=True)
    p.add_argument("--budget", type=int, default=None, help="sampled pairs (default 1000)")
    p.add_argument("--rtol", type=float, default=1e-13)
    p.add_argument("--node-sets", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)

    p = sub.add_parser("gap-table", help="thresholds and witnesses for the gap family")
    p.add_argument("--max-n", type=int, default=2)
    p.add_argument("--resolution", type=float, default=1e-3)
    p.add_argument("--budget", type=int, default=None, help="witness proposals per row (default 20000)")
    p.add_argument("--rtol", type=float, default=1e-13)
    p.add_argument("--node-sets", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p, interval=False)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {"command": ns.command, "format": ns.format, "out": ns.out, "timing": ns.timing}
    simple = ("fn", "seed", "interval", "budget", "node_sets", "tol", "rtol", "resolution", "n",
              "samples", "fixture", "max_n")
    for name in simple:
        if getattr(ns, name, None) is not None:
            kw[name] = getattr(ns, name)
    if getattr(ns, "order", None) is not None:
        kw["orders"] = parse_orders(str(ns.order))
    if ns.command == "algebra":
        kw["algebra"] = parse_algebra(ns.spec).to_json()
    if ns.command == "verify-fixture":
        kw["seed"] = None
    return RunConfig(**kw)


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        text = render(run(cfg), cfg.format)
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except Exception as exc:  # noqa: BLE001 - every failure gets a diagnostic code
        code = exit_code_for(exc)
        print(f"matmono: error[{code}]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
