"""Run configurations, dispatch and deterministic reports.

A :class:`RunConfig` names one command and its knobs; :func:`run` turns it
into a plain dict report. Reports contain the echoed config, so
``run(RunConfig.from_json(report["config"]))`` reproduces the same bytes
under :func:`dump_json`. Wall time is only recorded when asked for,
because it would break that.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import re
import time
from dataclasses import asdict, dataclass, fields

from . import __version__
from .fibered import FiberedAlgebra, FiberSpec, amonotone_test
from .functions import gap_fn, gap_poly, parse_function
from .hermitian import DomainError, EigenConvergenceError, Interval
from .loewner import GapSearchError, SweepConfig, alpha_search, mclass_test, order_n_certificate
from .witness import load_fixture, pair_margins, save_fixture, search, verify_witness

COMMANDS = ("certify", "witness", "alpha", "mclass", "algebra", "verify-fixture", "gap-table")
RANDOMIZED = {"certify", "witness", "alpha", "mclass", "algebra", "gap-table"}
CSV_VERSION = 1
DEFAULT_BUDGET = {"algebra": 1000, "gap-table": 20_000}

# exit codes; verdicts never change these
EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_BUDGET = 4
EXIT_NUMERIC = 5
EXIT_IO = 6


class ParseError(ValueError):
    """Bad function spec, interval, algebra spec or option value."""


@dataclass(frozen=True)
class RunConfig:
    command: str
    fn: str | None = None
    orders: tuple = ()
    interval: str | None = None
    seed: int | None = 0
    budget: int | None = None
    node_sets: int = 2000
    tol: float = 1e-10
    rtol: float = 1e-13
    resolution: float = 1e-3
    n: int = 2
    samples: int = 10_000
    algebra: dict | None = None
    fixture: str | None = None
    max_n: int = 2
    format: str = "json"
    out: str | None = None
    timing: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ParseError(f"unknown command {self.command!r}")
        if self.budget is None:
            object.__setattr__(self, "budget", DEFAULT_BUDGET.get(self.command, 100_000))
        if self.interval is None and self.command != "verify-fixture":
            object.__setattr__(self, "interval", "0:10")
        if self.command in RANDOMIZED and self.seed is None:
            raise ParseError(f"{self.command} is randomized and needs a seed")
        for name in ("tol", "rtol", "resolution"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ParseError(f"{name} must be positive, got {v}")
        for name in ("budget", "node_sets", "samples", "n", "max_n"):
            if getattr(self, name) < 1:
                raise ParseError(f"{name} must be >= 1")
        if self.format not in ("json", "csv"):
            raise ParseError(f"format must be json or csv, got {self.format!r}")
        object.__setattr__(self, "orders", tuple(int(o) for o in self.orders))
        if any(o < 1 for o in self.orders):
            raise ParseError("orders must be >= 1")

    def sweep(self) -> SweepConfig:
        return SweepConfig(node_sets=self.node_sets, tol=self.tol, seed=self.seed or 0)

    def to_json(self):
        d = asdict(self)
        d["orders"] = list(self.orders)
        for k in ("out", "timing"):  # where the report goes does not change it
            d.pop(k)
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParseError(f"unknown config keys {sorted(unknown)}")
        if "orders" in d:
            d["orders"] = tuple(d["orders"])
        return cls(**d)


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def parse_orders(text: str) -> tuple:
    """``"2"``, ``"1,2,4"`` or ``"1-6"``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                a, b = part.split("-")
                out.extend(range(int(a), int(b) + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        raise ParseError(f"cannot parse orders {text!r}") from exc
    if not out:
        raise ParseError("no orders given")
    return tuple(out)


_ALG_TERM = re.compile(r"M(\d+)(?:\^(\d+))?$")


def parse_algebra(text: str) -> FiberedAlgebra:
    """Algebra from a JSON file, a JSON string, or shorthand like ``M2+M2`` / ``M1^5``."""
    text = text.strip()
    if os.path.exists(text):
        with open(text) as fh:
            return _algebra_from_json(json.load(fh))
    if text.startswith("{"):
        return _algebra_from_json(json.loads(text))
    specs = []
    for term in text.replace(" ", "").split("+"):
        m = _ALG_TERM.match(term)
        if not m:
            raise ParseError(f"cannot parse algebra {text!r}; use a JSON file or e.g. M2+M1^3")
        specs.append(FiberSpec(int(m.group(1)), int(m.group(2) or 1)))
    return FiberedAlgebra(specs)


def _algebra_from_json(d):
    try:
        return FiberedAlgebra.from_json(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad algebra spec: {exc}") from exc


def _function(cfg):
    if not cfg.fn:
        raise ParseError(f"{cfg.command} needs --fn")
    try:
        return parse_function(cfg.fn)
    except DomainError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _interval(text):
    try:
        return Interval.parse(text)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _certify(cfg):
    f = _function(cfg)
    iv = _interval(cfg.interval)
    orders = cfg.orders or (cfg.n,)
    sweep = cfg.sweep()
    return {"fn": f.spec(), "interval": str(iv),
            "verdicts": [order_n_certificate(f, iv, n, sweep).to_json() for n in orders]}


def _witness(cfg):
    f = _function(cfg)
    iv = _interval(cfg.interval)
    n = cfg.orders[0] if cfg.orders else cfg.n
    w, score = search(f, n, iv, cfg.budget, cfg.seed, rtol=cfg.rtol)
    out = {"fn": f.spec(), "interval": str(iv), "order": n, "found": w is not None,
           "best_score": _num(score), "budget": cfg.budget, "witness": None, "verified": False}
    if w is not None:
        out["witness"] = w.to_json()
        out["verified"] = verify_witness(w, interval=iv)
        if cfg.fixture:
            save_fixture(w, cfg.fixture)
    return out


def _alpha(cfg):
    return alpha_search(cfg.n, cfg.resolution, cfg.sweep()).to_json()


def _mclass(cfg):
    f = _function(cfg)
    d = mclass_test(f, cfg.n, cfg.samples, cfg.seed).to_json()
    d["fn"] = f.spec()
    return d


def _algebra(cfg):
    f = _function(cfg)
    if cfg.algebra is None:
        raise ParseError("algebra test needs --spec")
    alg = _algebra_from_json(cfg.algebra)
    iv = _interval(cfg.interval)
    rep = amonotone_test(f, alg, iv, budget=cfg.budget, seed=cfg.seed, cfg=cfg.sweep(), rtol=cfg.rtol)
    d = rep.to_json()
    d.update({"fn": f.spec(), "interval": str(iv), "algebra": alg.to_json(), "algebra_str": str(alg)})
    return d


def _verify_fixture(cfg):
    if not cfg.fixture:
        raise ParseError("verify-fixture needs --fixture")
    w = load_fixture(cfg.fixture)
    iv = _interval(cfg.interval) if cfg.interval else (w.interval or w.f.domain)
    om, gm, t, inside = pair_margins(w.f, w.a.data, w.b.data, iv, tol=w.tol)
    return {"fn": w.f.spec(), "dim": w.dim, "interval": str(iv), "valid": verify_witness(w, interval=iv),
            "order_min_eigenvalue": float(om), "gap_eigenvalue": float(gm), "tol": float(t),
            "spectra_inside": bool(inside), "recorded_gap_eigenvalue": w.order_gap_eigenvalue,
            "seed": w.seed}


def _witness_summary(f, n, iv, cfg):
    w, score = search(f, n, iv, cfg.budget, cfg.seed, rtol=cfg.rtol)
    if w is None:
        return {"found": False, "gap_eigenvalue": None, "tol": None, "best_score": _num(score)}
    return {"found": True, "gap_eigenvalue": w.order_gap_eigenvalue, "tol": w.tol,
            "best_score": _num(score)}


def gap_table(max_n: int, cfg: RunConfig):
    """Per-n rows for the gap family ``g_n`` on ``[0, alpha_n)`` and ``f_n`` on ``[0, inf)``.

    A row is ``complete`` when order ``n`` passes and order ``n + 1`` is
    refuted (Loewner sweep or witness) for both functions. Failures are
    recorded in the row and the table continues.
    """
    sweep = cfg.sweep()
    rows = []
    for n in range(1, max_n + 1):
        row = {"n": n, "complete": False, "note": ""}
        try:
            res = alpha_search(n, cfg.resolution, sweep)
            alpha = res.alpha_estimate
            row.update(alpha_estimate=alpha, bracket=list(res.bracket),
                       order_n_margin=_num(res.n_certificate.min_eigenvalue))
            g_iv = Interval.half_open(0.0, alpha)
            g = {"order_n": res.n_certificate.kind.value,
                 "loewner_n_plus_1": res.n_plus_1_witness.kind.value,
                 "loewner_n_plus_1_min_eigenvalue": _num(res.n_plus_1_witness.min_eigenvalue),
                 "witness_n_plus_1": _witness_summary(gap_poly(n), n + 1, g_iv, cfg)}
            fn = gap_fn(n, alpha)
            f_iv = Interval.parse("0:inf")
            fo = order_n_certificate(fn, f_iv, n, sweep)
            fo1 = order_n_certificate(fn, f_iv, n + 1, sweep)
            fw = {"fn": fn.spec(), "order_n": fo.kind.value,
                  "order_n_min_eigenvalue": _num(fo.min_eigenvalue),
                  "loewner_n_plus_1": fo1.kind.value,
                  "loewner_n_plus_1_min_eigenvalue": _num(fo1.min_eigenvalue),
                  "witness_n_plus_1": _witness_summary(fn, n + 1, f_iv, cfg)}
            row.update(g=g, f=fw)
            g_ref = res.n_plus_1_witness.refuted or g["witness_n_plus_1"]["found"]
            f_ref = fo1.refuted or fw["witness_n_plus_1"]["found"]
            row["complete"] = bool(res.n_certificate.monotone and fo.monotone and g_ref and f_ref
                                   and res.bracket[1] - res.bracket[0] <= cfg.resolution)
            if not row["complete"]:
                missing = [name for name, ok in (("g order n+1 refutation", g_ref),
                                                 ("f order n+1 refutation", f_ref),
                                                 ("f order n acceptance", fo.monotone)) if not ok]
                if n == 1 and not g_ref:
                    missing = ["g_1 is the identity and f_1 a Moebius map, both operator monotone: "
                               "no threshold below the search ceiling and no order-2 gap"]
                row["note"] = "; ".join(missing)
        except (GapSearchError, DomainError, RuntimeError, ValueError) as exc:
            row["note"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return {"max_n": max_n, "rows": rows, "all_complete": all(r["complete"] for r in rows)}


def _gap_table(cfg):
    return gap_table(cfg.max_n, cfg)


_DISPATCH = {
    "certify": _certify,
    "witness": _witness,
    "alpha": _alpha,
    "mclass": _mclass,
    "algebra": _algebra,
    "verify-fixture": _verify_fixture,
    "gap-table": _gap_table,
}


def run(cfg: RunConfig) -> dict:
    """Dispatch ``cfg`` and wrap the result in a report."""
    t0 = time.perf_counter()
    result = _DISPATCH[cfg.command](cfg)
    report = {"tool": "matmono", "tool_version": __version__, "command": cfg.command,
              "config": cfg.to_json(), "result": result}
    if cfg.timing:
        report["wall_time_s"] = time.perf_counter() - t0
    return report


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------


def dump_json(report) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=False) + "\n"


CSV_COLUMNS = {
    "certify": ["fn", "interval", "order", "verdict", "min_eigenvalue", "threshold", "node_sets", "seed"],
    "witness": ["fn", "interval", "order", "found", "verified", "gap_eigenvalue", "order_min_eigenvalue",
                "tol", "budget", "seed"],
    "alpha": ["n", "alpha_estimate", "bracket_lo", "bracket_hi", "order_n_min_eigenvalue",
              "order_n_plus_1_verdict", "order_n_plus_1_min_eigenvalue", "complete", "probes"],
    "mclass": ["fn", "n", "tested", "premise_hits", "violations", "min_value", "low_power", "seed"],
    "algebra": ["fn", "algebra", "interval", "degree", "verdict", "empirical", "structural", "anomaly",
                "min_eigenvalue", "seed"],
    "verify-fixture": ["fn", "dim", "valid", "order_min_eigenvalue", "gap_eigenvalue", "tol"],
    "gap-table": ["n", "alpha_estimate", "bracket_lo", "bracket_hi", "order_n_margin",
                  "g_loewner_n_plus_1", "g_loewner_n_plus_1_min_eigenvalue", "g_witness_found",
                  "g_witness_gap_eigenvalue", "f_order_n", "f_order_n_min_eigenvalue",
                  "f_loewner_n_plus_1", "f_loewner_n_plus_1_min_eigenvalue", "f_witness_found",
                  "f_witness_gap_eigenvalue", "complete", "note"],
}


def _csv_rows(report):
    cmd = report["command"]
    cfg = report["config"]
    r = report["result"]
    if cmd == "certify":
        return [[r["fn"], r["interval"], v["order"], v["kind"], v["min_eigenvalue"], v["threshold"],
                 v["budget_used"].get("node_sets"), cfg["seed"]] for v in r["verdicts"]]
    if cmd == "witness":
        w = r["witness"]
        return [[r["fn"], r["interval"], r["order"], r["found"], r["verified"],
                 w["certificates"]["gap_eigenvalue"] if w else None,
                 w["certificates"]["order"]["min_eigenvalue"] if w else None,
                 w["certificates"]["tol"] if w else None, r["budget"], cfg["seed"]]]
    if cmd == "alpha":
        return [[r["n"], r["alpha_estimate"], r["bracket"][0], r["bracket"][1],
                 r["n_certificate"]["min_eigenvalue"], r["n_plus_1_witness"]["kind"],
                 r["n_plus_1_witness"]["min_eigenvalue"], r["complete"], r["probes"]]]
    if cmd == "mclass":
        return [[r["fn"], r["n"], r["tested"], r["premise_hits"], len(r["violations"]), r["min_value"],
                 r["low_power"], cfg["seed"]]]
    if cmd == "algebra":
        return [[r["fn"], r["algebra_str"], r["interval"], r["degree"], r["verdict"]["kind"],
                 r["empirical"]["kind"], r["structural"]["kind"], r["anomaly"],
                 r["verdict"]["min_eigenvalue"], cfg["seed"]]]
    if cmd == "verify-fixture":
        return [[r["fn"], r["dim"], r["valid"], r["order_min_eigenvalue"], r["gap_eigenvalue"], r["tol"]]]
    rows = []
    for row in r["rows"]:
        g = row.get("g", {})
        f = row.get("f", {})
        gw = g.get("witness_n_plus_1", {})
        fw = f.get("witness_n_plus_1", {})
        br = row.get("bracket", [None, None])
        rows.append([row["n"], row.get("alpha_estimate"), br[0], br[1], row.get("order_n_margin"),
                     g.get("loewner_n_plus_1"), g.get("loewner_n_plus_1_min_eigenvalue"), gw.get("found"),
                     gw.get("gap_eigenvalue"), f.get("order_n"), f.get("order_n_min_eigenvalue"),
                     f.get("loewner_n_plus_1"), f.get("loewner_n_plus_1_min_eigenvalue"), fw.get("found"),
                     fw.get("gap_eigenvalue"), row["complete"], row["note"]])
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_csv(report) -> str:
    """Fixed columns per command; the first column is the schema tag."""
    cmd = report["command"]
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["schema"] + CSV_COLUMNS[cmd])
    for row in _csv_rows(report):
        wr.writerow([f"{cmd}.v{CSV_VERSION}"] + [_cell(v) for v in row])
    return buf.getvalue()


def render(report, fmt: str = "json") -> str:
    return dump_csv(report) if fmt == "csv" else dump_json(report)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception to its diagnostic exit code."""
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, (GapSearchError,)):
        return EXIT_BUDGET
    if isinstance(exc, EigenConvergenceError):
        return EXIT_NUMERIC
    if isinstance(exc, (OSError, json.JSONDecodeError)):
        return EXIT_IO
    if isinstance(exc, (ParseError, ValueError, KeyError)):
        return EXIT_PARSE
    if isinstance(exc, RuntimeError):  # pair generation ran out of tries
        return EXIT_BUDGET
    return 1
