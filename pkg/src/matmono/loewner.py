"""Loewner matrices and order-n monotonicity sweeps.

A continuously differentiable ``f`` lies in ``P_n(I)`` exactly when every
Loewner matrix ``[f[l_i, l_j]]`` built on ``n`` nodes of ``I`` is positive
semidefinite. ``order_n_certificate`` samples node sets and reports the
worst one; it is a sampled certificate, never a proof of membership.

Also here: bisection for the threshold below which ``gap_poly(n)`` stays
n-monotone, and a sampler for the rational-combination class ``M_n``.
"""
from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .functions import ScalarFunction, gap_poly, node_epsilon
from .hermitian import DomainError, Interval, eigvalsh_batch

__all__ = [
    "SweepConfig",
    "Verdict",
    "MonotonicityVerdict",
    "LoewnerMatrix",
    "GapSearchResult",
    "RationalPremise",
    "MClassReport",
    "divided_difference",
    "loewner_matrix",
    "loewner_batch",
    "min_eigenvalues",
    "node_margins",
    "order_n_certificate",
    "alpha_search",
    "mclass_test",
]

EPS = np.finfo(float).eps


def _default_workers():
    try:
        return max(1, int(os.environ.get("MATMONO_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SweepConfig:
    """Knobs of a node sweep.

    ``tol`` is absolute: a Loewner matrix refutes when its smallest
    eigenvalue is below ``-(tol + noise)``, where ``noise`` is a rounding
    floor of ``8 n eps ||L||_F``.
    """

    node_sets: int = 2000
    mix: tuple = (0.4, 0.3, 0.3)  # uniform, Chebyshev on sub-intervals, clustered pairs
    tol: float = 1e-10
    seed: int = 0
    cluster_gap: float = 1e-3
    window_width: float = 10.0
    chunk: int = 500
    workers: int = field(default_factory=_default_workers)

    def __post_init__(self):
        if self.node_sets < 1:
            raise ValueError("node_sets must be positive")
        if self.tol < 0:
            raise ValueError("tol must be non-negative")
        if len(self.mix) != 3 or min(self.mix) < 0 or sum(self.mix) <= 0:
            raise ValueError("mix needs three non-negative weights")
        object.__setattr__(self, "mix", tuple(float(m) for m in self.mix))

    def replace(self, **kw) -> "SweepConfig":
        d = asdict(self)
        d.update(kw)
        return SweepConfig(**d)

    def to_json(self):
        d = asdict(self)
        d["mix"] = list(self.mix)
        d.pop("workers")  # execution detail, never changes results
        return d

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        d.pop("workers", None)
        if "mix" in d:
            d["mix"] = tuple(d["mix"])
        return cls(**d)


class Verdict(str, enum.Enum):
    MONOTONE = "Monotone"
    NOT_MONOTONE = "NotMonotone"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class MonotonicityVerdict:
    """Outcome of a sampled certification at one order.

    ``Monotone`` means no sampled node set (or pair) refuted; it is evidence,
    not a proof. ``NotMonotone`` carries reproducible evidence: ``nodes``
    for a Loewner refutation or ``witness`` for a matrix pair.
    """

    kind: Verdict
    order: int
    min_eigenvalue: float
    threshold: float = 0.0
    nodes: tuple | None = None
    witness: object = None
    budget_used: dict = field(default_factory=dict)

    @property
    def monotone(self) -> bool:
        return self.kind is Verdict.MONOTONE

    @property
    def refuted(self) -> bool:
        return self.kind is Verdict.NOT_MONOTONE

    def to_json(self):
        d = {
            "kind": self.kind.value,
            "order": self.order,
            "min_eigenvalue": _jnum(self.min_eigenvalue),
            "threshold": self.threshold,
            "nodes": list(self.nodes) if self.nodes is not None else None,
            "budget_used": dict(self.budget_used),
        }
        if self.witness is not None:
            d["witness"] = self.witness.to_json()
        return d


def _jnum(x):
    x = float(x)
    return x if math.isfinite(x) else str(x)


@dataclass(frozen=True)
class LoewnerMatrix:
    nodes: np.ndarray
    entries: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(eigvalsh_batch(self.entries)[0])


# --------------------------------------------------------------------------
# divided differences
# --------------------------------------------------------------------------


def divided_difference(f: ScalarFunction, s, t):
    """``f[s, t]``, falling back to ``f'((s+t)/2)`` at coincident nodes."""
    return f.divided_difference(s, t)


def loewner_batch(f: ScalarFunction, nodes):
    """Loewner matrices for a stack of node vectors ``(..., n)``."""
    x = np.asarray(nodes, dtype=float)
    m = f.divided_difference(x[..., :, None], x[..., None, :], check=False)
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def loewner_matrix(f: ScalarFunction, nodes) -> LoewnerMatrix:
    x = np.asarray(nodes, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValueError("nodes must be a non-empty vector")
    if np.any(np.diff(x) < 0):
        raise ValueError("nodes must be ascending")
    if x.size > 1 and np.any(np.diff(x) <= node_epsilon(x[:-1], x[1:])):
        raise ValueError("nodes collide within the coincidence threshold")
    if not np.all(f.domain.contains(x)):
        raise DomainError(f"nodes leave domain {f.domain} of {f.spec()}")
    m = loewner_batch(f, x)
    m.setflags(write=False)
    x = x.copy()
    x.setflags(write=False)
    return LoewnerMatrix(x, m)


def min_eigenvalues(mats):
    return eigvalsh_batch(mats)[..., 0]


def _margins(mats, tol):
    n = mats.shape[-1]
    lam = min_eigenvalues(mats)
    return lam, tol + 8 * n * EPS * np.linalg.norm(mats, axis=(-2, -1))


def node_margins(f: ScalarFunction, sets, tol: float = SweepConfig.tol):
    """Smallest Loewner eigenvalue and refutation threshold per node set.

    ``sets`` has shape ``(..., n)`` with ascending rows. A set refutes
    order ``n`` exactly when ``lam < -thr``, the rule the sweeps use.
    """
    x = np.asarray(sets, dtype=float)
    return _margins(loewner_batch(f, x), tol)


# --------------------------------------------------------------------------
# node sampling
# --------------------------------------------------------------------------


def _chunk_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def sample_unit_nodes(rng, count: int, n: int, mix, cluster_gap: float):
    """Node sets on ``[0, 1)`` drawn from the uniform / Chebyshev / cluster mix.

    Working on the unit interval keeps the draw scale-free: a sweep over
    ``[lo, hi)`` maps these affinely, so the same seed probes the same
    relative configuration on every interval.
    """
    w = np.asarray(mix, dtype=float)
    w = w / w.sum()
    kind = rng.choice(3, size=count, p=w)
    u = rng.uniform(0.0, 1.0, size=(count, n))
    if n >= 2:
        cheb = kind == 1
        k = int(cheb.sum())
        if k:
            length = rng.uniform(0.01, 1.0, size=k)
            start = rng.uniform(0.0, 1.0, size=k) * (1.0 - length)
            j = np.arange(1, n + 1)
            pts = 0.5 * (1.0 + np.cos((2 * j - 1) * np.pi / (2 * n)))
            u[cheb] = start[:, None] + length[:, None] * pts[None, :]
        clus = kind == 2
        k = int(clus.sum())
        if k:
            gap = cluster_gap * rng.uniform(0.5, 2.0, size=k)
            i = rng.integers(0, n, size=k)
            jj = (i + 1 + rng.integers(0, n - 1, size=k)) % n
            base = u[clus, i]
            base = np.minimum(base, 1.0 - 2.0 * gap)
            rows = np.nonzero(clus)[0]
            u[rows, i] = base
            u[rows, jj] = base + gap
    return np.sort(u, axis=1)


def _valid_sets(x, interval: Interval):
    ok = np.all(interval.contains(x), axis=1)
    if x.shape[1] > 1:
        gaps = np.diff(x, axis=1)
        ok &= np.all(gaps > node_epsilon(x[:, :-1], x[:, 1:]), axis=1)
    return ok


def _sweep_chunk(f, n, lo, width, interval, cfg, index, count):
    rng = _chunk_rng(cfg.seed, index)
    x = lo + width * sample_unit_nodes(rng, count, n, cfg.mix, cfg.cluster_gap)
    valid = _valid_sets(x, interval)
    x = x[valid]
    if x.shape[0] == 0:
        return None
    mats = loewner_batch(f, x)
    finite = np.all(np.isfinite(mats), axis=(1, 2))
    x, mats = x[finite], mats[finite]
    if x.shape[0] == 0:
        return None
    lam, thr = _margins(mats, cfg.tol)
    margin = lam + thr  # negative means refuted
    worst = int(np.argmin(lam))
    bad = np.nonzero(margin < 0)[0]
    first_bad = int(bad[np.argmin(lam[bad])]) if bad.size else None
    return {
        "valid": int(x.shape[0]),
        "worst": (float(lam[worst]), float(thr[worst]), tuple(float(v) for v in x[worst])),
        "refute": None if first_bad is None
        else (float(lam[first_bad]), float(thr[first_bad]), tuple(float(v) for v in x[first_bad])),
        "refuting": int(bad.size),
    }


def _explicit_sets(f, n, interval, cfg, seed_nodes):
    """All n-subsets of user-supplied nodes, evaluated ahead of the random draw."""
    from itertools import combinations

    pts = np.unique(np.asarray(seed_nodes, dtype=float))
    pts = pts[interval.contains(pts)]
    if pts.size < n:
        return None
    x = np.array(list(combinations(pts, n)), dtype=float)
    valid = _valid_sets(x, interval)
    x = x[valid]
    if x.shape[0] == 0:
        return None
    mats = loewner_batch(f, x)
    lam, thr = _margins(mats, cfg.tol)
    worst = int(np.argmin(lam))
    bad = np.nonzero(lam + thr < 0)[0]
    first_bad = int(bad[np.argmin(lam[bad])]) if bad.size else None
    return {
        "valid": int(x.shape[0]),
        "worst": (float(lam[worst]), float(thr[worst]), tuple(float(v) for v in x[worst])),
        "refute": None if first_bad is None
        else (float(lam[first_bad]), float(thr[first_bad]), tuple(float(v) for v in x[first_bad])),
        "refuting": int(bad.size),
    }


def order_n_certificate(f: ScalarFunction, interval: Interval, n: int, cfg: SweepConfig | None = None,
                        seed_nodes=None) -> MonotonicityVerdict:
    """Sampled test of ``f in P_n(interval)`` over Loewner matrices.

    Unbounded intervals are probed on ``interval.window(cfg.window_width)``.
    ``seed_nodes`` (e.g. eigenvalues of a witness pair) are tried first, as
    every n-subset.
    """
    cfg = cfg or SweepConfig()
    if n < 1:
        raise ValueError("order must be >= 1")
    if not f.domain.contains_interval(interval):
        raise DomainError(f"interval {interval} is not inside domain {f.domain} of {f.spec()}")
    win = interval.window(cfg.window_width)
    lo, width = win.lower, win.length
    sizes = [min(cfg.chunk, cfg.node_sets - s) for s in range(0, cfg.node_sets, cfg.chunk)]
    jobs = [(i, c) for i, c in enumerate(sizes)]

    def run(job):
        return _sweep_chunk(f, n, lo, width, interval, cfg, job[0], job[1])

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(cfg.workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    if seed_nodes is not None:
        results.insert(0, _explicit_sets(f, n, interval, cfg, seed_nodes))

    results = [r for r in results if r is not None]
    valid = sum(r["valid"] for r in results)
    budget = {"node_sets": cfg.node_sets + (0 if seed_nodes is None else 1), "valid": valid,
              "refuting": sum(r["refuting"] for r in results)}
    if valid == 0:
        return MonotonicityVerdict(Verdict.INCONCLUSIVE, n, math.nan, cfg.tol, None, None, budget)
    refutes = [r["refute"] for r in results if r["refute"] is not None]
    if refutes:
        # most negative refutation; ties resolved by chunk order
        lam, thr, nodes = min(refutes, key=lambda e: e[0])
        return MonotonicityVerdict(Verdict.NOT_MONOTONE, n, lam, thr, nodes, None, budget)
    lam, thr, nodes = min((r["worst"] for r in results), key=lambda e: e[0])
    return MonotonicityVerdict(Verdict.MONOTONE, n, lam, thr, nodes, None, budget)


# --------------------------------------------------------------------------
# threshold search for the gap polynomials
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GapSearchResult:
    n: int
    alpha_estimate: float
    bracket: tuple
    n_certificate: MonotonicityVerdict
    n_plus_1_witness: MonotonicityVerdict
    complete: bool
    probes: int

    def to_json(self):
        return {
            "n": self.n,
            "alpha_estimate": self.alpha_estimate,
            "bracket": list(self.bracket),
            "n_certificate": self.n_certificate.to_json(),
            "n_plus_1_witness": self.n_plus_1_witness.to_json(),
            "complete": self.complete,
            "probes": self.probes,
        }


class GapSearchError(RuntimeError):
    pass


def alpha_search(n: int, resolution: float = 1e-3, cfg: SweepConfig | None = None,
                 ceiling: float = 64.0) -> GapSearchResult:
    """Bisect for the largest ``beta`` with ``gap_poly(n)`` n-monotone on ``[0, beta)``.

    The lower end of the final bracket passed the sweep and the upper end
    failed it. The result additionally records whether order ``n + 1``
    is refuted on ``[0, alpha_estimate)``; when it is not (``n = 1``, or
    too weak a sweep) ``complete`` is False.
    """
    cfg = cfg or SweepConfig()
    if n < 1:
        raise ValueError("n must be >= 1")
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    g = gap_poly(n)
    probes = 0

    def probe(beta):
        nonlocal probes
        probes += 1
        return order_n_certificate(g, Interval.half_open(0.0, beta), n, cfg)

    top = probe(ceiling)
    if top.monotone:
        lo = hi = ceiling
        cert = top
    else:
        lo, hi = resolution, ceiling
        cert = probe(lo)
        if not cert.monotone:
            raise GapSearchError(
                f"gap_poly({n}) already fails at the smallest probe {lo:g}; sweep misconfigured?")
        while hi - lo > resolution:
            mid = 0.5 * (lo + hi)
            v = probe(mid)
            if v.monotone:
                lo, cert = mid, v
            else:
                hi = mid
    nxt = order_n_certificate(g, Interval.half_open(0.0, lo), n + 1, cfg)
    return GapSearchResult(n, lo, (lo, hi), cert, nxt, nxt.refuted, probes + 1)


# --------------------------------------------------------------------------
# M_n sampling
# --------------------------------------------------------------------------

PREMISE_GRID = np.logspace(-4, 4, 2000)
PREMISE_ACCEPT = 1e-6
PREMISE_FLOOR = -1e-10
VIOLATION_TOL = 1e-8


@dataclass(frozen=True)
class RationalPremise:
    n: int
    a: tuple
    lam: tuple
    premise_min: float
    premise_checked: bool
    value: float = math.nan  # sum a_j h(lam_j)

    def to_json(self):
        return {"n": self.n, "a": list(self.a), "lambda": list(self.lam),
                "premise_min": self.premise_min, "premise_checked": self.premise_checked,
                "value": _jnum(self.value)}


@dataclass(frozen=True)
class MClassReport:
    n: int
    tested: int
    premise_hits: int
    violations: tuple
    min_value: float
    low_power: bool

    def to_json(self):
        return {"n": self.n, "tested": self.tested, "premise_hits": self.premise_hits,
                "violations": [v.to_json() for v in self.violations],
                "min_value": _jnum(self.min_value), "low_power": self.low_power}


def premise_minimum(a, lam, grid=PREMISE_GRID):
    """Minimum of ``sum_j a_j (t lam_j - 1)/(t + lam_j)`` over the grid and both limits.

    Vectorized over leading axes of ``a`` and ``lam`` (shape ``(..., 2n)``).
    """
    a = np.asarray(a, dtype=float)
    lam = np.asarray(lam, dtype=float)
    t = grid[:, None]
    vals = np.einsum("...gj,...j->...g", (t * lam[..., None, :] - 1.0) / (t + lam[..., None, :]), a)
    at0 = -np.sum(a / lam, axis=-1)
    atinf = np.sum(a * lam, axis=-1)
    return np.minimum(np.min(vals, axis=-1), np.minimum(at0, atinf))


def mclass_test(h: ScalarFunction, n: int, samples: int, seed: int,
                lam_range=(1e-2, 1e2), chunk: int = 1000) -> MClassReport:
    """Sample the ``M_n`` implication for ``h``.

    ``a`` is Gaussian projected to zero sum and normalized; ``lam`` is
    log-uniform on ``lam_range``. Premises whose grid minimum sits in
    ``[-1e-10, 1e-6]`` are treated as undecided and discarded.
    """
    if n < 1 or samples < 1:
        raise ValueError("need n >= 1 and samples >= 1")
    if not h.domain.contains_interval(Interval(0.0, math.inf, False, False)):
        raise DomainError(f"{h.spec()} must be defined on (0, inf)")
    m = 2 * n
    hits = 0
    violations = []
    min_value = math.inf
    done = 0
    idx = 0
    while done < samples:
        k = min(chunk, samples - done)
        rng = _chunk_rng(seed, idx)
        a = rng.standard_normal((k, m))
        a -= a.mean(axis=1, keepdims=True)
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        lam = np.exp(rng.uniform(math.log(lam_range[0]), math.log(lam_range[1]), size=(k, m)))
        pm = premise_minimum(a, lam)
        accept = pm > PREMISE_ACCEPT
        if accept.any():
            vals = np.sum(a[accept] * h(lam[accept]), axis=1)
            hits += int(accept.sum())
            min_value = min(min_value, float(vals.min()))
            for ai, li, pi, vi in zip(a[accept], lam[accept], pm[accept], vals):
                if vi < -VIOLATION_TOL:
                    violations.append(RationalPremise(n, tuple(map(float, ai)), tuple(map(float, li)),
                                                      float(pi), True, float(vi)))
        done += k
        idx += 1
    return MClassReport(n, samples, hits, tuple(violations), min_value, hits < 10)
