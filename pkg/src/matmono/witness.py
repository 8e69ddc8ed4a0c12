"""Constructive refutation of order-n monotonicity.

``find_violation`` looks for ``A <= B`` with spectra in an interval such
that ``f(B) - f(A)`` has a clearly negative eigenvalue. Proposals come in
seeded batches of two kinds:

* full-rank pairs from :func:`matmono.hermitian.ordered_pairs_batch`;
* rank-one increments ``B = A + eps v v^*`` at small ``eps``. To first
  order ``f(B) - f(A)`` is then congruent to the Loewner matrix of ``f`` at
  the spectrum of ``A``, so these catch violations that are invisible to
  generic large steps.

If no batch succeeds the most promising proposal is refined by a short
coordinate descent. Every returned pair is re-verified from scratch.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import __version__
from .functions import ScalarFunction, from_json as function_from_json, parse_function
from .hermitian import (
    DomainError,
    HermitianMatrix,
    Interval,
    PsdCertificate,
    apply_fn_batch,
    eigh_batch,
    eigvalsh_batch,
    ordered_pairs_batch,
)

__all__ = [
    "WitnessPair",
    "witness_tol",
    "pair_margins",
    "propose_pairs",
    "find_violation",
    "search",
    "verify_witness",
    "save_fixture",
    "load_fixture",
]

WITNESS_RTOL = 1e-13
MARGIN = 10.0
BATCH = 256
DESCENT_STEPS = 200
FLOOR = 16.0
EPS = float(np.finfo(float).eps)


def witness_tol(a, b, fa, fb, rtol=WITNESS_RTOL, lip=None):
    """Tolerance ``rtol * (1 + max ||.||_F)`` over the four matrices.

    With ``lip`` (largest ``|f'|`` on the spectra) a rounding floor
    ``FLOOR * n * eps * (1 + ||A||_F + ||B||_F) * lip`` is added: eigenvector
    errors of size ``eps ||A||`` move ``f(A)`` by about that much, which
    matters for steep functions such as ``sqrt`` near 0.
    """
    a = np.asarray(a)
    norms = [np.linalg.norm(np.asarray(m), axis=(-2, -1)) for m in (a, b, fa, fb)]
    tol = rtol * (1.0 + np.maximum.reduce(norms))
    if lip is not None:
        n = a.shape[-1]
        tol = tol + FLOOR * n * EPS * (1.0 + norms[0] + norms[1]) * lip
    return tol


@dataclass(frozen=True)
class WitnessPair:
    """``A <= B`` with ``f(B) - f(A)`` not PSD.

    ``tol`` is the tolerance both certificates were checked at: the order
    certificate passes at ``tol`` and the gap eigenvalue is at most
    ``-10 tol``.
    """

    a: HermitianMatrix
    b: HermitianMatrix
    order_gap_eigenvalue: float
    order_certificate: PsdCertificate
    f: ScalarFunction
    tol: float
    seed: int | None = None
    interval: Interval | None = None

    @property
    def dim(self):
        return self.a.dim

    def to_json(self):
        return {
            "f": self.f.spec(),
            "f_json": self.f.to_json(),
            "a": self.a.to_json(),
            "b": self.b.to_json(),
            "certificates": {
                "order": self.order_certificate.to_json(),
                "gap_eigenvalue": self.order_gap_eigenvalue,
                "tol": self.tol,
            },
            "seed": self.seed,
            "interval": self.interval.to_json() if self.interval is not None else None,
            "tool_version": __version__,
        }

    @classmethod
    def from_json(cls, d):
        f = function_from_json(d["f_json"]) if "f_json" in d else parse_function(d["f"])
        c = d["certificates"]
        return cls(HermitianMatrix.from_json(d["a"]), HermitianMatrix.from_json(d["b"]),
                   float(c["gap_eigenvalue"]), PsdCertificate.from_json(c["order"]), f,
                   float(c["tol"]), d.get("seed"),
                   Interval.from_json(d["interval"]) if d.get("interval") else None)


def save_fixture(w: WitnessPair, path):
    with open(path, "w") as fh:
        json.dump(w.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_fixture(path) -> WitnessPair:
    with open(path) as fh:
        return WitnessPair.from_json(json.load(fh))


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------


def pair_margins(f: ScalarFunction, a, b, interval: Interval, rtol=WITNESS_RTOL, tol=None):
    """Evaluate stacks of candidate pairs.

    Returns ``(order_min, gap_min, tol, inside)``: smallest eigenvalue of
    ``B - A``, smallest eigenvalue of ``f(B) - f(A)``, the tolerance used,
    and whether both spectra lie in ``interval``.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    wa, ua = eigh_batch(a)
    wb, ub = eigh_batch(b)
    inside = np.all(interval.contains(wa), axis=-1) & np.all(interval.contains(wb), axis=-1)
    safe = np.where(inside[..., None], wa, _clip(wa, interval))
    fa = apply_fn_batch(f, a, (safe, ua))
    safe = np.where(inside[..., None], wb, _clip(wb, interval))
    fb = apply_fn_batch(f, b, (safe, ub))
    order_min = eigvalsh_batch(b - a)[..., 0]
    gap_min = eigvalsh_batch(fb - fa)[..., 0]
    if tol is None:
        lip = np.maximum(np.abs(f.deriv(_clip(wa, interval))).max(axis=-1),
                         np.abs(f.deriv(_clip(wb, interval))).max(axis=-1))
        tol = witness_tol(a, b, fa, fb, rtol, lip)
    else:
        tol = np.broadcast_to(np.asarray(tol, dtype=float), order_min.shape)
    return order_min, gap_min, tol, inside


def _clip(w, interval):
    lo, hi = interval.lower, interval.upper
    span = hi - lo if math.isfinite(hi - lo) else 1.0
    return np.clip(w, lo + 1e-12 * span, hi - 1e-12 * span)


def _violating(order_min, gap_min, tol, inside):
    return inside & (order_min >= -tol) & (gap_min <= -MARGIN * tol)


# --------------------------------------------------------------------------
# proposals
# --------------------------------------------------------------------------


def _haar_unitary(rng, count, n):
    z = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def _rank_one_pairs(rng, count, n, window: Interval):
    from .loewner import sample_unit_nodes

    lo, width = window.lower, window.length
    edge = 1e-6
    u = sample_unit_nodes(rng, count, n, (0.4, 0.3, 0.3), 1e-3)
    lam = lo + width * (edge + (1 - 2 * edge) * u)
    q = _haar_unitary(rng, count, n)
    v = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    room = (lo + width * (1 - edge)) - lam[:, -1]
    eps = width * np.exp(rng.uniform(math.log(1e-5), math.log(1e-1), size=count))
    eps = np.minimum(eps, 0.999 * np.maximum(room, 0.0))
    a = (q * lam[:, None, :]) @ np.swapaxes(q.conj(), -1, -2)
    qv = np.einsum("kij,kj->ki", q, v)
    b = a + eps[:, None, None] * qv[:, :, None] * qv[:, None, :].conj()
    herm = lambda m: 0.5 * (m + np.swapaxes(m.conj(), -1, -2))
    return herm(a), herm(b)


def propose_pairs(rng, count: int, n: int, window: Interval, interval: Interval | None = None):
    """Half full-rank ordered pairs, half small rank-one increments."""
    k1 = count // 2
    a1, b1 = ordered_pairs_batch(rng, k1, n, window, interval)
    a2, b2 = _rank_one_pairs(rng, count - k1, n, window)
    return np.concatenate([a1, a2]), np.concatenate([b1, b2])


def _batch_rng(seed, index, stream=()):
    key = (1, *stream, index)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


# --------------------------------------------------------------------------
# search
# --------------------------------------------------------------------------


def _make_witness(f, a, b, interval, rtol, tol, seed):
    om, gm, t, inside = pair_margins(f, a, b, interval, rtol, tol)
    t = float(t)
    return WitnessPair(HermitianMatrix(a), HermitianMatrix(b), float(gm),
                       PsdCertificate(float(om), bool(om >= -t), t), f, t, seed, interval)


def _shrink(f, a, b, interval, rtol, tol):
    """Smallest ``s`` in (0, 1] with ``A + s (B - A)`` still violating."""
    d = b - a
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        bm = a + mid * d
        om, gm, t, inside = pair_margins(f, a, bm, interval, rtol, tol)
        if bool(_violating(om, gm, t, inside)):
            hi = mid
        else:
            lo = mid
    return a + hi * d


def _project(a, p, window: Interval):
    """Clip the spectrum of ``A`` into the window and the increment to PSD."""
    herm = lambda m: 0.5 * (m + m.conj().T)
    wa, ua = eigh_batch(herm(a))
    span = window.length
    wa = np.clip(wa, window.lower + 1e-9 * span, window.upper - 1e-9 * span)
    a = herm((ua * wa) @ ua.conj().T)
    wp, up = eigh_batch(herm(p))
    p = herm((up * np.maximum(wp, 0.0)) @ up.conj().T)
    return a, p


def _descent(f, a, b, interval, window, rtol, tol, rng, steps=DESCENT_STEPS):
    def score(a_, b_):
        om, gm, t, inside = pair_margins(f, a_, b_, interval, rtol, tol)
        if not (bool(inside) and om >= -t):
            return math.inf, False
        return float(gm / (MARGIN * t)), bool(gm <= -MARGIN * t)

    n = a.shape[0]
    p = b - a
    best, ok = score(a, b)
    if ok:
        return a, b
    step = 0.1 * window.length
    for _ in range(steps):
        i, j = rng.integers(0, n, size=2)
        e = np.zeros((n, n), dtype=complex)
        z = 1.0 if (i == j or rng.random() < 0.5) else 1j
        e[i, j] += z
        e[j, i] += np.conj(z)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        if rng.random() < 0.5:
            ca, cp = _project(a + sign * step * e, p, window)
        else:
            ca, cp = _project(a, p + sign * step * e, window)
        cb = ca + cp
        s, ok = score(ca, cb)
        if s < best:
            a, p, best = ca, cp, s
            if ok:
                return a, a + p
        else:
            step *= 0.5
            if step < 1e-14 * window.length:
                step = 0.1 * window.length
    return None


def find_violation(f: ScalarFunction, n: int, interval: Interval, budget: int = 100_000, seed: int = 0,
                   window: Interval | None = None, rtol: float = WITNESS_RTOL, tol: float | None = None,
                   normalize: bool = True) -> WitnessPair | None:
    """Search for ``A <= B`` (n x n) refuting ``f in P_n(interval)``.

    ``budget`` caps the number of random proposals; a failed random phase
    is followed by at most 200 descent steps. ``tol`` fixes an absolute
    tolerance, otherwise it is ``rtol * (1 + max norm)`` plus a rounding
    floor, per pair. Returns ``None`` when nothing verifiable is found.
    """
    return search(f, n, interval, budget, seed, window, rtol, tol, normalize)[0]


def search(f: ScalarFunction, n: int, interval: Interval, budget: int = 100_000, seed=0,
           window: Interval | None = None, rtol: float = WITNESS_RTOL, tol: float | None = None,
           normalize: bool = True, stream: tuple = ()):
    """:func:`find_violation` plus the best scaled score seen.

    The score of a pair is ``gap_min / (10 tol)``; a pair is a witness at
    score ``<= -1``. ``stream`` selects an independent random stream for
    the same ``seed``. Returns ``(witness or None, best_score)``.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not f.domain.contains_interval(interval):
        raise DomainError(f"interval {interval} is not inside domain {f.domain} of {f.spec()}")
    if window is None:
        window = interval.window()
    if not interval.contains_interval(window) or not window.bounded:
        raise ValueError(f"sampling window {window} must be bounded and inside {interval}")

    best = None  # (score, a, b)
    used = 0
    index = 0
    found = None
    while used < budget:
        k = min(BATCH, budget - used)
        rng = _batch_rng(seed, index, stream)
        a, b = propose_pairs(rng, k, n, window, interval)
        om, gm, t, inside = pair_margins(f, a, b, interval, rtol, tol)
        hit = _violating(om, gm, t, inside)
        if hit.any():
            i = int(np.argmax(hit))  # lowest index in the batch
            found = (a[i], b[i])
            break
        usable = inside & (om >= -t)
        if usable.any():
            score = np.where(usable, gm / (MARGIN * t), np.inf)
            i = int(np.argmin(score))
            if best is None or score[i] < best[0]:
                best = (float(score[i]), a[i], b[i])
        used += k
        index += 1
    best_score = best[0] if best is not None else math.inf

    if found is None and best is not None and best[0] < 0:
        rng = _batch_rng(seed, -1 % (2**32), stream)
        found = _descent(f, best[1], best[2], interval, window, rtol, tol, rng)
    if found is None:
        return None, best_score
    a, b = found
    if normalize:
        b = _shrink(f, a, b, interval, rtol, tol)
    w = _make_witness(f, a, b, interval, rtol, tol, seed)
    if not verify_witness(w, interval=interval):
        w = _make_witness(f, found[0], found[1], interval, rtol, tol, seed)
        if not verify_witness(w, interval=interval):
            return None, best_score
    return w, min(best_score, w.order_gap_eigenvalue / (MARGIN * w.tol))


def verify_witness(w: WitnessPair, tol: float | None = None, interval: Interval | None = None) -> bool:
    """Recompute both certificates with fresh eigendecompositions.

    The interval defaults to the one recorded in the witness, then to the
    domain of ``f``.
    """
    tol = w.tol if tol is None else tol
    interval = interval or w.interval or w.f.domain
    try:
        om, gm, _, inside = pair_margins(w.f, w.a.data, w.b.data, interval, tol=tol)
    except DomainError:
        return False
    return bool(inside and om >= -tol and gm <= -MARGIN * tol)
