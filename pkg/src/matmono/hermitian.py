"""Dense Hermitian linear algebra.

Everything that touches the Loewner order goes through this module: the
cyclic Jacobi eigensolver, PSD certificates, the order predicate, spectral
functional calculus and the seeded generator of ordered pairs.

Most routines accept either a :class:`HermitianMatrix` or a raw array; the
batched helpers (``eigh_batch`` and friends) operate on stacks of shape
``(..., n, n)`` and are what the sweep code uses internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .functions import ScalarFunction

__all__ = [
    "EigenConvergenceError",
    "DomainError",
    "Interval",
    "HermitianMatrix",
    "SpectralDecomposition",
    "PsdCertificate",
    "eigh",
    "eigh_batch",
    "eigvalsh_batch",
    "psd_check",
    "loewner_leq",
    "apply_fn",
    "apply_fn_batch",
    "random_ordered_pair",
    "default_tol",
]

OFFDIAG_RTOL = 1e-13
MAX_SWEEPS = 50
PSD_RTOL = 1e-9


class EigenConvergenceError(RuntimeError):
    """Jacobi iteration hit the sweep cap before the off-diagonal mass vanished."""

    def __init__(self, residual, sweeps):
        self.residual = float(residual)
        self.sweeps = sweeps
        super().__init__(
            f"Jacobi did not converge after {sweeps} sweeps "
            f"(relative off-diagonal norm {self.residual:.3e})"
        )


class DomainError(ValueError):
    """A value (scalar or eigenvalue) fell outside a function's interval."""


# --------------------------------------------------------------------------
# Intervals
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    lower: float = 0.0
    upper: float = math.inf
    closed_lower: bool = True
    closed_upper: bool = False

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if math.isnan(lo) or math.isnan(hi) or not lo < hi:
            raise ValueError(f"invalid interval: need lower < upper, got {lo}, {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        # infinite endpoints are never attained
        if math.isinf(lo):
            object.__setattr__(self, "closed_lower", False)
        if math.isinf(hi):
            object.__setattr__(self, "closed_upper", False)

    @classmethod
    def closed(cls, lower, upper):
        return cls(lower, upper, True, True)

    @classmethod
    def half_open(cls, lower, upper):
        """``[lower, upper)``"""
        return cls(lower, upper, True, False)

    @classmethod
    def parse(cls, text: str) -> "Interval":
        """Parse ``"lo:hi"``; finite endpoints are closed, ``inf`` ones open."""
        try:
            lo_s, hi_s = text.split(":")
            lo, hi = float(lo_s), float(hi_s)
        except ValueError as exc:
            raise ValueError(f"cannot parse interval {text!r}; expected LO:HI") from exc
        return cls(lo, hi, not math.isinf(lo), not math.isinf(hi))

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    @property
    def length(self) -> float:
        return self.upper - self.lower

    def contains(self, t, slack: float = 0.0):
        t = np.asarray(t, dtype=float)
        lo_ok = t >= self.lower - slack if self.closed_lower else t > self.lower - slack
        hi_ok = t <= self.upper + slack if self.closed_upper else t < self.upper + slack
        return lo_ok & hi_ok

    def contains_interval(self, other: "Interval") -> bool:
        if other.lower < self.lower or other.upper > self.upper:
            return False
        if other.lower == self.lower and other.closed_lower and not self.closed_lower:
            return False
        if other.upper == self.upper and other.closed_upper and not self.closed_upper:
            return False
        return True

    def window(self, width: float = 10.0) -> "Interval":
        """Bounded sampling window inside the interval.

        Bounded intervals are returned unchanged. A half-line gets a window of
        ``width`` starting at its finite end; the whole line is centred at 0.
        """
        if self.bounded:
            return self
        lo, hi = self.lower, self.upper
        if math.isfinite(lo):
            return Interval(lo, lo + width, self.closed_lower, True)
        if math.isfinite(hi):
            return Interval(hi - width, hi, True, self.closed_upper)
        return Interval(-width / 2, width / 2, True, True)

    def to_json(self):
        return {
            "lower": _jfloat(self.lower),
            "upper": _jfloat(self.upper),
            "closed_lower": self.closed_lower,
            "closed_upper": self.closed_upper,
        }

    @classmethod
    def from_json(cls, d):
        return cls(float(d["lower"]), float(d["upper"]), bool(d["closed_lower"]), bool(d["closed_upper"]))

    def __str__(self):
        lb = "[" if self.closed_lower else "("
        rb = "]" if self.closed_upper else ")"
        return f"{lb}{self.lower:g}, {self.upper:g}{rb}"


def _jfloat(x):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


# --------------------------------------------------------------------------
# Matrix types
# --------------------------------------------------------------------------


class HermitianMatrix:
    """Immutable dense complex Hermitian matrix.

    The constructor stores ``(M + M^*)/2`` so the entries are exactly
    conjugate-symmetric regardless of round-off in the input.
    """

    __slots__ = ("_data",)

    def __init__(self, entries):
        m = np.array(entries, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValueError(f"expected a non-empty square matrix, got shape {m.shape}")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self._data = m

    @property
    def data(self) -> np.ndarray:
        return self._data

    @property
    def dim(self) -> int:
        return self._data.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self._data if dtype is None else self._data.astype(dtype)

    def __add__(self, other):
        return HermitianMatrix(self._data + _as_array(other))

    def __sub__(self, other):
        return HermitianMatrix(self._data - _as_array(other))

    def __neg__(self):
        return HermitianMatrix(-self._data)

    def __mul__(self, c):
        return HermitianMatrix(self._data * float(c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, HermitianMatrix):
            return NotImplemented
        return np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash(self._data.tobytes())

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"

    def norm(self) -> float:
        return float(np.linalg.norm(self._data))

    def conjugate_by(self, v) -> "HermitianMatrix":
        v = np.asarray(v)
        return HermitianMatrix(v @ self._data @ v.conj().T)

    def to_json(self):
        return {
            "dim": self.dim,
            "re": self._data.real.tolist(),
            "im": self._data.imag.tolist(),
        }

    @classmethod
    def from_json(cls, d):
        re = np.asarray(d["re"], dtype=float)
        im = np.asarray(d["im"], dtype=float)
        m = cls(re + 1j * im)
        if m.dim != int(d["dim"]):
            raise ValueError("dim field does not match entries")
        return m

    @classmethod
    def diag(cls, values):
        return cls(np.diag(np.asarray(values, dtype=float)))


def _as_array(a) -> np.ndarray:
    if isinstance(a, HermitianMatrix):
        return a.data
    return np.asarray(a)


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.vectors
        return (u * self.eigenvalues) @ u.conj().T


@dataclass(frozen=True)
class PsdCertificate:
    min_eigenvalue: float
    verdict: bool
    tolerance: float
    location: object = None  # which block failed, for fibered checks

    def to_json(self):
        d = {
            "min_eigenvalue": float(self.min_eigenvalue),
            "verdict": bool(self.verdict),
            "tolerance": float(self.tolerance),
        }
        if self.location is not None:
            d["location"] = list(self.location)
        return d

    @classmethod
    def from_json(cls, d):
        loc = d.get("location")
        return cls(float(d["min_eigenvalue"]), bool(d["verdict"]), float(d["tolerance"]),
                   tuple(loc) if loc is not None else None)


# --------------------------------------------------------------------------
# Cyclic Jacobi
# --------------------------------------------------------------------------


def _offdiag_norm(a):
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[..., mask]) ** 2, axis=-1))


def eigh_batch(mats, rtol=OFFDIAG_RTOL, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi on a stack of Hermitian matrices.

    ``mats`` has shape ``(..., n, n)``; real input stays real. Each ``(p, q)``
    rotation is applied to every matrix of the batch at once. Returns
    ascending eigenvalues ``(..., n)`` and unitary eigenvector columns.
    """
    a = np.array(mats, copy=True)
    if not np.iscomplexobj(a):
        a = a.astype(float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n))
    a = 0.5 * (a + np.swapaxes(a.conj(), -1, -2))
    nb = a.shape[0]
    v = np.broadcast_to(np.eye(n, dtype=a.dtype), (nb, n, n)).copy()
    real = not np.iscomplexobj(a)

    scale = np.linalg.norm(a, axis=(-2, -1))
    thresh = rtol * scale
    off = _offdiag_norm(a)
    active = off > thresh
    sweeps = 0
    while n > 1 and active.any():
        if sweeps >= max_sweeps:
            worst = np.max(np.where(scale > 0, off / np.where(scale > 0, scale, 1), 0))
            raise EigenConvergenceError(worst, sweeps)
        idx = np.nonzero(active)[0]
        sub = a[idx]
        negligible = (1e-20 * scale[idx])
        subv = v[idx]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = sub[:, p, q]
                r = np.abs(apq)
                nz = r > negligible
                if not nz.any():
                    continue
                safe_r = np.where(nz, r, 1.0)
                if real:
                    ph = np.where(apq < 0, -1.0, 1.0)
                else:
                    ph = np.where(nz, apq / safe_r, 1.0)
                app = sub[:, p, p].real
                aqq = sub[:, q, q].real
                tau = (aqq - app) / (2.0 * safe_r)
                sgn = np.where(tau >= 0, 1.0, -1.0)
                t = sgn / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
                t = np.where(nz, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                cph = ph.conj() if not real else ph
                # columns: A <- A G with G = D R, D = diag(.., conj(ph) at q, ..)
                cp = sub[:, :, p].copy()
                cq = sub[:, :, q]
                sub[:, :, p] = c[:, None] * cp - (s * cph)[:, None] * cq
                sub[:, :, q] = s[:, None] * cp + (c * cph)[:, None] * cq
                rp = sub[:, p, :].copy()
                rq = sub[:, q, :]
                sub[:, p, :] = c[:, None] * rp - (s * ph)[:, None] * rq
                sub[:, q, :] = s[:, None] * rp + (c * ph)[:, None] * rq
                sub[:, p, q] = 0.0
                sub[:, q, p] = 0.0
                sub[:, p, p] = sub[:, p, p].real
                sub[:, q, q] = sub[:, q, q].real
                vp = subv[:, :, p].copy()
                vq = subv[:, :, q]
                subv[:, :, p] = c[:, None] * vp - (s * cph)[:, None] * vq
                subv[:, :, q] = s[:, None] * vp + (c * cph)[:, None] * vq
        a[idx] = sub
        v[idx] = subv
        off = _offdiag_norm(a)
        active = off > thresh
        sweeps += 1

    w = np.diagonal(a, axis1=-2, axis2=-1).real.copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)
    return w.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))


def eigvalsh_batch(mats, **kw):
    return eigh_batch(mats, **kw)[0]


def eigh(a) -> SpectralDecomposition:
    """Spectral decomposition of a single Hermitian matrix (ascending)."""
    arr = _as_array(a)
    w, v = eigh_batch(arr)
    if not np.iscomplexobj(v):
        v = v.astype(complex)
    w.setflags(write=False)
    v.setflags(write=False)
    return SpectralDecomposition(w, v)


# --------------------------------------------------------------------------
# Order
# --------------------------------------------------------------------------


def default_tol(a) -> float:
    """Scale-aware PSD tolerance ``1e-9 * (1 + ||A||_F)``."""
    return PSD_RTOL * (1.0 + float(np.linalg.norm(_as_array(a))))


def psd_check(a, tol: float | None = None) -> PsdCertificate:
    arr = _as_array(a)
    if tol is None:
        tol = default_tol(arr)
    if tol < 0:
        raise ValueError("tol must be non-negative")
    lam = float(eigvalsh_batch(arr)[0])
    return PsdCertificate(lam, lam >= -tol, float(tol))


def loewner_leq(a, b, tol: float | None = None) -> PsdCertificate:
    """Certificate for ``A <= B``, i.e. ``B - A`` positive semidefinite."""
    a_, b_ = _as_array(a), _as_array(b)
    if a_.shape != b_.shape:
        raise ValueError(f"dimension mismatch: {a_.shape} vs {b_.shape}")
    return psd_check(HermitianMatrix(b_ - a_), tol)


# --------------------------------------------------------------------------
# Functional calculus
# --------------------------------------------------------------------------


def _spectral_slack(w):
    # eigenvalues of a matrix whose spectrum sits on a closed endpoint can land
    # a few ulps outside; they are snapped back onto the endpoint
    n = w.shape[-1]
    return 64 * n * np.finfo(float).eps * (1.0 + np.max(np.abs(w), axis=-1, keepdims=True))


def _check_spectrum(f, w, where=None):
    dom = f.domain
    slack = _spectral_slack(w)
    ok = dom.contains(w, slack)
    if not np.all(ok):
        bad = w[~ok]
        worst = bad[np.argmax(np.abs(bad))]
        loc = f" at {where}" if where is not None else ""
        raise DomainError(f"eigenvalue {worst:.17g}{loc} outside domain {dom} of {f.tag}")
    w = np.where(w < dom.lower, dom.lower, w)
    w = np.where(w > dom.upper, dom.upper, w)
    if not dom.closed_lower:
        w = np.where(w <= dom.lower, np.nextafter(dom.lower, np.inf), w)
    if not dom.closed_upper:
        w = np.where(w >= dom.upper, np.nextafter(dom.upper, -np.inf), w)
    return w


def apply_fn_batch(f: "ScalarFunction", mats, spectral=None):
    """``f`` applied to each matrix of a stack via ``U diag(f(w)) U^*``."""
    w, u = spectral if spectral is not None else eigh_batch(mats)
    w = _check_spectrum(f, w)
    fw = f(w)
    out = (u * fw[..., None, :]) @ np.swapaxes(u.conj(), -1, -2)
    return 0.5 * (out + np.swapaxes(out.conj(), -1, -2))


def apply_fn(f: "ScalarFunction", a) -> HermitianMatrix:
    arr = _as_array(a)
    if arr.ndim != 2:
        raise ValueError("apply_fn expects a single matrix")
    return HermitianMatrix(apply_fn_batch(f, arr))


# --------------------------------------------------------------------------
# Random ordered pairs
# --------------------------------------------------------------------------

_EDGE = 1e-6


def _gue(rng, count, n):
    g = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
    return 0.5 * (g + np.swapaxes(g.conj(), -1, -2))


def ordered_pairs_batch(rng, count: int, dim: int, window: Interval, interval: Interval | None = None,
                        max_tries: int = 20):
    """Draw ``count`` pairs ``A <= B`` with spectra inside ``window``.

    ``A`` is an affine image of a GUE draw whose spectrum is mapped onto a
    random sub-segment of the window; ``B = A + s G G^*`` with ``G`` a square
    Gaussian matrix and ``s`` chosen from Weyl's bound so the top of the
    spectrum of ``B`` stays inside. Pairs whose recomputed spectra or order
    certificate fail at tolerance 0 are redrawn.
    """
    if not window.bounded:
        raise ValueError("ordered pairs need a bounded sampling window")
    interval = interval or window
    lo, hi = window.lower, window.upper
    width = hi - lo
    out_a = np.empty((count, dim, dim), dtype=complex)
    out_b = np.empty((count, dim, dim), dtype=complex)
    todo = np.arange(count)
    for _ in range(max_tries):
        k = todo.size
        if k == 0:
            break
        ends = np.sort(rng.uniform(_EDGE, 1 - _EDGE, size=(k, 2)), axis=1)
        a_lo = lo + width * ends[:, 0]
        a_hi = lo + width * ends[:, 1]
        if dim == 1:
            a = a_lo.reshape(k, 1, 1).astype(complex)
            top = a_lo
        else:
            h = _gue(rng, k, dim)
            wh = eigvalsh_batch(h)
            spread = wh[:, -1] - wh[:, 0]
            spread = np.where(spread > 0, spread, 1.0)
            scale = (a_hi - a_lo) / spread
            a = scale[:, None, None] * (h - wh[:, 0, None, None] * np.eye(dim)) + a_lo[:, None, None] * np.eye(dim)
            top = a_hi
        g = rng.standard_normal((k, dim, dim)) + 1j * rng.standard_normal((k, dim, dim))
        p = g @ np.swapaxes(g.conj(), -1, -2)
        p = 0.5 * (p + np.swapaxes(p.conj(), -1, -2))
        pmax = eigvalsh_batch(p)[:, -1]
        room = (hi - _EDGE * width) - top
        s = rng.uniform(0.0, 1.0, size=k) * np.maximum(room, 0.0) / pmax
        b = a + s[:, None, None] * p
        b = 0.5 * (b + np.swapaxes(b.conj(), -1, -2))
        wa = eigvalsh_batch(a)
        wb = eigvalsh_batch(b)
        wd = eigvalsh_batch(b - a)
        ok = (
            np.all(interval.contains(wa), axis=1)
            & np.all(interval.contains(wb), axis=1)
            & np.all(window.contains(wa), axis=1)
            & np.all(window.contains(wb), axis=1)
            & (wd[:, 0] >= 0.0)
        )
        good = todo[ok]
        out_a[good] = a[ok]
        out_b[good] = b[ok]
        todo = todo[~ok]
    if todo.size:
        raise RuntimeError(f"rejection budget exhausted for {todo.size} of {count} ordered pairs")
    return out_a, out_b


def random_ordered_pair(dim: int, interval: Interval, seed: int, window: Interval | None = None):
    """Seeded pair ``(A, B)`` with ``A <= B`` and both spectra in ``interval``.

    Unbounded intervals need an explicit bounded ``window`` inside them.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    if window is None:
        if not interval.bounded:
            raise ValueError("unbounded interval: pass a bounded sampling window")
        window = interval
    if not interval.contains_interval(window):
        raise ValueError(f"window {window} is not inside {interval}")
    rng = np.random.default_rng(seed)
    a, b = ordered_pairs_batch(rng, 1, dim, window, interval)
    return HermitianMatrix(a[0]), HermitianMatrix(b[0])


def stack(mats: Sequence) -> np.ndarray:
    return np.stack([_as_array(m) for m in mats])
