"""Scalar function catalog.

Each entry knows its value, closed-form derivative, domain and a
cancellation-free divided difference ``f[s, t]``. The gap family lives
here too: ``gap_poly(n)`` is the truncated series ``t + t^3/3 + ... +
t^(2n-1)/(2n-1)``, ``moebius(alpha)`` is ``alpha t / (1 + t)`` and
``gap_fn(n, alpha)`` is their composition.

Specs are parsed from a small grammar (``pow:2``, ``gap:3``,
``moebius:1.5``, ``gapfn:3:0.8``, ``compose(a,b)``, ...).
"""
from __future__ import annotations

import math

import numpy as np

from .hermitian import DomainError, Interval

__all__ = [
    "ScalarFunction",
    "identity",
    "affine",
    "power",
    "exp",
    "log1p",
    "sqrt",
    "moebius",
    "moebius_inv",
    "gap_poly",
    "gap_fn",
    "compose",
    "parse_function",
    "catalog_expected_order",
    "node_epsilon",
]

HALF_LINE = Interval(0.0, math.inf, True, False)
REAL_LINE = Interval(-math.inf, math.inf, False, False)


def node_epsilon(s, t):
    """Nodes closer than this are treated as coincident."""
    return 1e-7 * (1.0 + np.abs(s) + np.abs(t))


class ScalarFunction:
    """Base class; subclasses fill in ``_f``, ``_df`` and optionally ``_dd``.

    ``__call__`` is the raw vectorized formula. ``eval`` checks the domain
    first.
    """

    tag = "abstract"

    def __init__(self, domain: Interval):
        self.domain = domain

    # -- formulas ---------------------------------------------------------
    def _f(self, t):
        raise NotImplementedError

    def _df(self, t):
        raise NotImplementedError

    def _dd(self, s, t):
        # generic quotient; catalog entries override with a stable form
        return (self._f(t) - self._f(s)) / (t - s)

    # -- public -----------------------------------------------------------
    def __call__(self, t):
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return self._f(np.asarray(t, dtype=float))

    def _check(self, t):
        t = np.asarray(t, dtype=float)
        ok = self.domain.contains(t)
        if not np.all(ok):
            bad = np.atleast_1d(t)[~np.atleast_1d(ok)][0]
            raise DomainError(f"{bad!r} outside domain {self.domain} of {self.spec()}")
        return t

    def eval(self, t):
        t = self._check(t)
        out = self(t)
        return float(out) if out.ndim == 0 else out

    def deriv(self, t):
        t = self._check(t)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = self._df(t)
        out = np.asarray(out, dtype=float)
        return float(out) if out.ndim == 0 else out

    def divided_difference(self, s, t, check=True):
        """``f[s, t]`` with ``f'`` at the midpoint when the nodes coincide."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        if check:
            self._check(s)
            self._check(t)
        s, t = np.broadcast_arrays(s, t)
        lo = np.minimum(s, t)
        hi = np.maximum(s, t)
        close = (hi - lo) <= node_epsilon(lo, hi)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            mid = 0.5 * (lo + hi)
            d1 = self._df(mid)
            dd = self._dd(lo, hi)
        out = np.where(close, d1, dd)
        return float(out) if out.ndim == 0 else out

    # -- range, composition, serialization --------------------------------
    def range_on(self, interval: Interval):
        """Closure of the image of ``interval`` for monotone increasing entries."""
        lo = self._limit(interval.lower)
        hi = self._limit(interval.upper)
        return lo, hi

    def _limit(self, x):
        with np.errstate(all="ignore"):
            return float(self._f(np.asarray(x, dtype=float)))

    @property
    def parameters(self) -> dict:
        return {}

    def spec(self) -> str:
        raise NotImplementedError

    def to_json(self):
        return {"tag": self.tag, "parameters": self.parameters, "domain": self.domain.to_json()}

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec()} on {self.domain}>"

    def __eq__(self, other):
        return isinstance(other, ScalarFunction) and self.to_json() == other.to_json()

    def __hash__(self):
        return hash(self.spec())


class Identity(ScalarFunction):
    tag = "identity"

    def __init__(self, domain=REAL_LINE):
        super().__init__(domain)

    def _f(self, t):
        return t * 1.0

    def _df(self, t):
        return np.ones_like(t)

    def _dd(self, s, t):
        return np.ones_like(s + t)

    def spec(self):
        return "id"


class Affine(ScalarFunction):
    tag = "affine"

    def __init__(self, a: float, b: float, domain=REAL_LINE):
        super().__init__(domain)
        self.a = float(a)
        self.b = float(b)

    def _f(self, t):
        return self.a * t + self.b

    def _df(self, t):
        return np.full_like(t, self.a)

    def _dd(self, s, t):
        return np.full_like(s + t, self.a)

    def range_on(self, interval):
        lo, hi = self._limit(interval.lower), self._limit(interval.upper)
        return (min(lo, hi), max(lo, hi))

    @property
    def parameters(self):
        return {"a": self.a, "b": self.b}

    def spec(self):
        return f"affine:{self.a!r}:{self.b!r}"


class Power(ScalarFunction):
    tag = "power"

    def __init__(self, beta: float):
        beta = float(beta)
        if beta == 0:
            raise ValueError("power exponent must be non-zero")
        dom = HALF_LINE if beta > 0 else Interval(0.0, math.inf, False, False)
        super().__init__(dom)
        self.beta = beta

    def _f(self, t):
        return np.power(t, self.beta)

    def _df(self, t):
        return self.beta * np.power(t, self.beta - 1)

    def _dd(self, s, t):
        # s < t; write t = s * r and use expm1 on log r
        b = self.beta
        pos = s > 0
        ss = np.where(pos, s, 1.0)
        lr = np.log1p((t - s) / ss)
        ratio = np.expm1(b * lr) / np.expm1(lr)
        return np.where(pos, np.power(ss, b - 1) * ratio, np.power(t, b - 1))

    def range_on(self, interval):
        lo, hi = self._limit(interval.lower), self._limit(interval.upper)
        return (min(lo, hi), max(lo, hi))

    @property
    def parameters(self):
        return {"beta": self.beta}

    def spec(self):
        return f"pow:{self.beta:g}"


class Exp(ScalarFunction):
    tag = "exp"

    def __init__(self):
        super().__init__(REAL_LINE)

    def _f(self, t):
        return np.exp(t)

    _df = _f

    def _dd(self, s, t):
        h = 0.5 * (t - s)
        return np.exp(s + h) * np.sinh(h) / h

    def spec(self):
        return "exp"


class Log1p(ScalarFunction):
    tag = "log1p"

    def __init__(self):
        super().__init__(Interval(-1.0, math.inf, False, False))

    def _f(self, t):
        return np.log1p(t)

    def _df(self, t):
        return 1.0 / (1.0 + t)

    def _dd(self, s, t):
        d = t - s
        return np.log1p(d / (1.0 + s)) / d

    def spec(self):
        return "log1p"


class Sqrt(ScalarFunction):
    tag = "sqrt"

    def __init__(self):
        super().__init__(HALF_LINE)

    def _f(self, t):
        return np.sqrt(t)

    def _df(self, t):
        return 0.5 / np.sqrt(t)

    def _dd(self, s, t):
        return 1.0 / (np.sqrt(s) + np.sqrt(t))

    def spec(self):
        return "sqrt"


class Moebius(ScalarFunction):
    """``alpha t / (1 + t)``, increasing on the half-line and bounded by alpha."""

    tag = "moebius"

    def __init__(self, alpha: float):
        alpha = float(alpha)
        if not alpha > 0:
            raise ValueError("moebius needs alpha > 0")
        super().__init__(HALF_LINE)
        self.alpha = alpha

    def _f(self, t):
        return self.alpha * t / (1.0 + t)

    def _df(self, t):
        return self.alpha / (1.0 + t) ** 2

    def _dd(self, s, t):
        return self.alpha / ((1.0 + s) * (1.0 + t))

    def _limit(self, x):
        return self.alpha if math.isinf(x) else super()._limit(x)

    @property
    def parameters(self):
        return {"alpha": self.alpha}

    def spec(self):
        return f"moebius:{self.alpha!r}"


class MoebiusInverse(ScalarFunction):
    """``t / (alpha - t)`` on ``[0, alpha)``; inverse of ``moebius(alpha)``."""

    tag = "moebius_inv"

    def __init__(self, alpha: float):
        alpha = float(alpha)
        if not alpha > 0:
            raise ValueError("moebius_inv needs alpha > 0")
        super().__init__(Interval(0.0, alpha, True, False))
        self.alpha = alpha

    def _f(self, t):
        return t / (self.alpha - t)

    def _df(self, t):
        return self.alpha / (self.alpha - t) ** 2

    def _dd(self, s, t):
        return self.alpha / ((self.alpha - s) * (self.alpha - t))

    def _limit(self, x):
        return math.inf if x >= self.alpha else super()._limit(x)

    @property
    def parameters(self):
        return {"alpha": self.alpha}

    def spec(self):
        return f"moebinv:{self.alpha!r}"


class GapPoly(ScalarFunction):
    """Truncated odd series ``sum_{k=1..n} t^(2k-1) / (2k-1)``."""

    tag = "gap_poly"

    def __init__(self, n: int):
        n = int(n)
        if n < 1:
            raise ValueError("gap_poly needs n >= 1")
        super().__init__(HALF_LINE)
        self.n = n
        c = np.zeros(2 * n)
        c[1::2] = 1.0 / np.arange(1, 2 * n, 2)
        self.coefficients = c  # c[k] multiplies t**k

    def _f(self, t):
        return np.polynomial.polynomial.polyval(t, self.coefficients)

    def _df(self, t):
        return np.polynomial.polynomial.polyval(t, np.polynomial.polynomial.polyder(self.coefficients))

    def _dd(self, s, t):
        # f[s,t] = sum_k c_k h_{k-1}(s,t), h_m = t h_{m-1} + s^m; no subtraction
        h = np.ones_like(s + t)
        sp = np.ones_like(h)
        out = self.coefficients[1] * h
        for k in range(2, 2 * self.n):
            sp = sp * s
            h = t * h + sp
            if self.coefficients[k]:
                out = out + self.coefficients[k] * h
        return out

    @property
    def parameters(self):
        return {"n": self.n}

    def spec(self):
        return f"gap:{self.n}"


class Composite(ScalarFunction):
    """``outer(inner(t))``; derivative and divided difference by the chain rule."""

    tag = "composite"

    def __init__(self, outer: ScalarFunction, inner: ScalarFunction):
        super().__init__(inner.domain)
        self.outer = outer
        self.inner = inner

    def _f(self, t):
        return self.outer._f(self.inner._f(t))

    def _df(self, t):
        return self.outer._df(self.inner._f(t)) * self.inner._df(t)

    def _dd(self, s, t):
        gs, gt = self.inner._f(s), self.inner._f(t)
        return self.outer.divided_difference(gs, gt, check=False) * self.inner._dd(s, t)

    def range_on(self, interval):
        lo, hi = self.inner.range_on(interval)
        rng = Interval(lo, hi, True, True) if lo < hi else None
        if rng is None:
            v = self.outer._limit(lo)
            return v, v
        return self.outer.range_on(rng)

    @property
    def parameters(self):
        return {"outer": self.outer.to_json(), "inner": self.inner.to_json()}

    def spec(self):
        return f"compose({self.outer.spec()},{self.inner.spec()})"


class GapFn(Composite):
    """``gap_poly(n)`` after ``moebius(alpha)``."""

    tag = "gap_fn"

    def __init__(self, n: int, alpha: float):
        super().__init__(GapPoly(n), Moebius(alpha))
        self.n = int(n)
        self.alpha = float(alpha)

    @property
    def parameters(self):
        return {"n": self.n, "alpha": self.alpha}

    def spec(self):
        return f"gapfn:{self.n}:{self.alpha!r}"


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------


def identity(domain: Interval = REAL_LINE):
    return Identity(domain)


def affine(a, b, domain: Interval = REAL_LINE):
    return Affine(a, b, domain)


def power(beta):
    return Power(beta)


def exp():
    return Exp()


def log1p():
    return Log1p()


def sqrt():
    return Sqrt()


def moebius(alpha):
    return Moebius(alpha)


def moebius_inv(alpha):
    return MoebiusInverse(alpha)


def gap_poly(n):
    return GapPoly(n)


def gap_fn(n, alpha):
    return GapFn(n, alpha)


COMPOSE_SAMPLES = 1000


def _sample_points(interval: Interval, count=COMPOSE_SAMPLES):
    win = interval.window(1e3)
    lo, hi = win.lower, win.upper
    # geometric crowding toward both ends catches edge behaviour
    u = np.linspace(0.0, 1.0, count)
    pts = np.concatenate([lo + (hi - lo) * u, lo + (hi - lo) * u ** 4, hi - (hi - lo) * u ** 4])
    return pts[interval.contains(pts)]


def compose(outer: ScalarFunction, inner: ScalarFunction) -> Composite:
    """Compose after checking that ``inner`` maps its domain into ``outer``'s.

    The check evaluates ``inner`` on dense samples plus the endpoint limits;
    it is sound for the monotone and polynomial catalog entries.
    """
    pts = _sample_points(inner.domain)
    vals = inner(pts)
    bad = ~outer.domain.contains(vals)
    if np.any(bad):
        raise DomainError(
            f"range of {inner.spec()} leaves domain {outer.domain} of {outer.spec()} "
            f"(e.g. {inner.spec()}({pts[bad][0]:.6g}) = {vals[bad][0]:.6g})"
        )
    lo, hi = inner.range_on(inner.domain)
    dom = outer.domain
    edge_lo = inner.domain.closed_lower
    edge_hi = inner.domain.closed_upper
    if lo < dom.lower or (lo == dom.lower and edge_lo and not dom.closed_lower):
        raise DomainError(f"range of {inner.spec()} reaches {lo} below domain {dom} of {outer.spec()}")
    if hi > dom.upper or (hi == dom.upper and edge_hi and not dom.closed_upper):
        raise DomainError(f"range of {inner.spec()} reaches {hi} above domain {dom} of {outer.spec()}")
    return Composite(outer, inner)


# --------------------------------------------------------------------------
# expected orders
# --------------------------------------------------------------------------


def catalog_expected_order(f: ScalarFunction):
    """Order of matrix monotonicity asserted for a catalog entry.

    Returns a positive int, ``math.inf`` for operator monotone entries, or
    ``None`` when there is no asserted ground truth (composites, decreasing
    maps, ``gap_poly`` on the half-line).
    """
    if isinstance(f, GapFn):
        return f.n
    if isinstance(f, Composite):
        return None
    if isinstance(f, (Identity, Sqrt, Log1p, Moebius, MoebiusInverse)):
        return math.inf
    if isinstance(f, Affine):
        return math.inf if f.a >= 0 else None
    if isinstance(f, Power):
        if f.beta > 1:
            return 1
        return math.inf if f.beta > 0 else None
    if isinstance(f, Exp):
        return 1
    if isinstance(f, GapPoly):
        return math.inf if f.n == 1 else None
    return None


# --------------------------------------------------------------------------
# grammar
# --------------------------------------------------------------------------


def _split_args(body: str):
    depth = 0
    parts, cur = [], []
    for ch in body:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def parse_function(text: str) -> ScalarFunction:
    """Parse a function spec such as ``pow:2`` or ``compose(moebius:1,sqrt)``."""
    s = text.strip()
    if s.startswith("compose(") and s.endswith(")"):
        args = _split_args(s[len("compose("):-1])
        if len(args) != 2:
            raise ValueError(f"compose takes two arguments: {text!r}")
        return compose(parse_function(args[0]), parse_function(args[1]))
    head, *rest = s.split(":")
    try:
        if head in ("id", "identity") and not rest:
            return identity()
        if head in ("pow", "power") and len(rest) == 1:
            return power(float(rest[0]))
        if head == "exp" and not rest:
            return exp()
        if head == "log1p" and not rest:
            return log1p()
        if head == "sqrt" and not rest:
            return sqrt()
        if head == "moebius" and len(rest) == 1:
            return moebius(float(rest[0]))
        if head == "moebinv" and len(rest) == 1:
            return moebius_inv(float(rest[0]))
        if head == "gap" and len(rest) == 1:
            return gap_poly(int(rest[0]))
        if head == "gapfn" and len(rest) == 2:
            return gap_fn(int(rest[0]), float(rest[1]))
        if head == "affine" and len(rest) == 2:
            return affine(float(rest[0]), float(rest[1]))
    except ValueError as exc:
        raise ValueError(f"bad parameters in function spec {text!r}: {exc}") from exc
    raise ValueError(f"unknown function spec {text!r}")


def from_json(d) -> ScalarFunction:
    tag, p = d["tag"], d.get("parameters", {})
    dom = Interval.from_json(d["domain"]) if "domain" in d else None
    if tag == "identity":
        return identity(dom or REAL_LINE)
    if tag == "affine":
        return affine(p["a"], p["b"], dom or REAL_LINE)
    if tag == "power":
        return power(p["beta"])
    if tag == "exp":
        return exp()
    if tag == "log1p":
        return log1p()
    if tag == "sqrt":
        return sqrt()
    if tag == "moebius":
        return moebius(p["alpha"])
    if tag == "moebius_inv":
        return moebius_inv(p["alpha"])
    if tag == "gap_poly":
        return gap_poly(p["n"])
    if tag == "gap_fn":
        return gap_fn(p["n"], p["alpha"])
    if tag == "composite":
        return Composite(from_json(p["outer"]), from_json(p["inner"]))
    raise ValueError(f"unknown function tag {tag!r}")
