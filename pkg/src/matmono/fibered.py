"""Finite direct sums of matrix fibers.

``FiberedAlgebra([FiberSpec(dim, points), ...])`` models
``C(X_1, M_{d_1}) + ... + C(X_k, M_{d_k})`` with each ``X_i`` a finite set
of ``points``. Every (fiber, point) pair is an irreducible representation of
dimension ``dim``, so order and functional calculus act block by block and
the subhomogeneity degree is the largest fiber dimension.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functions import ScalarFunction
from .hermitian import (
    DomainError,
    HermitianMatrix,
    Interval,
    PsdCertificate,
    apply_fn,
    eigvalsh_batch,
    loewner_leq,
    random_ordered_pair,
)
from .loewner import MonotonicityVerdict, SweepConfig, Verdict, order_n_certificate
from .witness import MARGIN, WITNESS_RTOL, search

__all__ = [
    "FiberSpec",
    "FiberedAlgebra",
    "FiberedElement",
    "EmbeddingMap",
    "SubhomogeneityDegree",
    "AlgebraTestReport",
    "RelationReport",
    "degree",
    "fiber_order_leq",
    "fiber_apply",
    "random_fiberwise_pair",
    "amonotone_test",
    "embed",
    "matrix_unit_generators",
    "check_relations",
]


@dataclass(frozen=True)
class FiberSpec:
    dim: int
    points: int = 1

    def __post_init__(self):
        if int(self.dim) < 1 or int(self.points) < 1:
            raise ValueError("fiber dim and point count must be >= 1")


@dataclass(frozen=True)
class FiberedAlgebra:
    fibers: tuple
    unital: bool = True

    def __init__(self, fibers, unital: bool = True):
        fs = tuple(f if isinstance(f, FiberSpec) else FiberSpec(*f) for f in fibers)
        if not fs:
            raise ValueError("an algebra needs at least one fiber")
        object.__setattr__(self, "fibers", fs)
        object.__setattr__(self, "unital", unital)

    @classmethod
    def matrix(cls, n: int) -> "FiberedAlgebra":
        """Model of ``M_n``."""
        return cls([FiberSpec(n, 1)])

    def blocks(self):
        """(fiber, point) labels in storage order."""
        return [(i, j) for i, f in enumerate(self.fibers) for j in range(f.points)]

    def block_dims(self):
        return [f.dim for f in self.fibers for _ in range(f.points)]

    def to_json(self):
        return {"fibers": [{"dim": f.dim, "points": f.points} for f in self.fibers]}

    @classmethod
    def from_json(cls, d):
        return cls([FiberSpec(int(f["dim"]), int(f.get("points", 1))) for f in d["fibers"]])

    def __str__(self):
        parts = [f"M{f.dim}" + (f"^{f.points}" if f.points > 1 else "") for f in self.fibers]
        return " + ".join(parts)


@dataclass(frozen=True)
class SubhomogeneityDegree:
    n1: int


def degree(alg: FiberedAlgebra) -> SubhomogeneityDegree:
    return SubhomogeneityDegree(max(f.dim for f in alg.fibers))


class FiberedElement:
    """Self-adjoint element: one Hermitian block per (fiber, point)."""

    __slots__ = ("algebra", "blocks")

    def __init__(self, algebra: FiberedAlgebra, blocks):
        blocks = tuple(b if isinstance(b, HermitianMatrix) else HermitianMatrix(b) for b in blocks)
        dims = algebra.block_dims()
        if len(blocks) != len(dims):
            raise ValueError(f"expected {len(dims)} blocks, got {len(blocks)}")
        for (i, j), d, b in zip(algebra.blocks(), dims, blocks):
            if b.dim != d:
                raise ValueError(f"block ({i}, {j}) has dim {b.dim}, fiber needs {d}")
        self.algebra = algebra
        self.blocks = blocks

    def block(self, fiber: int, point: int) -> HermitianMatrix:
        return self.blocks[self.algebra.blocks().index((fiber, point))]

    def spectrum(self):
        return np.sort(np.concatenate([eigvalsh_batch(b.data) for b in self.blocks]))

    def __eq__(self, other):
        return (isinstance(other, FiberedElement) and self.algebra == other.algebra
                and all(x == y for x, y in zip(self.blocks, other.blocks)))

    def to_json(self):
        return {"algebra": self.algebra.to_json(), "blocks": [b.to_json() for b in self.blocks]}

    @classmethod
    def from_json(cls, d):
        return cls(FiberedAlgebra.from_json(d["algebra"]), [HermitianMatrix.from_json(b) for b in d["blocks"]])


def _same_algebra(x: FiberedElement, y: FiberedElement):
    if x.algebra != y.algebra:
        raise ValueError(f"elements live in different algebras: {x.algebra} vs {y.algebra}")


def fiber_order_leq(x: FiberedElement, y: FiberedElement, tol: float | None = None) -> PsdCertificate:
    """``x <= y`` iff every block is ordered; reports the worst block."""
    _same_algebra(x, y)
    worst = None
    ok = True
    for label, bx, by in zip(x.algebra.blocks(), x.blocks, y.blocks):
        c = loewner_leq(bx, by, tol)
        ok &= c.verdict
        if worst is None or c.min_eigenvalue < worst[0].min_eigenvalue:
            worst = (c, label)
    c, label = worst
    return PsdCertificate(c.min_eigenvalue, ok, c.tolerance, label)


def fiber_apply(f: ScalarFunction, x: FiberedElement) -> FiberedElement:
    out = []
    for label, b in zip(x.algebra.blocks(), x.blocks):
        try:
            out.append(apply_fn(f, b))
        except DomainError as exc:
            raise DomainError(f"block (fiber {label[0]}, point {label[1]}): {exc}") from exc
    return FiberedElement(x.algebra, out)


def random_fiberwise_pair(alg: FiberedAlgebra, interval: Interval, seed: int, window: Interval | None = None):
    """Blockwise-ordered pair ``x <= y``, one :func:`random_ordered_pair` per block."""
    ss = np.random.SeedSequence(seed)
    kids = ss.spawn(len(alg.blocks()))
    xs, ys = [], []
    for d, kid in zip(alg.block_dims(), kids):
        a, b = random_ordered_pair(d, interval, int(kid.generate_state(1)[0]), window)
        xs.append(a)
        ys.append(b)
    return FiberedElement(alg, xs), FiberedElement(alg, ys)


# --------------------------------------------------------------------------
# A-monotonicity
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AlgebraTestReport:
    """Both tracks of an A-monotonicity test and the combined verdict."""

    verdict: MonotonicityVerdict
    degree: int
    empirical: MonotonicityVerdict
    structural: MonotonicityVerdict
    anomaly: bool
    refuting_block: tuple | None = None

    def to_json(self):
        return {
            "verdict": self.verdict.to_json(),
            "degree": self.degree,
            "empirical": self.empirical.to_json(),
            "structural": self.structural.to_json(),
            "anomaly": self.anomaly,
            "refuting_block": list(self.refuting_block) if self.refuting_block else None,
        }


def _empirical_track(f, alg, interval, window, budget, seed, rtol):
    """Search every fiber for a violating pair of its matrix size.

    All points of a fiber are drawn together, so one algebra-level sample
    costs ``points`` proposals in each fiber. Points of a fiber are
    interchangeable, so a refutation is reported at point 0.
    """
    worst = math.inf
    worst_label = None
    n1 = degree(alg).n1
    for fi, spec in enumerate(alg.fibers):
        w, score = search(f, spec.dim, interval, budget * spec.points, seed, window, rtol,
                          stream=(2, fi))
        if score < worst:
            worst, worst_label = score, (fi, 0)
        if w is not None:
            used = {"pairs": budget, "fibers_searched": fi + 1}
            return MonotonicityVerdict(Verdict.NOT_MONOTONE, n1, w.order_gap_eigenvalue,
                                       MARGIN * w.tol, None, w, used), (fi, 0)
    used = {"pairs": budget, "fibers_searched": len(alg.fibers)}
    if not math.isfinite(worst):
        return MonotonicityVerdict(Verdict.INCONCLUSIVE, n1, math.nan, 0.0, None, None, used), None
    return MonotonicityVerdict(Verdict.MONOTONE, n1, worst, 1.0, None, None, used), worst_label


def amonotone_test(f: ScalarFunction, alg: FiberedAlgebra, interval: Interval, budget: int = 1000,
                   seed: int = 0, cfg: SweepConfig | None = None, window: Interval | None = None,
                   rtol: float = WITNESS_RTOL) -> AlgebraTestReport:
    """Is ``f`` monotone for the order of ``alg``?

    Runs an empirical track (random fiberwise-ordered pairs) and a
    structural one (Loewner sweep at order ``degree(alg).n1``). Any
    refutation wins; disagreeing tracks set ``anomaly``.

    The empirical ``min_eigenvalue`` for a Monotone track is the worst
    ratio ``gap / (10 tol)``; values near -1 mean near misses.
    """
    if not f.domain.contains_interval(interval):
        raise DomainError(f"interval {interval} is not inside domain {f.domain} of {f.spec()}")
    cfg = cfg or SweepConfig(seed=seed)
    window = window or interval.window(cfg.window_width)
    n1 = degree(alg).n1
    emp, label = _empirical_track(f, alg, interval, window, budget, seed, rtol)
    struct = order_n_certificate(f, interval, n1, cfg)
    kinds = {emp.kind, struct.kind}
    if Verdict.NOT_MONOTONE in kinds:
        combined = emp if emp.refuted else struct
    elif kinds == {Verdict.INCONCLUSIVE}:
        combined = struct
    else:
        combined = struct if struct.monotone else emp
    anomaly = emp.refuted != struct.refuted
    return AlgebraTestReport(combined, n1, emp, struct, anomaly, label if emp.refuted else None)


# --------------------------------------------------------------------------
# embeddings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class EmbeddingMap:
    """Block-diagonal placement of ``source`` fibers inside ``target`` fibers.

    ``placement[i] = (target_fiber, offset)``; point ``j`` of a source fiber
    goes to point ``j`` of its target fiber, so point counts must agree.
    Diagonal positions left uncovered are padded with ``mu * I``.
    """

    source: FiberedAlgebra
    target: FiberedAlgebra
    placement: tuple
    mu: float = 0.0

    def __init__(self, source, target, placement, mu: float = 0.0):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "placement", tuple((int(t), int(o)) for t, o in placement))
        object.__setattr__(self, "mu", float(mu))
        self.validate()

    def validate(self):
        if len(self.placement) != len(self.source.fibers):
            raise ValueError("need one placement per source fiber")
        used = {}
        for sf, (ti, off) in zip(self.source.fibers, self.placement):
            if not 0 <= ti < len(self.target.fibers):
                raise ValueError(f"target fiber {ti} does not exist")
            tf = self.target.fibers[ti]
            if tf.points != sf.points:
                raise ValueError(f"point counts differ: source {sf.points}, target {tf.points}")
            if off < 0 or off + sf.dim > tf.dim:
                raise ValueError(f"block of dim {sf.dim} at offset {off} overflows target dim {tf.dim}")
            for lo, hi in used.get(ti, []):
                if off < hi and lo < off + sf.dim:
                    raise ValueError(f"overlapping placements in target fiber {ti}")
            used.setdefault(ti, []).append((off, off + sf.dim))

    @classmethod
    def identity(cls, alg: FiberedAlgebra):
        return cls(alg, alg, [(i, 0) for i in range(len(alg.fibers))])

    def with_mu(self, mu: float) -> "EmbeddingMap":
        return EmbeddingMap(self.source, self.target, self.placement, mu)

    def padded(self) -> bool:
        """True when some target diagonal position receives the padding scalar."""
        cover = [0] * len(self.target.fibers)
        for sf, (ti, _) in zip(self.source.fibers, self.placement):
            cover[ti] += sf.dim
        return any(c < tf.dim for c, tf in zip(cover, self.target.fibers))

    def to_json(self):
        return {"source": self.source.to_json(), "target": self.target.to_json(),
                "placement": [{"target_fiber": t, "offset": o} for t, o in self.placement], "mu": self.mu}

    @classmethod
    def from_json(cls, d):
        return cls(FiberedAlgebra.from_json(d["source"]), FiberedAlgebra.from_json(d["target"]),
                   [(p["target_fiber"], p["offset"]) for p in d["placement"]], d.get("mu", 0.0))


def embed(x: FiberedElement, m: EmbeddingMap) -> FiberedElement:
    """Image of ``x`` under the placement; the padding is not multiplicative unless ``mu`` is 0 or 1."""
    if x.algebra != m.source:
        raise ValueError("element does not live in the embedding's source algebra")
    tgt = m.target
    mats = {}
    for ti, tf in enumerate(tgt.fibers):
        for j in range(tf.points):
            mats[(ti, j)] = m.mu * np.eye(tf.dim, dtype=complex)
    for si, (sf, (ti, off)) in enumerate(zip(m.source.fibers, m.placement)):
        for j in range(sf.points):
            blk = x.block(si, j).data
            mats[(ti, j)][off:off + sf.dim, off:off + sf.dim] = blk
    return FiberedElement(tgt, [mats[label] for label in tgt.blocks()])


# --------------------------------------------------------------------------
# matrix units
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RelationReport:
    norm_residual: float  # max(||a_j|| - 1, 0)
    product_residual: float  # max ||a_j a_k||
    star_residual: float  # max ||a_j^* a_k - delta_jk a_2^* a_2||
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.norm_residual, self.product_residual, self.star_residual) <= self.tol

    def to_json(self):
        return {"norm_residual": self.norm_residual, "product_residual": self.product_residual,
                "star_residual": self.star_residual, "tol": self.tol, "passed": self.passed}


def _opnorm(m):
    return math.sqrt(max(float(eigvalsh_batch(m.conj().T @ m)[-1]), 0.0))


def check_relations(gens, tol: float = 1e-12) -> RelationReport:
    """Check ``||a_j|| <= 1``, ``a_j a_k = 0`` and ``a_j^* a_k = delta_jk a_2^* a_2``."""
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if not gens:
        raise ValueError("need at least one generator")
    base = gens[0].conj().T @ gens[0]
    nres = max(max(_opnorm(g) - 1.0, 0.0) for g in gens)
    pres = 0.0
    sres = 0.0
    for j, gj in enumerate(gens):
        for k, gk in enumerate(gens):
            pres = max(pres, float(np.abs(gj @ gk).max()))
            target = base if j == k else 0.0
            sres = max(sres, float(np.abs(gj.conj().T @ gk - target).max()))
    return RelationReport(nres, pres, sres, tol)


def matrix_unit_generators(n: int, m: int, tol: float = 1e-12):
    """Matrix units ``e_{j,1}`` in ``M_n`` for ``j = 2..m`` and their relation report."""
    if not 2 <= m <= n:
        raise ValueError(f"need 2 <= m <= n, got m={m}, n={n}")
    gens = []
    for j in range(2, m + 1):
        e = np.zeros((n, n), dtype=complex)
        e[j - 1, 0] = 1.0
        gens.append(e)
    return gens, check_relations(gens, tol)
