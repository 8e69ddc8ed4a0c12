import json
import math

import numpy as np
import pytest

from matmono import DomainError, Interval
from matmono.fibered import (
    EmbeddingMap,
    FiberedAlgebra,
    FiberedElement,
    amonotone_test,
    check_relations,
    degree,
    embed,
    fiber_apply,
    fiber_order_leq,
    matrix_unit_generators,
    random_fiberwise_pair,
)
from matmono.functions import catalog_expected_order, exp, gap_fn, identity, log1p, moebius, power, sqrt
from matmono.hermitian import apply_fn
from matmono.loewner import order_n_certificate
from matmono.witness import verify_witness

ALPHA2 = 0.7080202026367186
ALPHA3 = 0.22169967651367184
I10 = Interval.closed(0, 10)

COMM = FiberedAlgebra([(1, 5)])
B = FiberedAlgebra([(2, 1), (2, 1)])  # M2 + M2
A = FiberedAlgebra.matrix(4)  # M4


def test_degrees():
    assert degree(COMM).n1 == 1
    assert degree(B).n1 == 2
    assert degree(A).n1 == 4
    assert degree(FiberedAlgebra([(3, 2), (1, 4)])).n1 == 3


def test_algebra_json_and_str():
    alg = FiberedAlgebra([(2, 3), (1, 1)])
    assert FiberedAlgebra.from_json(json.loads(json.dumps(alg.to_json()))) == alg
    assert str(alg) == "M2^3 + M1"
    with pytest.raises(ValueError):
        FiberedAlgebra([])


def test_element_validation_and_roundtrip():
    with pytest.raises(ValueError):
        FiberedElement(B, [np.eye(2)])
    with pytest.raises(ValueError):
        FiberedElement(B, [np.eye(2), np.eye(3)])
    x = FiberedElement(B, [np.diag([1.0, 2.0]), np.eye(2)])
    assert FiberedElement.from_json(json.loads(json.dumps(x.to_json()))) == x
    assert np.allclose(x.spectrum(), [1, 1, 1, 2])


def test_order_reflexive_and_failing_block_is_named():
    alg = FiberedAlgebra([(2, 2), (1, 1)])
    x = FiberedElement(alg, [np.eye(2), np.eye(2), [[1.0]]])
    assert fiber_order_leq(x, x).verdict
    y = FiberedElement(alg, [2 * np.eye(2), np.diag([1.0, 0.5]), [[3.0]]])
    c = fiber_order_leq(x, y)
    assert not c.verdict
    assert c.location == (0, 1)


def test_random_fiberwise_pair_is_ordered():
    alg = FiberedAlgebra([(3, 2), (1, 3)])
    for seed in range(10):
        x, y = random_fiberwise_pair(alg, I10, seed)
        assert fiber_order_leq(x, y, 0.0).verdict


def test_order_rejects_algebra_mismatch():
    x = FiberedElement(B, [np.eye(2), np.eye(2)])
    z = FiberedElement(A, [np.eye(4)])
    with pytest.raises(ValueError):
        fiber_order_leq(x, z)


def test_fiber_apply():
    rng = np.random.default_rng(0)
    g = rng.standard_normal((3, 3))
    blk = g @ g.T
    x = FiberedElement(FiberedAlgebra.matrix(3), [blk])
    assert np.allclose(fiber_apply(identity(), x).blocks[0].data, blk)
    assert np.allclose(fiber_apply(sqrt(), x).blocks[0].data, apply_fn(sqrt(), blk).data)
    d = FiberedElement(B, [np.diag([1.0, 2.0]), np.diag([3.0, 4.0])])
    sq = fiber_apply(power(2), d)
    assert np.allclose(sq.blocks[0].data, np.diag([1.0, 4.0]))
    assert np.allclose(sq.blocks[1].data, np.diag([9.0, 16.0]))


def test_fiber_apply_domain_error_names_block():
    x = FiberedElement(B, [np.eye(2), -np.eye(2)])
    with pytest.raises(DomainError, match=r"fiber 1, point 0"):
        fiber_apply(sqrt(), x)


# ---- A-monotonicity -----------------------------------------------------------


def test_square_on_commutative_and_degree_two():
    assert amonotone_test(power(2), COMM, I10).verdict.monotone
    r = amonotone_test(power(2), B, I10)
    assert r.verdict.refuted and not r.anomaly
    # the empirical refutation carries a verified witness on the named block
    assert r.empirical.witness is not None and verify_witness(r.empirical.witness)
    assert r.refuting_block[0] in (0, 1)


@pytest.mark.parametrize("alg", [COMM, B, A, FiberedAlgebra([(3, 2), (1, 1)])], ids=str)
def test_moebius_monotone_on_every_model(alg):
    r = amonotone_test(moebius(1.0), alg, I10)
    assert r.verdict.monotone and not r.anomaly


def test_four_versus_two_plus_two():
    f2 = gap_fn(2, ALPHA2)
    assert amonotone_test(f2, B, I10).verdict.monotone
    assert amonotone_test(f2, A, I10).verdict.refuted
    # f_3 lies in P_3, inside P_2 = P_B: accepted on B, refuted on M4
    f3 = gap_fn(3, ALPHA3)
    rb = amonotone_test(f3, B, I10)
    ra = amonotone_test(f3, A, I10)
    assert rb.verdict.monotone and not rb.anomaly
    assert ra.verdict.refuted and not ra.anomaly


CATALOG = [identity(), sqrt(), log1p(), moebius(0.5), moebius(2.0), power(2), power(3), exp(),
           gap_fn(2, ALPHA2), gap_fn(3, ALPHA3)]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_homogeneous_model_matches_order_n(n):
    alg = FiberedAlgebra([(n, 3)])
    for f in CATALOG:
        if catalog_expected_order(f) is None:
            continue
        r = amonotone_test(f, alg, I10, budget=300, seed=n)
        assert not r.anomaly, f.spec()
        assert r.verdict.kind == order_n_certificate(f, I10, n).kind, f.spec()
        assert r.verdict.monotone == (catalog_expected_order(f) >= n), f.spec()


def test_degree_monotone_under_embedding():
    m = EmbeddingMap(B, A, [(0, 0), (0, 2)])
    assert degree(m.source).n1 <= degree(m.target).n1
    for f in CATALOG:
        big = order_n_certificate(f, I10, degree(A).n1)
        small = order_n_certificate(f, I10, degree(B).n1)
        if big.refuted and small.monotone:
            assert amonotone_test(f, B, I10, budget=300).verdict.monotone


def test_amonotone_is_seeded():
    r1 = amonotone_test(exp(), B, I10, seed=4)
    r2 = amonotone_test(exp(), B, I10, seed=4)
    assert json.dumps(r1.to_json(), sort_keys=True) == json.dumps(r2.to_json(), sort_keys=True)


def test_amonotone_domain_check():
    with pytest.raises(DomainError):
        amonotone_test(sqrt(), B, Interval.closed(-1, 1))


# ---- embeddings ------------------------------------------------------------------


def test_embed_diagonal_blocks():
    m = EmbeddingMap(B, A, [(0, 0), (0, 2)])
    x = FiberedElement(B, [[[1.0, 2.0], [2.0, 3.0]], [[4.0, 0.5j], [-0.5j, 5.0]]])
    z = embed(x, m).blocks[0].data
    expect = np.zeros((4, 4), dtype=complex)
    expect[:2, :2] = [[1, 2], [2, 3]]
    expect[2:, 2:] = [[4, 0.5j], [-0.5j, 5]]
    assert np.array_equal(z, expect)
    assert not m.padded()


def test_embed_identity_map():
    alg = FiberedAlgebra([(2, 2), (1, 1)])
    x, _ = random_fiberwise_pair(alg, I10, 1)
    assert embed(x, EmbeddingMap.identity(alg)) == x


def test_embed_padding_scalar():
    m = EmbeddingMap(FiberedAlgebra.matrix(2), FiberedAlgebra.matrix(3), [(0, 1)]).with_mu(7.0)
    z = embed(FiberedElement(m.source, [np.eye(2)]), m).blocks[0].data
    assert np.allclose(np.diag(z).real, [7, 1, 1])
    assert m.padded()
    assert EmbeddingMap.from_json(json.loads(json.dumps(m.to_json()))) == m


@pytest.mark.parametrize("placement", [[(0, 0), (0, 1)], [(0, 3), (0, 0)], [(1, 0), (0, 0)]])
def test_embedding_placement_errors(placement):
    with pytest.raises(ValueError):
        EmbeddingMap(B, A, placement)


def test_embedding_preserves_order_and_refutation():
    m = EmbeddingMap(B, A, [(0, 0), (0, 2)])
    for seed in range(5):
        x, y = random_fiberwise_pair(B, I10, seed)
        assert fiber_order_leq(embed(x, m), embed(y, m), 1e-12).verdict
    # a violating pair in one summand stays violating after embedding
    r = amonotone_test(power(2), B, I10)
    w = r.empirical.witness
    fi = r.refuting_block[0]
    other = np.eye(2)
    blocks_a = [w.a.data if i == fi else other for i in range(2)]
    blocks_b = [w.b.data if i == fi else other for i in range(2)]
    xa, xb = embed(FiberedElement(B, blocks_a), m), embed(FiberedElement(B, blocks_b), m)
    c = fiber_order_leq(fiber_apply(power(2), xa), fiber_apply(power(2), xb), w.tol)
    assert c.min_eigenvalue <= -10 * w.tol


# ---- matrix units ------------------------------------------------------------------


def test_matrix_units_small_cases():
    gens, rep = matrix_unit_generators(2, 2)
    assert len(gens) == 1 and np.array_equal(gens[0], [[0, 0], [1, 0]])
    assert rep.passed and rep.star_residual == 0 and rep.product_residual == 0
    gens, rep = matrix_unit_generators(4, 3)
    assert len(gens) == 2
    assert np.array_equal(gens[0] @ gens[1], np.zeros((4, 4)))
    assert rep.passed


@pytest.mark.parametrize("n,m", [(n, m) for n in range(2, 7) for m in range(2, n + 1)])
def test_matrix_units_all_sizes(n, m):
    gens, rep = matrix_unit_generators(n, m)
    assert len(gens) == m - 1 and rep.passed


def test_matrix_units_perturbed_fail():
    rng = np.random.default_rng(0)
    gens, _ = matrix_unit_generators(4, 4)
    noisy = [g + 1e-6 * rng.standard_normal(g.shape) for g in gens]
    assert not check_relations(noisy).passed


def test_matrix_units_bad_sizes():
    for n, m in [(2, 3), (3, 1), (1, 1)]:
        with pytest.raises(ValueError):
            matrix_unit_generators(n, m)
