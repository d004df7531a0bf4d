import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from borel_cocycle import chains, linalg, series
from borel_cocycle.chains import GroupChain, PhiConfig, phi_chain
from helpers import (
    expm_hermitian,
    near_identity_vertices,
    random_hermitian,
    random_invertible,
    random_unitary,
)

seeds = st.integers(0, 2**32 - 1)
# value-only checks: the grouped evaluator reaches high orders cheaply
FAST = dict(theta=0.25, tol=1e-9, k_max=40, method="grouped")


def I(n=2):
    return np.eye(n, dtype=complex)


def small_tuple(rng, n=2, eps=0.05):
    return [expm_hermitian(random_hermitian(rng, n, eps)) for _ in range(4)]


def single(tup, coeff=1):
    return GroupChain(3, [(coeff, tuple(tup))])


# chain types and conversions


def test_group_chain_validation():
    with pytest.raises(ValueError):
        GroupChain(3, [(1, (I(), I(), I()))])
    with pytest.raises(ValueError):
        GroupChain(3, [(0, (I(),) * 4)])
    with pytest.raises(ValueError):
        GroupChain(3, [(1.5, (I(),) * 4)])
    with pytest.raises(ValueError):
        GroupChain(1, [(1, (I(2), I(3)))])
    with pytest.raises(ValueError):
        GroupChain(1, [(1, (I(), I()))], labels=["a", "b"])
    c = GroupChain(1, [(2, (I(), I())), (-1, (I(), 2 * I()))])
    assert len(c) == 2 and c.dim == 2 and c.labels == ["t1", "t2"]


def test_bar_to_homogeneous(rng):
    a, b, c = (random_invertible(rng, 2) for _ in range(3))
    e, g = chains.bar_to_homogeneous([a])
    assert np.array_equal(e, I()) and np.array_equal(g, a)
    h = chains.bar_to_homogeneous([a, b, c])
    assert len(h) == 4
    assert np.allclose(h[2], a @ b) and np.allclose(h[3], a @ b @ c)
    with pytest.raises(ValueError):
        chains.bar_to_homogeneous([])


def test_borel_normalize():
    assert chains.borel_normalize(0, 1) == 0
    assert chains.borel_normalize(16 * math.pi * 1j, 1) == pytest.approx(1.0)
    assert chains.borel_normalize(3.0, 0) == pytest.approx(-1.5)
    with pytest.raises(ValueError):
        chains.borel_normalize(1.0, -1)


def test_testcase1_tuples():
    z = chains.build_testcase1(3, 1, 1, 1)
    assert len(z) == 6 and z.labels == [f"c{i}" for i in range(1, 7)]
    assert [c for c, _ in z.terms] == [1, -1, 1, -1, 1, -1]
    s3 = 1j * math.sqrt(3)
    g2 = np.array([[1, 1], [0, 1]])
    g3 = np.array([[1, s3], [0, 1]])
    for _, tup in z.terms:
        assert np.array_equal(tup[0], I())
        assert np.allclose(tup[3], g2 @ g3)
        assert chains.has_repeated_entry(tup)
    assert np.allclose(z.terms[2][1][1], g3)
    with pytest.raises(ValueError):
        chains.build_testcase1(3, 0, 1, 1)


def test_testcase1_unitary_u_repeats_after_reduction():
    z = chains.build_testcase1(3, np.exp(1j * math.pi / 3), 1, 1)
    for _, tup in z.terms:
        red = [linalg.pdh_reduce(X) for X in tup]
        assert any(
            np.allclose(red[i], red[j], atol=1e-12) for i in range(4) for j in range(i + 1, 4)
        )


def test_testcase1_u2_has_no_repeats():
    z = chains.build_testcase1(3, 2, 1, 1)
    for _, tup in z.terms:
        assert not chains.has_repeated_entry(tup)
    g2inv = np.array([[1, -1], [0, 1]])
    assert np.allclose(g2inv @ np.array([[1, 1], [0, 1]]), I())


@pytest.mark.parametrize("n", [3, 4, 5])
def test_testcase2_relations(n):
    a, b, w = chains.testcase2_generators(n, v=1.7)
    e = I(3)
    assert np.allclose(a @ b, b @ a, atol=1e-12)
    assert np.allclose(np.linalg.matrix_power(a, n), e, atol=1e-12)
    wi = np.linalg.inv(w)
    assert np.allclose(w @ a @ wi, b, atol=1e-12)
    assert np.allclose(w @ b @ wi, a, atol=1e-12)


@pytest.mark.parametrize("n,count", [(3, 8), (5, 14)])
def test_testcase2_sizes(n, count):
    z1, z2 = chains.build_testcase2(n)
    assert len(z1) == 6 and len(z2) == count
    assert [c for c, _ in z1.terms] == [1, -1, -1, 1, 1, -1]
    assert z2.labels[-1] == f"d{count}"
    with pytest.raises(ValueError):
        chains.build_testcase2(2)
    with pytest.raises(ValueError):
        chains.build_testcase2(3, 0)


def test_testcase2_unitary_zeros():
    z1, z2 = chains.build_testcase2(4)
    for z in (z1, z2):
        rep = phi_chain(z)
        assert rep.ok
        for t in rep.per_term:
            assert t.value == 0 and t.error_bound == 0


# pipeline


def test_identity_term():
    rep = phi_chain(single([I()] * 4))
    assert rep.total_value == 0 and rep.per_term[0].status == "skipped"
    rep = phi_chain(single([I()] * 4), PhiConfig(skip_repeated=False))
    assert rep.total_value == 0 and rep.per_term[0].status == "ok"


def test_degree_guard():
    with pytest.raises(ValueError):
        phi_chain(GroupChain(2, [(1, (I(),) * 3)]))


def test_degree_one_chain(rng):
    X0, X1 = random_invertible(rng, 3), random_invertible(rng, 3)
    rep = phi_chain(GroupChain(1, [(1, (X0, X1)), (2, (X1, X1))]))
    v = series.phi_n1(X0, X1)
    assert rep.total_value == pytest.approx(v)
    assert rep.per_term[1].status == "skipped"
    assert rep.borel_value == pytest.approx(-v / 2)


def test_single_term_matches_direct_series(rng):
    tup = small_tuple(rng, 3, 0.02)
    rep = phi_chain(single(tup, coeff=-2))
    t = rep.per_term[0]
    assert t.status == "ok" and t.simplex_count == 1
    assert rep.total_value == -2 * t.value
    assert rep.total_error_bound == 2 * t.error_bound
    assert rep.borel_value == pytest.approx(rep.total_value / (16 * math.pi * 1j))
    # the signed pos/neg split flips with the coefficient
    assert rep.total_pos == pytest.approx(-2 * t.neg_sum)
    assert rep.total_neg == pytest.approx(-2 * t.pos_sum)


@settings(max_examples=8, deadline=None)
@given(seeds)
def test_right_homogeneity(seed):
    rng = np.random.default_rng(seed)
    tup = small_tuple(rng, 2, 0.08)
    g = random_invertible(rng, 2, cond=2.0)
    cfg = PhiConfig(translate=False, **FAST)
    a = phi_chain(single(tup), cfg)
    b = phi_chain(single([X @ g for X in tup]), cfg)
    assert abs(a.total_value - b.total_value) <= 5 * (a.total_error_bound + b.total_error_bound)


def test_left_unitary_invariance(rng):
    tup = small_tuple(rng, 3, 0.08)
    moved = [random_unitary(rng, 3) @ X for X in tup]
    for X, Y in zip(tup, moved):
        assert np.allclose(linalg.pdh_reduce(X), linalg.pdh_reduce(Y), atol=1e-12)
    a = phi_chain(single(tup), PhiConfig(**FAST))
    b = phi_chain(single(moved), PhiConfig(**FAST))
    assert abs(a.total_value - b.total_value) <= a.total_error_bound + b.total_error_bound


def test_translate_is_value_preserving(rng):
    tup = small_tuple(rng, 2, 0.1)
    a = phi_chain(single(tup), PhiConfig(translate=True, **FAST))
    b = phi_chain(single(tup), PhiConfig(translate=False, **FAST))
    assert abs(a.total_value - b.total_value) <= a.total_error_bound + b.total_error_bound


def test_repeated_entry_on_and_off(rng):
    A, B, C = small_tuple(rng, 3, 0.02)[:3]
    z = single([A, B, A, C])
    on = phi_chain(z)
    assert on.total_value == 0 and on.per_term[0].status == "skipped"
    off = phi_chain(z, PhiConfig(skip_repeated=False))
    t = off.per_term[0]
    assert t.status == "ok"
    assert abs(t.value) <= 1e-9 * max(t.pos_sum, t.pos_imag)


def boundary_chain(X):
    terms = []
    for i in range(len(X)):
        terms.append(((-1) ** i, tuple(X[:i] + X[i + 1 :])))
    return GroupChain(3, terms)


@pytest.mark.parametrize("eps", [0.05, 0.1])
def test_cocycle_identity(rng, eps):
    X = [expm_hermitian(random_hermitian(rng, 2, eps)) for _ in range(5)]
    rep = phi_chain(boundary_chain(X), PhiConfig(**FAST))
    assert rep.ok
    assert max(abs(t.value) for t in rep.per_term) > 1e3 * abs(rep.total_value)
    assert abs(rep.total_value) <= rep.total_error_bound + 1e-13


def test_cycle_stable_under_depth(rng):
    X = [expm_hermitian(random_hermitian(rng, 2, 0.08)) for _ in range(5)]
    z = boundary_chain(X)
    a = phi_chain(z, PhiConfig(**FAST))
    b = phi_chain(z, PhiConfig(min_depth=1, **FAST))
    assert all(t.max_depth_used >= 1 for t in b.per_term)
    assert abs(a.total_value - b.total_value) <= a.total_error_bound + b.total_error_bound


def test_report_invariants(rng):
    terms = [(c, tuple(small_tuple(rng, 2, 0.1))) for c in (3, -1, 2)]
    rep = phi_chain(GroupChain(3, terms), PhiConfig(**FAST))
    assert rep.total_value == sum(t.coefficient * t.value for t in rep.per_term)
    assert rep.total_error_bound == pytest.approx(
        sum(abs(t.coefficient) * t.error_bound for t in rep.per_term)
    )
    d = rep.to_dict()
    assert d["ok"] and len(d["per_term"]) == 3
    assert d["config"]["theta"] == 0.25
    assert d["total_value"] == [rep.total_value.real, rep.total_value.imag]


def test_worker_count_does_not_change_results(rng):
    X = [expm_hermitian(random_hermitian(rng, 2, 0.1)) for _ in range(5)]
    z = boundary_chain(X)
    a = phi_chain(z, PhiConfig(workers=1, min_depth=1, k_max=8, tol=1e-6))
    b = phi_chain(z, PhiConfig(workers=2, min_depth=1, k_max=8, tol=1e-6))
    assert a.total_value == b.total_value
    assert a.total_error_bound == b.total_error_bound
    for s, t in zip(a.per_term, b.per_term):
        assert (s.value, s.pos_sum, s.neg_sum) == (t.value, t.pos_sum, t.neg_sum)


def test_depth_exceeded_is_reported(rng):
    big = [np.diag([1.0, 50.0]), I(), np.diag([30.0, 1.0]), np.diag([2.0, 7.0])]
    ok = small_tuple(rng)
    cfg = PhiConfig(max_depth=1, **FAST)
    rep = phi_chain(GroupChain(3, [(1, tuple(big)), (1, tuple(ok))]), cfg)
    bad, good = rep.per_term
    assert bad.status == "depth_exceeded" and not bad.ok
    assert bad.max_u_norm > 0.4 and bad.error_bound == math.inf
    assert good.status == "ok"
    assert not rep.ok and math.isnan(rep.total_value.real)


def test_forced_run_is_uncertified():
    big = [np.diag([1.0, 50.0]), I(), np.diag([30.0, 1.0]), np.diag([2.0, 7.0])]
    cfg = PhiConfig(max_depth=1, min_depth=1, force=True, k_max=3)
    t = phi_chain(single(big), cfg).per_term[0]
    assert t.status == "uncertified" and t.simplex_count == 24
    assert t.error_bound == math.inf and np.isfinite(t.value)


def test_singular_entry_is_reported(rng):
    sing = [I(), np.diag([1.0, 0.0]), I() * 2, I() * 3]
    rep = phi_chain(single(sing))
    assert rep.per_term[0].status == "singular"


def test_truncated_status(rng):
    X = small_tuple(rng, 2, 0.05)
    t = phi_chain(single(X), PhiConfig(k_max=2, tol=1e-14, method="grouped")).per_term[0]
    assert t.status == "truncated" and t.ok is False
    assert np.isfinite(t.error_bound) and t.k_reached == 2


def test_config_validation():
    for bad in (
        dict(theta=0.5),
        dict(tol=0),
        dict(k_max=0),
        dict(min_depth=3, max_depth=2),
        dict(simplex_budget=0),
        dict(coordinates="polar"),
        dict(method="bfs"),
        dict(workers=0),
    ):
        with pytest.raises(ValueError):
            PhiConfig(**bad)


def test_near_identity_leaf_count(rng):
    rep = phi_chain(single(near_identity_vertices(rng, 3, 0.02)))
    assert rep.per_term[0].simplex_count == 1
