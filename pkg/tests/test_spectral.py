import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg as sla

from nclp.errors import DomainError
from nclp.spectral import (
    INF,
    ExponentTriple,
    as_psd,
    conjugate_exponent,
    decreasing_rearrangement,
    frechet_power,
    hermitian_eig,
    kron,
    matrix_from_json,
    matrix_to_json,
    psd_power,
    random_psd,
    schatten_norm,
)
from oracles import random_matrix, random_unitary, rel_close

EXPONENTS = [0.5, 1.0, 1.5, 2.0, 3.0, INF]


def test_eig_identity():
    w, u = hermitian_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(u.conj().T @ u, np.eye(3), atol=1e-12)


def test_eig_rank_one():
    w, _ = hermitian_eig([[1, 1], [1, 1]])
    np.testing.assert_allclose(w, [2, 0], atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_eig_reconstruction(seed):
    rng = np.random.default_rng(seed)
    g = random_matrix(rng, 5)
    m = g + g.conj().T
    w, u = hermitian_eig(m)
    assert np.all(np.diff(w) <= 0)
    assert np.linalg.norm(m - (u * w) @ u.conj().T) <= 1e-10 * np.linalg.norm(m)
    assert np.linalg.norm(u.conj().T @ u - np.eye(5)) <= 1e-10


def test_eig_rejects_non_hermitian():
    with pytest.raises(DomainError):
        hermitian_eig([[1, 2], [0, 1]])


@pytest.mark.parametrize("p", EXPONENTS)
def test_schatten_identity(p):
    expected = 1.0 if p == INF else 4 ** (1 / p)
    assert rel_close(schatten_norm(np.eye(4), p), expected, 1e-14)


@pytest.mark.parametrize("p", EXPONENTS)
def test_schatten_rank_one(p):
    assert rel_close(schatten_norm([[1, 1], [1, 1]], p), 2.0, 1e-14)


def test_schatten_against_scipy_svd():
    rng = np.random.default_rng(11)
    m = random_matrix(rng, 4)
    s = sla.svdvals(m)
    assert rel_close(schatten_norm(m, 1.5), float(np.sum(s**1.5) ** (1 / 1.5)), 1e-10)


@pytest.mark.parametrize("p", [0, -1])
def test_schatten_rejects_bad_exponent(p):
    with pytest.raises(DomainError):
        schatten_norm(np.eye(2), p)


def test_psd_power_examples():
    np.testing.assert_allclose(psd_power(np.eye(3), 0.7).entries, np.eye(3), atol=1e-14)
    np.testing.assert_allclose(psd_power(np.diag([4.0, 9.0]), 0.5).entries, np.diag([2.0, 3.0]), atol=1e-14)
    x = np.array([[1.0, 1.0], [1.0, 1.0]])
    for a in (0.3, 1.0, 2.5):
        np.testing.assert_allclose(psd_power(x, a).entries, 2 ** (a - 1) * x, atol=1e-13)


def test_psd_power_rejects_indefinite():
    with pytest.raises(DomainError):
        psd_power(np.diag([1.0, -0.5]), 0.5)
    with pytest.raises(DomainError):
        psd_power(np.eye(2), 0.0)


def test_psd_clips_dust():
    m = as_psd(np.diag([1.0, -1e-14]))
    assert m.eigenvalues.min() == 0.0


def test_kron_examples():
    np.testing.assert_allclose(kron(np.eye(2), np.eye(3)), np.eye(6))
    x = np.array([[1.0, 1.0], [1.0, 1.0]])
    xx = kron(x, x)
    assert np.linalg.matrix_rank(xx) == 1
    for p in EXPONENTS:
        assert rel_close(schatten_norm(xx, p), 4.0, 1e-13)


@pytest.mark.parametrize("seed", range(3))
def test_kron_multiplicative(seed):
    rng = np.random.default_rng(seed)
    a, b = random_matrix(rng, 3), random_matrix(rng, 3)
    for p in (1.0, 1.7, INF):
        assert rel_close(schatten_norm(kron(a, b), p), schatten_norm(a, p) * schatten_norm(b, p), 1e-10)


def test_random_psd_contract():
    one = random_psd(0, 1)
    assert one.dim == 1 and one.eigenvalues[0] >= 0
    a, b = random_psd(5, 4), random_psd(5, 4)
    assert np.array_equal(a.entries, b.entries)
    m = random_psd(1, 4)
    assert m.eigenvalues.min() > 0
    assert np.allclose(m.entries, m.entries.conj().T)


def test_decreasing_rearrangement():
    np.testing.assert_array_equal(decreasing_rearrangement([1, -3, 2]), [3, 2, 1])
    assert decreasing_rearrangement([]).size == 0
    v = np.array([5.0, 3.0, 1.0])
    np.testing.assert_array_equal(decreasing_rearrangement(v), v)


@pytest.mark.parametrize("p,q", [(1, 2), (2, 2), (3, 1.5), (INF, 2), (2, INF), (1.5, 1)])
def test_exponent_triple_relations(p, q):
    e = ExponentTriple(p, q)
    ip = 0 if p == INF else 1 / p
    iq = 0 if q == INF else 1 / q
    if p <= q:
        ir = 0 if e.r == INF else 1 / e.r
        assert abs(ir - (ip - iq)) <= 1e-14
    if p >= q:
        is_ = 0 if e.s == INF else 1 / e.s
        assert abs(is_ - (iq - ip)) <= 1e-14
    assert abs(1 / e.r_pq - (ip / 2 + iq / 2)) <= 1e-14


def test_exponent_triple_domain():
    with pytest.raises(DomainError):
        ExponentTriple(0, 2)
    with pytest.raises(DomainError):
        ExponentTriple(2, 2, theta=1.0)
    with pytest.raises(DomainError):
        ExponentTriple(0.5, 2).mixed_norm_domain()
    assert conjugate_exponent(1) == INF and conjugate_exponent(INF) == 1


def test_matrix_json_roundtrip():
    rng = np.random.default_rng(2)
    m = random_matrix(rng, 3)
    obj = matrix_to_json(m)
    assert obj["dim"] == 3 and len(obj["re"]) == 9
    np.testing.assert_array_equal(matrix_from_json(obj), m)
    with pytest.raises(DomainError):
        matrix_from_json({"dim": 2, "re": [1, 2, 3]})


def test_frechet_power_matches_finite_difference():
    rng = np.random.default_rng(3)
    s = random_psd(3, 4).entries + 0.5 * np.eye(4)
    h = random_matrix(rng, 4)
    h = h + h.conj().T
    w, u = np.linalg.eigh(s)
    d = frechet_power(w, u, 0.6, h)
    eps = 1e-6
    fd = (psd_power(s + eps * h, 0.6).entries - psd_power(s - eps * h, 0.6).entries) / (2 * eps)
    assert np.abs(d - fd).max() <= 1e-7


# ---------------------------------------------------------------------------
# properties

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 6)


@settings(max_examples=60, deadline=None)
@given(seeds, dims, st.sampled_from(EXPONENTS))
def test_unitary_invariance(seed, n, p):
    rng = np.random.default_rng(seed)
    m = random_matrix(rng, n)
    u, v = random_unitary(rng, n), random_unitary(rng, n)
    assert rel_close(schatten_norm(u @ m @ v, p), schatten_norm(m, p), 1e-10)


@settings(max_examples=60, deadline=None)
@given(seeds, dims, st.sampled_from(EXPONENTS), st.sampled_from(EXPONENTS))
def test_monotone_in_p(seed, n, p, q):
    if p > q:
        p, q = q, p
    m = random_matrix(np.random.default_rng(seed), n)
    assert schatten_norm(m, q) <= schatten_norm(m, p) * (1 + 1e-12) + 1e-12


@settings(max_examples=60, deadline=None)
@given(seeds, dims, st.sampled_from([1.0, 1.5, 2.0, 3.0, INF]), st.sampled_from([1.0, 2.0, 4.0, INF]))
def test_holder(seed, n, p, q):
    rng = np.random.default_rng(seed)
    x, y = random_matrix(rng, n), random_matrix(rng, n)
    ir = (0 if p == INF else 1 / p) + (0 if q == INF else 1 / q)
    r = INF if ir == 0 else 1 / ir
    assert schatten_norm(x @ y, r) <= (1 + 1e-10) * schatten_norm(x, p) * schatten_norm(y, q)


@settings(max_examples=60, deadline=None)
@given(seeds, dims, st.sampled_from([0.3, 0.5, 0.8]))
def test_p_triangle_below_one(seed, n, p):
    x, y = random_psd(seed, n), random_psd(seed + 1, n)
    lhs = schatten_norm(x.entries + y.entries, p) ** p
    assert lhs <= schatten_norm(x, p) ** p + schatten_norm(y, p) ** p + 1e-10 * max(lhs, 1)


@settings(max_examples=60, deadline=None)
@given(seeds, dims, st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_power_composition(seed, n, a, b):
    m = random_psd(seed, n)
    lhs = psd_power(psd_power(m, a), b).entries
    rhs = psd_power(m, a * b).entries
    assert np.linalg.norm(lhs - rhs) <= 1e-9 * max(np.linalg.norm(rhs), 1e-300)


@settings(max_examples=40, deadline=None)
@given(seeds, dims, st.floats(0.2, 3.0))
def test_power_inverse(seed, n, a):
    m = random_psd(seed, n)
    back = psd_power(psd_power(m, a), 1 / a).entries
    assert np.linalg.norm(back - m.entries) <= 1e-9 * np.linalg.norm(m.entries) * max(1, math.sqrt(n))
