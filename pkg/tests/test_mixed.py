import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclp.errors import DomainError, SizeError
from nclp.mixed import (
    GAP_TOL,
    diag_column_embed,
    dual_bound,
    mixed_norm,
    mixed_norm_lower,
    mixed_norm_upper,
    reevaluate_certificate,
)
from nclp.spectral import INF, random_psd, schatten_norm
from oracles import commutative_mixed_norm, commuting_tuple, dpq_value, random_matrix, random_unitary, rel_close

INTERIOR = [(3, 1.5), (1.5, 3), (2, 4), (4, 2), (1.2, 6), (6, 1.2)]
ENDPOINTS = [(1, 2), (2, 1), (2, INF), (INF, 2), (1, INF), (INF, 1), (INF, 3), (3, INF)]
ALL_PAIRS = INTERIOR + ENDPOINTS + [(2, 2), (1, 1), (INF, INF)]


def bracket(est, truth, slack=1e-9):
    return est.lower <= truth * (1 + slack) and truth <= est.upper * (1 + slack)


def check_certificates(est, xs):
    for side, cert in est.certificate.items():
        again = reevaluate_certificate(cert, xs, est.p, est.q)
        assert rel_close(again, cert.bound, 1e-9), (side, again, cert.bound)


@pytest.mark.parametrize("p,q", ALL_PAIRS)
def test_singleton_is_schatten_norm(p, q):
    m = random_matrix(np.random.default_rng(1), 3)
    est = mixed_norm([m], p, q)
    assert bracket(est, schatten_norm(m, p))
    assert est.gap <= GAP_TOL and est.status == "converged"


@pytest.mark.parametrize("p", [1, 1.5, 2, 4])
def test_equal_positive_items_at_q_inf(p):
    x = random_psd(4, 3).entries
    est = mixed_norm_upper([x, x, x], p, INF)
    assert bracket(est, schatten_norm(x, p), 1e-7)


@pytest.mark.parametrize("p,q", ALL_PAIRS)
def test_commutative_oracle(p, q):
    rng = np.random.default_rng(7)
    xs, d = commuting_tuple(rng, 4, 3)
    est = mixed_norm(xs, p, q)
    assert bracket(est, commutative_mixed_norm(d, p, q))
    assert est.gap <= GAP_TOL
    check_certificates(est, xs)


def test_disjoint_diagonal_blocks():
    rng = np.random.default_rng(3)
    n = 4
    xs = np.zeros((2, n, n), dtype=complex)
    xs[0, :2, :2] = np.diag(rng.standard_normal(2))
    xs[1, 2:, 2:] = np.diag(rng.standard_normal(2))
    d = np.array([np.diag(x) for x in xs])
    for p, q in [(3, 1.5), (1.5, 3), (2, INF)]:
        assert bracket(mixed_norm(xs, p, q), commutative_mixed_norm(d, p, q))


@pytest.mark.parametrize("p,q", INTERIOR + [(2, INF), (INF, 2)])
@pytest.mark.parametrize("m", [2, 4, 8])
def test_diagonal_column_element(p, q, m):
    c = np.random.default_rng(m).uniform(0.1, 2.0, m)
    est = mixed_norm(diag_column_embed(c), p, q)
    assert bracket(est, dpq_value(c, p, q))
    assert est.gap <= GAP_TOL


@pytest.mark.parametrize("p,q", [(3, 1.5), (1, 2), (2, INF), (INF, 1)])
def test_diag_embed_ones_and_unit(p, q):
    from oracles import r_pq

    assert bracket(mixed_norm(diag_column_embed([1.0]), p, q), 1.0)
    m = 5
    assert bracket(mixed_norm(diag_column_embed(np.ones(m)), p, q), m ** (1 / r_pq(p, q)), 1e-7)


def test_diag_embed_permutation():
    c = np.array([0.3, 1.2, 2.0, 0.7])
    a = mixed_norm(diag_column_embed(c), 3, 1.5)
    b = mixed_norm(diag_column_embed(c[::-1]), 3, 1.5)
    assert rel_close(a.value, b.value, 1e-9)


def test_diag_embed_shape_and_budget():
    xs = diag_column_embed([2.0, -1.0])
    assert xs.shape == (2, 2, 2)
    assert xs[0, 0, 0] == 2 and xs[1, 1, 0] == -1 and np.count_nonzero(xs) == 2
    with pytest.raises(SizeError):
        diag_column_embed(np.ones(17))


@pytest.mark.parametrize("p,q", [(2, 3), (INF, 2), (1, INF)])
def test_zero_tuple(p, q):
    est = mixed_norm(np.zeros((3, 2, 2)), p, q)
    assert est.value == est.lower == est.upper == 0.0


@pytest.mark.parametrize("p", [1, 1.5, 3, INF])
def test_p_equals_q_is_exact(p):
    rng = np.random.default_rng(2)
    xs = np.stack([random_matrix(rng, 3) for _ in range(4)])
    truth = (sum(schatten_norm(x, p) ** p for x in xs) ** (1 / p)) if p != INF else max(
        schatten_norm(x, INF) for x in xs)
    lo = mixed_norm_lower(xs, p, p)
    up = mixed_norm_upper(xs, p, p)
    assert lo.lower == lo.upper == up.lower == up.upper
    assert rel_close(lo.value, truth, 1e-13)
    np.testing.assert_array_equal(lo.certificate["lower"].data["alpha"], np.eye(3))


def test_side_preconditions():
    xs = np.stack([np.eye(2)] * 2)
    with pytest.raises(DomainError):
        mixed_norm_upper(xs, 3, 2)
    with pytest.raises(DomainError):
        mixed_norm_lower(xs, 2, 3)
    for p, q in [(0.5, 2), (2, 0.5)]:
        with pytest.raises(DomainError):
            mixed_norm(xs, p, q)
    with pytest.raises(DomainError):
        mixed_norm([np.eye(2), np.eye(3)], 2, 3)


@pytest.mark.parametrize("p,q", [(3, 1.5), (1.5, 3), (2, INF), (INF, 2)])
def test_random_tuples_certificates(p, q):
    rng = np.random.default_rng(11)
    xs = np.stack([random_matrix(rng, 4) for _ in range(3)])
    est = mixed_norm(xs, p, q)
    assert est.lower <= est.value <= est.upper
    assert est.gap <= GAP_TOL
    check_certificates(est, xs)
    json.dumps(est.to_json())


# ---------------------------------------------------------------------------
# duality


def test_dual_bound_self_dual():
    rng = np.random.default_rng(4)
    xs = np.stack([random_matrix(rng, 3) for _ in range(3)])
    truth = math.sqrt(sum(schatten_norm(x, 2) ** 2 for x in xs))
    assert rel_close(dual_bound(xs, 2, 2, xs), truth, 1e-12)


@pytest.mark.parametrize("p,q", [(3, 1.5), (1.5, 3), (2, 4)])
def test_dual_bound_below_upper(p, q):
    rng = np.random.default_rng(5)
    xs, d = commuting_tuple(rng, 3, 3)
    up = mixed_norm(xs, p, q).upper
    for _ in range(5):
        zs = np.stack([random_matrix(rng, 3) for _ in range(3)])
        assert dual_bound(xs, p, q, zs) <= up + 1e-8


def test_dual_bound_scaling_and_errors():
    rng = np.random.default_rng(6)
    xs = np.stack([random_matrix(rng, 3) for _ in range(2)])
    zs = np.stack([random_matrix(rng, 3) for _ in range(2)])
    a = dual_bound(xs, 3, 1.5, zs)
    b = dual_bound(xs, 3, 1.5, (2.5 - 1j) * zs)
    assert rel_close(a, b, 1e-8)
    with pytest.raises(DomainError):
        dual_bound(xs, 3, 1.5, np.zeros_like(zs))
    with pytest.raises(DomainError):
        dual_bound(xs, 1, 2, zs)


# ---------------------------------------------------------------------------
# invariances


def _random_case(seed, n, m):
    rng = np.random.default_rng(seed)
    return rng, np.stack([random_matrix(rng, n) for _ in range(m)])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(INTERIOR))
def test_unitary_invariance_interior(seed, pq):
    p, q = pq
    rng, xs = _random_case(seed, 3, 3)
    u, v = random_unitary(rng, 3), random_unitary(rng, 3)
    a, b = mixed_norm(xs, p, q), mixed_norm(u @ xs @ v, p, q)
    for x, y in ((a.lower, b.lower), (a.upper, b.upper), (a.value, b.value)):
        assert rel_close(x, y, 1e-8)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from([(1, 2), (2, INF), (INF, 2), (INF, 1)]))
def test_unitary_invariance_endpoints(seed, pq):
    # Endpoint solvers stop near 1e-8 relative, so the brackets must overlap.
    p, q = pq
    rng, xs = _random_case(seed, 3, 3)
    u, v = random_unitary(rng, 3), random_unitary(rng, 3)
    a, b = mixed_norm(xs, p, q), mixed_norm(u @ xs @ v, p, q)
    assert a.lower <= b.upper * (1 + 1e-8) and b.lower <= a.upper * (1 + 1e-8)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.sampled_from(INTERIOR + [(2, INF)]), st.floats(0.1, 10))
def test_homogeneity_and_permutation(seed, pq, c):
    p, q = pq
    rng, xs = _random_case(seed, 3, 3)
    a = mixed_norm(xs, p, q)
    b = mixed_norm(c * xs[::-1], p, q)
    assert b.lower <= c * a.upper * (1 + 1e-8) and c * a.lower <= b.upper * (1 + 1e-8)


@pytest.mark.parametrize("p,q", [(3, 1.5), (1.5, 3), (2, INF), (INF, 2)])
def test_appending(p, q):
    rng, xs = _random_case(21, 3, 2)
    base = mixed_norm(xs, p, q)
    with_zero = mixed_norm(np.concatenate([xs, np.zeros((1, 3, 3))]), p, q)
    assert with_zero.lower <= base.upper * (1 + 1e-8) and base.lower <= with_zero.upper * (1 + 1e-8)
    bigger = mixed_norm(np.concatenate([xs, random_matrix(rng, 3)[None]]), p, q)
    assert bigger.lower >= base.lower * (1 - 1e-8)
