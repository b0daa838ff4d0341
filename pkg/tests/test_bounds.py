import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entopt.bounds import (
    all_kinds,
    best_p,
    compute_bound,
    d_induced,
    ddfact,
    ddfact_plus,
    diagonal_mesp,
    gamma,
    hadamard_dopt,
    linx_bound,
    linx_opt_gamma,
    lmo,
    m_induced,
    natural_dopt,
    nlp_bound,
    nlp_di,
    nlp_id,
    phi,
    reduce_columns,
    spectral_dopt,
    spectral_mesp,
    split_index,
)
from entopt.errors import ValidationError
from entopt.instances import DOptInstance, MespInstance, brute_force, complement_mesp, map_d

from .conftest import random_pd

TOL = 1e-7  # per-solve tolerance used where two solves are compared


# ---------------------------------------------------------------------------
# the spectral function
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("w, s, want", [((3, 1, 1), 2, 1), ((1, 1, 1), 2, 0), ((5, 0, 0), 2, 1)])
def test_split_index(w, s, want):
    assert split_index(np.array(w, float), s) == want


def test_split_index_rejects_unsorted():
    with pytest.raises(ValidationError):
        split_index(np.array([1.0, 3.0]), 1)


def test_phi_examples():
    assert phi(np.array([3.0, 1.0, 1.0]), 2) == pytest.approx(math.log(6))
    assert phi(np.ones(3), 3) == pytest.approx(0.0)
    # the tail average runs over every remaining entry, not just the first s
    assert phi(np.ones(5), 3) == pytest.approx(3 * math.log(5 / 3))
    e2 = math.exp(2)
    assert phi(np.array([e2, e2]), 1) == pytest.approx(2 + math.log(2))


def test_gamma_examples():
    assert gamma(np.diag([3.0, 1.0, 1.0]), 2) == pytest.approx(math.log(6))
    assert gamma(np.zeros((4, 4)), 3, shift=2.5) == pytest.approx(3 * math.log(2.5))


@given(st.lists(st.floats(0.01, 100), min_size=2, max_size=10), st.data())
def test_phi_split_is_unique_and_valid(w, data):
    w = np.sort(np.array(w))[::-1]
    s = data.draw(st.integers(1, len(w)))
    i = split_index(w, s)
    tail = w[i:].sum() / (s - i)
    assert tail >= w[i] - 1e-12
    if i:
        assert w[i - 1] > tail - 1e-12
    # averaging the tail can only raise the sum of the top-s logs
    assert phi(w, s) >= float(np.sum(np.log(w[:s]))) - 1e-9


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------


def test_spectral_and_diag_examples(example_c):
    mi = MespInstance(example_c, 2)
    assert spectral_mesp(mi).value == pytest.approx(math.log(2.5 + math.sqrt(4.25)), abs=1e-12)
    assert spectral_mesp(mi).value == pytest.approx(1.5176, abs=1e-4)
    assert diagonal_mesp(mi).value == pytest.approx(math.log(6), abs=1e-12)
    assert spectral_mesp(MespInstance(np.eye(4), 2)).value == pytest.approx(0.0)
    assert diagonal_mesp(MespInstance(np.eye(4), 2)).value == 0.0


def test_diag_exact_on_diagonal():
    mi = MespInstance(np.diag([5.0, 1.0, 3.0, 2.0]), 2)
    assert diagonal_mesp(mi).value == pytest.approx(brute_force(mi)[0])


def test_dopt_closed_forms():
    d = DOptInstance([[1.0], [2.0]], [[1.0]], 1)
    assert spectral_dopt(d).value == pytest.approx(math.log(6))
    assert hadamard_dopt(d).value == pytest.approx(math.log(5))


# ---------------------------------------------------------------------------
# relaxation bounds
# ---------------------------------------------------------------------------


def test_natural_examples():
    assert natural_dopt(DOptInstance(np.eye(2), np.eye(2), 1), tol=1e-10).value == pytest.approx(
        2 * math.log(1.5), abs=1e-8)
    assert natural_dopt(DOptInstance([[1.0], [1.0]], [[1.0]], 1), tol=1e-10).value == pytest.approx(
        math.log(2), abs=1e-8)


@pytest.mark.parametrize("gd, want", [(1.0, 1.0), (math.exp(2), 4.0), (math.e, (1 + math.sqrt(5)) ** 2 / 4), (0.5, 1.0)])
def test_best_p(gd, want):
    assert best_p(np.array([gd]), 1.0)[0] == pytest.approx(want)


def test_nlp_examples():
    mi = MespInstance(np.diag([2.0, 1.0]), 1)
    assert nlp_bound(mi, np.array([2.0, 2.0]), 0.5, tol=1e-10).value == pytest.approx(math.log(2), abs=1e-8)
    assert nlp_id(mi, tol=1e-10).value == pytest.approx(math.log(2), abs=1e-8)
    assert nlp_id(MespInstance(3.0 * np.eye(4), 2), tol=1e-10).value == pytest.approx(2 * math.log(3), abs=1e-8)


def test_nlp_user_exponent_is_flagged():
    mi = MespInstance(np.diag([2.0, 1.0]), 1)
    r = nlp_bound(mi, np.array([2.0, 2.0]), 2.0, p=np.array([1.0, 1.0]))
    assert "uncertified-concavity" in r.notes


def test_nlp_di_needs_positive_diagonal():
    with pytest.raises(ValidationError):
        nlp_di(MespInstance(np.diag([2.0, 0.0]), 1))


def test_ddfact_examples():
    assert ddfact(MespInstance(np.diag([3.0, 2.0, 1.0]), 2), tol=1e-10).value == pytest.approx(math.log(6), abs=1e-8)
    assert ddfact(MespInstance(np.eye(4), 2), tol=1e-10).value == pytest.approx(0.0, abs=1e-8)


def test_linx_examples():
    assert linx_bound(MespInstance(np.eye(3), 1), 1.0, tol=1e-10).value == pytest.approx(0.0, abs=1e-8)
    mi = MespInstance(np.diag([2.0, 1.0]), 1)
    assert linx_bound(mi, 1.0, tol=1e-10).value == pytest.approx(math.log(2), abs=1e-8)
    assert linx_opt_gamma(mi, tol=1e-10).value <= linx_bound(mi, 0.5, tol=1e-10).value + 1e-9


def test_lmo_ties_by_index():
    np.testing.assert_array_equal(lmo(np.array([1.0, 2.0, 2.0, 0.0]), 2), [0, 1, 1, 0])
    np.testing.assert_array_equal(lmo(np.array([1.0, 1.0, 1.0]), 2), [1, 1, 0])


def test_certificate_is_the_linearization_gap():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((9, 3))
    B = 0.5 * np.eye(3)
    d = DOptInstance(A, B, 4)
    r = natural_dopt(d, tol=1e-8)
    x = r.relax_point
    assert abs(x.sum() - 4) <= 1e-10 and x.min() >= 0 and x.max() <= 1
    M = A.T @ (x[:, None] * A) + B.T @ B
    f = np.linalg.slogdet(M)[1]
    g = np.einsum("ij,jk,ik->i", A, np.linalg.inv(M), A)
    gap = np.sort(g)[::-1][:4].sum() - g @ x
    assert r.value - r.cert_gap == pytest.approx(f, abs=1e-9)
    assert r.cert_gap == pytest.approx(gap, abs=1e-9)
    assert r.cert_gap <= 1e-8 * max(1, abs(r.value))


# ---------------------------------------------------------------------------
# transfers
# ---------------------------------------------------------------------------


def test_transfer_examples():
    rng = np.random.default_rng(11)
    d = DOptInstance(rng.standard_normal((7, 3)), rng.standard_normal((3, 3)), 3)
    assert m_induced("spectral", d).value == pytest.approx(spectral_dopt(d).value, abs=1e-8)
    mi = MespInstance(random_pd(rng, 7), 3)
    assert d_induced("natural", mi, tol=TOL).value == pytest.approx(nlp_id(mi, tol=TOL).value, abs=5e-6)
    assert d_induced("dspectral", mi).value == pytest.approx(spectral_mesp(mi).value, abs=1e-9)
    assert d_induced("hadamard", mi).value == pytest.approx(
        diagonal_mesp(complement_mesp(mi)).value, abs=1e-9)


def test_m_induced_nlpid_below_natural_when_rank_a_is_n():
    rng = np.random.default_rng(2)
    d = DOptInstance(rng.standard_normal((4, 6)), np.eye(6), 2)
    assert m_induced("nlp-id", d, tol=1e-9).value < natural_dopt(d, tol=1e-9).value - 1e-6


def test_reduce_columns_drops_top_cluster():
    rng = np.random.default_rng(5)
    Q, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    lam = np.array([4.0, 4.0, 4.0, 2.0, 1.5, 1.0])
    mi = MespInstance((Q * lam) @ Q.T, 3)
    d = map_d(mi)
    red = reduce_columns(d)
    assert red.m == 6 - 3
    one = MespInstance(np.diag([4.0, 2.0, 1.0]), 1)
    assert reduce_columns(map_d(one)).m == 2
    with pytest.raises(ValidationError):
        reduce_columns(DOptInstance(np.ones((3, 2)) + np.eye(3, 2), [[1.0, 1.0]], 2))


def test_unknown_kind():
    with pytest.raises(ValidationError):
        compute_bound(MespInstance(np.eye(3), 1), "no-such-bound")


# ---------------------------------------------------------------------------
# validity against enumeration
# ---------------------------------------------------------------------------

FAST_KINDS = [k for k in all_kinds() if k not in ("nlp-di", "comp-nlp-di", "linx-opt", "comp-linx-opt")]


@given(st.integers(4, 7), st.integers(0, 2**32 - 1), st.data())
def test_every_bound_is_valid_on_mesp(n, seed, data):
    rng = np.random.default_rng(seed)
    mi = MespInstance(random_pd(rng, n, eps=0.05), data.draw(st.integers(1, n - 1)))
    opt, _ = brute_force(mi)
    for kind in FAST_KINDS:
        assert compute_bound(mi, kind).value >= opt - 1e-6, kind


@given(st.integers(4, 7), st.integers(0, 2**32 - 1), st.data())
def test_every_bound_is_valid_on_dopt(n, seed, data):
    rng = np.random.default_rng(seed)
    m = data.draw(st.integers(1, 3))
    d = DOptInstance(rng.standard_normal((n, m)), rng.standard_normal((m, m)), data.draw(st.integers(1, n - 1)))
    opt, _ = brute_force(d)
    for kind in FAST_KINDS:
        assert compute_bound(d, kind).value >= opt - 1e-6, kind


@pytest.mark.parametrize("seed", range(4))
def test_slow_bounds_are_valid(seed):
    rng = np.random.default_rng(100 + seed)
    mi = MespInstance(random_pd(rng, 6), 2 + seed % 3)
    opt, _ = brute_force(mi)
    for kind in ("nlp-di", "linx-opt", "comp-linx-opt"):
        assert compute_bound(mi, kind).value >= opt - 1e-6, kind


# ---------------------------------------------------------------------------
# dominations
# ---------------------------------------------------------------------------


@given(st.integers(3, 9), st.integers(0, 2**32 - 1), st.data())
def test_factorization_dominations(n, seed, data):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, data.draw(st.integers(1, n))))
    mi = MespInstance(G @ G.T, data.draw(st.integers(1, n - 1)), check=False)
    if np.linalg.matrix_rank(G) < mi.s:
        return
    v = ddfact(mi, tol=TOL).value
    assert v <= diagonal_mesp(mi).value + 5e-6
    assert v <= spectral_mesp(mi).value + 5e-6


@given(st.integers(3, 9), st.integers(0, 2**32 - 1), st.data())
def test_nlpid_minus_spectral(n, seed, data):
    rng = np.random.default_rng(seed)
    mi = MespInstance(random_pd(rng, n), data.draw(st.integers(1, n - 1)))
    lam = np.linalg.eigvalsh(mi.C)[::-1]
    rhs = float(np.sum(np.log(lam[0] / lam[: mi.s])))
    assert nlp_id(mi, tol=TOL).value - spectral_mesp(mi).value <= rhs + 5e-6


def test_nlpid_below_spectral_inside_top_cluster():
    rng = np.random.default_rng(8)
    Q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
    lam = np.array([3.0, 3.0, 3.0, 2.0, 1.0, 0.5, 0.2])
    for s in (1, 2, 3):
        mi = MespInstance((Q * lam) @ Q.T, s)
        assert nlp_id(mi, tol=TOL).value <= spectral_mesp(mi).value + 5e-6


def test_ddfact_plus_within_spectral_and_natural():
    rng = np.random.default_rng(9)
    for _ in range(5):
        mi = MespInstance(random_pd(rng, 7), 3)
        assert ddfact_plus(mi, tol=TOL).value >= brute_force(mi)[0] - 1e-6
