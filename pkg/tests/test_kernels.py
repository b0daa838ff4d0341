"""The numba kernels and their numpy fallbacks must agree."""

import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entopt import _kernels as K

pytestmark = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba not installed")


@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_eigh_paths_agree(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    M = 0.5 * (G + G.T)
    w_nb, V_nb, status = K.eigh_nb(M)
    w_np, _, _ = K.eigh_np(M)
    assert status == 0
    np.testing.assert_allclose(np.sort(w_nb), np.sort(w_np), atol=1e-10)
    np.testing.assert_allclose((V_nb * w_nb) @ V_nb.T, M, atol=1e-10)


def test_eigh_repeated_eigenvalues():
    M = np.eye(7) * 3.0
    M[0, 0] = 1.0
    w, V, status = K.eigh_nb(M)
    assert status == 0
    np.testing.assert_allclose(np.sort(w), [1] + [3] * 6)


@given(st.integers(3, 9), st.integers(0, 2**32 - 1))
def test_subset_logdets_agree(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n - 1))
    C = G @ G.T  # singular, so some subsets give -inf
    s = int(rng.integers(1, n))
    combos = np.array(list(itertools.combinations(range(n), s)))
    a = K.subset_logdets_nb(C, combos)
    b = K.subset_logdets_np(C, combos)
    np.testing.assert_array_equal(np.isneginf(a), np.isneginf(b))
    fin = np.isfinite(a)
    np.testing.assert_allclose(a[fin], b[fin], atol=1e-10)


@given(st.integers(3, 9), st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_gram_logdets_agree(n, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m))
    BtB = np.eye(m) * 0.3
    s = int(rng.integers(1, n))
    combos = np.array(list(itertools.combinations(range(n), s)))
    np.testing.assert_allclose(K.gram_logdets_nb(A, BtB, combos), K.gram_logdets_np(A, BtB, combos), atol=1e-10)


@given(st.integers(2, 15), st.integers(0, 2**32 - 1))
def test_gauss_seidel_agree(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n)) * 0.1
    Psi = G @ G.T + np.eye(n)
    Psi = Psi + np.diag(np.sum(np.abs(Psi), axis=1))  # strictly dominant
    a = K.gauss_seidel_nb(Psi, 10 * n * n, 1e-13)
    b = K.gauss_seidel_np(Psi, 10 * n * n, 1e-13)
    np.testing.assert_allclose(a[0], b[0], atol=1e-12)
    np.testing.assert_allclose(Psi @ a[0], np.ones(n), atol=1e-10)


@given(st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_capped_simplex_projection_agree(n, seed):
    rng = np.random.default_rng(seed)
    y = rng.standard_normal(n) * 2
    s = float(rng.integers(0, n + 1))
    a = K.capped_simplex_nb(y, s)
    b = K.capped_simplex_np(y, s)
    np.testing.assert_allclose(a, b, atol=1e-10)
    assert abs(a.sum() - s) <= 1e-9
    assert np.all(a >= -1e-12) and np.all(a <= 1 + 1e-12)
