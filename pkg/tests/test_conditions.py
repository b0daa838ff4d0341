import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entopt import conditions as cond
from entopt.errors import NumericError, ValidationError
from entopt.generate import projector_mesp
from entopt.instances import MespInstance
from entopt.rng import PortableRNG
from entopt.verify import worked_examples, worked_projector

from .conftest import random_pd


def test_identity_psi():
    Psi = np.eye(4)
    np.testing.assert_array_equal(cond.sassenfeld_coeffs(Psi), np.zeros(4))
    beta, sweeps, boxed = cond.gauss_seidel(Psi)
    np.testing.assert_array_equal(beta, np.ones(4))
    assert sweeps == 1 and boxed


def test_zero_diagonal_rejected():
    with pytest.raises(ValidationError):
        cond.sassenfeld_coeffs(np.array([[0.0, 1.0], [1.0, 1.0]]))


def test_sqrt30_example_exact():
    F = worked_projector("sqrt30")
    assert [F[i, i] for i in range(4)] == [Fraction(29, 30), Fraction(26, 30), Fraction(21, 30), Fraction(14, 30)]
    Psi = cond.psi_matrix(F)
    assert max(cond.sassenfeld_coeffs(Psi)) <= Fraction(34, 100)
    assert max(cond.rowsum_scaled(Psi)) <= Fraction(8, 10)
    # the published solution solves the system exactly
    beta = [Fraction(918, 929), Fraction(873, 929), Fraction(698, 929), Fraction(3393, 929), 1, 1]
    assert list(Psi @ np.array(beta, dtype=object)) == [1] * 6


def test_sqrt30_ladder():
    C = worked_projector("sqrt30").astype(float)
    rep = cond.check_conditions(C)
    assert not rep.diag_gt_half
    assert rep.sassenfeld_ok and rep.rowsum_ok and rep.gs_nonneg
    assert rep.verdict == "sassenfeld"
    want = np.array([918, 873, 698, 3393, 929, 929]) / 929
    np.testing.assert_allclose(rep.gs_beta, want, atol=1e-8)
    assert cond.trace_certificate(C, rep.gs_beta).ok


def test_sqrt14_example():
    F = worked_projector("sqrt14")
    beta = [Fraction(2, 3), Fraction(-5, 3), Fraction(10), 1, 1, 1]
    assert list(cond.psi_matrix(F) @ np.array(beta, dtype=object)) == [1] * 6
    rep = cond.check_conditions(F.astype(float))
    np.testing.assert_allclose(rep.solve_beta, np.array(beta, dtype=float), atol=1e-8)
    assert max(rep.sassenfeld_alpha) <= 0.56
    assert max(cond.rowsum_scaled(cond.psi_matrix(F.astype(float)))) == pytest.approx(1.46, abs=0.01)
    assert not rep.solve_nonneg


def test_two_column_example():
    F = worked_projector("two-col")
    Psi = cond.psi_matrix(F)
    y = np.array([Fraction(5, 8), Fraction(-9, 2), Fraction(19, 8), 0, 0, 0], dtype=object)
    assert sum(y) == Fraction(-3, 2)
    assert list(Psi.T @ y) == [0, 0, 1, 0, 0, 0]
    assert cond.farkas_certifies(Psi, y)
    C = F.astype(float)
    w = np.array([1, -1, 1, -1, 1, 1], dtype=float)
    cert = cond.check_omega(C, np.outer(w, w))
    assert cert.ok and cert.trace_value == pytest.approx(6)
    U = np.array([[7, 6, 3, 4, 0, 0], [-1, 2, 1, -2, 0, 0]], dtype=float).T
    np.testing.assert_allclose(U.T @ np.outer(w, w) @ U, 0, atol=1e-12)
    assert cond.check_conditions(C).verdict is None


def test_worked_examples_all_pass():
    assert all(c.passed for c in worked_examples())


def test_trace_certificate_preconditions():
    C = worked_projector("sqrt30").astype(float)
    with pytest.raises(ValidationError):
        cond.trace_certificate(C, np.ones(6))  # Psi e != e
    with pytest.raises(ValidationError):
        cond.trace_certificate(np.diag([2.0, 1.0]), np.ones(2))


def test_identity_projector_certified():
    rep = cond.check_conditions(np.eye(4))
    assert rep.diag_gt_half and rep.verdict == "diag"


def test_non_projector_warns():
    with pytest.warns(UserWarning):
        cond.check_conditions(np.diag([2.0, 1.0]))


def test_gauss_seidel_sweep_cap():
    Psi = np.array([[1.0, 2.0], [2.0, 1.0]])  # diverges
    with pytest.raises(NumericError):
        cond.gauss_seidel(Psi)


@given(st.integers(3, 20), st.integers(0, 2**32 - 1), st.data())
def test_ladder_soundness(n, seed, data):
    m = data.draw(st.integers(1, max(1, n // 3)))
    C = np.asarray(projector_mesp(PortableRNG(seed), n, m).C)
    Psi = cond.psi_matrix(C)
    rep = cond.check_conditions(C)
    if rep.diag_gt_half:
        off = np.sum(np.abs(Psi), axis=1) - np.diag(Psi)
        assert np.all(np.diag(Psi) > off)
        assert rep.sassenfeld_ok and rep.rowsum_ok
    if rep.sassenfeld_ok and rep.rowsum_ok:
        beta, _, boxed = cond.gauss_seidel(Psi)
        assert boxed and rep.gs_nonneg
    if rep.verdict is not None:
        beta = np.linalg.solve(Psi, np.ones(n))
        assert beta.min() >= -1e-8
        assert cond.trace_certificate(C, np.clip(beta, 0, None)).ok


def test_gap_bounds_constant_matrix():
    rep = cond.gap_bounds_nlpid(MespInstance(2.0 * np.eye(5), 2), tol=1e-9)
    assert rep.lo == 0 and rep.hi == 0
    assert rep.actual == pytest.approx(0, abs=1e-7)


@given(st.integers(3, 8), st.integers(0, 2**32 - 1), st.data())
def test_gap_sandwich(n, seed, data):
    rng = np.random.default_rng(seed)
    mi = MespInstance(random_pd(rng, n), data.draw(st.integers(1, n - 1)))
    rep = cond.gap_bounds_nlpid(mi, tol=1e-7)
    lam = np.linalg.eigvalsh(mi.C)
    r = math.log(lam[-1] / lam[0])
    assert rep.lo == pytest.approx(-(n - mi.s) * r)
    assert rep.hi == pytest.approx(mi.s * r)
    assert rep.holds(5e-6)


def test_spectral_diff_examples():
    rep = cond.spectral_diff_bound(MespInstance(np.eye(4), 2), tol=1e-9)
    assert rep.rhs == 0 and rep.actual == pytest.approx(0, abs=1e-7)
