"""Conditions under which the trace bound for ``C = I - U U^T`` is exact.

Here ``C`` is the orthogonal projector onto the complement of an
orthonormal ``U`` and ``Psi = C o C`` (entrywise square).  A non-negative
``beta`` with ``Psi beta = e`` gives the certificate
``Omega = C diag(beta) C``: it has unit diagonal, is positive semidefinite
and satisfies ``Tr(C Omega) = n``.

The checks form a ladder of increasingly expensive sufficient conditions:

1. every ``C[i, i] > 1/2``;
2. ``Psi`` passes the Sassenfeld test and the scaled row-sum test, so
   Gauss-Seidel from zero converges to a non-negative solution;
3. a direct solve of ``Psi beta = e`` is non-negative.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.linalg as sla
from scipy.optimize import nnls

from . import _kernels
from .bounds import nlp_id, spectral_mesp
from .errors import NotPositiveDefinite, NumericError, ValidationError
from .instances import complement_mesp
from .linalg import eigvalsh_desc

PROJECTOR_TOL = 1e-7
NONNEG_TOL = 1e-8
CERT_TOL = 1e-6


def psi_matrix(C):
    """Entrywise square ``C o C``."""
    C = np.asarray(C)
    return C * C


def is_projector(C, tol=PROJECTOR_TOL):
    C = np.asarray(C, dtype=np.float64)
    return bool(np.max(np.abs(C @ C - C)) <= tol) and bool(np.max(np.abs(C - C.T)) <= tol)


def sassenfeld_coeffs(Psi):
    """Sassenfeld coefficients.

    ``alpha_0 = sum_{j>0} |Psi_0j| / |Psi_00|`` and for ``i > 0``
    ``alpha_i = (sum_{j<i} alpha_j |Psi_ij| + sum_{j>i} |Psi_ij|) / |Psi_ii|``.
    Works on float or :class:`fractions.Fraction` object arrays.
    """
    Psi = np.asarray(Psi)
    n = Psi.shape[0]
    if any(Psi[i, i] == 0 for i in range(n)):
        raise ValidationError("Sassenfeld coefficients need a non-zero diagonal")
    alpha = [None] * n
    for i in range(n):
        acc = sum(alpha[j] * abs(Psi[i, j]) for j in range(i))
        acc = acc + sum(abs(Psi[i, j]) for j in range(i + 1, n))
        alpha[i] = acc / abs(Psi[i, i])
    return np.array(alpha, dtype=Psi.dtype if Psi.dtype == object else np.float64)


def sassenfeld_ok(Psi):
    a = sassenfeld_coeffs(Psi)
    return bool(len(a) == 0 or max(a) < 1)


def rowsum_scaled(Psi):
    """``sum_{j != i} Psi_ij / Psi_jj`` for each row."""
    Psi = np.asarray(Psi)
    n = Psi.shape[0]
    return np.array(
        [sum(Psi[i, j] / Psi[j, j] for j in range(n) if j != i) for i in range(n)],
        dtype=Psi.dtype if Psi.dtype == object else np.float64,
    )


def rowsum_ok(Psi):
    r = rowsum_scaled(Psi)
    return bool(len(r) == 0 or max(r) <= 1)


def gauss_seidel(Psi, max_sweeps=None, tol=1e-12):
    """Gauss-Seidel on ``Psi beta = e`` from ``beta = 0``.

    Returns
    -------
    beta : ndarray
    sweeps : int
    boxed : bool
        Whether every iterate stayed in ``0 <= beta_i <= 1 / Psi_ii``.

    Raises
    ------
    NumericError
        If the residual is still above ``tol`` after ``max_sweeps``
        (default ``10 n^2``) sweeps.
    """
    Psi = np.asarray(Psi, dtype=np.float64)
    n = Psi.shape[0]
    if max_sweeps is None:
        max_sweeps = 10 * n * n
    beta, sweeps, boxed = _kernels.gauss_seidel(Psi, int(max_sweeps), float(tol))
    res = float(np.max(np.abs(Psi @ beta - 1.0))) if n else 0.0
    if res > tol:
        raise NumericError(f"Gauss-Seidel residual {res:.3e} after {sweeps} sweeps")
    return beta, sweeps, bool(boxed)


@dataclass(frozen=True)
class ConditionReport:
    """Result of :func:`check_conditions`.

    ``verdict`` names the first rung that certifies exactness
    (``"diag"``, ``"sassenfeld"``, ``"nonneg-solve"``) or is ``None``.
    """

    diag_gt_half: bool
    sassenfeld_alpha: np.ndarray
    sassenfeld_ok: bool
    rowsum_ok: bool
    gs_beta: np.ndarray | None
    gs_nonneg: bool
    solve_beta: np.ndarray | None
    solve_nonneg: bool
    verdict: str | None


def _nonneg_solution(Psi):
    n = Psi.shape[0]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu = sla.lu_factor(Psi, check_finite=False)
        if np.min(np.abs(np.diag(lu[0]))) > 1e-13 * max(1.0, float(np.max(np.abs(Psi)))):
            beta = sla.lu_solve(lu, np.ones(n), check_finite=False)
            return beta, bool(np.all(beta >= -NONNEG_TOL))
    except (np.linalg.LinAlgError, ValueError):
        pass
    # singular Psi: fall back to a non-negative least-squares feasibility test
    beta, res = nnls(Psi, np.ones(n))
    return beta, bool(res <= 1e-9 * np.sqrt(n))


def check_conditions(C):
    """Run the exactness ladder on a projector ``C``; warns if ``C`` is not one."""
    C = np.asarray(C, dtype=np.float64)
    if not is_projector(C):
        warnings.warn("C is not an orthogonal projector; the ladder's conclusions do not apply", stacklevel=2)
    Psi = psi_matrix(C)
    diag_ok = bool(np.all(np.diag(C) > 0.5))
    alpha = sassenfeld_coeffs(Psi)
    sas = bool(alpha.size == 0 or alpha.max() < 1)
    row = rowsum_ok(Psi)
    gs_beta = None
    gs_nonneg = False
    if sas:
        try:
            gs_beta, _, _ = gauss_seidel(Psi)
            gs_nonneg = bool(np.all(gs_beta >= -NONNEG_TOL))
        except NumericError:
            gs_beta = None
    solve_beta, solve_nonneg = _nonneg_solution(Psi)
    if diag_ok:
        verdict = "diag"
    elif sas and row and gs_nonneg:
        verdict = "sassenfeld"
    elif solve_nonneg:
        verdict = "nonneg-solve"
    else:
        verdict = None
    return ConditionReport(diag_ok, alpha, sas, row, gs_beta, gs_nonneg, solve_beta, solve_nonneg, verdict)


@dataclass(frozen=True)
class TraceCertificate:
    omega: np.ndarray
    diag_ok: bool
    psd_ok: bool
    trace_value: float
    trace_ok: bool

    @property
    def ok(self):
        return self.diag_ok and self.psd_ok and self.trace_ok


def check_omega(C, Omega, tol=CERT_TOL):
    """Check ``diag(Omega) = e``, ``Omega >= 0`` and ``Tr(C Omega) = n``."""
    C = np.asarray(C, dtype=np.float64)
    Omega = np.asarray(Omega, dtype=np.float64)
    n = C.shape[0]
    diag_ok = bool(np.max(np.abs(np.diag(Omega) - 1.0)) <= tol)
    psd_ok = bool(np.min(np.linalg.eigvalsh(0.5 * (Omega + Omega.T))) >= -tol)
    tr = float(np.sum(C * Omega))
    return TraceCertificate(Omega, diag_ok, psd_ok, tr, abs(tr - n) <= tol * max(1.0, n))


def trace_certificate(C, beta, tol=CERT_TOL):
    """Certificate ``Omega = C diag(beta) C`` from a non-negative solution of ``Psi beta = e``."""
    C = np.asarray(C, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if not is_projector(C):
        raise ValidationError("C must satisfy ||C^2 - C|| <= 1e-7")
    if np.any(beta < -NONNEG_TOL):
        raise ValidationError("beta must be non-negative")
    if np.max(np.abs(psi_matrix(C) @ beta - 1.0)) > 1e-7:
        raise ValidationError("beta does not solve (C o C) beta = e")
    Omega = (C * beta[None, :]) @ C
    return check_omega(C, 0.5 * (Omega + Omega.T), tol)


def farkas_certifies(Psi, y):
    """True when ``y`` proves ``Psi beta = e`` has no non-negative solution.

    The certificate is ``e^T y < 0`` together with ``Psi^T y >= 0``.  With
    :class:`fractions.Fraction` entries the check is exact.
    """
    Psi = np.asarray(Psi)
    y = np.asarray(y)
    ety = sum(y)
    col = Psi.T @ y
    return bool(ety < 0) and all(c >= 0 for c in col)


def exact_projector(U_rows, scales, n):
    """``C = I - sum_k u_k u_k^T / scale_k`` with rational entries.

    ``U_rows`` holds integer vectors ``u_k`` (padded with zeros to length
    ``n``) whose squared norms equal ``scales``; the result is an object array
    of :class:`fractions.Fraction`.
    """
    C = np.array([[Fraction(int(i == j)) for j in range(n)] for i in range(n)], dtype=object)
    for u, sc in zip(U_rows, scales):
        u = list(u) + [0] * (n - len(u))
        for i in range(n):
            for j in range(n):
                C[i, j] -= Fraction(u[i] * u[j], sc)
    return C


# ---------------------------------------------------------------------------
# gap checks between a bound and its complementary counterpart
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GapReport:
    lo: float
    hi: float
    actual: float

    def holds(self, tol=5e-6):
        return self.lo - tol <= self.actual <= self.hi + tol


def gap_bounds_nlpid(mi, tol=1e-6):
    """NLP-Id minus its complementary version, with the eigenvalue-ratio sandwich.

    ``lo = -(n - s) log(lam_max / lam_min)`` and ``hi = s log(lam_max / lam_min)``.
    """
    lam = np.linalg.eigvalsh(np.asarray(mi.C))
    if lam[0] <= 0:
        raise NotPositiveDefinite("C must be positive definite")
    r = math.log(lam[-1] / lam[0])
    direct = nlp_id(mi, tol=tol).value
    comp = nlp_id(complement_mesp(mi), tol=tol).value
    return GapReport(-(mi.n - mi.s) * r, mi.s * r, direct - comp)


@dataclass(frozen=True)
class SpectralDiffReport:
    rhs: float
    actual: float

    def holds(self, tol=5e-6):
        return self.actual <= self.rhs + tol


def spectral_diff_bound(mi, tol=1e-6):
    """``nlp_id - spectral`` against ``sum_{i<s} log(lam_max / lam_i)``."""
    lam = eigvalsh_desc(np.asarray(mi.C))
    if lam[mi.s - 1] <= 0:
        raise NotPositiveDefinite("lambda_s must be positive")
    rhs = float(np.sum(np.log(lam[0] / lam[: mi.s])))
    actual = nlp_id(mi, tol=tol).value - spectral_mesp(mi).value
    return SpectralDiffReport(rhs, actual)
