"""Upper bounds for MESP(C, s).

Closed forms (spectral, diagonal) and four convex relaxations solved with
:func:`entopt.bounds.solver.maximize`: the NLP family (identity and diagonal
variants), the factorization bound with its shifted variant, and linx.
"""

from __future__ import annotations

import math
import time

import numpy as np
import scipy.linalg as sla

from ..errors import NotPositiveDefinite, ValidationError
from ..linalg import cholesky, eigh_desc, eigvalsh_desc, sorted_diag, sym_sqrt_factor, top_sum_log
from .gamma import phi, phi_weights
from .solver import BoundResult, maximize

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _require_s(mi):
    if not 0 <= mi.s <= mi.n:
        raise ValidationError("need 0 <= s <= n")


def spectral_mesp(mi):
    """Sum of the logs of the ``s`` largest eigenvalues of ``C``."""
    t0 = time.perf_counter()
    v = top_sum_log(eigvalsh_desc(mi.C), mi.s)
    return BoundResult(v + mi.offset, seconds=time.perf_counter() - t0, kind="spectral")


def diagonal_mesp(mi):
    """Sum of the logs of the ``s`` largest diagonal entries of ``C`` (Hadamard's inequality)."""
    t0 = time.perf_counter()
    v = top_sum_log(sorted_diag(mi.C), mi.s)
    return BoundResult(v + mi.offset, seconds=time.perf_counter() - t0, kind="diag")


# ---------------------------------------------------------------------------
# NLP family
# ---------------------------------------------------------------------------


class NlpObjective:
    """``x . log(gamma d) + log det(I + gamma (C - D) T(x))`` with ``T = diag(x^p (gamma d)^-x)``.

    This equals ``log det(diag((gamma d)^x) + gamma X^{p/2} (C - D) X^{p/2})``
    but stays smooth at ``x_i = 0`` when ``p_i >= 1``.  Determinants use the
    symmetric form ``I + gamma T^{1/2} (C - D) T^{1/2}``.
    """

    def __init__(self, C, d, gamma, p):
        self.K = np.asarray(C) - np.diag(d)
        self.kdiag = np.diag(self.K).copy()
        self.lg = np.log(gamma * np.asarray(d))
        self.gamma = float(gamma)
        self.p = np.asarray(p, dtype=np.float64)
        self.n = self.K.shape[0]

    def _t(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(x, self.p) * np.exp(-x * self.lg)

    def _matrix(self, x):
        r = np.sqrt(self._t(x))
        return r, np.eye(self.n) + self.gamma * (r[:, None] * self.K * r[None, :])

    def value(self, x):
        _, M = self._matrix(x)
        try:
            L = cholesky(M)
        except NotPositiveDefinite:
            return -np.inf
        return float(x @ self.lg) + 2.0 * float(np.sum(np.log(np.diag(L))))

    def value_grad(self, x):
        r, M = self._matrix(x)
        try:
            L = cholesky(M)
        except NotPositiveDefinite:
            return -np.inf, np.full(self.n, np.nan)
        f = float(x @ self.lg) + 2.0 * float(np.sum(np.log(np.diag(L))))
        Y = sla.solve_triangular(L, r[:, None] * self.K, lower=True, check_finite=False)
        z = self.kdiag - self.gamma * np.einsum("ij,ij->j", Y, Y)
        t = r * r
        with np.errstate(divide="ignore", invalid="ignore"):
            dt = self.p * np.power(x, self.p - 1.0) * np.exp(-x * self.lg) - t * self.lg
        return f, self.lg + self.gamma * dt * z


def best_p(d, gamma):
    """Exponent vector making the NLP objective concave: ``1`` where ``gamma d_i <= 1``,
    else ``(1 + sqrt(1 + 4 log(gamma d_i)))^2 / 4``."""
    gd = gamma * np.asarray(d, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (1.0 + np.sqrt(1.0 + 4.0 * np.log(np.where(gd > 1.0, gd, 1.0)))) ** 2 / 4.0
    return np.where(gd <= 1.0, 1.0, big)


def nlp_bound(mi, d, gamma, p=None, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None, kind="nlp"):
    """NLP bound with ``D = diag(d)``, ``gamma > 0`` and exponents ``p``.

    Valid when ``D - C`` is positive semidefinite and ``p`` is the concavity
    exponent from :func:`best_p` (the default).  Any other ``p`` is solved the
    same way but the result carries the note ``"uncertified-concavity"``.
    """
    t0 = time.perf_counter()
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (mi.n,) or not np.all(d > 0):
        raise ValidationError("d must be a positive vector of length n")
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    notes = []
    pref = best_p(d, gamma)
    if p is None:
        p = pref
    else:
        p = np.broadcast_to(np.asarray(p, dtype=np.float64), (mi.n,)).copy()
        if not np.allclose(p, pref, rtol=0, atol=1e-12):
            notes.append("uncertified-concavity")
    if np.min(np.linalg.eigvalsh(np.diag(d) - np.asarray(mi.C))) < -1e-9 * max(1.0, float(d.max())):
        notes.append("D-C-not-psd")
    obj = NlpObjective(mi.C, d, gamma, p)
    const = -mi.s * math.log(gamma) + mi.offset
    res = maximize(obj, mi.n, mi.s, tol=tol, max_iter=max_iter, method=method, x0=x0,
                   cutoff=None if cutoff is None else cutoff - const)
    notes.extend(res.notes())
    return BoundResult(res.upper + const, res.x, res.gap, res.iters, time.perf_counter() - t0, kind, tuple(notes))


def nlp_id(mi, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """NLP bound with ``D = lam_max I``, ``gamma = 1 / lam_max``, ``p = e``."""
    lmax = float(eigvalsh_desc(mi.C)[0])
    if not lmax > 0:
        raise ValidationError("C must be nonzero")
    return nlp_bound(mi, np.full(mi.n, lmax), 1.0 / lmax, None, tol, max_iter, method, x0, cutoff, "nlp-id")


def nlp_di(mi, grid=100, tol=1e-6, max_iter=5000, method="pg", cutoff=None):
    """NLP bound with ``D = rho diag(C)`` and ``gamma`` minimized over a grid.

    ``rho`` is the largest eigenvalue of ``diag(C)^{-1/2} C diag(C)^{-1/2}``,
    so ``D - C`` is positive semidefinite.  ``gamma`` runs over ``grid``
    evenly spaced points in ``[1 / max d, 1 / min d]``; the smallest
    certified value is returned.
    """
    t0 = time.perf_counter()
    cd = np.diag(mi.C).copy()
    if not np.all(cd > 0):
        raise ValidationError("nlp-di needs a positive diagonal")
    h = 1.0 / np.sqrt(cd)
    rho = float(eigvalsh_desc(h[:, None] * np.asarray(mi.C) * h[None, :])[0])
    d = rho * cd
    gammas = np.linspace(1.0 / d.max(), 1.0 / d.min(), grid) if grid > 1 else np.array([1.0 / d.max()])
    best = None
    x0 = None
    iters = 0
    for g in gammas:
        r = nlp_bound(mi, d, float(g), None, tol, max_iter, method, x0, cutoff, "nlp-di")
        iters += r.iters
        x0 = r.relax_point
        if best is None or r.value < best.value:
            best = r
        if cutoff is not None and best.value <= cutoff:
            break
    best.iters = iters
    best.seconds = time.perf_counter() - t0
    return best


# ---------------------------------------------------------------------------
# factorization bound
# ---------------------------------------------------------------------------


class GammaObjective:
    """``Gamma_s(F^T diag(x) F)``, optionally with the top ``s`` eigenvalues shifted."""

    def __init__(self, F, s, shift=0.0):
        self.F = np.asarray(F, dtype=np.float64)
        self.s = s
        self.shift = float(shift)

    def _eig(self, x):
        W = self.F.T @ (x[:, None] * self.F)
        w, Q = eigh_desc(0.5 * (W + W.T))
        w = np.clip(w, 0.0, None)
        w[: self.s] += self.shift
        return w, Q

    def value(self, x):
        w, _ = self._eig(x)
        return phi(w, self.s)

    def value_grad(self, x):
        w, Q = self._eig(x)
        f = phi(w, self.s)
        if not np.isfinite(f):
            return f, np.full(x.size, np.nan)
        beta = phi_weights(w, self.s)
        FQ = self.F @ Q
        return f, (FQ * FQ) @ beta


def _pad_columns(F, k):
    if F.shape[1] < k:
        F = np.hstack([F, np.zeros((F.shape[0], k - F.shape[1]))])
    return F


def ddfact(mi, F=None, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """Factorization bound ``max Gamma_s(F^T diag(x) F)`` for any ``F F^T = C``."""
    t0 = time.perf_counter()
    F = sym_sqrt_factor(mi.C) if F is None else _pad_columns(np.asarray(F, dtype=np.float64), mi.s)
    obj = GammaObjective(F, mi.s)
    res = maximize(obj, mi.n, mi.s, tol=tol, max_iter=max_iter, method=method, x0=x0,
                   cutoff=None if cutoff is None else cutoff - mi.offset)
    notes = res.notes()
    return BoundResult(res.upper + mi.offset, res.x, res.gap, res.iters, time.perf_counter() - t0, "ddfact", notes)


def ddfact_plus(mi, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """Shifted factorization bound: factor ``C - lam_min I = G G^T`` and add
    ``lam_min`` to the top ``s`` eigenvalues of ``G^T diag(x) G``.  Needs ``C`` positive definite."""
    t0 = time.perf_counter()
    lam, phi_vecs = eigh_desc(mi.C)
    lmin = float(lam[-1])
    if not lmin > 1e-12 * max(1.0, float(lam[0])):
        raise NotPositiveDefinite("ddfact-plus needs C positive definite")
    G = phi_vecs * np.sqrt(np.clip(lam - lmin, 0.0, None))
    obj = GammaObjective(G, mi.s, shift=lmin)
    res = maximize(obj, mi.n, mi.s, tol=tol, max_iter=max_iter, method=method, x0=x0,
                   cutoff=None if cutoff is None else cutoff - mi.offset)
    notes = res.notes()
    return BoundResult(res.upper + mi.offset, res.x, res.gap, res.iters, time.perf_counter() - t0, "ddfact-plus", notes)


# ---------------------------------------------------------------------------
# linx
# ---------------------------------------------------------------------------


class LinxObjective:
    """``(1/2) log det(gamma C diag(x) C + diag(e - x))``."""

    def __init__(self, C, gamma):
        self.C = np.asarray(C, dtype=np.float64)
        self.gamma = float(gamma)
        self.n = self.C.shape[0]

    def _matrix(self, x):
        M = self.gamma * (self.C * x[None, :]) @ self.C
        M[np.diag_indices(self.n)] += 1.0 - x
        return 0.5 * (M + M.T)

    def value(self, x):
        try:
            L = cholesky(self._matrix(x))
        except NotPositiveDefinite:
            return -np.inf
        return float(np.sum(np.log(np.diag(L))))

    def value_grad(self, x):
        try:
            L = cholesky(self._matrix(x))
        except NotPositiveDefinite:
            return -np.inf, np.full(self.n, np.nan)
        f = float(np.sum(np.log(np.diag(L))))
        Y = sla.solve_triangular(L, self.C, lower=True, check_finite=False)
        Z = sla.solve_triangular(L, np.eye(self.n), lower=True, check_finite=False)
        cwc = np.einsum("ij,ij->j", Y, Y)
        wii = np.einsum("ij,ij->j", Z, Z)
        return f, 0.5 * (self.gamma * cwc - wii)


def linx_bound(mi, gamma=1.0, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """linx bound ``max (1/2)(log det(gamma C X C + diag(e - x)) - s log gamma)``."""
    t0 = time.perf_counter()
    if not gamma > 0:
        raise ValidationError("gamma must be positive")
    obj = LinxObjective(mi.C, gamma)
    const = -0.5 * mi.s * math.log(gamma) + mi.offset
    res = maximize(obj, mi.n, mi.s, tol=tol, max_iter=max_iter, method=method, x0=x0,
                   cutoff=None if cutoff is None else cutoff - const)
    notes = res.notes()
    return BoundResult(res.upper + const, res.x, res.gap, res.iters, time.perf_counter() - t0, "linx", notes)


def linx_default_gamma(mi):
    """``1 / delta_s(C)``: the reciprocal of the ``s``-th largest diagonal entry."""
    ds = float(sorted_diag(mi.C)[max(mi.s, 1) - 1])
    return 1.0 / ds if ds > 0 else 1.0


def linx_opt_gamma(mi, tol=1e-6, width=1e-3, half_range=20.0, method="pg", cutoff=None):
    """linx bound minimized over ``gamma`` by golden-section search on ``log gamma``.

    The bracket is ``log gamma_0 +- half_range`` with ``gamma_0`` from
    :func:`linx_default_gamma`; the search stops when the bracket is narrower
    than ``width``.  Every evaluated ``gamma`` gives a valid bound and the
    smallest one is returned, so the result never exceeds the bound at
    ``gamma_0``.
    """
    t0 = time.perf_counter()
    g0 = linx_default_gamma(mi)
    cache = {}
    warm = [None]

    def ev(lg):
        if lg not in cache:
            r = linx_bound(mi, math.exp(lg), tol, method=method, x0=warm[0])
            warm[0] = r.relax_point
            cache[lg] = r
        return cache[lg].value

    base = math.log(g0)
    ev(base)
    a, b = base - half_range, base + half_range
    c = b - GOLDEN * (b - a)
    e = a + GOLDEN * (b - a)
    fc, fe = ev(c), ev(e)
    while b - a > width:
        if cutoff is not None and min(r.value for r in cache.values()) <= cutoff:
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - GOLDEN * (b - a)
            fc = ev(c)
        else:
            a, c, fc = c, e, fe
            e = a + GOLDEN * (b - a)
            fe = ev(e)
    best_lg = min(cache, key=lambda k: cache[k].value)
    best = cache[best_lg]
    return BoundResult(
        best.value,
        best.relax_point,
        best.cert_gap,
        sum(r.iters for r in cache.values()),
        time.perf_counter() - t0,
        "linx-opt",
        best.notes + (f"gamma={math.exp(best_lg):.17g}",),
    )
