"""Upper bounds for D-Opt(A, B, s)."""

from __future__ import annotations

import time

import numpy as np
import scipy.linalg as sla

from ..errors import NotDataFusion, NotPositiveDefinite
from ..linalg import cholesky, eigvalsh_desc, sorted_diag, top_sum_log
from .solver import BoundResult, maximize


class NaturalObjective:
    """``log det(A^T diag(x) A + B^T B)``; the gradient entries are leverage scores."""

    def __init__(self, A, BtB):
        self.A = np.asarray(A, dtype=np.float64)
        self.BtB = np.asarray(BtB, dtype=np.float64)
        self.n = self.A.shape[0]

    def _matrix(self, x):
        M = self.A.T @ (x[:, None] * self.A) + self.BtB
        return 0.5 * (M + M.T)

    def value(self, x):
        try:
            L = cholesky(self._matrix(x))
        except NotPositiveDefinite:
            return -np.inf
        return 2.0 * float(np.sum(np.log(np.diag(L))))

    def value_grad(self, x):
        try:
            L = cholesky(self._matrix(x))
        except NotPositiveDefinite:
            return -np.inf, np.full(self.n, np.nan)
        Y = sla.solve_triangular(L, self.A.T, lower=True, check_finite=False)
        return 2.0 * float(np.sum(np.log(np.diag(L)))), np.einsum("ij,ij->j", Y, Y)


def natural_dopt(d, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """Continuous relaxation ``max log det(A^T diag(x) A + B^T B)`` over the capped simplex."""
    t0 = time.perf_counter()
    obj = NaturalObjective(d.A, d.BtB)
    res = maximize(obj, d.n, d.s, tol=tol, max_iter=max_iter, method=method, x0=x0,
                   cutoff=None if cutoff is None else cutoff - d.offset)
    notes = res.notes()
    return BoundResult(res.upper + d.offset, res.x, res.gap, res.iters, time.perf_counter() - t0, "natural", notes)


def _fusion_matrix(d):
    try:
        L = cholesky(d.BtB)
    except NotPositiveDefinite:
        raise NotDataFusion("needs B^T B positive definite") from None
    Y = sla.solve_triangular(L, d.A.T, lower=True, check_finite=False)
    P = np.eye(d.n) + Y.T @ Y
    return 0.5 * (P + P.T), 2.0 * float(np.sum(np.log(np.diag(L))))


def spectral_dopt(d):
    """``log det(B^T B) + sum_{i <= s} log lam_i(I + A (B^T B)^{-1} A^T)``."""
    t0 = time.perf_counter()
    P, ld = _fusion_matrix(d)
    v = ld + top_sum_log(eigvalsh_desc(P), d.s)
    return BoundResult(v + d.offset, seconds=time.perf_counter() - t0, kind="dspectral")


def hadamard_dopt(d):
    """``log det(B^T B) + sum_{i <= s} log delta_i(I + A (B^T B)^{-1} A^T)``."""
    t0 = time.perf_counter()
    P, ld = _fusion_matrix(d)
    v = ld + top_sum_log(sorted_diag(P), d.s)
    return BoundResult(v + d.offset, seconds=time.perf_counter() - t0, kind="hadamard")
