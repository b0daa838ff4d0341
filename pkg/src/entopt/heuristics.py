"""Greedy construction and 1-swap local search for lower bounds."""

from __future__ import annotations

import numpy as np

from .instances import MespInstance, evaluate
from .errors import NotPositiveDefinite
from .linalg import PIVOT_RTOL, cholesky, logdet_or_neginf

SWAP_THRESHOLD = 1e-9


def greedy(inst):
    """Grow ``S`` one index at a time, maximizing the objective after each addition.

    Ties go to the least index.  While every extension is singular the index
    with the largest residual (diagonal of the current Schur complement for
    MESP, squared distance from the span of the current rows for D-Opt) is
    taken instead.

    Returns
    -------
    value : float
    subset : tuple of int
    """
    if isinstance(inst, MespInstance):
        S = _greedy_mesp(np.asarray(inst.C), inst.s)
    else:
        S = _greedy_dopt(np.asarray(inst.A), inst.BtB, inst.s)
    S = tuple(sorted(S))
    return evaluate(inst, S), S


def _greedy_mesp(C, s):
    R = C.astype(np.float64).copy()
    n = C.shape[0]
    chosen = []
    avail = np.ones(n, dtype=bool)
    for _ in range(s):
        score = np.where(avail, np.diag(R), -np.inf)
        j = int(np.argmax(score))
        chosen.append(j)
        avail[j] = False
        rjj = R[j, j]
        if rjj > PIVOT_RTOL * max(np.trace(C) / n, 1e-300):
            R = R - np.outer(R[:, j], R[j, :]) / rjj
    return chosen


def _greedy_dopt(A, BtB, s):
    n, m = A.shape
    M = BtB.copy()
    chosen = []
    avail = np.ones(n, dtype=bool)
    for _ in range(s):
        try:
            L = cholesky(M)
            Y = np.linalg.solve(L, A.T)
            score = np.log1p(np.einsum("ij,ij->j", Y, Y))
        except NotPositiveDefinite:
            score = _extension_logdets(M, A)
            if not np.any(np.isfinite(score[avail])):
                score = _null_residuals(M, A)
        score = np.where(avail, score, -np.inf)
        j = int(np.argmax(score))
        chosen.append(j)
        avail[j] = False
        M = M + np.outer(A[j], A[j])
    return chosen


def _extension_logdets(M, A):
    return np.array([logdet_or_neginf(M + np.outer(a, a)) for a in A])


def _null_residuals(M, A):
    w, V = np.linalg.eigh(M)
    null = V[:, w <= 1e-10 * max(1.0, float(w.max()))]
    return np.sum((A @ null) ** 2, axis=1)


def local_search(inst, S, max_rounds=None):
    """Best-improvement 1-swap search from ``S``.

    A swap is taken only if it raises the objective by more than ``1e-9``;
    the search stops at a local optimum.

    Returns
    -------
    value : float
    subset : tuple of int
    """
    S = sorted(int(i) for i in S)
    n = inst.n
    val = evaluate(inst, S)
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        rounds += 1
        T = [j for j in range(n) if j not in set(S)]
        if not S or not T:
            break
        gains = _swap_gains(inst, S, T, val)
        k = int(np.argmax(gains))
        a, b = divmod(k, len(T))
        if not gains.flat[k] > SWAP_THRESHOLD:
            break
        S2 = sorted(S[:a] + S[a + 1 :] + [T[b]])
        v2 = evaluate(inst, S2)
        if not v2 > val + SWAP_THRESHOLD:
            break
        S, val = S2, v2
    return val, tuple(S)


def _swap_gains(inst, S, T, val):
    """Objective change for every (remove ``S[a]``, add ``T[b]``) pair."""
    if np.isfinite(val):
        with np.errstate(divide="ignore", invalid="ignore"):
            if isinstance(inst, MespInstance):
                ratio = _mesp_swap_ratio(np.asarray(inst.C), S, T)
            else:
                ratio = _dopt_swap_ratio(inst, S, T)
        if ratio is not None:
            return np.where(ratio > 0, np.log(np.where(ratio > 0, ratio, 1.0)), -np.inf)
    gains = np.full((len(S), len(T)), -np.inf)
    for a in range(len(S)):
        for b in range(len(T)):
            gains[a, b] = evaluate(inst, S[:a] + S[a + 1 :] + [T[b]]) - val
    if not np.isfinite(val):
        gains = np.where(np.isfinite(gains), np.inf, -np.inf)
    return gains


def _mesp_swap_ratio(C, S, T):
    # det C[S-i+j] / det C[S] = W_ii r_j + (W C[S, j])_i^2 with W = C[S, S]^{-1}
    try:
        L = cholesky(C[np.ix_(S, S)])
    except NotPositiveDefinite:
        return None
    W = np.linalg.solve(L.T, np.linalg.solve(L, np.eye(len(S))))
    G = W @ C[np.ix_(S, T)]
    r = np.diag(C)[T] - np.einsum("ij,ij->j", C[np.ix_(S, T)], G)
    return np.diag(W)[:, None] * r[None, :] + G * G


def _dopt_swap_ratio(d, S, T):
    # det(M - a_i a_i^T + a_j a_j^T) / det M = (1 + a_j'Wa_j)(1 - a_i'Wa_i) + (a_i'Wa_j)^2
    A = np.asarray(d.A)
    try:
        L = cholesky(A[S].T @ A[S] + d.BtB)
    except NotPositiveDefinite:
        return None
    YS = np.linalg.solve(L, A[S].T)
    YT = np.linalg.solve(L, A[T].T)
    hs = np.einsum("ij,ij->j", YS, YS)
    ht = np.einsum("ij,ij->j", YT, YT)
    cross = YS.T @ YT
    return (1.0 + ht)[None, :] * (1.0 - hs)[:, None] + cross * cross


def greedy_swap(inst):
    """Greedy followed by local search; the usual incumbent for branch-and-bound."""
    _, S = greedy(inst)
    return local_search(inst, S)
