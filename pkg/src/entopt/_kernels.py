"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports and the environment variable
``ENTOPT_JIT`` is not set to ``0``.  Both paths are always importable as
``<name>_nb`` / ``<name>_np`` so tests and benchmarks can compare them; the
unsuffixed names are the selected implementation.
"""

import math
import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("ENTOPT_JIT", "1") != "0"

MAX_QL_ITER = 60


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


# ---------------------------------------------------------------------------
# symmetric eigensolver: Householder tridiagonalization + implicit QL
# ---------------------------------------------------------------------------


def _tred2(V, d, e):
    n = V.shape[0]
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= f * e[k] + g * d[k]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h
    # accumulate the transformations
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


def _tql2(V, d, e):
    """Implicit-shift QL on the tridiagonal (d, e); returns 0 or -1 on failure."""
    n = V.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0**-52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n - 1:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > MAX_QL_ITER:
                    return -1
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return 0


def _eigh_ql(M):
    n = M.shape[0]
    V = M.copy()
    d = np.zeros(n)
    e = np.zeros(n)
    if n == 1:
        d[0] = M[0, 0]
        V[0, 0] = 1.0
        return d, V, 0
    _tred2(V, d, e)
    status = _tql2(V, d, e)
    return d, V, status


_tred2_nb = _njit(_tred2)
_tql2_nb = _njit(_tql2)


if HAVE_NUMBA:

    @numba.njit(cache=True, nogil=True)
    def _eigh_ql_nb(M):
        n = M.shape[0]
        V = M.copy()
        d = np.zeros(n)
        e = np.zeros(n)
        if n == 1:
            d[0] = M[0, 0]
            V[0, 0] = 1.0
            return d, V, 0
        _tred2_nb(V, d, e)
        status = _tql2_nb(V, d, e)
        return d, V, status

else:  # pragma: no cover
    _eigh_ql_nb = _eigh_ql


def eigh_nb(M):
    """Eigenpairs of a symmetric matrix via Householder + implicit QL.

    Returns ``(w, V, status)`` with unsorted eigenvalues; ``status`` is
    ``-1`` when the QL sweep did not converge.
    """
    return _eigh_ql_nb(np.ascontiguousarray(M, dtype=np.float64))


def eigh_np(M):
    w, V = np.linalg.eigh(M)
    return w, V, 0


# ---------------------------------------------------------------------------
# log-determinants of principal submatrices (brute-force enumeration)
# ---------------------------------------------------------------------------


@_njit
def _chol_logdet_inplace(M, rel_tol):
    n = M.shape[0]
    if n == 0:
        return 0.0
    tr = 0.0
    for i in range(n):
        tr += M[i, i]
    thresh = rel_tol * tr / n
    if not thresh > 0.0:
        return -np.inf
    ld = 0.0
    for j in range(n):
        s = M[j, j]
        for k in range(j):
            s -= M[j, k] * M[j, k]
        if s <= thresh:
            return -np.inf
        ljj = math.sqrt(s)
        M[j, j] = ljj
        ld += 2.0 * math.log(ljj)
        for i in range(j + 1, n):
            t = M[i, j]
            for k in range(j):
                t -= M[i, k] * M[j, k]
            M[i, j] = t / ljj
    return ld


@_njit
def _subset_logdets_nb(C, combos, rel_tol):
    K, s = combos.shape
    out = np.empty(K)
    sub = np.empty((s, s))
    for r in range(K):
        for a in range(s):
            ia = combos[r, a]
            for b in range(s):
                sub[a, b] = C[ia, combos[r, b]]
        out[r] = _chol_logdet_inplace(sub, rel_tol)
    return out


@_njit
def _gram_logdets_nb(A, BtB, combos, rel_tol):
    K, s = combos.shape
    m = A.shape[1]
    out = np.empty(K)
    M = np.empty((m, m))
    for r in range(K):
        for a in range(m):
            for b in range(m):
                M[a, b] = BtB[a, b]
        for t in range(s):
            row = combos[r, t]
            for a in range(m):
                va = A[row, a]
                for b in range(m):
                    M[a, b] += va * A[row, b]
        out[r] = _chol_logdet_inplace(M, rel_tol)
    return out


def _batched_chol_logdet_np(M, rel_tol):
    """Column-by-column Cholesky vectorized over a stack of matrices."""
    M = np.array(M, dtype=np.float64, copy=True)
    K, n, _ = M.shape
    out = np.zeros(K)
    if n == 0:
        return out
    thresh = rel_tol * np.trace(M, axis1=1, axis2=2) / n
    alive = thresh > 0
    L = np.zeros_like(M)
    for j in range(n):
        s = M[:, j, j] - np.einsum("ij,ij->i", L[:, j, :j], L[:, j, :j])
        alive &= s > thresh
        ljj = np.sqrt(np.where(alive, s, 1.0))
        L[:, j, j] = ljj
        out += 2.0 * np.log(ljj)
        if j + 1 < n:
            t = M[:, j + 1 :, j] - np.einsum("ikl,il->ik", L[:, j + 1 :, :j], L[:, j, :j])
            L[:, j + 1 :, j] = t / ljj[:, None]
    out[~alive] = -np.inf
    return out


def _subset_logdets_np(C, combos, rel_tol):
    sub = C[combos[:, :, None], combos[:, None, :]]
    return _batched_chol_logdet_np(sub, rel_tol)


def _gram_logdets_np(A, BtB, combos, rel_tol):
    rows = A[combos]  # K x s x m
    M = BtB[None, :, :] + np.einsum("ksa,ksb->kab", rows, rows)
    return _batched_chol_logdet_np(M, rel_tol)


def subset_logdets_nb(C, combos, rel_tol=1e-12):
    return _subset_logdets_nb(np.ascontiguousarray(C, dtype=np.float64), combos, rel_tol)


def subset_logdets_np(C, combos, rel_tol=1e-12):
    return _subset_logdets_np(np.asarray(C, dtype=np.float64), combos, rel_tol)


def gram_logdets_nb(A, BtB, combos, rel_tol=1e-12):
    return _gram_logdets_nb(
        np.ascontiguousarray(A, dtype=np.float64),
        np.ascontiguousarray(BtB, dtype=np.float64),
        combos,
        rel_tol,
    )


def gram_logdets_np(A, BtB, combos, rel_tol=1e-12):
    return _gram_logdets_np(np.asarray(A, dtype=np.float64), np.asarray(BtB, dtype=np.float64), combos, rel_tol)


# ---------------------------------------------------------------------------
# Gauss-Seidel sweeps on Psi beta = e
# ---------------------------------------------------------------------------


@_njit
def _gauss_seidel_nb(Psi, beta, max_sweeps, tol):
    n = Psi.shape[0]
    boxed = True
    sweeps = 0
    for it in range(max_sweeps):
        sweeps = it + 1
        for i in range(n):
            acc = 1.0
            for j in range(n):
                if j != i:
                    acc -= Psi[i, j] * beta[j]
            beta[i] = acc / Psi[i, i]
            if beta[i] < -1e-12 or beta[i] > 1.0 / Psi[i, i] + 1e-12:
                boxed = False
        res = 0.0
        for i in range(n):
            r = -1.0
            for j in range(n):
                r += Psi[i, j] * beta[j]
            res = max(res, abs(r))
        if res <= tol:
            break
    return sweeps, boxed


def _gauss_seidel_np(Psi, beta, max_sweeps, tol):
    n = Psi.shape[0]
    diag = np.diag(Psi).copy()
    upper = 1.0 / diag + 1e-12
    boxed = True
    sweeps = 0
    for it in range(max_sweeps):
        sweeps = it + 1
        for i in range(n):
            beta[i] = (1.0 - Psi[i] @ beta + diag[i] * beta[i]) / diag[i]
        boxed &= bool(np.all(beta >= -1e-12) and np.all(beta <= upper))
        if np.max(np.abs(Psi @ beta - 1.0)) <= tol:
            break
    return sweeps, boxed


def gauss_seidel_nb(Psi, max_sweeps, tol):
    beta = np.zeros(Psi.shape[0])
    sweeps, boxed = _gauss_seidel_nb(np.ascontiguousarray(Psi, dtype=np.float64), beta, max_sweeps, tol)
    return beta, sweeps, boxed


def gauss_seidel_np(Psi, max_sweeps, tol):
    beta = np.zeros(Psi.shape[0])
    sweeps, boxed = _gauss_seidel_np(np.asarray(Psi, dtype=np.float64), beta, max_sweeps, tol)
    return beta, sweeps, boxed


# ---------------------------------------------------------------------------
# Euclidean projection onto {0 <= x <= 1, sum x = s}
# ---------------------------------------------------------------------------


@_njit
def _capped_simplex_nb(y, s):
    n = y.shape[0]
    lo = np.min(y) - 1.0
    hi = np.max(y)
    # bisection on the shift, then exact solve on the final linear piece
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        tot = 0.0
        for i in range(n):
            v = y[i] - mid
            if v > 1.0:
                v = 1.0
            elif v < 0.0:
                v = 0.0
            tot += v
        if tot > s:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(hi)):
            break
    tau = 0.5 * (lo + hi)
    free = 0
    fixed = 0.0
    for i in range(n):
        v = y[i] - tau
        if v >= 1.0:
            fixed += 1.0
        elif v > 0.0:
            free += 1
    if free > 0:
        acc = 0.0
        for i in range(n):
            v = y[i] - tau
            if 0.0 < v < 1.0:
                acc += y[i]
        tau = (acc - (s - fixed)) / free
    x = np.empty(n)
    for i in range(n):
        v = y[i] - tau
        x[i] = 1.0 if v > 1.0 else (0.0 if v < 0.0 else v)
    return x


def _capped_simplex_np(y, s):
    n = y.shape[0]
    # breakpoints of the piecewise-linear sum as a function of the shift
    bp = np.sort(np.concatenate([y - 1.0, y]))
    tot = np.clip(y[None, :] - bp[:, None], 0.0, 1.0).sum(axis=1)  # non-increasing
    k = int(np.searchsorted(-tot, -s, side="left"))
    k = min(max(k, 1), 2 * n - 1)
    t0, t1 = bp[k - 1], bp[k]
    f0, f1 = tot[k - 1], tot[k]
    tau = t0 if f0 == f1 else t0 + (f0 - s) * (t1 - t0) / (f0 - f1)
    return np.clip(y - tau, 0.0, 1.0)


def capped_simplex_nb(y, s):
    return _capped_simplex_nb(np.ascontiguousarray(y, dtype=np.float64), float(s))


def capped_simplex_np(y, s):
    return _capped_simplex_np(np.asarray(y, dtype=np.float64), float(s))


if USE_NUMBA:
    eigh = eigh_nb
    subset_logdets = subset_logdets_nb
    gram_logdets = gram_logdets_nb
    gauss_seidel = gauss_seidel_nb
    capped_simplex = capped_simplex_nb
else:
    eigh = eigh_np
    subset_logdets = subset_logdets_np
    gram_logdets = gram_logdets_np
    gauss_seidel = gauss_seidel_np
    capped_simplex = capped_simplex_np
