"""The spectral function behind the factorization bound.

For a vector ``w`` sorted non-increasingly with at least ``s`` entries,
``phi_s(w) = sum_{l < i} log w_l + (s - i) log(mean of the tail)`` where the
split index ``i`` is the unique one in ``[0, s)`` with
``w[i-1] > sum(w[i:]) / (s - i) >= w[i]``.  ``Gamma_s(X) = phi_s(eig(X))``.
"""

import numpy as np

from ..errors import ValidationError
from ..linalg import eigh_desc


def split_index(w, s):
    """Unique split index of a non-increasing vector ``w`` (0-based count of leading terms)."""
    w = np.asarray(w, dtype=np.float64)
    if w.size < s:
        raise ValidationError(f"need at least s={s} entries, got {w.size}")
    if np.any(np.diff(w) > 1e-12 * max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)):
        raise ValidationError("w must be non-increasing")
    suffix = np.cumsum(w[::-1])[::-1]
    for i in range(s):
        if suffix[i] / (s - i) >= w[i]:
            return i
    return s - 1  # unreachable for non-negative input


def phi(w, s):
    """``phi_s(w)`` for non-increasing ``w``; ``-inf`` when the tail mean is not positive."""
    w = np.asarray(w, dtype=np.float64)
    if s == 0:
        return 0.0
    i = split_index(w, s)
    tail = float(np.sum(w[i:])) / (s - i)
    if tail <= 0 or (i and w[i - 1] <= 0):
        return -np.inf
    return float(np.sum(np.log(w[:i]))) + (s - i) * np.log(tail)


def phi_weights(w, s):
    """Derivative of ``phi_s`` with respect to each sorted entry.

    Leading entries get ``1 / w_l``; every tail entry gets ``1 / tail mean``.
    """
    w = np.asarray(w, dtype=np.float64)
    i = split_index(w, s)
    beta = np.empty_like(w)
    beta[:i] = 1.0 / w[:i]
    beta[i:] = (s - i) / float(np.sum(w[i:]))
    return beta


def gamma(X, s, shift=0.0):
    """``Gamma_s(X)``; with ``shift`` the top ``s`` eigenvalues are raised by it first."""
    w, _ = eigh_desc(X)
    w = np.clip(w, 0.0, None)
    w[:s] += shift
    return phi(w, s)


def gamma_supergradient(X, s, shift=0.0):
    """Value and supergradient ``Q diag(beta) Q^T`` of ``Gamma_s`` at symmetric ``X``."""
    w, Q = eigh_desc(X)
    w = np.clip(w, 0.0, None)
    w[:s] += shift
    val = phi(w, s)
    if not np.isfinite(val):
        return val, None
    beta = phi_weights(w, s)
    return val, (Q * beta) @ Q.T
