"""Dense symmetric linear algebra used throughout the package.

Eigendecompositions come from the Householder/QL kernel in ``_kernels``;
Cholesky factorizations go through LAPACK with an explicit pivot threshold
so that "numerically singular" has one meaning everywhere.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .errors import NotPositiveDefinite, NumericError, SingularBlock, ValidationError

CLUSTER_RTOL = 1e-8
PIVOT_RTOL = 1e-12
SYM_RTOL = 1e-10
DEBUG = os.environ.get("ENTOPT_DEBUG", "0") not in ("", "0")


def check_symmetric(M, name="matrix"):
    """Return ``M`` as a float array after checking it is square and symmetric."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > SYM_RTOL * scale:
        raise ValidationError(f"{name} is not symmetric")
    return M


def cluster_tol(lam1):
    return CLUSTER_RTOL * max(1.0, abs(lam1))


@dataclass(frozen=True)
class SpectralDecomp:
    """Eigenvalues in non-increasing order with matching orthonormal columns.

    Attributes
    ----------
    lam : ndarray
        Eigenvalues, ``lam[0] >= lam[1] >= ...``.
    phi : ndarray
        Eigenvectors as columns; each column's largest-magnitude entry is
        positive so the decomposition is reproducible.
    mu_max, mu_min : int
        Multiplicities of the largest and smallest eigenvalue, counted with
        the clustering tolerance ``1e-8 * max(1, |lam[0]|)``.
    """

    lam: np.ndarray
    phi: np.ndarray
    mu_max: int
    mu_min: int

    @property
    def lam_max(self):
        return float(self.lam[0])

    @property
    def lam_min(self):
        return float(self.lam[-1])


def _normalize_signs(V):
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def eigh_desc(M):
    """Eigenvalues (non-increasing) and sign-normalized eigenvectors of symmetric ``M``."""
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    w, V, status = _kernels.eigh(M)
    if status != 0:
        raise NumericError(f"QL iteration did not converge within {_kernels.MAX_QL_ITER} sweeps per eigenvalue")
    order = np.argsort(-w, kind="stable")
    return w[order], _normalize_signs(V[:, order])


def spectral_decomposition(M):
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    M : array_like
        Symmetric ``n x n`` matrix.

    Returns
    -------
    SpectralDecomp
    """
    M = check_symmetric(M)
    lam, phi = eigh_desc(M)
    if DEBUG:
        n = M.shape[0]
        scale = max(1.0, abs(lam[0])) if n else 1.0
        assert np.allclose(phi.T @ phi, np.eye(n), atol=1e-10)
        assert np.allclose(phi @ np.diag(lam) @ phi.T, M, atol=1e-10 * scale)
    tol = cluster_tol(lam[0]) if lam.size else 0.0
    mu_max = int(np.sum(lam >= lam[0] - tol)) if lam.size else 0
    mu_min = int(np.sum(lam <= lam[-1] + tol)) if lam.size else 0
    return SpectralDecomp(lam=lam, phi=phi, mu_max=mu_max, mu_min=mu_min)


def eigvalsh_desc(M):
    return eigh_desc(M)[0]


def cholesky(M):
    """Lower Cholesky factor of ``M``.

    Raises
    ------
    NotPositiveDefinite
        If LAPACK fails or any squared pivot is at most ``1e-12 * trace(M) / n``.
    """
    M = np.asarray(M, dtype=np.float64)
    n = M.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    thresh = PIVOT_RTOL * np.trace(M) / n
    if not thresh > 0:
        raise NotPositiveDefinite("non-positive trace")
    try:
        L = sla.cholesky(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    piv = np.diag(L) ** 2
    if not np.all(piv > thresh):
        raise NotPositiveDefinite(f"pivot {piv.min():.3e} below threshold {thresh:.3e}")
    return L


def logdet_pd(M):
    """``log det M`` for symmetric positive definite ``M`` via Cholesky."""
    L = cholesky(M)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def logdet_or_neginf(M):
    """Like :func:`logdet_pd` but returns ``-inf`` instead of raising."""
    try:
        return logdet_pd(M)
    except NotPositiveDefinite:
        return -np.inf


def schur_complement(H, block):
    """Schur complement of the principal block ``block`` in ``H``.

    Returns ``H[T, T] - H[T, b] H[b, b]^{-1} H[b, T]`` where ``T`` is the
    complement of ``block``, rows kept in their original order.
    """
    H = np.asarray(H, dtype=np.float64)
    n = H.shape[0]
    b = np.asarray(sorted(set(int(i) for i in block)), dtype=int)
    if b.size and (b[0] < 0 or b[-1] >= n):
        raise ValidationError("block index out of range")
    T = np.setdiff1d(np.arange(n), b)
    if b.size == 0:
        return H.copy()
    Hbb = H[np.ix_(b, b)]
    scale = max(1.0, float(np.max(np.abs(Hbb))))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(Hbb, check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularBlock(str(exc)) from None
    if np.min(np.abs(np.diag(lu))) <= 1e-14 * scale:
        raise SingularBlock("principal block is numerically singular")
    X = sla.lu_solve((lu, piv), H[np.ix_(b, T)], check_finite=False)
    S = H[np.ix_(T, T)] - H[np.ix_(T, b)] @ X
    return 0.5 * (S + S.T)


def sorted_diag(M):
    """Diagonal of ``M`` in non-increasing order."""
    return np.sort(np.diag(np.asarray(M, dtype=np.float64)))[::-1]


def sym_sqrt_factor(M):
    """Factor ``F`` (n x n) with ``F F^T = M`` for PSD ``M`` from its eigendecomposition."""
    lam, phi = eigh_desc(M)
    return phi * np.sqrt(np.clip(lam, 0.0, None))


def top_sum_log(values, s):
    """Sum of the logs of the ``s`` largest entries, ``-inf`` if any is non-positive."""
    v = np.sort(np.asarray(values, dtype=np.float64))[::-1][:s]
    if s == 0:
        return 0.0
    if v.size < s or v[-1] <= 0:
        return -np.inf
    return float(np.sum(np.log(v)))
