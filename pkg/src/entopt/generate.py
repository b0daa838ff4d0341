"""Random instance recipes used by the CLI, the verification suites and the sweeps."""

from __future__ import annotations

import numpy as np

from .instances import DOptInstance, MespInstance
from .linalg import eigh_desc
from .rng import PortableRNG

GEN_KINDS = ("randn-dopt", "projector-mesp", "pd-mesp", "eigedit-mesp", "fusion-dopt")


def _rng(rng):
    return rng if isinstance(rng, PortableRNG) else PortableRNG(rng)


def _orthonormal(G):
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def _sym(C):
    return 0.5 * (C + C.T)


def randn_dopt(rng, n, m, s=None):
    """Pure D-Opt: standard normal ``A`` (``n x m``), ``B`` a single zero row."""
    rng = _rng(rng)
    A = rng.normal((n, m))
    s = m + (n - m) // 2 if s is None else s
    return DOptInstance(A, np.zeros((1, m)), s)


def fusion_dopt(rng, n, m, q=None, s=None):
    """Data-fusion D-Opt: normal ``A`` and a normal ``B`` with ``q >= m`` rows."""
    rng = _rng(rng)
    q = m if q is None else q
    A = rng.normal((n, m))
    B = rng.normal((q, m))
    s = max(1, n // 2) if s is None else s
    return DOptInstance(A, B, s)


def projector_mesp(rng, n, m, s=None):
    """``C = I - U U^T`` for a random orthonormal ``U`` with ``m`` columns."""
    rng = _rng(rng)
    U = _orthonormal(rng.normal((n, m)))
    s = (n - m) // 2 if s is None else s
    return MespInstance(_sym(np.eye(n) - U @ U.T), max(1, s))


def pd_mesp(rng, n, s=None, eps=1e-2):
    """``C = G G^T / n + eps I`` with standard normal ``G``."""
    rng = _rng(rng)
    G = rng.normal((n, n))
    s = n // 2 if s is None else s
    return MespInstance(_sym(G @ G.T / n + eps * np.eye(n)), s)


def eigedit_mesp(rng, n, k, s=None, zero=None):
    """Positive semidefinite ``C`` with a near-repeated top eigenvalue.

    Starting from :func:`pd_mesp`, the top ``k`` eigenvalues become
    ``1.001^(k - i) lam_k`` (``i = 1..k``) and the ``zero`` smallest are set
    to zero (default ``n // 5``).
    """
    rng = _rng(rng)
    base = pd_mesp(rng, n, 1)
    lam, phi = eigh_desc(base.C)
    k = max(1, min(k, n))
    lam = lam.copy()
    lam[:k] = 1.001 ** (k - np.arange(1, k + 1)) * lam[k - 1]
    zero = n // 5 if zero is None else zero
    if zero:
        lam[n - zero :] = 0.0
    s = min(n - zero, n // 2) if s is None else s
    return MespInstance(_sym((phi * lam) @ phi.T), max(1, s))


def repeated_top_mesp(rng, n, mu, s=None):
    """Positive definite ``C`` whose largest eigenvalue has multiplicity ``mu`` exactly."""
    rng = _rng(rng)
    Q = _orthonormal(rng.normal((n, n)))
    lam = 0.2 + 0.6 * rng.uniform(n)
    lam[:mu] = 1.0
    s = mu if s is None else s
    return MespInstance(_sym((Q * lam) @ Q.T), s)


def generate(kind, rng, n, m=None, k=None, s=None):
    """Dispatch on a recipe name from :data:`GEN_KINDS`."""
    if kind == "randn-dopt":
        return randn_dopt(rng, n, m if m is not None else max(1, n // 3), s)
    if kind == "fusion-dopt":
        return fusion_dopt(rng, n, m if m is not None else max(1, n // 3), s=s)
    if kind == "projector-mesp":
        return projector_mesp(rng, n, m if m is not None else max(1, n // 3), s)
    if kind == "pd-mesp":
        return pd_mesp(rng, n, s)
    if kind == "eigedit-mesp":
        return eigedit_mesp(rng, n, k if k is not None else max(1, n // 4), s)
    raise ValueError(f"unknown generator {kind!r}; choose from {', '.join(GEN_KINDS)}")
