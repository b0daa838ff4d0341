"""Bounds carried across the maps, and a single dispatcher over all bound kinds.

MESP kinds: ``diag``, ``spectral``, ``nlp-id``, ``nlp-di``, ``ddfact``,
``ddfact-plus``, ``linx``, ``linx-opt``; prefix ``comp-`` applies the kind to
the complementary instance ``MESP(C^{-1}, n - s)``.  D-Opt kinds: ``natural``,
``dspectral``, ``hadamard``.  Asking for a MESP kind on a D-Opt instance goes
through the M map; asking for a D-Opt kind on a MESP instance goes through
the D map (with the redundant leading columns dropped).
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError
from ..instances import DOptInstance, MespInstance, complement_mesp, map_d, map_m
from ..linalg import spectral_decomposition
from . import dopt, mesp

MESP_KINDS = ("diag", "spectral", "nlp-id", "nlp-di", "ddfact", "ddfact-plus", "linx", "linx-opt")
DOPT_KINDS = ("natural", "dspectral", "hadamard")
ITERATIVE = {"nlp-id", "nlp-di", "ddfact", "ddfact-plus", "linx", "linx-opt", "natural"}


def all_kinds():
    return MESP_KINDS + tuple("comp-" + k for k in MESP_KINDS) + DOPT_KINDS


def _split(kind):
    if kind.startswith("comp-"):
        base = kind[5:]
        if base not in MESP_KINDS:
            raise ValidationError(f"unknown bound kind {kind!r}")
        return True, base
    if kind not in MESP_KINDS and kind not in DOPT_KINDS:
        raise ValidationError(f"unknown bound kind {kind!r}")
    return False, kind


def _mesp_direct(kind, mi, tol, method, cutoff):
    if kind == "diag":
        return mesp.diagonal_mesp(mi)
    if kind == "spectral":
        return mesp.spectral_mesp(mi)
    if kind == "nlp-id":
        return mesp.nlp_id(mi, tol=tol, method=method, cutoff=cutoff)
    if kind == "nlp-di":
        return mesp.nlp_di(mi, tol=tol, method=method, cutoff=cutoff)
    if kind == "ddfact":
        return mesp.ddfact(mi, tol=tol, method=method, cutoff=cutoff)
    if kind == "ddfact-plus":
        return mesp.ddfact_plus(mi, tol=tol, method=method, cutoff=cutoff)
    if kind == "linx":
        return mesp.linx_bound(mi, mesp.linx_default_gamma(mi), tol=tol, method=method, cutoff=cutoff)
    if kind == "linx-opt":
        return mesp.linx_opt_gamma(mi, tol=tol, method=method, cutoff=cutoff)
    raise ValidationError(f"unknown MESP bound kind {kind!r}")


def _dopt_direct(kind, d, tol, method, cutoff):
    if kind == "natural":
        return dopt.natural_dopt(d, tol=tol, method=method, cutoff=cutoff)
    if kind == "dspectral":
        return dopt.spectral_dopt(d)
    if kind == "hadamard":
        return dopt.hadamard_dopt(d)
    raise ValidationError(f"unknown D-Opt bound kind {kind!r}")


def mesp_bound(kind, mi, tol=1e-6, method="pg", cutoff=None):
    """MESP kind (optionally ``comp-``) on a MESP instance."""
    comp, base = _split(kind)
    if not comp:
        return _mesp_direct(base, mi, tol, method, cutoff)
    r = _mesp_direct(base, complement_mesp(mi), tol, method, cutoff)
    return r.shifted(0.0, complement=True, kind=kind)


def m_induced(kind, d, tol=1e-6, method="pg", cutoff=None):
    """Bound on D-Opt ``d`` from a MESP bound applied to ``map_m(d)``.

    The mapped instance carries ``log det(A^T A + B^T B)`` in its offset, so
    the value is directly a bound on ``d``; the relaxation point is mapped
    back through the complement.
    """
    r = mesp_bound(kind, map_m(d), tol, method, cutoff)
    return r.shifted(0.0, complement=True, kind=kind)


def reduce_columns(d, k=None):
    """Drop the leading ``k`` columns of a D-map instance.

    Instances from :func:`map_d` have ``B`` diagonal and, for the top
    eigenvalue cluster of multiplicity ``mu_max``, zero columns in ``A`` with
    ``B_jj = 1``; those columns contribute nothing to any D-Opt objective.
    When ``k`` is omitted it is detected from that structure.
    """
    B = np.asarray(d.B)
    A = np.asarray(d.A)
    if B.shape[0] != B.shape[1] or np.any(np.abs(B - np.diag(np.diag(B))) > 0):
        raise ValidationError("reduce_columns expects a square diagonal B")
    if k is None:
        k = 0
        while k < d.m and np.diag(B)[k] ** 2 >= 1 - 1e-8 and np.sum(A[:, k] ** 2) <= 1e-8:
            k += 1
    if k == 0:
        return d
    keep = np.arange(k, d.m)
    return d.with_(A=A[:, keep], B=B[np.ix_(keep, keep)], provenance=d.provenance + (f"reduce({k})",))


def d_induced(kind, mi, tol=1e-6, method="pg", cutoff=None, reduce=True):
    """Bound on MESP ``mi`` from a D-Opt bound applied to ``map_d(mi)``."""
    if kind not in DOPT_KINDS:
        raise ValidationError(f"{kind!r} is not a D-Opt bound kind")
    sd = spectral_decomposition(mi.C)
    d = map_d(mi, sd)
    if reduce:
        d = reduce_columns(d, sd.mu_max if sd.mu_max < d.m else d.m - 1)
    r = _dopt_direct(kind, d, tol, method, cutoff)
    return r.shifted(0.0, complement=True, kind=kind)


def compute_bound(inst, kind, tol=1e-6, method="pg", cutoff=None, reduce=True):
    """Any bound kind on any instance, transferring through the maps when needed."""
    comp, base = _split(kind)
    if isinstance(inst, MespInstance):
        if base in DOPT_KINDS:
            return d_induced(kind, inst, tol, method, cutoff, reduce)
        return mesp_bound(kind, inst, tol, method, cutoff)
    if isinstance(inst, DOptInstance):
        if base in DOPT_KINDS:
            r = _dopt_direct(kind, inst, tol, method, cutoff)
            r.kind = kind
            return r
        return m_induced(kind, inst, tol, method, cutoff)
    raise TypeError(f"not an instance: {type(inst).__name__}")
