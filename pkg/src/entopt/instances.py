"""MESP and D-Opt instances, the maps between them and exhaustive oracles.

Indices are 0-based.  Every instance carries an additive ``offset`` and a
``complemented`` flag: when set, a subset ``S`` chosen on this instance
corresponds to ``N \\ S`` on the instance it was derived from.  Values are
always reported with the offset included, so a map never changes the optimal
value.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import DegenerateInstance, NotDataFusion, NotPositiveDefinite, TooLarge, ValidationError
from .linalg import (
    PIVOT_RTOL,
    check_symmetric,
    cholesky,
    cluster_tol,
    logdet_or_neginf,
    logdet_pd,
    schur_complement,
    spectral_decomposition,
)

ENUM_LIMIT = 10_000_000
PSD_RTOL = 1e-8
ZERO_ROW_RTOL = 1e-10
RANK_RTOL = 1e-8


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def _numeric_rank(M):
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > RANK_RTOL * max(sv[0], 1e-300)))


@dataclass(frozen=True)
class MespInstance:
    """Maximum-entropy sampling: maximize ``log det C[S, S]`` over ``|S| = s``.

    Parameters
    ----------
    C : array_like
        Symmetric positive semidefinite ``n x n`` matrix.
    s : int
        Subset size, ``0 <= s <= n``.
    offset : float
        Added to every reported value.
    complemented : bool
        Parity of the complement flips along the derivation chain.
    provenance : tuple of str
        Names of the maps applied so far, oldest first.
    check : bool
        When true, also require ``rank(C) >= s``.
    """

    C: np.ndarray
    s: int
    offset: float = 0.0
    complemented: bool = False
    provenance: tuple = ()
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        C = check_symmetric(self.C, "C")
        object.__setattr__(self, "C", _frozen(C))
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "offset", float(self.offset))
        n = C.shape[0]
        if not 0 <= self.s <= n:
            raise ValidationError(f"need 0 <= s <= n, got s={self.s}, n={n}")
        if n:
            w = np.linalg.eigvalsh(C)
            if w[0] < -PSD_RTOL * max(1.0, abs(w[-1])):
                raise ValidationError(f"C is not positive semidefinite (min eigenvalue {w[0]:.3e})")
            if self.check and int(np.sum(w > cluster_tol(w[-1]))) < self.s:
                raise ValidationError("rank(C) < s: every subset is singular")

    @property
    def n(self):
        return self.C.shape[0]

    def with_(self, **kw):
        kw.setdefault("check", False)
        return replace(self, **kw)


@dataclass(frozen=True)
class DOptInstance:
    """D-optimal design: maximize ``log det(A_S^T A_S + B^T B)`` over ``|S| = s``.

    Parameters
    ----------
    A : array_like
        ``n x m`` design rows.
    B : array_like
        ``q x m`` prior rows; only ``B^T B`` enters the objective.
    s : int
        Number of rows of ``A`` to select.
    allow_zero_rows : bool
        Instances produced by maps may contain all-zero rows of ``A``; user
        input may not.
    check : bool
        When true, require ``[A; B]`` to have full column rank and
        ``s >= m - rank(B)``.
    """

    A: np.ndarray
    B: np.ndarray
    s: int
    offset: float = 0.0
    complemented: bool = False
    provenance: tuple = ()
    allow_zero_rows: bool = field(default=False, repr=False, compare=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
        B = np.asarray(self.B, dtype=np.float64)
        if B.ndim == 1:
            B = B.reshape(0 if B.size == 0 else 1, -1) if B.size else np.zeros((0, A.shape[1]))
        if A.ndim != 2 or B.ndim != 2 or B.shape[1] != A.shape[1]:
            raise ValidationError(f"A ({A.shape}) and B ({B.shape}) must have the same number of columns")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValidationError("A or B has non-finite entries")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "B", _frozen(B))
        object.__setattr__(self, "s", int(self.s))
        object.__setattr__(self, "offset", float(self.offset))
        n, m = A.shape
        if not 0 <= self.s <= n:
            raise ValidationError(f"need 0 <= s <= n, got s={self.s}, n={n}")
        if not self.allow_zero_rows and n:
            norms = np.linalg.norm(A, axis=1)
            if np.any(norms <= ZERO_ROW_RTOL * max(1.0, norms.max())):
                raise ValidationError("A has an all-zero row")
        if self.check:
            if _numeric_rank(np.vstack([A, B])) < m:
                raise ValidationError("[A; B] must have full column rank")
            if self.s < m - _numeric_rank(B):
                raise ValidationError("s < m - rank(B): every subset is singular")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def m(self):
        return self.A.shape[1]

    @property
    def BtB(self):
        return self.B.T @ self.B

    def gram(self):
        return self.A.T @ self.A + self.BtB

    def is_data_fusion(self):
        try:
            cholesky(self.BtB)
        except NotPositiveDefinite:
            return False
        return True

    def with_(self, **kw):
        kw.setdefault("check", False)
        kw.setdefault("allow_zero_rows", True)
        return replace(self, **kw)


# ---------------------------------------------------------------------------
# objective evaluation
# ---------------------------------------------------------------------------


def _as_index(S, n):
    idx = np.asarray(sorted(int(i) for i in S), dtype=int)
    if idx.size and (idx[0] < 0 or idx[-1] >= n or np.any(np.diff(idx) == 0)):
        raise ValidationError(f"invalid subset {S!r} for n={n}")
    return idx


def eval_mesp(mi, S):
    """``log det C[S, S] + offset`` (``-inf`` when singular)."""
    idx = _as_index(S, mi.n)
    if idx.size != mi.s:
        raise ValidationError(f"|S| = {idx.size} but s = {mi.s}")
    if idx.size == 0:
        return mi.offset
    return logdet_or_neginf(mi.C[np.ix_(idx, idx)]) + mi.offset


def eval_dopt(d, S):
    """``log det(A_S^T A_S + B^T B) + offset`` (``-inf`` when singular)."""
    idx = _as_index(S, d.n)
    if idx.size != d.s:
        raise ValidationError(f"|S| = {idx.size} but s = {d.s}")
    As = d.A[idx]
    if d.m == 0:
        return d.offset
    return logdet_or_neginf(As.T @ As + d.BtB) + d.offset


def evaluate(inst, S):
    return eval_mesp(inst, S) if isinstance(inst, MespInstance) else eval_dopt(inst, S)


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------


def _gram_complement(A, B):
    """``I - A (A^T A + B^T B)^{-1} A^T`` and ``log det(A^T A + B^T B)``.

    Computed from a complete QR factorization of ``[A; B]``: the first ``n``
    rows of the orthogonal complement give the result as a Gram matrix, which
    avoids cancellation when it is close to zero.
    """
    n, m = A.shape
    Q, R = np.linalg.qr(np.vstack([A, B]), mode="complete")
    d = np.abs(np.diag(R))
    if m and d.min() <= 1e-13 * max(1.0, d.max()):
        raise ValidationError("[A; B] is rank deficient")
    Q2 = Q[:n, m:]
    C = Q2 @ Q2.T
    return 0.5 * (C + C.T), 2.0 * float(np.sum(np.log(d)))


def map_m(d):
    """Map a D-Opt instance to MESP on the complementary cardinality.

    ``C = I - A (A^T A + B^T B)^{-1} A^T``, size ``n - s``; the offset grows
    by ``log det(A^T A + B^T B)`` and the complement parity flips.
    """
    C, ld = _gram_complement(d.A, d.B)
    return MespInstance(
        C,
        d.n - d.s,
        offset=d.offset + ld,
        complemented=not d.complemented,
        provenance=d.provenance + ("M",),
        check=False,
    )


def map_p(d):
    """Data-fusion D-Opt to MESP with ``C = I + A (B^T B)^{-1} A^T``, same ``s``."""
    try:
        L = cholesky(d.BtB)
    except NotPositiveDefinite:
        raise NotDataFusion("map_p needs B^T B positive definite") from None
    Y = np.linalg.solve(L, d.A.T)
    C = np.eye(d.n) + Y.T @ Y
    ld = 2.0 * float(np.sum(np.log(np.diag(L))))
    return MespInstance(
        0.5 * (C + C.T),
        d.s,
        offset=d.offset + ld,
        complemented=d.complemented,
        provenance=d.provenance + ("P",),
        check=False,
    )


def map_d(mi, decomp=None):
    """Map MESP to D-Opt with ``A^T A + B^T B = I``.

    With ``C = Phi Lam Phi^T``: ``A = Phi (I - Lam / lam_max)^{1/2}``,
    ``B = Lam^{1/2} / sqrt(lam_max)``, selecting ``n - s`` rows.  The offset
    grows by ``s log lam_max`` and the complement parity flips.
    """
    sd = decomp if decomp is not None else spectral_decomposition(mi.C)
    lmax = sd.lam_max
    if not lmax > 0:
        raise DegenerateInstance("map_d needs lam_max > 0")
    ratio = np.clip(sd.lam / lmax, 0.0, 1.0)
    A = sd.phi * np.sqrt(1.0 - ratio)
    B = np.diag(np.sqrt(ratio))
    return DOptInstance(
        A,
        B,
        mi.n - mi.s,
        offset=mi.offset + mi.s * math.log(lmax),
        complemented=not mi.complemented,
        provenance=mi.provenance + ("D",),
        allow_zero_rows=True,
        check=False,
    )


def default_f_factor(C, decomp=None):
    """``Phi (Lam / lam_min - I)^{1/2}`` with the columns of the bottom cluster dropped."""
    sd = decomp if decomp is not None else spectral_decomposition(C)
    lmin = sd.lam_min
    keep = slice(0, sd.lam.size - sd.mu_min)
    scale = np.sqrt(np.clip(sd.lam[keep] / lmin - 1.0, 0.0, None))
    return sd.phi[:, keep] * scale


def map_f(mi, factor=None):
    """Map positive definite MESP to D-Opt with ``B = I``, same ``s``.

    ``A`` is any factor with ``A A^T = C / lam_min - I`` (the default drops the
    zero columns).  Factors with an all-zero row are rejected because such
    rows are outside the D-Opt model; this happens exactly when some
    ``C[i, i]`` equals ``lam_min``, in particular for ``C = kappa I``.
    """
    sd = spectral_decomposition(mi.C)
    lmin = sd.lam_min
    if not lmin > cluster_tol(sd.lam_max):
        raise NotPositiveDefinite("map_f needs C positive definite")
    A = default_f_factor(mi.C, sd) if factor is None else np.asarray(factor, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != mi.n:
        raise ValidationError(f"factor must have {mi.n} rows")
    target = mi.C / lmin - np.eye(mi.n)
    if np.max(np.abs(A @ A.T - target)) > 1e-8 * max(1.0, float(np.max(np.abs(target)))):
        raise ValidationError("factor does not satisfy A A^T = C / lam_min - I")
    norms = np.linalg.norm(A, axis=1) if A.shape[1] else np.zeros(mi.n)
    if A.shape[1] == 0 or np.any(norms <= ZERO_ROW_RTOL * max(1.0, norms.max())):
        raise DegenerateInstance("F-map factor has an all-zero row")
    return DOptInstance(
        A,
        np.eye(A.shape[1]),
        mi.s,
        offset=mi.offset + mi.s * math.log(lmin),
        complemented=mi.complemented,
        provenance=mi.provenance + ("F",),
        check=False,
    )


def complement_mesp(mi):
    """``MESP(C^{-1}, n - s)`` with offset ``+ log det C``; needs ``C`` positive definite."""
    L = cholesky(mi.C)
    Linv = np.linalg.solve(L, np.eye(mi.n))
    Cinv = Linv.T @ Linv
    return MespInstance(
        0.5 * (Cinv + Cinv.T),
        mi.n - mi.s,
        offset=mi.offset + 2.0 * float(np.sum(np.log(np.diag(L)))),
        complemented=not mi.complemented,
        provenance=mi.provenance + ("complement",),
        check=False,
    )


def scale_mesp(mi, gamma):
    """``MESP(gamma C, s)`` with offset ``- s log gamma``."""
    if not gamma > 0:
        raise ValidationError("scale factor must be positive")
    return mi.with_(
        C=gamma * np.asarray(mi.C),
        offset=mi.offset - mi.s * math.log(gamma),
        provenance=mi.provenance + (f"scale({gamma:g})",),
    )


# edges of the map graph: (source, target, name, relation)
MAP_GRAPH = (
    ("DOPT(A,B,s)", "MESP(C,n-s)", "M", "C = I - A (A'A + B'B)^-1 A'"),
    ("DOPT(A,B,s)", "MESP(C,s)", "P", "C = I + A (B'B)^-1 A', B'B PD"),
    ("MESP(C,s)", "DOPT(A,B,n-s)", "D", "A'A + B'B = I"),
    ("MESP(C,s)", "DOPT(A,I,s)", "F", "A A' = C / lam_min - I, C PD"),
    ("MESP(C,s)", "MESP(C^-1,n-s)", "complement", "C PD"),
    ("MESP(C,s)", "MESP(gC,s)", "scale", "offset - s log g"),
    ("M(D(C,s))", "MESP(C/lam_max,s)", "M o D", "identity"),
    ("P(d)", "M(d)", "P vs M", "C_P = C_M^-1"),
    ("D(M(d))", "d", "D o M", "same values after constants"),
)


# ---------------------------------------------------------------------------
# branching primitives
# ---------------------------------------------------------------------------


def fix_out_mesp(mi, i):
    """Delete row and column ``i``; cardinality unchanged."""
    keep = np.delete(np.arange(mi.n), i)
    return mi.with_(C=np.asarray(mi.C)[np.ix_(keep, keep)], provenance=mi.provenance + (f"out({i})",))


def fix_in_mesp(mi, i):
    """Schur complement ``C / C[i, i]``, cardinality ``s - 1``, offset ``+ log C[i, i]``."""
    cii = float(mi.C[i, i])
    if not cii > PIVOT_RTOL * max(float(np.trace(mi.C)) / mi.n, 1e-300):
        raise NotPositiveDefinite(f"C[{i},{i}] = {cii:.3e} is numerically zero")
    return mi.with_(
        C=schur_complement(mi.C, [i]),
        s=mi.s - 1,
        offset=mi.offset + math.log(cii),
        provenance=mi.provenance + (f"in({i})",),
    )


def fix_out_dopt(d, i):
    """Delete row ``i`` of ``A``; cardinality unchanged."""
    return d.with_(A=np.delete(np.asarray(d.A), i, axis=0), provenance=d.provenance + (f"out({i})",))


def fix_in_dopt(d, i):
    """Move row ``i`` of ``A`` into ``B``; cardinality ``s - 1``."""
    A = np.asarray(d.A)
    return d.with_(
        A=np.delete(A, i, axis=0),
        B=np.vstack([A[i : i + 1], d.B]),
        s=d.s - 1,
        provenance=d.provenance + (f"in({i})",),
    )


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------


def subsets(n, s):
    """All ``s``-subsets of ``range(n)`` in lexicographic order, as a ``K x s`` array."""
    if math.comb(n, s) > ENUM_LIMIT:
        raise TooLarge(f"C({n},{s}) = {math.comb(n, s)} exceeds the enumeration limit")
    if s == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.combinations(range(n), s)), dtype=np.int64)


def all_values(inst, combos=None):
    """Objective values (offset included) for every ``s``-subset in lexicographic order."""
    if combos is None:
        combos = subsets(inst.n, inst.s)
    if isinstance(inst, MespInstance):
        if inst.s == 0:
            return np.full(len(combos), inst.offset)
        vals = _kernels.subset_logdets(np.asarray(inst.C), combos, PIVOT_RTOL)
    else:
        if inst.m == 0:
            return np.full(len(combos), inst.offset)
        vals = _kernels.gram_logdets(np.asarray(inst.A), inst.BtB, combos, PIVOT_RTOL)
    return vals + inst.offset


def brute_force(inst):
    """Exact optimum by enumeration; ties go to the lexicographically least subset.

    Returns
    -------
    value : float
    subset : tuple of int
    """
    combos = subsets(inst.n, inst.s)
    vals = all_values(inst, combos)
    k = int(np.argmax(vals))
    return float(vals[k]), tuple(int(i) for i in combos[k])


def complement_of(S, n):
    s = set(int(i) for i in S)
    return tuple(i for i in range(n) if i not in s)


def logdet_gram(d):
    return logdet_pd(d.gram())
