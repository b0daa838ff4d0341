"""Concave maximization over ``{x in [0, 1]^n : sum x = s}`` with a duality-gap certificate.

Every iterate is feasible.  At each iterate the linear maximizer ``v`` over the
domain (ones on the ``s`` largest gradient entries) gives the Frank-Wolfe gap
``g . (v - x)``; for a concave objective ``f(x) + gap`` is an upper bound on
the maximum, which is what bound routines report.

Two search directions are available.  ``method="fw"`` steps towards ``v``
(classical conditional gradient).  ``method="pg"`` (default) steps towards the
projection of ``x + alpha g`` with a Barzilai-Borwein ``alpha``, falling back
to the Frank-Wolfe direction when that fails; it converges linearly on the
well-conditioned problems here, which is what makes tight gaps reachable.
Both use Armijo backtracking (shrink 0.5, sufficient-increase 1e-4).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import Infeasible, NumericError

ARMIJO_C = 1e-4
SHRINK = 0.5
MAX_HALVINGS = 60
STALL_RTOL = 1e-14
STALL_ITERS = 20


@dataclass
class BoundResult:
    """Outcome of a bound computation.

    Attributes
    ----------
    value : float
        Upper bound, offsets included.  For iterative bounds this is the
        objective at the final iterate plus the certified gap.
    relax_point : ndarray or None
        Final relaxation iterate in the index space of the bounded instance.
    cert_gap : float
        Frank-Wolfe gap at ``relax_point`` (0 for closed forms).
    iters : int
    seconds : float
    kind : str
    notes : tuple of str
        Free-form flags such as ``"uncertified-concavity"`` or ``"max-iter"``.
    """

    value: float
    relax_point: np.ndarray | None = None
    cert_gap: float = 0.0
    iters: int = 0
    seconds: float = 0.0
    kind: str = ""
    notes: tuple = field(default_factory=tuple)

    def shifted(self, delta, complement=False, kind=None, notes=()):
        x = self.relax_point
        if x is not None and complement:
            x = 1.0 - x
        return BoundResult(
            value=self.value + delta,
            relax_point=x,
            cert_gap=self.cert_gap,
            iters=self.iters,
            seconds=self.seconds,
            kind=kind or self.kind,
            notes=self.notes + tuple(notes),
        )


@dataclass
class SolveResult:
    x: np.ndarray
    f: float
    gap: float
    iters: int
    converged: bool
    stopped_by_cutoff: bool = False
    stalled: bool = False

    @property
    def upper(self):
        return self.f + self.gap

    def notes(self):
        if self.converged or self.stopped_by_cutoff:
            return ()
        return ("stalled",) if self.stalled else ("max-iter",)


def lmo(g, s):
    """Vertex maximizing ``g . v``: ones on the ``s`` largest entries, ties by index."""
    v = np.zeros_like(g)
    if s:
        order = np.argsort(-g, kind="stable")
        v[order[:s]] = 1.0
    return v


def maximize(obj, n, s, tol=1e-6, max_iter=5000, method="pg", x0=None, cutoff=None):
    """Maximize a concave ``obj`` over the capped simplex.

    Parameters
    ----------
    obj : object
        Provides ``value(x)`` and ``value_grad(x)``; ``value`` may return
        ``-inf`` outside the objective's domain.
    n, s : int
        Dimension and the sum constraint.
    tol : float
        Stop once the gap is at most ``tol * max(1, |f|)``.
    max_iter : int
    method : {"pg", "fw"}
    x0 : ndarray, optional
        Starting point; defaults to ``(s / n) e``.  An infeasible ``x0`` is
        replaced by the default.
    cutoff : float, optional
        Stop as soon as ``f + gap <= cutoff`` (the bound is then good enough
        to prune a branch-and-bound node).

    Raises
    ------
    Infeasible
        If the objective is ``-inf`` at the start.
    """
    if method not in ("pg", "fw"):
        raise ValueError(f"unknown method {method!r}")
    if s == 0 or s == n:
        x = np.full(n, float(s == n))
        f = obj.value(x)
        if not np.isfinite(f):
            raise Infeasible("objective is -inf at the only feasible point")
        return SolveResult(x, f, 0.0, 0, True)

    x = None
    if x0 is not None:
        x = _kernels.capped_simplex(np.asarray(x0, dtype=np.float64), s)
        f, g = obj.value_grad(x)
        if not np.isfinite(f):
            x = None
    if x is None:
        x = np.full(n, s / n)
        f, g = obj.value_grad(x)
        if not np.isfinite(f):
            raise Infeasible("relaxation objective is -inf at the barycenter")
    alpha = 1.0 / max(1e-12, float(np.max(np.abs(g))))
    gap = np.inf
    it = 0
    converged = False
    by_cutoff = False
    flat = 0
    while True:
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient at iteration {it}")
        v = lmo(g, s)
        gap = max(0.0, float(g @ (v - x)))
        if gap <= tol * max(1.0, abs(f)):
            converged = True
            break
        if cutoff is not None and f + gap <= cutoff:
            by_cutoff = True
            break
        if it >= max_iter:
            break
        it += 1
        step = None
        if method == "pg":
            d = _kernels.capped_simplex(x + alpha * g, s) - x
            step = _armijo(obj, x, f, g, d)
        if step is None:
            step = _armijo(obj, x, f, g, v - x)
        if step is None:
            break  # no ascent possible at working precision
        xn, t = step
        fn, gn = obj.value_grad(xn)
        sk = xn - x
        yk = gn - g
        sy = float(sk @ yk)
        # Barzilai-Borwein step, never more than twice the step just accepted
        cap = 2.0 * alpha * t
        alpha = float(sk @ sk) / -sy if sy < 0 else cap
        alpha = min(max(alpha, 1e-12), cap, 1e12)
        # round-off floor: the objective no longer moves
        flat = flat + 1 if fn - f <= STALL_RTOL * max(1.0, abs(f)) else 0
        x, f, g = xn, fn, gn
        if flat >= STALL_ITERS:
            gap = max(0.0, float(g @ (lmo(g, s) - x)))
            return SolveResult(x, f, gap, it, False, False, True)
    return SolveResult(x, f, gap, it, converged, by_cutoff)


def _armijo(obj, x, f, g, d):
    slope = float(g @ d)
    if not slope > 0:
        return None
    t = 1.0
    for _ in range(MAX_HALVINGS):
        xn = x + t * d
        fn = obj.value(xn)
        if np.isfinite(fn) and fn >= f + ARMIJO_C * t * slope:
            return xn, t
        t *= SHRINK
    return None


def timed(fn):
    """Run ``fn()`` and return ``(result, seconds)``."""
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0
