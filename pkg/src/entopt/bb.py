"""Best-first branch-and-bound for MESP and D-Opt.

Branching fixes one index out of or into the solution:

=========  =================================  =====================================
           out                                in
=========  =================================  =====================================
MESP       delete row/column ``i``            Schur complement ``C / C[i, i]``,
                                              ``s - 1``, offset ``+ log C[i, i]``
D-Opt      delete row ``i`` of ``A``          move row ``i`` of ``A`` into ``B``,
                                              ``s - 1``
=========  =================================  =====================================

When the bound kind belongs to the other problem family, two strategies are
available: ``branch-then-map`` branches on the given instance and maps every
node before bounding it; ``map-then-branch`` maps the root once and branches
on the image, translating the solution back through the complement.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bounds.dopt import natural_dopt
from .bounds.transfer import DOPT_KINDS, _split, compute_bound
from .errors import EntoptError, Infeasible, NotPositiveDefinite, SingularBlock
from .heuristics import greedy_swap
from .instances import (
    DOptInstance,
    MespInstance,
    _numeric_rank,
    evaluate,
    fix_in_dopt,
    fix_in_mesp,
    fix_out_dopt,
    fix_out_mesp,
    logdet_gram,
    map_d,
    map_m,
)
from .linalg import cluster_tol, schur_complement

STRATEGIES = ("branch-then-map", "map-then-branch")
INTEGRAL_TOL = 1e-9

# used when a node violates the precondition of the requested bound
FALLBACK = {
    "ddfact-plus": "ddfact",
    "nlp-di": "nlp-id",
    "dspectral": "spectral",
    "hadamard": "diag",
}


@dataclass
class BBNode:
    """A subproblem.

    Attributes
    ----------
    inst : MespInstance or DOptInstance
        Remaining problem; its values include every constant fixed so far.
    idx : ndarray
        Root index of each ground element of ``inst``.
    fixed_in, fixed_out : tuple of int
        Root indices already chosen or excluded.
    depth : int
    bound : float
    relax : ndarray or None
        Relaxation point behind ``bound`` in the index space of ``inst``.
    """

    inst: object
    idx: np.ndarray
    fixed_in: tuple = ()
    fixed_out: tuple = ()
    depth: int = 0
    bound: float = math.inf
    relax: np.ndarray | None = None


@dataclass
class BBStats:
    nodes: int = 0
    incumbent_updates: int = 0
    max_depth: int = 0
    pruned: int = 0
    wall_seconds: float = 0.0


@dataclass
class BBResult:
    value: float
    subset: tuple
    optimal: bool
    stats: BBStats
    kind: str
    strategy: str
    pruned_nodes: list = field(default_factory=list, repr=False)


def _child(node, inst, i, direction):
    keep = np.delete(np.arange(node.inst.n), i)
    root = (int(node.idx[i]),)
    if direction == "in":
        return BBNode(inst, node.idx[keep], node.fixed_in + root, node.fixed_out, node.depth + 1)
    return BBNode(inst, node.idx[keep], node.fixed_in, node.fixed_out + root, node.depth + 1)


def branch_mesp(node, i, direction):
    """Child of a MESP node with position ``i`` fixed ``"in"`` or ``"out"``."""
    if direction == "out":
        return _child(node, fix_out_mesp(node.inst, i), i, direction)
    if direction == "in":
        return _child(node, fix_in_mesp(node.inst, i), i, direction)
    raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")


def branch_dopt(node, i, direction):
    """Child of a D-Opt node with position ``i`` fixed ``"in"`` or ``"out"``."""
    if direction == "out":
        return _child(node, fix_out_dopt(node.inst, i), i, direction)
    if direction == "in":
        return _child(node, fix_in_dopt(node.inst, i), i, direction)
    raise ValueError(f"direction must be 'in' or 'out', got {direction!r}")


def _feasible(inst):
    if isinstance(inst, MespInstance):
        if inst.s == 0:
            return True
        w = np.linalg.eigvalsh(inst.C)
        return int(np.sum(w > cluster_tol(w[-1]))) >= inst.s
    m = inst.m
    if _numeric_rank(np.vstack([inst.A, inst.B])) < m:
        return False
    return inst.s >= m - _numeric_rank(inst.B)


def _is_leaf(inst):
    return inst.s == 0 or inst.s == inst.n


def _leaf_value(node):
    inst = node.inst
    S = tuple(range(inst.n)) if inst.s == inst.n else ()
    sub = tuple(sorted(node.fixed_in + tuple(int(node.idx[k]) for k in S)))
    return evaluate(inst, S), sub


def _node_bound(inst, kind, tol, cutoff):
    """Bound value and relaxation point, falling back when preconditions fail."""
    k = kind
    while True:
        try:
            r = compute_bound(inst, k, tol=tol, cutoff=cutoff)
            return r.value, r.relax_point
        except Infeasible:
            return -math.inf, None
        except (NotPositiveDefinite, SingularBlock, EntoptError) as exc:
            comp, base = _split(k)
            if comp:
                k = base
            elif base in FALLBACK:
                k = FALLBACK[base]
            else:
                raise exc


def _pick_index(node):
    x = node.relax
    inst = node.inst
    if x is not None:
        frac = np.abs(x - 0.5)
        mask = (x > INTEGRAL_TOL) & (x < 1 - INTEGRAL_TOL)
        if np.any(mask):
            return int(np.argmin(np.where(mask, frac, np.inf)))
    if isinstance(inst, MespInstance):
        return int(np.argmax(np.diag(inst.C)))
    return int(np.argmax(np.sum(np.asarray(inst.A) ** 2, axis=1)))


def solve_bb(inst, kind="diag", strategy="branch-then-map", tol=1e-6, node_budget=100_000,
             fw_tol=1e-6, record_pruned=False):
    """Solve MESP or D-Opt exactly by best-first branch-and-bound.

    Parameters
    ----------
    inst : MespInstance or DOptInstance
    kind : str
        Bound kind (see :func:`entopt.bounds.compute_bound`).
    strategy : {"branch-then-map", "map-then-branch"}
        Only matters when ``kind`` is from the other problem family.
    tol : float
        A node is pruned when its bound is at most ``incumbent + tol``.
    node_budget : int
        Nodes to examine (root included) before giving up; the result is then
        flagged not optimal.
    fw_tol : float
        Relative gap tolerance of the iterative bounds.
    record_pruned : bool
        Keep pruned nodes (for soundness checks).

    Returns
    -------
    BBResult
        Subset in 0-based indices of ``inst``.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"strategy must be one of {STRATEGIES}")
    _split(kind)  # validates the name
    t0 = time.perf_counter()
    stats = BBStats()
    inc_val, inc_set = greedy_swap(inst)
    if not np.isfinite(inc_val):
        inc_val = -math.inf
    cross = (kind in DOPT_KINDS) == isinstance(inst, MespInstance)
    flip = False
    work = inst
    if cross and strategy == "map-then-branch":
        work = map_d(inst) if isinstance(inst, MespInstance) else map_m(inst)
        flip = True
    n = inst.n

    def to_root(sub):
        return tuple(sorted(set(range(n)) - set(sub))) if flip else tuple(sorted(sub))

    branch = branch_mesp if isinstance(work, MespInstance) else branch_dopt
    counter = itertools.count()
    heap = []
    pruned = []

    def consider(node):
        nonlocal inc_val, inc_set
        stats.nodes += 1
        stats.max_depth = max(stats.max_depth, node.depth)
        if _is_leaf(node.inst):
            val, sub = _leaf_value(node)
            if val > inc_val:
                inc_val, inc_set = val, to_root(sub)
                stats.incumbent_updates += 1
            return
        if not _feasible(node.inst):
            return
        node.bound, node.relax = _node_bound(node.inst, kind, fw_tol, inc_val + tol)
        if node.bound <= inc_val + tol:
            stats.pruned += 1
            if record_pruned:
                pruned.append(node)
            return
        heapq.heappush(heap, (-node.bound, next(counter), node))

    consider(BBNode(work, np.arange(work.n)))
    optimal = True
    while heap:
        negb, _, node = heapq.heappop(heap)
        if -negb <= inc_val + tol:
            stats.pruned += 1
            if record_pruned:
                pruned.append(node)
            continue
        if stats.nodes >= node_budget:
            heapq.heappush(heap, (negb, next(counter), node))
            optimal = False
            break
        i = _pick_index(node)
        for direction in ("in", "out"):
            try:
                child = branch(node, i, direction)
            except (NotPositiveDefinite, SingularBlock):
                continue  # every completion through this child is singular
            if child.inst.s > child.inst.n or child.inst.s < 0:
                continue
            consider(child)
    stats.wall_seconds = time.perf_counter() - t0
    return BBResult(inc_val, tuple(inc_set), optimal, stats, kind, strategy, pruned)


# ---------------------------------------------------------------------------
# branching versus the M and D maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EquivalenceReport:
    """Deviations between branch-then-map and map-then-branch on the M side."""

    in_matrix: float
    in_constant: float
    out_matrix: float
    out_constant: float

    @property
    def max_dev(self):
        return max(self.in_matrix, self.in_constant, self.out_matrix, self.out_constant)


def verify_bbdopt_equivalence(d, i, j):
    """Compare D-Opt branching followed by the M map with M followed by MESP branching.

    * fixing ``i`` in on D-Opt then mapping gives ``C[N-i, N-i]`` with the
      same constant ``log det(A^T A + B^T B)``;
    * fixing ``j`` out on D-Opt then mapping gives ``C / C[j, j]`` with
      constant ``log C[j, j] + log det(A^T A + B^T B)``.
    """
    C = np.asarray(map_m(d).C)
    ld = logdet_gram(d)
    keep_i = np.delete(np.arange(d.n), i)
    child_in = fix_in_dopt(d, i)
    C1 = np.asarray(map_m(child_in).C)
    dev_in_m = float(np.max(np.abs(C1 - C[np.ix_(keep_i, keep_i)])))
    dev_in_c = abs(logdet_gram(child_in) - ld)
    child_out = fix_out_dopt(d, j)
    C0 = np.asarray(map_m(child_out).C)
    dev_out_m = float(np.max(np.abs(C0 - schur_complement(C, [j]))))
    dev_out_c = abs(logdet_gram(child_out) - (math.log(C[j, j]) + ld))
    return EquivalenceReport(dev_in_m, dev_in_c, dev_out_m, dev_out_c)


@dataclass(frozen=True)
class StrategyReport:
    """Natural bounds of the two orders of branching and the D map.

    ``in_*`` fix index ``i`` into the MESP solution (out of the D-Opt one);
    ``out_*`` fix ``j`` out of the MESP solution (into the D-Opt one).
    """

    in_branch_then_map: float
    in_map_then_branch: float
    out_branch_then_map: float
    out_map_then_branch: float

    @property
    def holds(self):
        return self.max_violation <= 0

    @property
    def max_violation(self):
        return max(self.in_branch_then_map - self.in_map_then_branch,
                   self.out_branch_then_map - self.out_map_then_branch)


def compare_d_strategies(mi, i, j, tol=1e-9):
    """Natural bounds of branch-then-map and map-then-branch on the D side.

    Branch-then-map bounds the MESP child through the D map; map-then-branch
    applies the D map to the parent and branches the image (MESP ``in`` is
    D-Opt ``out`` and vice versa).  The first is never larger.
    """
    def nat(inst):
        if isinstance(inst, MespInstance):
            return compute_bound(inst, "natural", tol=tol).value
        return natural_dopt(inst, tol=tol).value

    dd = map_d(mi)
    in_btm = nat(fix_in_mesp(mi, i)) if mi.s >= 1 else -math.inf
    in_mtb = nat(fix_out_dopt(dd, i)) if mi.s >= 1 else -math.inf
    out_btm = nat(fix_out_mesp(mi, j))
    out_mtb = nat(fix_in_dopt(dd, j))
    return StrategyReport(in_btm, in_mtb, out_btm, out_mtb)
