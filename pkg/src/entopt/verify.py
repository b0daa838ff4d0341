"""Randomized property suites behind ``entopt verify``.

Each suite returns a list of :class:`Check` records holding the largest
deviation seen for one identity or inequality and the tolerance it is held
to.  Equalities report ``|lhs - rhs|``; inequalities ``lhs <= rhs`` report
``max(0, lhs - rhs)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import conditions as cond
from .bb import compare_d_strategies, solve_bb, verify_bbdopt_equivalence
from .bounds import (
    DOPT_KINDS,
    MESP_KINDS,
    compute_bound,
    d_induced,
    ddfact,
    ddfact_plus,
    diagonal_mesp,
    hadamard_dopt,
    m_induced,
    natural_dopt,
    nlp_id,
    reduce_columns,
    spectral_dopt,
    spectral_mesp,
)
from .errors import DegenerateInstance
from .generate import fusion_dopt, pd_mesp, projector_mesp, repeated_top_mesp
from .instances import (
    DOptInstance,
    MespInstance,
    all_values,
    brute_force,
    complement_mesp,
    default_f_factor,
    map_d,
    map_f,
    map_m,
    map_p,
    scale_mesp,
    subsets,
)
from .linalg import eigvalsh_desc, sorted_diag, spectral_decomposition
from .rng import PortableRNG

SUITES = ("maps", "transfers", "dominations", "conditions", "bb", "gaps")
MAP_TOL = 1e-8
CLOSED_TOL = 1e-9
SOLVER_TOL = 5e-6
# the solver stops on a relative gap, so pairs of bounds near |value| = 10 need
# a tighter per-solve tolerance to meet SOLVER_TOL in absolute terms
BOUND_TOL = 1e-7


@dataclass
class Check:
    name: str
    tol: float
    max_dev: float = 0.0
    count: int = 0
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.count > 0 and self.max_dev <= self.tol

    def eq(self, a, b, scale=False):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        dev = _value_dev(a, b, scale)
        self.max_dev = max(self.max_dev, dev)
        self.count += int(max(a.size, 1))
        return dev

    def le(self, lhs, rhs):
        dev = max(0.0, float(lhs) - float(rhs))
        if math.isnan(dev):
            dev = math.inf
        self.max_dev = max(self.max_dev, dev)
        self.count += 1
        return dev

    def flag(self, ok, note=None):
        """Record a boolean outcome as deviation 0 or inf."""
        self.count += 1
        if not ok:
            self.max_dev = math.inf
            if note:
                self.notes.append(note)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<48s} max_dev={self.max_dev:.3e}  tol={self.tol:.0e}  n={self.count}"


def _value_dev(a, b, scale):
    both_inf = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        d = np.where(both_inf, 0.0, np.abs(a - b))
    if scale:
        d = d / np.maximum(1.0, np.abs(np.where(np.isfinite(a), a, 1.0)))
    d = np.where(np.isnan(d), np.inf, d)
    return float(np.max(d)) if d.size else 0.0


class _Checks(dict):
    def get_(self, name, tol):
        if name not in self:
            self[name] = Check(name, tol)
        return self[name]


def _complement_combos(combos, n):
    mask = np.ones((len(combos), n), dtype=bool)
    np.put_along_axis(mask, combos, False, axis=1)
    return np.nonzero(mask)[1].reshape(len(combos), n - combos.shape[1])


def _random_dopt(rng, n, fusion):
    m = rng.integers(1, n)
    if fusion:
        return fusion_dopt(rng, n, m, q=m + rng.integers(0, 2), s=1)
    A = rng.normal((n, m))
    return DOptInstance(A, np.zeros((1, m)), m)


# ---------------------------------------------------------------------------
# maps
# ---------------------------------------------------------------------------


def suite_maps(seed=0, count=200):
    """Value identities of the maps, checked on every subset of every cardinality."""
    root = PortableRNG(seed)
    ck = _Checks()
    for k in range(count):
        rng = root.child(k)
        n = 4 + k % 5
        if k % 2 == 0:
            _maps_dopt(ck, rng, n, fusion=(k // 2) % 2 == 0)
        else:
            _maps_mesp(ck, rng, n)
    return list(ck.values())


def _maps_dopt(ck, rng, n, fusion):
    d0 = _random_dopt(rng, n, fusion)
    lo = 1 if fusion else d0.m
    for s in range(lo, n):
        d = d0.with_(s=s)
        combos = subsets(n, s)
        comp = _complement_combos(combos, n)
        v = all_values(d, combos)
        mm = map_m(d)
        ck.get_("D-Opt vs MESP of the M map on N-S", MAP_TOL).eq(v, all_values(mm, comp), scale=True)
        dm = map_d(mm)
        ck.get_("D map of the M map preserves values", MAP_TOL).eq(v, all_values(dm, combos), scale=True)
        if fusion:
            mp = map_p(d)
            ck.get_("D-Opt vs MESP of the P map", MAP_TOL).eq(v, all_values(mp, combos), scale=True)
            prod = np.asarray(mp.C) @ np.asarray(mm.C)
            ck.get_("P-map C times M-map C is I", 1e-7).eq(prod, np.eye(n))


def _maps_mesp(ck, rng, n):
    mi0 = pd_mesp(rng, n, 1)
    C = np.asarray(mi0.C)
    sd = spectral_decomposition(C)
    for s in range(1, n):
        mi = mi0.with_(s=s)
        combos = subsets(n, s)
        comp = _complement_combos(combos, n)
        v = all_values(mi, combos)
        d = map_d(mi, sd)
        ck.get_("MESP vs D-Opt of the D map on N-S", MAP_TOL).eq(v, all_values(d, comp), scale=True)
        md = map_m(d)
        ck.get_("M map of the D map is C / lam_max", MAP_TOL).eq(np.asarray(md.C), C / sd.lam_max)
        ck.get_("M map of the D map keeps s", 0.0).eq(md.s, s)
        ck.get_("M map of the D map preserves values", MAP_TOL).eq(v, all_values(md, combos), scale=True)
        try:
            f = map_f(mi)
        except DegenerateInstance:
            f = None
        if f is not None:
            ck.get_("MESP vs D-Opt of the F map", MAP_TOL).eq(v, all_values(f, combos), scale=True)
        cm = complement_mesp(mi)
        ck.get_("MESP vs complement on N-S", MAP_TOL).eq(v, all_values(cm, comp), scale=True)
        cc = complement_mesp(cm)
        ck.get_("double complement restores C and offset", MAP_TOL).eq(
            np.append(np.asarray(cc.C).ravel(), cc.offset), np.append(C.ravel(), mi.offset)
        )
        g = float(np.exp(rng.normal() * 2.0))
        ck.get_("values invariant under scaling", MAP_TOL).eq(v, all_values(scale_mesp(mi, g), combos), scale=True)
    _linear_relation(ck, mi0, sd)


def _linear_relation(ck, mi, sd):
    # D-map A times B^{-1} against the F-map factor of the complement, matched column by column
    d = map_d(mi, sd)
    A, B = np.asarray(d.A), np.diag(np.asarray(d.B))
    keep = B < 1.0 - 1e-12
    X = A[:, keep] / B[keep]
    cinv = complement_mesp(mi)
    F = default_f_factor(cinv.C)
    dev = ck.get_("D-map A B^-1 equals the complement's F-map factor", 1e-7)
    if F.shape != X.shape:
        dev.flag(False, f"shape {F.shape} vs {X.shape}")
        return
    M = F.T @ X
    perm = np.argmax(np.abs(M), axis=1)
    signs = np.sign(M[np.arange(len(perm)), perm])
    dev.eq(F, X[:, perm] * signs)


# ---------------------------------------------------------------------------
# bound transfers
# ---------------------------------------------------------------------------


def suite_transfers(seed=0, count=100):
    """Equalities between bounds computed directly and through a map."""
    root = PortableRNG(seed)
    ck = _Checks()
    for k in range(count):
        rng = root.child(k)
        n = 5 + k % 8
        if k % 3 == 0:
            mi = pd_mesp(rng, n, 1 + rng.integers(0, n - 1))
            ck.get_("D-induced dspectral equals spectral", CLOSED_TOL).eq(
                d_induced("dspectral", mi, tol=BOUND_TOL).value, spectral_mesp(mi).value)
            ck.get_("D-induced hadamard equals comp-diag", CLOSED_TOL).eq(
                d_induced("hadamard", mi, tol=BOUND_TOL).value, compute_bound(mi, "comp-diag", tol=BOUND_TOL).value)
            ck.get_("D-induced natural equals nlp-id", SOLVER_TOL).eq(
                d_induced("natural", mi, tol=BOUND_TOL).value, nlp_id(mi, tol=BOUND_TOL).value)
            ck.get_("column reduction keeps natural", SOLVER_TOL).eq(
                d_induced("natural", mi, tol=BOUND_TOL).value, d_induced("natural", mi, reduce=False, tol=BOUND_TOL).value)
        elif k % 3 == 1:
            d = fusion_dopt(rng, n, rng.integers(1, n), s=1 + rng.integers(0, n - 1))
            ck.get_("M-induced spectral equals dspectral", CLOSED_TOL).eq(
                m_induced("spectral", d, tol=BOUND_TOL).value, spectral_dopt(d).value)
            ck.get_("M-induced comp-diag equals hadamard", CLOSED_TOL).eq(
                m_induced("comp-diag", d, tol=BOUND_TOL).value, hadamard_dopt(d).value)
            ck.get_("M-induced nlp-id equals natural (rank A < n)", SOLVER_TOL).eq(
                m_induced("nlp-id", d, tol=BOUND_TOL).value, natural_dopt(d, tol=BOUND_TOL).value)
        else:
            m = rng.integers(1, n)
            d = DOptInstance(rng.normal((n, m)), np.zeros((1, m)), m + rng.integers(0, n - m))
            ck.get_("M-induced nlp-id equals natural (rank A < n)", SOLVER_TOL).eq(
                m_induced("nlp-id", d, tol=BOUND_TOL).value, natural_dopt(d, tol=BOUND_TOL).value)
            # square full-rank A: the M-induced bound is strictly below natural
            q = max(1, n // 2)
            sq = fusion_dopt(rng, q, q, s=max(1, q // 2))
            if sq.n >= 2:
                gap = natural_dopt(sq, tol=BOUND_TOL).value - m_induced("nlp-id", sq, tol=BOUND_TOL).value
                ck.get_("M-induced nlp-id below natural (rank A = n)", SOLVER_TOL).le(0.0, gap + SOLVER_TOL)
    return list(ck.values())


# ---------------------------------------------------------------------------
# dominations and validity
# ---------------------------------------------------------------------------


def suite_dominations(seed=0, count=100, validity_n=8):
    """Bound inequalities and ``bound >= optimum`` on small instances."""
    root = PortableRNG(seed)
    ck = _Checks()
    for k in range(count):
        rng = root.child(k)
        n = 5 + k % 6
        mi = pd_mesp(rng, n, 1 + rng.integers(0, n - 1))
        s = mi.s
        dd = ddfact(mi, tol=BOUND_TOL).value
        ck.get_("ddfact <= diag", SOLVER_TOL).le(dd, diagonal_mesp(mi).value)
        ck.get_("ddfact <= spectral", SOLVER_TOL).le(dd, spectral_mesp(mi).value)
        rep = cond.spectral_diff_bound(mi, tol=BOUND_TOL)
        ck.get_("nlp-id - spectral <= sum log(lam_max/lam_i)", SOLVER_TOL).le(rep.actual, rep.rhs)
        ck.get_("comp ddfact-plus <= nlp-id", SOLVER_TOL).le(
            compute_bound(mi, "comp-ddfact-plus", tol=BOUND_TOL).value, nlp_id(mi, tol=BOUND_TOL).value)
        try:
            f = map_f(mi)
            ck.get_("ddfact-plus <= F-induced natural", SOLVER_TOL).le(
                ddfact_plus(mi, tol=BOUND_TOL).value, natural_dopt(f, tol=BOUND_TOL).value)
        except DegenerateInstance:
            pass
        mu = 1 + k % 3
        rt = repeated_top_mesp(rng, n, mu, s=1 + rng.integers(0, mu))
        ck.get_("nlp-id <= spectral when s <= mu_max", SOLVER_TOL).le(
            nlp_id(rt, tol=BOUND_TOL).value, spectral_mesp(rt).value)

        d = fusion_dopt(rng, n, rng.integers(1, n), s=1 + rng.integers(0, n - 1))
        nat = natural_dopt(d, tol=BOUND_TOL).value
        spec = spectral_dopt(d).value
        had = hadamard_dopt(d).value
        if d.s >= d.m:
            ck.get_("natural <= dspectral when s >= m", SOLVER_TOL).le(nat, spec)
        pdd = ddfact(map_p(d), tol=BOUND_TOL).value
        ck.get_("P-induced ddfact <= dspectral", SOLVER_TOL).le(pdd, spec)
        Mp = np.asarray(map_p(d).C)
        dl = sorted_diag(Mp)
        lam = eigvalsh_desc(Mp)
        ck.get_("dspectral - hadamard <= tail log(delta/lambda)", CLOSED_TOL).le(
            spec - had, float(np.sum(np.log(dl[d.s :] / lam[d.s :]))))
        ck.get_("P-induced ddfact - hadamard <= log(delta_1/delta_i)", SOLVER_TOL).le(
            pdd - had, float(np.sum(np.log(dl[0] / dl[1 : d.s]))))

        i, j = rng.integers(0, n), rng.integers(0, n)
        rep = compare_d_strategies(mi, i, j, tol=1e-8)
        ck.get_("branch-then-map <= map-then-branch (natural)", SOLVER_TOL).le(rep.max_violation, 0.0)

        if n <= validity_n:
            _validity(ck, mi, d, with_slow=(k % 5 == 0))
    return list(ck.values())


def _validity(ck, mi, d, with_slow):
    c = ck.get_("every bound >= optimum", 1e-6)
    for inst in (mi, d):
        opt, _ = brute_force(inst)
        for kind in MESP_KINDS + tuple("comp-" + x for x in MESP_KINDS) + DOPT_KINDS:
            if not with_slow and kind.endswith("nlp-di"):
                continue
            if isinstance(inst, DOptInstance) and kind.startswith("comp-"):
                continue
            c.le(opt, compute_bound(inst, kind, tol=BOUND_TOL).value + 1e-12)


# ---------------------------------------------------------------------------
# gaps between a bound and its complement
# ---------------------------------------------------------------------------


def suite_gaps(seed=0, count=100):
    """Sandwich on NLP-Id minus its complement, and monotonicity of diag minus comp-diag."""
    root = PortableRNG(seed)
    ck = _Checks()
    for k in range(count):
        rng = root.child(k)
        n = 5 + k % 6
        mi = pd_mesp(rng, n, 1 + rng.integers(0, n - 1))
        rep = cond.gap_bounds_nlpid(mi, tol=BOUND_TOL)
        ck.get_("nlp-id minus comp >= -(n-s) log(lmax/lmin)", SOLVER_TOL).le(rep.lo, rep.actual)
        ck.get_("nlp-id minus comp <= s log(lmax/lmin)", SOLVER_TOL).le(rep.actual, rep.hi)
        psi = diag_gap_curve(mi)
        ck.get_("diag minus comp-diag non-decreasing in s", CLOSED_TOL).le(float(np.max(-np.diff(psi), initial=0.0)), 0.0)
    return list(ck.values())


def diag_gap_curve(mi):
    """``diag(C, s) - comp-diag(C, s)`` for ``s = 1 .. n-1``."""
    out = []
    for s in range(1, mi.n):
        m = mi.with_(s=s)
        out.append(diagonal_mesp(m).value - compute_bound(m, "comp-diag", tol=BOUND_TOL).value)
    return np.array(out)


# ---------------------------------------------------------------------------
# conditions
# ---------------------------------------------------------------------------


def worked_projector(kind, n=6):
    """Projector examples ``I - U U^T`` used by the condition ladder.

    ``"sqrt30"``: ``U = (1,2,3,4)/sqrt(30)``; ``"sqrt14"``: ``U = (1,2,3)/sqrt(14)``;
    ``"two-col"``: ``U = [(7,6,3,4)/sqrt(110), (-1,2,1,-2)/sqrt(10)]``.
    Returns the exact :class:`~fractions.Fraction` matrix.
    """
    if kind == "sqrt30":
        return cond.exact_projector([[1, 2, 3, 4]], [30], n)
    if kind == "sqrt14":
        return cond.exact_projector([[1, 2, 3]], [14], n)
    if kind == "two-col":
        return cond.exact_projector([[7, 6, 3, 4], [-1, 2, 1, -2]], [110, 10], n)
    raise ValueError(kind)


def worked_examples(n=6):
    """The three projector examples and their published quantities, as checks."""
    ck = _Checks()
    F = worked_projector("sqrt30", n)
    C = F.astype(float)
    Psi = cond.psi_matrix(C)
    ck.get_("sqrt30: max Sassenfeld alpha <= 0.34", 0.0).le(float(cond.sassenfeld_coeffs(Psi).max()), 0.34)
    ck.get_("sqrt30: max scaled row sum <= 0.8", 0.0).le(float(cond.rowsum_scaled(Psi).max()), 0.8)
    beta, _, boxed = cond.gauss_seidel(Psi)
    want = np.array([918, 873, 698, 3393] + [929] * (n - 4)) / 929
    ck.get_("sqrt30: Gauss-Seidel beta", 1e-8).eq(beta, want)
    ck.get_("sqrt30: iterates stay boxed", 0.0).flag(boxed)
    ck.get_("sqrt30: ladder verdict sassenfeld", 0.0).flag(cond.check_conditions(C).verdict == "sassenfeld")
    ck.get_("sqrt30: trace certificate", 0.0).flag(cond.trace_certificate(C, beta).ok)

    F = worked_projector("sqrt14", n)
    C = F.astype(float)
    Psi = cond.psi_matrix(C)
    rep = cond.check_conditions(C)
    want = np.array([2 / 3, -5 / 3, 10] + [1] * (n - 3))
    ck.get_("sqrt14: exact solve beta", 1e-8).eq(rep.solve_beta, want)
    ck.get_("sqrt14: max Sassenfeld alpha <= 0.56", 0.0).le(float(rep.sassenfeld_alpha.max()), 0.56)
    ck.get_("sqrt14: max scaled row sum near 1.46", 0.01).eq(float(cond.rowsum_scaled(Psi).max()), 1.46)

    F = worked_projector("two-col", n)
    PsiF = cond.psi_matrix(F)
    y = np.array([Fraction(5, 8), Fraction(-9, 2), Fraction(19, 8)] + [Fraction(0)] * (n - 3), dtype=object)
    ck.get_("two-col: e'y = -3/2 exactly", 0.0).flag(sum(y) == Fraction(-3, 2))
    e3 = [Fraction(int(i == 2)) for i in range(n)]
    ck.get_("two-col: Psi'y = e_3 exactly", 0.0).flag(list(PsiF.T @ y) == e3)
    ck.get_("two-col: Farkas witness refutes beta >= 0", 0.0).flag(cond.farkas_certifies(PsiF, y))
    C = F.astype(float)
    w = np.array([1, -1, 1, -1] + [1] * (n - 4), dtype=float)
    ck.get_("two-col: omega omega' certificate", 0.0).flag(cond.check_omega(C, np.outer(w, w)).ok)
    ck.get_("two-col: no ladder rung certifies", 0.0).flag(cond.check_conditions(C).verdict is None)
    return list(ck.values())


def suite_conditions(seed=0, count=500):
    """Worked examples plus ladder soundness on random projectors."""
    checks = worked_examples()
    root = PortableRNG(seed)
    ck = _Checks()
    for k in range(count):
        rng = root.child(k)
        n = 3 + k % 18
        m = 1 + rng.integers(0, max(1, n // 3))
        C = np.asarray(projector_mesp(rng, n, m).C)
        Psi = cond.psi_matrix(C)
        rep = cond.check_conditions(C)
        if rep.diag_gt_half:
            off = np.sum(np.abs(Psi), axis=1) - np.diag(Psi)
            ck.get_("diag > 1/2 gives strict diagonal dominance", 0.0).flag(bool(np.all(np.diag(Psi) > off)))
            ck.get_("diag > 1/2 gives Sassenfeld and row-sum", 0.0).flag(rep.sassenfeld_ok and rep.rowsum_ok)
        if rep.sassenfeld_ok and rep.rowsum_ok:
            ck.get_("Sassenfeld and row-sum give boxed iterates", 0.0).flag(
                rep.gs_beta is not None and cond.gauss_seidel(Psi)[2])
        if rep.verdict is not None:
            beta = np.linalg.solve(Psi, np.ones(n))
            ck.get_("certified rung gives beta >= 0", 0.0).le(-float(beta.min()), 1e-8)
            ck.get_("certified rung gives a trace certificate", 0.0).flag(
                cond.trace_certificate(C, np.clip(beta, 0, None)).ok)
    return checks + list(ck.values())


# ---------------------------------------------------------------------------
# branch-and-bound
# ---------------------------------------------------------------------------

SECTION_C = np.array([[3.0, 2.0, 0.0], [2.0, 2.0, 0.0], [0.0, 0.0, 1.0]])


def strategy_example():
    """Natural bounds of both strategies for the 3x3 example (published to 3 decimals)."""
    a = compare_d_strategies(MespInstance(SECTION_C, 2), 0, 0, tol=1e-9)
    b = compare_d_strategies(MespInstance(SECTION_C, 1), 0, 0, tol=1e-9)
    return (a.in_branch_then_map, a.in_map_then_branch, b.out_branch_then_map, b.out_map_then_branch)


BB_KINDS = ("diag", "spectral", "nlp-id", "ddfact", "ddfact-plus", "linx", "comp-diag",
            "natural", "dspectral", "hadamard", "nlp-di", "linx-opt", "comp-nlp-id")


def suite_bb(seed=0, count=100, max_n=14):
    """Published example, map/branch commutation, and exactness against enumeration."""
    ck = _Checks()
    got = strategy_example()
    ck.get_("3x3 example: 1.099 / 1.570 / 0.693 / 0.754", 5e-3).eq(got, (1.099, 1.570, 0.693, 0.754))
    root = PortableRNG(seed)
    for k in range(count):
        rng = root.child(k)
        n = 4 + k % 5
        d = _random_dopt(rng, n, fusion=k % 2 == 0)
        d = d.with_(s=max(d.s, 1 if k % 2 == 0 else d.m), check=True)
        rep = verify_bbdopt_equivalence(d, rng.integers(0, n), rng.integers(0, n))
        ck.get_("D-Opt branching commutes with the M map", 1e-9).eq(rep.max_dev, 0.0)
    for k in range(count):
        rng = root.child(10_000 + k)
        n = 6 + k % (max_n - 5)
        if k % 2 == 0:
            inst = pd_mesp(rng, n, 1 + rng.integers(0, n - 1))
        else:
            inst = fusion_dopt(rng, n, 1 + rng.integers(0, min(4, n - 1)), s=1 + rng.integers(0, n - 1))
        kind = BB_KINDS[k % len(BB_KINDS)]
        if n > 10 and kind in ("nlp-di", "linx-opt"):
            kind = "nlp-id"
        strategy = ("branch-then-map", "map-then-branch")[(k // 2) % 2]
        opt, _ = brute_force(inst)
        res = solve_bb(inst, kind=kind, strategy=strategy, record_pruned=n <= 10)
        ck.get_("branch-and-bound equals enumeration", 1e-6).eq(res.value, opt)
        ck.get_("branch-and-bound proves optimality", 0.0).flag(res.optimal, f"{kind}/{strategy} k={k}")
        if n <= 10:
            ck.get_("pruned nodes hold nothing better", 2e-6).le(_pruned_best(inst, res) - res.value, 0.0)
    return list(ck.values())


def _pruned_best(inst, res):
    best = -math.inf
    for node in res.pruned_nodes:
        if node.inst.s < 0 or node.inst.s > node.inst.n:
            continue
        v, _ = brute_force(node.inst)
        best = max(best, v)
    return best


RUNNERS = {
    "maps": suite_maps,
    "transfers": suite_transfers,
    "dominations": suite_dominations,
    "conditions": suite_conditions,
    "bb": suite_bb,
    "gaps": suite_gaps,
}


def run_suite(name, seed=0, count=None):
    """Run one suite; returns ``(checks, seconds)``."""
    fn = RUNNERS[name]
    t0 = time.perf_counter()
    checks = fn(seed) if count is None else fn(seed, count)
    return checks, time.perf_counter() - t0
