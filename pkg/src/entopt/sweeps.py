"""Experiment recipes that emit long-format CSV rows.

Each recipe expands into independent cells (one instance and cardinality),
which may run in a process pool capped by ``ENTOPT_THREADS``.  Rows are
sorted before writing so the output does not depend on scheduling; only the
``seconds`` column varies between runs.
"""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .bounds import compute_bound, d_induced, hadamard_dopt, m_induced, natural_dopt, nlp_id
from .generate import fusion_dopt, pd_mesp
from .heuristics import greedy_swap
from .instances import DOptInstance, MespInstance, map_m
from .linalg import eigh_desc, spectral_decomposition
from .rng import PortableRNG

RECIPES = (
    "pure-dopt-bounds",
    "mu-max",
    "nlpid-vs-natural-time",
    "rankA-gap",
    "hadamard-vs-diag",
    "nlpid-complement-gap",
)
COLUMNS = ("recipe", "instance", "n", "m", "s", "param", "kind", "value", "lower", "gap", "seconds")

DEFAULTS = {
    "pure-dopt-bounds": {"n": 30, "m": [10, 15], "kinds": ["natural", "nlp-id", "ddfact", "linx-opt", "nlp-di"]},
    "mu-max": {"n": 40, "m": [20, 15, 10, 5], "s": 20, "kinds": ["nlp-id", "ddfact", "linx-opt", "nlp-di"]},
    "nlpid-vs-natural-time": {"n": 60, "s": 30, "k": [1, 10, 20, 30, 40, 50]},
    "rankA-gap": {"n": 20, "s": 5, "sigma_max": [1.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01]},
    "hadamard-vs-diag": {"n": 16, "m": 8},
    "nlpid-complement-gap": {"n": 16},
}


def _row(recipe, instance, n, m, s, param, kind, value, lower=math.nan, seconds=math.nan):
    gap = value - lower if np.isfinite(lower) and np.isfinite(value) else math.nan
    return {"recipe": recipe, "instance": instance, "n": n, "m": m, "s": s, "param": param,
            "kind": kind, "value": value, "lower": lower, "gap": gap, "seconds": seconds}


def _timed(fn, *a, **kw):
    t0 = time.perf_counter()
    r = fn(*a, **kw)
    return r, time.perf_counter() - t0


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


# ---------------------------------------------------------------------------
# cells
# ---------------------------------------------------------------------------


def _pure_base(seed, n, mmax):
    return PortableRNG(seed).normal((n, mmax))


def _cell_pure(seed, n, m, s, kinds):
    A = _pure_base(seed, n, m)
    d = DOptInstance(A, np.zeros((1, m)), s)
    lower, _ = greedy_swap(d)
    rows = []
    for kind in kinds:
        r, sec = _timed(compute_bound, d, kind)
        rows.append(_row("pure-dopt-bounds", f"randn-{n}x{m}", n, m, s, m, kind, r.value, lower, sec))
    return rows


def _cell_mumax(seed, n, mmax, m, s, kinds):
    A = _pure_base(seed, n, mmax)[:, :m]
    d = DOptInstance(A, np.zeros((1, m)), s)
    lower, _ = greedy_swap(d)
    rows = []
    for kind in kinds:
        r, sec = _timed(compute_bound, d, kind)
        rows.append(_row("mu-max", f"randn-{n}x{mmax}", n, m, s, n - m, kind, r.value, lower, sec))
    return rows


def _equalized(seed, n, k):
    lam, phi = eigh_desc(np.asarray(pd_mesp(PortableRNG(seed), n, 1).C))
    lam = lam.copy()
    lam[:k] = lam[k - 1]
    C = (phi * lam) @ phi.T
    return 0.5 * (C + C.T)


def _cell_time(seed, n, s, k):
    mi = MespInstance(_equalized(seed, n, k), s)
    mu = spectral_decomposition(mi.C).mu_max
    lower, _ = greedy_swap(mi)
    inst = f"pd-{n}-top{k}"
    rows = []
    r, sec = _timed(nlp_id, mi)
    rows.append(_row("nlpid-vs-natural-time", inst, n, n, s, mu, "nlp-id", r.value, lower, sec))
    r, sec = _timed(d_induced, "natural", mi, reduce=True)
    rows.append(_row("nlpid-vs-natural-time", inst, n, n - mu, s, mu, "natural-reduced", r.value, lower, sec))
    r, sec = _timed(d_induced, "natural", mi, reduce=False)
    rows.append(_row("nlpid-vs-natural-time", inst, n, n, s, mu, "natural-full", r.value, lower, sec))
    return rows


def _rank_instance(seed, n, s, sigma_max):
    rng = PortableRNG(seed)
    B = rng.normal((n, n))
    u = rng.uniform(n)  # the same u for every sigma_max
    A = np.diag(1.0 / (sigma_max * u))
    return DOptInstance(A, B, s)


def _cell_rank(seed, n, s, sigma_max):
    d = _rank_instance(seed, n, s, sigma_max)
    lam_max = float(np.linalg.eigvalsh(np.asarray(map_m(d).C))[-1])
    lower, _ = greedy_swap(d)
    inst = f"diagA-{n}"
    nat, t1 = _timed(natural_dopt, d)
    mi, t2 = _timed(m_induced, "nlp-id", d)
    return [
        _row("rankA-gap", inst, n, n, s, sigma_max, "natural", nat.value, lower, t1),
        _row("rankA-gap", inst, n, n, s, sigma_max, "m-nlp-id", mi.value, lower, t2),
        _row("rankA-gap", inst, n, n, s, sigma_max, "difference", nat.value - mi.value),
        _row("rankA-gap", inst, n, n, s, sigma_max, "lam-max", lam_max),
    ]


def _cell_hadamard(seed, n, m, s):
    d = fusion_dopt(PortableRNG(seed), n, m, s=s)
    lower, _ = greedy_swap(d)
    inst = f"fusion-{n}x{m}"
    had, t1 = _timed(hadamard_dopt, d)
    md, t2 = _timed(m_induced, "diag", d)
    return [
        _row("hadamard-vs-diag", inst, n, m, s, s, "hadamard", had.value, lower, t1),
        _row("hadamard-vs-diag", inst, n, m, s, s, "m-diag", md.value, lower, t2),
        _row("hadamard-vs-diag", inst, n, m, s, s, "difference", md.value - had.value),
    ]


def _cell_compgap(seed, n, s):
    mi = pd_mesp(PortableRNG(seed), n, s)
    lam = np.linalg.eigvalsh(np.asarray(mi.C))
    r = math.log(lam[-1] / lam[0])
    lower, _ = greedy_swap(mi)
    inst = f"pd-{n}"
    a, t1 = _timed(nlp_id, mi)
    b, t2 = _timed(compute_bound, mi, "comp-nlp-id")
    return [
        _row("nlpid-complement-gap", inst, n, n, s, s, "nlp-id", a.value, lower, t1),
        _row("nlpid-complement-gap", inst, n, n, s, s, "comp-nlp-id", b.value, lower, t2),
        _row("nlpid-complement-gap", inst, n, n, s, s, "difference", a.value - b.value),
        _row("nlpid-complement-gap", inst, n, n, s, s, "lower-limit", -(n - s) * r),
        _row("nlpid-complement-gap", inst, n, n, s, s, "upper-limit", s * r),
    ]


CELLS = {
    "pure-dopt-bounds": _cell_pure,
    "mu-max": _cell_mumax,
    "nlpid-vs-natural-time": _cell_time,
    "rankA-gap": _cell_rank,
    "hadamard-vs-diag": _cell_hadamard,
    "nlpid-complement-gap": _cell_compgap,
}


def plan(recipe, seed, **opts):
    """List the ``(recipe, kwargs)`` cells of a sweep."""
    if recipe not in RECIPES:
        raise ValueError(f"unknown recipe {recipe!r}; choose from {', '.join(RECIPES)}")
    o = dict(DEFAULTS[recipe])
    o.update({k: v for k, v in opts.items() if v is not None})
    n = int(o["n"])
    cells = []
    if recipe == "pure-dopt-bounds":
        for m in _as_list(o["m"]):
            # one matrix per m, shared across s; seeds derived from m keep cells independent
            ss = _as_list(o["s"]) if "s" in o else list(range(m + 5, n - 4, 5))
            for s in ss:
                cells.append(dict(seed=seed * 1000 + m, n=n, m=m, s=int(s), kinds=list(o["kinds"])))
    elif recipe == "mu-max":
        mmax = max(_as_list(o["m"]))
        for m in _as_list(o["m"]):
            for s in _as_list(o["s"]):
                cells.append(dict(seed=seed, n=n, mmax=mmax, m=m, s=int(s), kinds=list(o["kinds"])))
    elif recipe == "nlpid-vs-natural-time":
        for k in _as_list(o["k"]):
            for s in _as_list(o["s"]):
                cells.append(dict(seed=seed, n=n, s=int(s), k=int(k)))
    elif recipe == "rankA-gap":
        for sm in _as_list(o["sigma_max"]):
            for s in _as_list(o["s"]):
                cells.append(dict(seed=seed, n=n, s=int(s), sigma_max=float(sm)))
    elif recipe == "hadamard-vs-diag":
        ss = _as_list(o["s"]) if "s" in o else list(range(1, n))
        m = int(_as_list(o["m"])[0])
        for s in ss:
            cells.append(dict(seed=seed, n=n, m=m, s=int(s)))
    else:
        ss = _as_list(o["s"]) if "s" in o else list(range(1, n))
        for s in ss:
            cells.append(dict(seed=seed, n=n, s=int(s)))
    return [(recipe, c) for c in cells]


def _run_cell(item):
    recipe, kw = item
    return CELLS[recipe](**kw)


def workers():
    try:
        return max(1, int(os.environ.get("ENTOPT_THREADS", "1")))
    except ValueError:
        return 1


def _sort_key(r):
    return (r["instance"], r["n"], r["m"], r["s"], r["param"], r["kind"])


def run_sweep(recipe, seed, **opts):
    """Run a recipe and return its rows in deterministic order."""
    items = plan(recipe, seed, **opts)
    w = min(workers(), len(items))
    if w <= 1:
        chunks = [_run_cell(it) for it in items]
    else:
        with ProcessPoolExecutor(max_workers=w) as ex:
            chunks = list(ex.map(_run_cell, items))
    rows = [r for ch in chunks for r in ch]
    rows.sort(key=_sort_key)
    return rows


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(rows, fh, columns=COLUMNS):
    """RFC 4180 CSV with a header row and 17 significant digits."""
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])


# ---------------------------------------------------------------------------
# qualitative shape checks
# ---------------------------------------------------------------------------


def _series(rows, kind, by="param"):
    sel = sorted((r[by], r["value"]) for r in rows if r["kind"] == kind)
    return np.array([p for p, _ in sel], dtype=float), np.array([v for _, v in sel], dtype=float)


def _same(a, b, rel):
    # two certified upper bounds on one value differ by at most the larger certified gap
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


def check_shape(recipe, rows, tol=5e-6, rel=1e-6):
    """Qualitative assertions for a sweep; returns ``{name: bool}``.

    ``tol`` is the absolute slack for sign and monotonicity tests, ``rel`` the
    relative termination tolerance the sweep solved to.
    """
    out = {}
    if recipe == "hadamard-vs-diag":
        s, diff = _series(rows, "difference")
        out["difference non-increasing in s"] = bool(np.all(np.diff(diff) <= 1e-9))
        out["curves cross"] = bool(diff[0] >= -1e-9 and diff[-1] <= 1e-9 and np.any(diff > 1e-9) and np.any(diff < -1e-9))
    elif recipe == "rankA-gap":
        _, diff = _series(rows, "difference")
        _, lam = _series(rows, "lam-max")
        order = np.argsort(lam)[::-1]  # decreasing lam_max
        out["difference non-negative"] = bool(np.all(diff >= -tol))
        out["difference grows as lam_max decreases"] = bool(np.all(np.diff(diff[order]) >= -tol))
    elif recipe == "nlpid-complement-gap":
        s, diff = _series(rows, "difference")
        _, lo = _series(rows, "lower-limit")
        _, hi = _series(rows, "upper-limit")
        out["within limits"] = bool(np.all(diff >= lo - tol) and np.all(diff <= hi + tol))
        out["sign changes from negative to positive"] = bool(diff[0] < 0 < diff[-1])
    elif recipe in ("pure-dopt-bounds", "mu-max"):
        by = {}
        for r in rows:
            by.setdefault((r["m"], r["s"]), {})[r["kind"]] = r["value"]
        ok = all(_same(v["natural"], v["nlp-id"], rel) for v in by.values() if "natural" in v and "nlp-id" in v)
        out["natural equals M-induced nlp-id"] = ok
        out["bounds above heuristic"] = all(r["gap"] >= -1e-6 for r in rows if np.isfinite(r["gap"]))
    elif recipe == "nlpid-vs-natural-time":
        by = {}
        for r in rows:
            by.setdefault((r["param"], r["s"]), {})[r["kind"]] = r
        out["all three values agree"] = all(
            _same(v["nlp-id"]["value"], v["natural-reduced"]["value"], rel)
            and _same(v["natural-full"]["value"], v["natural-reduced"]["value"], rel)
            for v in by.values())
    return out
