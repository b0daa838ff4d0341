"""Time the numba kernels against their pure-numpy counterparts.

Run with ``python benchmarks/bench_kernels.py [--repeat R]``.  Each kernel is
called once to trigger compilation before timing; the reported figure is the
minimum over ``R`` runs.
"""

import argparse
import itertools
import time

import numpy as np

from entopt import _kernels as K


def _best(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def cases(rng):
    G = rng.standard_normal((120, 120))
    C120 = G @ G.T / 120 + 0.1 * np.eye(120)
    G = rng.standard_normal((14, 14))
    C14 = G @ G.T / 14 + 0.1 * np.eye(14)
    combos = np.array(list(itertools.combinations(range(14), 7)), dtype=np.int64)
    A = rng.standard_normal((14, 4))
    BtB = np.eye(4)
    dcombos = np.array(list(itertools.combinations(range(14), 5)), dtype=np.int64)
    Psi = np.eye(60) + 0.02 * rng.standard_normal((60, 60))
    y = rng.standard_normal(2000)
    return [
        ("eigh n=120", lambda: K.eigh_nb(C120), lambda: K.eigh_np(C120)),
        ("subset_logdets n=14 s=7", lambda: K.subset_logdets_nb(C14, combos),
         lambda: K.subset_logdets_np(C14, combos)),
        ("gram_logdets n=14 m=4 s=5", lambda: K.gram_logdets_nb(A, BtB, dcombos),
         lambda: K.gram_logdets_np(A, BtB, dcombos)),
        ("gauss_seidel n=60", lambda: K.gauss_seidel_nb(Psi, 36000, 1e-14),
         lambda: K.gauss_seidel_np(Psi, 36000, 1e-14)),
        ("capped_simplex n=2000 s=500", lambda: K.capped_simplex_nb(y, 500),
         lambda: K.capped_simplex_np(y, 500)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<30s} {'numba [s]':>11s} {'numpy [s]':>11s} {'ratio':>7s}")
    for name, f_nb, f_np in cases(np.random.default_rng(args.seed)):
        t_nb = _best(f_nb, args.repeat)
        t_np = _best(f_np, args.repeat)
        print(f"{name:<30s} {t_nb:11.6f} {t_np:11.6f} {t_np / t_nb:7.2f}")


if __name__ == "__main__":
    main()
