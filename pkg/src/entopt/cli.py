"""``entopt`` command line.

Exit codes: 0 success, 1 verification failure, 2 usage or input error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import sys

import numpy as np

from . import __version__
from .bb import STRATEGIES, solve_bb
from .bounds import all_kinds, compute_bound
from .errors import EntoptError, NotPositiveDefinite, NumericError, SingularBlock, ValidationError
from .fileio import dumps, read_instance
from .generate import GEN_KINDS, generate
from .heuristics import greedy_swap
from .instances import MespInstance, complement_mesp, map_d, map_f, map_m, map_p, scale_mesp
from .sweeps import RECIPES, check_shape, run_sweep, write_csv
from .verify import SUITES, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MAPS = ("M", "P", "D", "F", "complement", "scale")


class UsageError(Exception):
    pass


def _int_range(text):
    """``"5"``, ``"1,4,9"``, ``"2:10"`` (inclusive) or ``"2:10:2"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            step = bits[2] if len(bits) == 3 else 1
            out.extend(range(bits[0], bits[1] + 1, step))
        elif part:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty range")
    return out


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def _kinds(text):
    kinds = [k.strip() for k in text.split(",") if k.strip()]
    known = set(all_kinds())
    bad = [k for k in kinds if k not in known]
    if bad:
        raise UsageError(f"unknown bound kind(s): {', '.join(bad)}; choose from {', '.join(all_kinds())}")
    return kinds


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _load(path, s=None):
    inst = read_instance(path)
    if s is not None:
        inst = inst.with_(s=s, check=True)
    return inst


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_gen(args):
    inst = generate(args.kind, args.seed, args.n, m=args.m, k=args.k, s=args.s)
    with _output(args.out) as fh:
        fh.write(dumps(inst))
    return EXIT_OK


def cmd_bound(args):
    inst = _load(args.instance, args.s)
    kinds = _kinds(args.bound)
    lower, _ = greedy_swap(inst)
    cols = ("kind", "value", "cert_gap", "iters", "seconds", "lower", "gap", "notes")
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(cols)
        for kind in kinds:
            r = compute_bound(inst, kind, tol=args.tol, reduce=not args.no_reduce)
            gap = r.value - lower if np.isfinite(lower) else float("nan")
            w.writerow([_fmt(v) for v in (kind, r.value, r.cert_gap, r.iters, r.seconds, lower, gap, ";".join(r.notes))])
    return EXIT_OK


def cmd_map(args):
    inst = _load(args.instance, args.s)
    name = args.map
    want_mesp = name in ("D", "F", "complement", "scale")
    if want_mesp != isinstance(inst, MespInstance):
        raise UsageError(f"map {name} does not apply to this instance type")
    if name == "M":
        out = map_m(inst)
    elif name == "P":
        out = map_p(inst)
    elif name == "D":
        out = map_d(inst)
    elif name == "F":
        out = map_f(inst)
    elif name == "complement":
        out = complement_mesp(inst)
    else:
        if args.gamma is None:
            raise UsageError("map scale needs --gamma")
        out = scale_mesp(inst, args.gamma)
    with _output(args.out) as fh:
        fh.write(f"# offset {out.offset!r}\n# complemented {str(out.complemented).lower()}\n")
        fh.write(f"# maps {' '.join(out.provenance)}\n")
        fh.write(dumps(out))
    return EXIT_OK


def cmd_solve(args):
    inst = _load(args.instance, args.s)
    kind = _kinds(args.bound)
    if len(kind) != 1:
        raise UsageError("solve takes a single --bound kind")
    res = solve_bb(inst, kind=kind[0], strategy=args.strategy, tol=args.tol, node_budget=args.node_budget)
    cols = ("kind", "strategy", "value", "subset", "optimal", "nodes", "pruned", "max_depth",
            "incumbent_updates", "seconds")
    st = res.stats
    with _output(args.out) as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(cols)
        w.writerow([_fmt(v) for v in (res.kind, res.strategy, res.value, " ".join(map(str, res.subset)),
                                      str(res.optimal).lower(), st.nodes, st.pruned, st.max_depth,
                                      st.incumbent_updates, st.wall_seconds)])
    return EXIT_OK if res.optimal else EXIT_FAIL


def cmd_verify(args):
    names = SUITES if args.suite == "all" else (args.suite,)
    ok = True
    with _output(args.out) as fh:
        for name in names:
            checks, sec = run_suite(name, seed=args.seed, count=args.count)
            fh.write(f"== {name} ({sec:.1f} s)\n")
            for c in checks:
                fh.write(c.line() + "\n")
                ok &= c.passed
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sweep(args):
    opts = {"n": args.n, "m": args.m, "s": args.s, "k": args.k, "sigma_max": args.sigma_max}
    if args.bound:
        opts["kinds"] = _kinds(args.bound)
    rows = run_sweep(args.recipe, args.seed, **opts)
    with _output(args.out) as fh:
        write_csv(rows, fh)
    if args.check:
        shapes = check_shape(args.recipe, rows)
        for name, good in shapes.items():
            print(f"{'PASS' if good else 'FAIL'}  {name}", file=sys.stderr)
        if not all(shapes.values()):
            return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="entopt", description="Bounds and exact solves for MESP and 0/1 D-Opt.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random instance file")
    g.add_argument("kind", choices=GEN_KINDS)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, help="columns of A / rank of U")
    g.add_argument("--k", type=int, help="top eigenvalues to equalize (eigedit-mesp)")
    g.add_argument("--s", type=int)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("bound", help="compute upper bounds as CSV")
    b.add_argument("instance")
    b.add_argument("--bound", default="diag,spectral", help="comma-separated bound kinds")
    b.add_argument("--s", type=int, help="override the cardinality in the file")
    b.add_argument("--tol", type=float, default=1e-6)
    b.add_argument("--no-reduce", action="store_true", help="keep the redundant columns in D-induced bounds")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bound)

    m = sub.add_parser("map", help="apply a map and write the image instance")
    m.add_argument("instance")
    m.add_argument("--map", choices=MAPS, required=True)
    m.add_argument("--gamma", type=float)
    m.add_argument("--s", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_map)

    s = sub.add_parser("solve", help="branch-and-bound")
    s.add_argument("instance")
    s.add_argument("--bound", default="diag")
    s.add_argument("--strategy", choices=STRATEGIES, default="branch-then-map")
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--s", type=int)
    s.add_argument("--node-budget", type=int, default=100_000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("suite", choices=SUITES + ("all",))
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--count", type=int)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    w = sub.add_parser("sweep", help="run an experiment recipe and write CSV")
    w.add_argument("recipe", choices=RECIPES)
    w.add_argument("--seed", type=int, required=True)
    w.add_argument("--n", type=int)
    w.add_argument("--m", type=_int_range)
    w.add_argument("--s", type=_int_range)
    w.add_argument("--k", type=_int_range)
    w.add_argument("--sigma-max", dest="sigma_max", type=_float_list)
    w.add_argument("--bound", help="bound kinds for the bound-comparison recipes")
    w.add_argument("--check", action="store_true", help="assert the recipe's qualitative shape")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"entopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, NotPositiveDefinite, SingularBlock, FloatingPointError) as exc:
        print(f"entopt: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, OSError, ValueError) as exc:
        print(f"entopt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EntoptError as exc:
        print(f"entopt: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
