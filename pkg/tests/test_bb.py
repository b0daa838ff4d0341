import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entopt.bb import STRATEGIES, compare_d_strategies, solve_bb, verify_bbdopt_equivalence
from entopt.generate import fusion_dopt, pd_mesp, randn_dopt
from entopt.instances import DOptInstance, MespInstance, brute_force
from entopt.rng import PortableRNG
from entopt.verify import BB_KINDS, strategy_example


@pytest.mark.parametrize("kind", ["diag", "spectral", "nlp-id", "ddfact", "natural", "comp-diag"])
def test_example_any_bound(example_c, kind):
    res = solve_bb(MespInstance(example_c, 2), kind=kind)
    assert res.optimal
    assert res.value == pytest.approx(math.log(3), abs=1e-9)
    assert res.subset == (0, 2)


def test_diagonal_solves_at_root():
    res = solve_bb(MespInstance(np.diag([5.0, 1.0, 3.0, 2.0, 4.0]), 3), kind="diag")
    assert res.optimal and res.stats.nodes == 1
    assert res.subset == (0, 2, 4)


def test_node_budget_reports_not_optimal():
    inst = pd_mesp(PortableRNG(3), 12, 6)
    res = solve_bb(inst, kind="diag", node_budget=2)
    assert not res.optimal
    assert res.value <= brute_force(inst)[0] + 1e-9


def test_published_strategy_values():
    got = strategy_example()
    np.testing.assert_allclose(got, (1.099, 1.570, 0.693, 0.754), atol=5e-3)


def test_diagonal_strategies():
    mi3 = MespInstance(np.diag([4.0, 2.0, 1.0]), 2)
    for s in (1, 2):
        mi = MespInstance(np.diag([4.0, 2.0, 1.0]), s)
        for i in range(3):
            rep = compare_d_strategies(mi, i, i)
            assert rep.max_violation <= 5e-6
            if i > 0:  # away from the top eigenvalue both orders coincide
                assert rep.in_branch_then_map == pytest.approx(rep.in_map_then_branch, abs=5e-6)
                assert rep.out_branch_then_map == pytest.approx(rep.out_map_then_branch, abs=5e-6)
    rep = compare_d_strategies(mi3, 0, 0)
    assert rep.in_map_then_branch - rep.in_branch_then_map > 1e-3


@pytest.mark.parametrize("fusion", [True, False])
def test_equivalence_n6(fusion):
    for k in range(10):
        rng = PortableRNG(17).child(k)
        d = fusion_dopt(rng, 6, 2, s=3) if fusion else randn_dopt(rng, 6, 2, s=3)
        assert verify_bbdopt_equivalence(d, k % 6, (k + 2) % 6).max_dev <= 1e-9


@settings(max_examples=30)
@given(st.integers(4, 8), st.integers(0, 2**32 - 1))
def test_strategy_inequality(n, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n, n))
    mi = MespInstance(G @ G.T / n + 0.1 * np.eye(n), int(rng.integers(1, n)))
    rep = compare_d_strategies(mi, int(rng.integers(0, n)), int(rng.integers(0, n)), tol=1e-8)
    assert rep.max_violation <= 5e-6


@pytest.mark.parametrize("kind", BB_KINDS)
@pytest.mark.parametrize("strategy", STRATEGIES)
def test_every_kind_matches_enumeration(kind, strategy):
    for k, n in enumerate((6, 7)):
        rng = PortableRNG(23).child(k)
        if k % 2 == 0:
            inst = pd_mesp(rng, n, 3)
        else:
            inst = fusion_dopt(rng, n, 2, s=3)
        res = solve_bb(inst, kind=kind, strategy=strategy, record_pruned=True)
        opt, S = brute_force(inst)
        assert res.optimal
        assert res.value == pytest.approx(opt, abs=1e-6)
        for node in res.pruned_nodes:
            if 0 <= node.inst.s <= node.inst.n:
                assert brute_force(node.inst)[0] <= res.value + 2e-6


def test_pure_dopt_bb():
    d = randn_dopt(PortableRNG(2), 9, 3)
    res = solve_bb(d, kind="natural")
    assert res.value == pytest.approx(brute_force(d)[0], abs=1e-6)


def test_bb_deterministic():
    inst = pd_mesp(PortableRNG(8), 10, 4)
    a = solve_bb(inst, kind="nlp-id")
    b = solve_bb(inst, kind="nlp-id")
    assert (a.value, a.subset, a.stats.nodes) == (b.value, b.subset, b.stats.nodes)
