import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entopt.heuristics import greedy, greedy_swap, local_search
from entopt.instances import DOptInstance, MespInstance, brute_force, evaluate
from entopt.rng import PortableRNG
from entopt.generate import pd_mesp

from .conftest import random_pd


def test_greedy_examples(example_c):
    v, S = greedy(MespInstance(example_c, 2))
    assert S == (0, 2) and v == pytest.approx(math.log(3))
    v, S = greedy(MespInstance(np.diag([1.0, 5.0, 3.0, 4.0]), 2))
    assert S == (1, 3)
    v, S = greedy(DOptInstance([[1.0], [2.0]], [[1.0]], 1))
    assert S == (1,) and v == pytest.approx(math.log(5))


def test_pure_dopt_greedy_escapes_singular_start():
    rng = np.random.default_rng(0)
    d = DOptInstance(rng.standard_normal((8, 3)), np.zeros((1, 3)), 4)
    v, S = greedy(d)
    assert len(S) == 4 and np.isfinite(v)


def test_local_search_keeps_optimum(example_c):
    mi = MespInstance(example_c, 2)
    assert local_search(mi, (0, 2)) == (pytest.approx(math.log(3)), (0, 2))


def test_local_search_improves():
    mi = MespInstance(np.diag([1.0, 5.0, 3.0, 4.0]), 2)
    v, S = local_search(mi, (0, 2))
    assert S == (1, 3) and v == pytest.approx(math.log(20))


@given(st.integers(4, 10), st.integers(0, 2**32 - 1), st.data())
def test_incumbent_is_a_lower_bound(n, seed, data):
    rng = np.random.default_rng(seed)
    if data.draw(st.booleans()):
        inst = MespInstance(random_pd(rng, n), data.draw(st.integers(1, n - 1)))
    else:
        m = data.draw(st.integers(1, 3))
        inst = DOptInstance(rng.standard_normal((n, m)), rng.standard_normal((m, m)), data.draw(st.integers(1, n - 1)))
    v, S = greedy_swap(inst)
    assert v == evaluate(inst, S)
    assert v <= brute_force(inst)[0] + 1e-9
    assert greedy_swap(inst) == (v, S)


def test_greedy_swap_is_usually_optimal():
    hits = 0
    for k in range(200):
        inst = pd_mesp(PortableRNG(5).child(k), 10, 4)
        hits += greedy_swap(inst)[0] >= brute_force(inst)[0] - 1e-9
    assert hits >= 160
