import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strongneg.biround import (NO_EDGE, BipartiteInstance, DummyLeft, Edge, depround, depround_many,
                               indicators, is_stable, normalize, same_left_pairs, selection_from_row,
                               stable_sets)
from strongneg.errors import InputError
from strongneg.instances import random_bipartite, shared_left_instance, star_instance
from strongneg.rng import RngStream


def square():
    # two vertex-disjoint edges plus a pendant, no cross edges
    return BipartiteInstance(["a", "b"], ["p", "q"], [Edge("a", "p", 0.5, 0.5), Edge("b", "q", 0.5, 0.5)])


@pytest.mark.parametrize("edges", [
    [("a", "p", 0.7, 0.5), ("b", "p", 0.4, 0.5)],  # x sum > 1
    [("a", "p", 0.5, 0.7), ("a", "q", 0.5, 0.4)],  # rho sum > 1
    [("a", "p", 0.5, 0.5), ("a", "p", 0.1, 0.1)],  # duplicate
    [("z", "p", 0.5, 0.5)],  # unknown node
    [("a", "p", -0.1, 0.5)],
])
def test_instance_validation(edges):
    with pytest.raises(InputError):
        BipartiteInstance(["a", "b"], ["p", "q"], edges)


def test_sum_tolerance():
    BipartiteInstance(["a", "b"], ["p"], [("a", "p", 0.5 + 5e-10, 1.0), ("b", "p", 0.5, 1.0)])


def test_normalize_adds_dummy_for_deficit():
    inst = BipartiteInstance(["a", "b"], ["p"], [("a", "p", 0.3, 0.5), ("b", "p", 0.4, 0.5)])
    norm = normalize(inst)
    d = norm.edges[norm.dummies[0]]
    assert isinstance(d.u, DummyLeft) and d.x == pytest.approx(0.3) and d.rho == 1.0
    assert norm.origin.tolist() == [0, 1, NO_EDGE]


def test_normalize_forces_unit_edges():
    inst = BipartiteInstance(["a", "b"], ["p", "q"], [("a", "p", 1.0, 0.5), ("b", "q", 0.5, 0.5)])
    norm = normalize(inst)
    assert norm.forced == {"p": 0} and norm.right == ["q"]
    assert all(e.v != "p" for e in norm.edges)


def test_normalize_is_idempotent_on_normalized_input():
    inst = BipartiteInstance(["a", "b"], ["p"], [("a", "p", 0.5, 1.0), ("b", "p", 0.5, 1.0)])
    norm = normalize(inst)
    assert norm.edges == tuple(inst.edges) and not norm.dummies and not norm.forced


def test_integral_instance_is_deterministic():
    inst = BipartiteInstance(["a", "b"], ["p", "q"], [("a", "p", 1.0, 0.5), ("b", "q", 1.0, 0.5)])
    rows = depround_many(normalize(inst), RngStream(0), 50)
    assert np.all(rows == [0, 1])


def test_star_marginals():
    inst = BipartiteInstance(["a", "b"], ["p"], [("a", "p", 0.5, 1.0), ("b", "p", 0.5, 1.0)])
    freq = indicators(inst, depround_many(normalize(inst), RngStream(1), 10**5)).mean(axis=0)
    assert np.abs(freq - 0.5).max() < 4 * math.sqrt(0.25 / 1e5)


def test_shared_left_pair_correlation():
    inst = shared_left_instance()
    ind = indicators(inst, depround_many(normalize(inst), RngStream(2), 10**6)).astype(bool)
    f = (ind[:, 0] & ind[:, 1]).mean()
    assert f <= 0.1875 + 4 * math.sqrt(0.1875 * 0.8125 / 1e6)
    assert f < 0.25 - 0.05  # well below the independent value x1 x2


def test_output_independent_of_threads():
    norm = normalize(random_bipartite(5, 5, 3))
    a = depround_many(norm, RngStream(8), 200_000, threads=1)
    b = depround_many(norm, RngStream(8), 200_000, threads=4)
    assert np.array_equal(a, b)


def test_single_selection():
    inst = star_instance(3)
    sel = depround(normalize(inst), RngStream(4))
    assert sel.indicator.sum() == 1 and list(sel.chosen) == ["r"]
    assert selection_from_row(inst, [NO_EDGE]).chosen == {"r": None}


def test_stability_predicates():
    g = square()
    assert is_stable(g, [0]) and is_stable(g, [0, 1])
    shared = shared_left_instance()
    assert not is_stable(shared, [0, 1])
    with pytest.raises(InputError):
        is_stable(g, [5])
    cross = BipartiteInstance(["a", "b"], ["p", "q"],
                              [("a", "p", 0.5, 0.3), ("b", "q", 0.5, 0.3), ("a", "q", 0.2, 0.3)])
    assert not is_stable(cross, [0, 1])
    assert stable_sets(g) == [(0, 1)]
    assert same_left_pairs(shared) == [(0, 1)]


@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_rounding_support_on_random_instances(nl, nr, seed):
    inst = random_bipartite(nl, nr, seed)
    rows = depround_many(normalize(inst), RngStream(seed), 300)
    for c, v in enumerate(inst.right):
        picked = rows[:, c]
        ok = picked[picked != NO_EDGE]
        assert all(inst.edges[k].v == v and inst.edges[k].x > 0 for k in ok)
        if sum(e.x for e in inst.edges if e.v == v) >= 1 - 1e-9:
            assert np.all(picked != NO_EDGE)
    sets = stable_sets(inst)
    assert all(is_stable(inst, s) for s in sets)
