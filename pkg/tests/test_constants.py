import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from strongneg import constants as C
from strongneg.errors import InputError, InvalidParameterSet
from strongneg.params import DEFAULT


@pytest.fixture(scope="module")
def derived():
    return C.derive_constants(DEFAULT)


def test_basic_constants():
    assert C.c0_value(0.604) == pytest.approx(1.14 * 0.154, abs=1e-15)
    assert C.c2_value(0.604) == 0.33965
    assert float(C.rate_tanh(0.604)) == pytest.approx(0.67930078, abs=1e-8)
    assert C.kappa_for(0.555) == pytest.approx(0.744, abs=1e-6)
    assert C.c1_prime_closed(DEFAULT) == pytest.approx(0.591909465, abs=1e-9)


def test_class_average_matches_quadrature():
    from scipy import integrate
    pi, kappa = 4.0, 0.7
    ref = integrate.quad(lambda h: (h - kappa) / h**3, 1, pi)[0] / math.log(pi)
    assert C.class_average(pi, kappa) == pytest.approx(ref, rel=1e-12)


def test_f_and_g_basics():
    c1, c2, kappa = 0.59, 0.34, 0.744
    assert C.eval_f(0.0, 2.0, c1, c2, kappa) == pytest.approx(c1 * (2 - kappa))
    assert C.eval_f(0.5, 4.0, c1, c2, kappa) == 0.0
    # continuity across the clamp boundary
    r0 = c1 * (3 - kappa) / (c2 * 9)
    assert C.eval_f(r0 - 1e-9, 3.0, c1, c2, kappa) == pytest.approx(0, abs=1e-7)
    assert C.eval_f(r0 + 1e-9, 3.0, c1, c2, kappa) == 0.0
    with pytest.raises(InputError):
        C.eval_f(-0.1, 2.0, c1, c2, kappa)
    consts = {"c1": c1, "c2": c2}
    assert C.eval_g(0.5, 4.0, 2.0, DEFAULT, consts) == 0.0
    with pytest.raises(InvalidParameterSet):
        C.eval_g(0.0, 2.0, 2.0, DEFAULT.with_(beta=50.0), consts)


def test_derived_constants_reproduce_anchors(derived):
    d = derived
    assert d.c1_prime == pytest.approx(0.591909465, abs=1e-6)
    assert d.details["c1_prime"]["at"]["closed_branch"] == pytest.approx(0.591909465, abs=1e-9)
    assert d.c1_doubleprime >= 0.592
    assert d.c1_doubleprime == pytest.approx(0.5921116, abs=1e-3)
    assert d.c1 == min(d.c1_prime, d.c1_doubleprime)
    assert d.ratio <= 1.40
    assert d.ratio == pytest.approx(1.39798, abs=5e-4)
    assert d.c6 == pytest.approx(math.sqrt(max(DEFAULT.gamma * d.c3, d.c5)))


def test_internal_inequalities_pass(derived):
    rep = C.verify_internal_inequalities(DEFAULT, derived)
    assert rep.ok, [c.name for c in rep.checks if not c.ok]
    assert rep["leftover_cluster_x0"].margin >= -1e-12


def test_corrupted_c1_is_caught(derived):
    bad = derived.with_(c1=derived.c1 * 1.5)
    rep = C.verify_internal_inequalities(DEFAULT, bad)
    assert not rep.ok and not rep["c1_below_c1_prime"].ok


def test_c1_prime_upper_sanity():
    res = C.c1_prime(DEFAULT)
    rng = np.random.default_rng(0)
    for _ in range(200):
        r = rng.uniform(DEFAULT.theta, DEFAULT.tau)
        s = rng.uniform(r, DEFAULT.pi * r)
        x = rng.uniform(0, r)
        assert res.value <= C.c1_prime_integrand(r, s, x, DEFAULT) + 1e-12


def test_c1_prime_grid_convergence():
    fine = C.c1_prime(DEFAULT, C.GridSpec(c1p_n=61))
    half = C.c1_prime(DEFAULT, C.GridSpec(c1p_n=31))
    assert abs(fine.at["grid_branch"] - half.at["grid_branch"]) <= max(fine.margin, half.margin) + 1e-9


def test_c1pp_box_minorant_below_integrand():
    boxes = C.c1pp_boxes(DEFAULT, 1e-2)
    rng = np.random.default_rng(1)
    pick = boxes[rng.choice(len(boxes), 100, replace=False)]
    fun, lo, hi = C._c1pp_box_fun(DEFAULT, pick)
    for b in range(len(pick)):
        rlo, rhi, ylo, yhi = pick[b]
        for corner in ((rlo, ylo), (rhi, yhi), (rhi, ylo)):
            r, y = corner
            if r <= 0:
                continue
            x = rng.uniform(0, r)
            s = rng.uniform(max(r, lo[b, 1]), min(DEFAULT.pi * r, hi[b, 1]))
            d = rng.uniform(y, DEFAULT.pi * y)
            m = fun(np.full((len(pick), 1), x), np.full((len(pick), 1), s))[b, 0]
            assert m <= C.c1_doubleprime_integrand(r, x, y, s, d, DEFAULT) + 1e-12


def test_c1pp_boxes_cover_the_domain():
    eps = 0.01
    boxes = C.c1pp_boxes(DEFAULT, eps)
    rng = np.random.default_rng(2)
    for _ in range(500):
        r = rng.uniform(0, DEFAULT.theta)
        y = rng.uniform(DEFAULT.tau - r, 1)
        hit = (boxes[:, 0] <= r) & (r <= boxes[:, 1]) & (boxes[:, 2] <= y) & (y <= boxes[:, 3])
        assert hit.any()


def test_c1pp_refines_weakly_upward():
    coarse = C.c1_doubleprime(DEFAULT, C.GridSpec(c1pp_box=4e-3))
    fine = C.c1_doubleprime(DEFAULT, C.GridSpec(c1pp_box=2e-3))
    assert fine.value >= coarse.value - 1e-9


def test_strip_weights_telescope():
    e = C.strip_edges(DEFAULT.pi, 1e-2)
    assert e[0] == 1 and e[-1] == DEFAULT.pi
    assert C.strip_weights(e).sum() == pytest.approx(0.5 * (1 - DEFAULT.pi**-2), rel=1e-12)


def test_strip_maxima_nonnegative_and_refine_down(derived):
    d = {"c1": derived.c1, "c2": derived.c2, "c4": derived.c4}
    e = C.strip_edges(DEFAULT.pi, 0.05)
    vals, _ = C.f_max(DEFAULT, d["c1"], d["c2"], d["c4"], e[:-1], e[1:])
    assert np.all(vals >= 0)
    wide = C.c5_upper(DEFAULT, d, C.GridSpec(c5_strip=0.05))
    narrow = C.c5_upper(DEFAULT, d, C.GridSpec(c5_strip=0.025))
    assert narrow.value <= wide.value + 1e-12


def test_ratio_function_endpoints():
    bc3, c3, c6 = 1.6, 0.83, 0.066
    assert float(C.ratio_function(0.0, bc3, c3, c6)) == pytest.approx((bc3 + 1) / 2)
    assert float(C.ratio_function(1e6, bc3, c3, 0.0)) == pytest.approx(C.ratio_limit(bc3, c3), rel=1e-9)
    r, v = C.max_ratio(bc3, c3, c6)
    assert r >= (bc3 + 1) / 2
    grid = C.ratio_function(np.linspace(0, 100, 200001), bc3, c3, c6)
    assert r >= grid.max() - 1e-12


def test_one_variable_certificate():
    rep = C.verify_appendix_a()
    assert rep.ok
    assert rep["lbgap_strips"].margin >= 0.0057
    assert rep["taylor_minorant"].margin >= 0


def test_lbgap_hand_point():
    t = 2.5
    z = t * t / 2 - t
    assert z == 0.625 and z * math.exp(t) - t > 0


@given(st.floats(4 / 3, 2.2), st.floats(1e-5, 1e-2))
def test_lbgap_enclosure_contains_point_values(t, w):
    lo = C.lbgap_lower(np.array([t]), np.array([t + w]))[0]
    pts = np.linspace(t, t + w, 7)
    assert lo <= np.min(C.lbgap_value(pts)) + 1e-12


@given(st.floats(-3, 3), st.floats(0, 2), st.floats(-3, 3), st.floats(0, 2))
def test_interval_arithmetic_encloses(a, wa, b, wb):
    A, B = C.Interval(a, a + wa), C.Interval(b, b + wb)
    xs = np.linspace(a, a + wa, 5)
    ys = np.linspace(b, b + wb, 5)
    X, Y = np.meshgrid(xs, ys)
    for op in (lambda u, v: u + v, lambda u, v: u - v, lambda u, v: u * v):
        iv, pt = op(A, B), op(X, Y)
        assert float(iv.lo) <= pt.min() and pt.max() <= float(iv.hi)


def test_search_is_reproducible_and_valid():
    a = C.parameter_search(1.40, budget=12, seed=3, restarts=2)
    b = C.parameter_search(1.40, budget=12, seed=3, restarts=2)
    assert a.params == b.params and a.constants.ratio == b.constants.ratio
    assert a.report.ok and a.evaluations <= 12


def test_search_rejects_bad_budget():
    with pytest.raises(InputError):
        C.parameter_search(1.40, budget=0)
