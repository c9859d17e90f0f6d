import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from strongneg.corr_exp import (NEVER, fractional_offset, joint_mgf, multivariate_geometric,
                                sample_correlated_exponentials, validate_rates)
from strongneg.errors import InputError
from strongneg.rng import RngStream


def series_mgf(r1, r2, q1, q2, terms=3000):
    """E[exp(q1 Z1 + q2 Z2)] by direct summation over the first-occurrence law."""
    a1, a2 = -math.log1p(-r1), -math.log1p(-r2)
    s = 1 - r1 - r2
    n = np.arange(terms)

    def ordered(ra, rb, ua, ub):
        # first index at trial a, second at trial a + 1 + k
        outer = (s * ua * ub) ** n[:, None] * ((1 - rb) * ub) ** n[None, :]
        return ra * rb * ub * outer.sum()

    u1, u2 = math.exp(q1 * a1), math.exp(q2 * a2)
    disc = ordered(r1, r2, u1, u2) + ordered(r2, r1, u2, u1)
    frac = [integrate.quad(lambda x, a=a, r=r, q=q: math.exp(q * a * x) * a * math.exp(-a * x) / r, 0, 1)[0]
            for a, r, q in ((a1, r1, q1), (a2, r2, q2))]
    return disc * frac[0] * frac[1]


@pytest.mark.parametrize("rho", [[-0.1], [0.6, 0.6], [[0.2]], [np.nan], [1.2]])
def test_validate_rates_rejects(rho):
    with pytest.raises(InputError):
        validate_rates(rho)


def test_unit_rate_hits_immediately():
    assert np.all(multivariate_geometric([1.0], 0, size=100) == 0)


def test_zero_rates_never_occur():
    x = multivariate_geometric([0.0, 0.5], 1, size=50)
    assert np.all(x[:, 0] == NEVER) and np.all(x[:, 1] >= 0)


def test_geometric_marginal_and_negative_covariance():
    x = multivariate_geometric([0.5, 0.5], RngStream(2), size=10**6).astype(float)
    assert abs(x[:, 0].mean() - 1.0) < 0.01
    assert np.cov(x.T)[0, 1] <= 0
    # the two indices never first occur on the same trial
    assert not np.any(x[:, 0] == x[:, 1])


def test_fractional_offset_hand_value():
    rho = 1 - math.exp(-1)
    u = (1 - math.exp(-0.5)) / rho
    assert fractional_offset(u, rho) == pytest.approx(0.5, abs=1e-15)


def test_sampler_shapes_and_positivity():
    z = sample_correlated_exponentials([0.2, 0.3, 0.0, 0.5], RngStream(0), size=1000)
    assert z.shape == (1000, 4) and np.all(z > 0)
    assert sample_correlated_exponentials([0.5], 0).shape == (1,)


def test_sampler_replays_from_stream():
    a = sample_correlated_exponentials([0.3, 0.3], RngStream(9), size=10)
    b = sample_correlated_exponentials([0.3, 0.3], RngStream(9), size=10)
    assert np.array_equal(a, b)


def test_zero_rates_give_independent_exponentials():
    z = sample_correlated_exponentials([0.0, 0.0], RngStream(4), size=10**6)
    assert np.abs(z.mean(axis=0) - 1).max() < 0.01
    assert abs(np.corrcoef(z.T)[0, 1]) < 0.01


def test_joint_mgf_hand_value():
    assert joint_mgf(0.5, 0.5, -1, -1) == pytest.approx(3 / 16, rel=1e-12)
    z = sample_correlated_exponentials([0.5, 0.5], RngStream(11), size=10**6)
    e = np.exp(-z.sum(axis=1))
    assert abs(e.mean() - 3 / 16) < 4 * e.std() / 1e3


def test_joint_mgf_trivial_points():
    assert joint_mgf(0.3, 0.4, 0, 0) == pytest.approx(1.0, abs=1e-14)
    assert joint_mgf(0.3, 0.4, -1.5, 0) == pytest.approx(1 / 2.5, rel=1e-12)


@pytest.mark.parametrize("args", [(0.0, 0.5, 0, 0), (0.6, 0.5, 0, 0), (0.3, 0.3, 1.0, 0)])
def test_joint_mgf_domain(args):
    with pytest.raises(InputError):
        joint_mgf(*args)


@given(r1=st.floats(0.02, 0.9), share=st.floats(0.05, 0.95), q1=st.floats(-2, 0.25), q2=st.floats(-2, 0.25))
def test_joint_mgf_matches_series(r1, share, q1, q2):
    r2 = max(min((1 - r1) * share, 0.97), 0.01)
    assert joint_mgf(r1, r2, q1, q2) == pytest.approx(series_mgf(r1, r2, q1, q2), rel=1e-7)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_sampler_accepts_any_valid_rate_vector(raw):
    r = np.array(raw)
    if r.sum() > 1:
        r = r / r.sum()
    z = sample_correlated_exponentials(r * (1 - 1e-12), RngStream(1), size=20)
    assert z.shape == (20, r.size) and np.all(np.isfinite(z)) and np.all(z > 0)
