from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from secpe.accounting import (
    R_CEILING,
    BudgetError,
    DpPoint,
    SecretBudget,
    compose_naive,
    dp_delta_from_mu,
    eta_from_budget,
    gaussian_blowup,
    gaussian_tradeoff,
    inv_norm_cdf,
    norm_cdf,
    r_from_mu,
    secret_from_dp,
)

mpmath.mp.dps = 40


def mp_cdf(x):
    return float(mpmath.ncdf(x))


def mp_quantile(q):
    # bisection on the high-precision CDF
    return float(mpmath.findroot(lambda t: mpmath.ncdf(t) - q, (-40, 40), solver="bisect", tol=1e-30))


# --- norm_cdf / inv_norm_cdf ---------------------------------------------------

def test_norm_cdf_fixed_points():
    assert norm_cdf(0.0) == 0.5
    assert norm_cdf(math.inf) == 1.0
    assert norm_cdf(-math.inf) == 0.0
    assert norm_cdf(1.0) == pytest.approx(0.841344746068543, abs=1e-12)


@pytest.mark.parametrize("x", [-37.5, -20.0, -8.3, -3.0, -1e-3, 0.7, 2.5, 6.0, 9.0])
def test_norm_cdf_matches_high_precision(x):
    assert abs(norm_cdf(x) - mp_cdf(x)) <= 1e-12
    if x < 0:
        # relative accuracy in the lower tail as well
        assert norm_cdf(x) == pytest.approx(mp_cdf(x), rel=1e-12)


def test_inv_norm_cdf_examples():
    assert inv_norm_cdf(0.5) == 0.0
    assert inv_norm_cdf(0.9999) == pytest.approx(3.71901648545568, abs=1e-9)
    assert inv_norm_cdf(0.999) == pytest.approx(3.09023230616781, abs=1e-9)


@pytest.mark.parametrize("q", [1e-300, 1e-15, 1e-8, 1e-4, 0.02425, 0.3, 0.5, 0.97575, 0.9999, 1 - 1e-12])
def test_inv_norm_cdf_against_bisection_oracle(q):
    assert inv_norm_cdf(q) == pytest.approx(mp_quantile(q), rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1, 1.5, math.nan])
def test_inv_norm_cdf_domain(q):
    with pytest.raises(ValueError):
        inv_norm_cdf(q)


@given(st.floats(min_value=1e-12, max_value=1 - 1e-12))
def test_inv_norm_cdf_round_trip(q):
    assert abs(norm_cdf(inv_norm_cdf(q)) - q) <= 1e-10


# --- trade-off and blow-up -------------------------------------------------------

def test_tradeoff_examples():
    assert gaussian_tradeoff(0.0, 0.3) == pytest.approx(0.7, abs=1e-15)
    assert gaussian_tradeoff(2.0, 0.0) == 1.0
    assert gaussian_tradeoff(1.0, 0.5) == pytest.approx(0.158655253931457, abs=1e-12)


def test_blowup_examples():
    assert gaussian_blowup(0.0, 0.25) == pytest.approx(0.25, abs=1e-15)
    assert gaussian_blowup(1.0, 0.5) == pytest.approx(0.841344746068543, abs=1e-12)
    assert gaussian_blowup(0.62879, 1e-4) == pytest.approx(1e-3, abs=1e-7)


@given(st.floats(0.0, 6.0), st.floats(1e-9, 1 - 1e-9))
def test_blowup_is_one_minus_tradeoff(mu, alpha):
    assert gaussian_blowup(mu, alpha) == pytest.approx(1.0 - gaussian_tradeoff(mu, alpha), abs=1e-12)


@given(st.floats(0.0, 6.0), st.floats(0.0, 6.0), st.lists(st.floats(0.0, 1.0), min_size=2, max_size=20))
def test_tradeoff_monotone(mu1, mu2, alphas):
    lo, hi = sorted((mu1, mu2))
    alphas = sorted(alphas)
    vals = [gaussian_tradeoff(hi, a) for a in alphas]
    assert all(b <= a + 1e-15 for a, b in zip(vals, vals[1:]))
    for a in alphas:
        assert gaussian_tradeoff(hi, a) <= gaussian_tradeoff(lo, a) + 1e-15


def test_tradeoff_matches_scipy():
    for mu in (0.1, 0.7, 2.3):
        for a in (1e-6, 0.01, 0.4, 0.93):
            ref = norm.cdf(norm.isf(a) - mu)
            assert gaussian_tradeoff(mu, a) == pytest.approx(ref, rel=1e-10)


# --- (p, r) <-> mu ----------------------------------------------------------------

def test_eta_examples():
    assert eta_from_budget(0.3, 0.3) == 0.0
    assert eta_from_budget(1e-4, 1e-3) == pytest.approx(0.628784179287867, abs=1e-9)
    assert eta_from_budget(1e-4, 5e-3) == pytest.approx(1.143187, abs=1e-6)
    # oracle: difference of high-precision quantiles
    assert eta_from_budget(1e-4, 5e-3) == pytest.approx(mp_quantile(1 - 1e-4) - mp_quantile(1 - 5e-3), abs=1e-9)


@pytest.mark.parametrize("p,r", [(2e-3, 1e-3), (0.0, 0.1), (0.1, 1.0), (-1.0, 0.5)])
def test_eta_domain(p, r):
    with pytest.raises(BudgetError):
        eta_from_budget(p, r)


def test_r_from_mu_examples():
    assert r_from_mu(0.37, 0.0) == pytest.approx(0.37, abs=1e-15)
    assert r_from_mu(1e-4, 0.628784) == pytest.approx(1e-3, abs=1e-7)
    assert r_from_mu(0.5, 1.0) == pytest.approx(0.841344746068543, abs=1e-12)


@settings(max_examples=300)
@given(st.floats(1e-6, 0.5), st.floats(0.0, 5.0))
def test_round_trip_property(p, mu):
    r = r_from_mu(p, mu)
    if r >= 1.0 or r == p:
        return
    assert eta_from_budget(p, r) == pytest.approx(mu, abs=1e-9)
    assert r >= p


@given(st.floats(1e-6, 0.5), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_r_from_mu_monotone(p, a, b):
    lo, hi = sorted((a, b))
    assert r_from_mu(p, lo) <= r_from_mu(p, hi)


# --- budgets and composition -----------------------------------------------------

def test_budget_validation_and_eta():
    b = SecretBudget([1e-4, 0.2], [1e-3, 0.2])
    np.testing.assert_allclose(b.eta, [0.628784179287867, 0.0], atol=1e-12)
    with pytest.raises(BudgetError):
        SecretBudget([0.5], [0.1])
    with pytest.raises(BudgetError):
        SecretBudget([0.1, 0.2], [0.3])
    assert len(SecretBudget.uniform(3, 1e-4, 1e-3)) == 3


def test_compose_examples():
    a = SecretBudget([1e-4], [1e-3])
    c = compose_naive(a, a)
    assert c.p[0] == 1e-4 and c.r[0] == pytest.approx(2e-3, abs=1e-18)
    d = compose_naive(a, SecretBudget([2e-4], [1e-3]))
    assert d.p[0] == 2e-4 and d.r[0] == pytest.approx(2e-3, abs=1e-18)
    e = compose_naive(a, SecretBudget([1e-4], [1e-4]))
    assert e.r[0] == pytest.approx(1e-3 + 1e-4, abs=1e-18)
    assert not c.saturated.any()


def test_compose_saturates():
    a = SecretBudget([0.1, 0.1], [0.6, 0.2])
    c = compose_naive(a, a)
    assert c.r[0] == R_CEILING and c.r[0] < 1.0
    assert c.saturated.tolist() == [True, False]
    assert compose_naive(c, a).saturated[0]


def test_compose_dimension_mismatch():
    with pytest.raises(BudgetError):
        compose_naive(SecretBudget([0.1], [0.2]), SecretBudget([0.1, 0.1], [0.2, 0.2]))


budget_entry = st.tuples(st.floats(1e-5, 0.2), st.floats(1e-5, 0.2)).map(lambda t: tuple(sorted(t)))


@given(budget_entry, budget_entry, budget_entry)
def test_compose_commutative_associative(x, y, z):
    a, b, c = (SecretBudget([u[0]], [u[1]]) for u in (x, y, z))
    ab, ba = compose_naive(a, b), compose_naive(b, a)
    assert ab.p[0] == ba.p[0] and ab.r[0] == ba.r[0]
    left = compose_naive(compose_naive(a, b), c)
    right = compose_naive(a, compose_naive(b, c))
    assert left.p[0] == right.p[0]
    assert left.r[0] == pytest.approx(right.r[0], abs=1e-15)


# --- DP bridges --------------------------------------------------------------------

def test_secret_from_dp_examples():
    assert secret_from_dp(DpPoint(0.0, 0.0), 0.2) == pytest.approx(0.2, abs=1e-15)
    assert secret_from_dp(DpPoint(1.0, 0.0), 0.01, c=1e9) == pytest.approx(1 / (1 + math.exp(-1) * 99), abs=1e-8)
    assert secret_from_dp(DpPoint(1.0, 0.0), 0.01, c=1e9) == pytest.approx(0.0267236, abs=1e-7)
    assert secret_from_dp(DpPoint(0.0, 0.1), 0.5, c=1.0) == pytest.approx(2 / 3 + 0.1, abs=1e-15)


def test_secret_from_dp_domain():
    with pytest.raises(ValueError):
        secret_from_dp(DpPoint(1.0, 0.0), 0.1, c=0.5)
    with pytest.raises(ValueError):
        DpPoint(-1.0, 0.0)
    with pytest.raises(ValueError):
        DpPoint(1.0, 1.0)


@given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(1e-4, 0.5))
def test_secret_from_dp_monotone_in_eps(e1, e2, p):
    lo, hi = sorted((e1, e2))
    assert secret_from_dp(DpPoint(lo, 0.0), p) <= secret_from_dp(DpPoint(hi, 0.0), p) + 1e-15


@given(st.floats(0.0, 5.0), st.floats(1e-4, 0.5), st.floats(1.0, 1e6))
def test_secret_from_dp_decreases_in_c(eps, p, c):
    limit = 1.0 / (1.0 + math.exp(-eps) * (1 - p) / p)
    r_c = secret_from_dp(DpPoint(eps, 0.0), p, c)
    r_2c = secret_from_dp(DpPoint(eps, 0.0), p, 2 * c)
    assert r_c >= r_2c - 1e-15
    assert r_2c >= limit - 1e-12


def test_dp_delta_examples():
    assert dp_delta_from_mu(1e-6, 1.0) <= 1e-12
    assert dp_delta_from_mu(1.0, 0.0) == pytest.approx(mp_cdf(0.5) - mp_cdf(-0.5), abs=1e-12)
    assert dp_delta_from_mu(1.0, 0.0) == pytest.approx(0.382924922548026, abs=1e-12)
    assert dp_delta_from_mu(2.0, 10.0) <= 1e-4


@given(st.floats(0.05, 5.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0))
def test_dp_delta_nonincreasing(mu, e1, e2):
    lo, hi = sorted((e1, e2))
    d_lo, d_hi = dp_delta_from_mu(mu, lo), dp_delta_from_mu(mu, hi)
    assert 0.0 <= d_hi <= d_lo + 1e-15 < 1.0 + 1e-15


def test_dp_delta_matches_mpmath():
    for mu, eps in [(0.5, 0.3), (1.5, 2.0), (3.0, 4.0)]:
        ref = mpmath.ncdf(-eps / mu + mu / 2) - mpmath.e**eps * mpmath.ncdf(-eps / mu - mu / 2)
        assert dp_delta_from_mu(mu, eps) == pytest.approx(float(ref), abs=1e-12)
