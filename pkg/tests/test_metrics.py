from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from secpe.metrics import ConvergenceReport, GaussianSummary, coverage_distance, fit_gaussian, frechet_distance, length_stats


def test_fit_gaussian_two_points():
    g = fit_gaussian(np.array([[0.0, 0.0], [2.0, 0.0]]))
    np.testing.assert_allclose(g.mean, [1.0, 0.0])
    np.testing.assert_allclose(g.covariance, [[2.0, 0.0], [0.0, 0.0]])
    assert g.count == 2


def test_fit_gaussian_identical_points():
    g = fit_gaussian(np.tile([[1.0, -2.0, 3.0]], (5, 1)))
    np.testing.assert_array_equal(g.covariance, np.zeros((3, 3)))


def test_fit_gaussian_standard_normal():
    X = np.random.default_rng(0).standard_normal((100_000, 3))
    g = fit_gaussian(X)
    np.testing.assert_allclose(g.mean, 0.0, atol=0.05)
    np.testing.assert_allclose(g.covariance, np.eye(3), atol=0.05)


def test_fit_gaussian_needs_two():
    with pytest.raises(ValueError):
        fit_gaussian(np.zeros((1, 2)))


def _summary(mean, cov):
    return GaussianSummary(np.asarray(mean, float), np.asarray(cov, float), 10)


def test_frechet_examples():
    a = _summary([0.3, -1.0], [[2.0, 0.5], [0.5, 1.0]])
    assert frechet_distance(a, a) <= 1e-8
    assert frechet_distance(_summary([1, 0], np.eye(2)), _summary([0, 0], np.eye(2))) == pytest.approx(1.0, abs=1e-6)
    assert frechet_distance(_summary([0, 0], np.eye(2)), _summary([0, 0], 4 * np.eye(2))) == pytest.approx(2.0, abs=1e-6)


def test_frechet_dimension_mismatch():
    with pytest.raises(ValueError):
        frechet_distance(_summary([0], [[1.0]]), _summary([0, 0], np.eye(2)))


def _random_spd(rng, d, rank=None):
    B = rng.normal(size=(d, rank or d))
    return B @ B.T


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_frechet_commuting_closed_form(seed, d):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)))
    la, lb = rng.uniform(0, 3, d), rng.uniform(0, 3, d)
    ma, mb = rng.normal(size=d), rng.normal(size=d)
    a = _summary(ma, Q @ np.diag(la) @ Q.T)
    b = _summary(mb, Q @ np.diag(lb) @ Q.T)
    closed = np.sum((ma - mb) ** 2) + np.sum((np.sqrt(la) - np.sqrt(lb)) ** 2)
    assert frechet_distance(a, b) == pytest.approx(closed, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
def test_frechet_symmetric_and_matches_sqrtm(seed, d):
    rng = np.random.default_rng(seed)
    a = _summary(rng.normal(size=d), _random_spd(rng, d))
    b = _summary(rng.normal(size=d), _random_spd(rng, d))
    ab, ba = frechet_distance(a, b), frechet_distance(b, a)
    assert ab == pytest.approx(ba, abs=1e-8)
    covmean = linalg.sqrtm(a.covariance @ b.covariance).real
    ref = np.sum((a.mean - b.mean) ** 2) + np.trace(a.covariance + b.covariance - 2 * covmean)
    assert ab == pytest.approx(ref, abs=1e-6 * max(1.0, abs(ref)))
    assert ab >= 0.0


def test_frechet_singular_covariances():
    rng = np.random.default_rng(5)
    a = _summary(np.zeros(4), _random_spd(rng, 4, rank=1))
    b = _summary(np.zeros(4), _random_spd(rng, 4, rank=2))
    assert frechet_distance(a, b) >= 0.0
    assert frechet_distance(a, a) <= 1e-8


def test_coverage_examples():
    P = np.random.default_rng(0).normal(size=(10, 3))
    assert coverage_distance(P, np.vstack([P, P + 1])) == 0.0
    assert coverage_distance(np.array([[0.0]]), np.array([[3.0]])) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        coverage_distance(np.zeros((0, 2)), np.zeros((1, 2)))


def test_coverage_matches_pairwise_oracle():
    rng = np.random.default_rng(1)
    P, S = rng.normal(size=(20, 4)), rng.normal(size=(30, 4))
    oracle = max(min(np.linalg.norm(p - s) for s in S) for p in P)
    assert coverage_distance(P, S) == pytest.approx(oracle, abs=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_coverage_monotone_when_adding_points(seed):
    rng = np.random.default_rng(seed)
    P, S = rng.normal(size=(15, 3)), rng.normal(size=(5, 3))
    extra = rng.normal(size=(4, 3))
    assert coverage_distance(P, np.vstack([S, extra])) <= coverage_distance(P, S) + 1e-12


def test_length_stats_examples():
    empty = length_stats([])
    assert empty.buckets == {} and empty.lengths == []
    s = length_stats(["a b", "a b c"])
    assert s.lengths == [2, 3] and s.mean == 2.5 and s.median == 2.5
    fixed = length_stats(["w " * 20] * 5)
    assert fixed.buckets == {16: 5}


def test_convergence_report_rows():
    rep = ConvergenceReport([0.5, 0.2], [0.1, 0.0], [10, 12])
    rows = list(rep.rows())
    assert rep.rounds == 2
    assert rows[1] == {"round": 2, "coverage_distance": 0.2, "mis_selection": 0.0, "vote_distance_evals": 12}
