"""Gaussian trade-off arithmetic and conversions between privacy notions.

Covers the standard normal CDF and quantile, the Gaussian trade-off and
blow-up curves, the map between a (p, r) secret budget and a GDP parameter
mu, naive composition of secret budgets, and the two (eps, delta)-DP bridges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

_STD_NORMAL = NormalDist()

# Largest representable posterior bound; r is clamped here instead of reaching 1.
R_CEILING = 1.0 - 1e-15


class BudgetError(ValueError):
    """A secret budget is malformed or vacuous."""


def norm_cdf(x: float) -> float:
    """Standard normal CDF, accurate in both tails."""
    if math.isnan(x):
        raise ValueError("norm_cdf of NaN")
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_sf(x: float) -> float:
    """Upper tail 1 - Phi(x) without cancellation."""
    return norm_cdf(-x)


def inv_norm_cdf(q: float) -> float:
    """Quantile of the standard normal.

    Uses the AS241 rational approximation from :mod:`statistics` followed by a
    single Newton step against :func:`norm_cdf`.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"inv_norm_cdf requires 0 < q < 1, got {q!r}")
    x = _STD_NORMAL.inv_cdf(q)
    dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    if dens > 0.0:
        if q < 0.5:
            x -= (norm_cdf(x) - q) / dens
        else:
            # work with the upper tail so 1 - q keeps its precision
            x += (norm_sf(x) - (1.0 - q)) / dens
    return x


def inv_norm_sf(q: float) -> float:
    """Inverse of the upper tail, i.e. ``inv_norm_cdf(1 - q)`` without rounding 1 - q."""
    return -inv_norm_cdf(q)


def gaussian_tradeoff(mu: float, alpha: float) -> float:
    """G_mu(alpha) = Phi(Phi^{-1}(1 - alpha) - mu), type-II error of N(0,1) vs N(mu,1)."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if alpha <= 0.0:
        return 1.0
    if alpha >= 1.0:
        return 0.0
    return norm_cdf(inv_norm_sf(alpha) - mu)


def gaussian_blowup(mu: float, alpha: float) -> float:
    """Blow-up 1 - G_mu(alpha): best detection rate at false-alarm level alpha."""
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if alpha <= 0.0:
        return 0.0
    if alpha >= 1.0:
        return 1.0
    # 1 - Phi(Phi^{-1}(1 - a) - mu) == Phi(mu + Phi^{-1}(a))
    return norm_cdf(mu + inv_norm_cdf(alpha))


def _check_pr(p: float, r: float) -> None:
    if not (0.0 < p < 1.0 and 0.0 < r < 1.0):
        raise BudgetError(f"budget entries must lie in (0, 1), got p={p!r}, r={r!r}")
    if p > r:
        raise BudgetError(f"prior bound p={p!r} exceeds reconstruction bound r={r!r}")


def eta_from_budget(p: float, r: float) -> float:
    """Capacity eta = Phi^{-1}(1 - p) - Phi^{-1}(1 - r); the GDP mu matching (p, r)."""
    _check_pr(p, r)
    if p == r:
        return 0.0
    return inv_norm_sf(p) - inv_norm_sf(r)


def r_from_mu(p: float, mu: float) -> float:
    """Reconstruction bound granted by a mu-GDP mechanism at prior p."""
    if not 0.0 < p < 1.0:
        raise BudgetError(f"p must lie in (0, 1), got {p!r}")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    if mu == 0:
        return p
    # rounding can put the blow-up a hair below p; r stays in [p, 1)
    return min(max(gaussian_blowup(mu, p), p), R_CEILING)


@dataclass(frozen=True)
class SecretBudget:
    """Per-secret prior bounds ``p`` and reconstruction bounds ``r``.

    ``eta`` is derived. ``saturated`` flags entries whose r was clamped just
    below 1 by a composition or conversion.
    """

    p: np.ndarray
    r: np.ndarray
    saturated: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.p, dtype=float)).copy()
        r = np.atleast_1d(np.asarray(self.r, dtype=float)).copy()
        if p.shape != r.shape or p.ndim != 1:
            raise BudgetError("p and r must be 1-d vectors of equal length")
        for j, (pj, rj) in enumerate(zip(p, r)):
            try:
                _check_pr(float(pj), float(rj))
            except BudgetError as exc:
                raise BudgetError(f"secret {j}: {exc}") from None
        sat = self.saturated
        sat = np.zeros(p.shape, dtype=bool) if sat is None else np.asarray(sat, dtype=bool)
        p.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "saturated", sat)

    @classmethod
    def uniform(cls, m: int, p: float, r: float) -> "SecretBudget":
        return cls(np.full(m, p), np.full(m, r))

    def __len__(self) -> int:
        return len(self.p)

    @property
    def eta(self) -> np.ndarray:
        return np.array([eta_from_budget(float(pj), float(rj)) for pj, rj in zip(self.p, self.r)])


def compose_naive(b1: SecretBudget, b2: SecretBudget) -> SecretBudget:
    """Sequential composition: p = max(p1, p2), r = r1 + r2 coordinate-wise.

    Sums reaching 1 are clamped to ``R_CEILING`` and flagged as saturated.
    """
    if len(b1) != len(b2):
        raise BudgetError(f"secret dimension mismatch: {len(b1)} vs {len(b2)}")
    p = np.maximum(b1.p, b2.p)
    r = b1.r + b2.r
    sat = (r >= R_CEILING) | b1.saturated | b2.saturated
    r = np.minimum(r, R_CEILING)
    # the max prior may overtake a clamped r only in the degenerate p -> 1 corner
    r = np.maximum(r, p)
    return SecretBudget(p, r, saturated=sat)


@dataclass(frozen=True)
class DpPoint:
    eps: float
    delta: float

    def __post_init__(self):
        if not self.eps >= 0:
            raise ValueError(f"eps must be nonnegative, got {self.eps!r}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta!r}")


def secret_from_dp(dp: DpPoint, p: float, c: float = math.inf) -> float:
    """Reconstruction bound implied by (eps, delta)-DP at prior p, for slack c >= 1.

    ``c = inf`` gives the pure-DP limit (only meaningful with delta = 0).
    """
    if not c >= 1.0:
        raise ValueError(f"c must be >= 1, got {c!r}")
    if not 0.0 < p < 1.0:
        raise BudgetError(f"p must lie in (0, 1), got {p!r}")
    odds = (1.0 - p) / p
    # (e^eps + 1/c)^-1 * odds, evaluated as a log to survive large eps
    log_lr = math.log(math.exp(dp.eps) + 1.0 / c) if dp.eps < 700 else dp.eps
    tail = odds * math.exp(-log_lr)
    r = 1.0 / (1.0 + tail)
    if dp.delta > 0.0:
        r += c * dp.delta if math.isfinite(c) else math.inf
    return min(r, 1.0)


def dp_delta_from_mu(mu: float, eps: float) -> float:
    """delta(eps) of a mu-GDP mechanism: Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2)."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps!r}")
    a = norm_cdf(-eps / mu + mu / 2.0)
    b_arg = -eps / mu - mu / 2.0
    b = norm_cdf(b_arg)
    if b == 0.0:
        return max(a, 0.0)
    # e^eps * Phi(b_arg) in log space; Phi underflows long before e^eps overflows
    log_b = eps + math.log(b)
    delta = a - math.exp(log_b)
    return min(max(delta, 0.0), 1.0 - 1e-16)
