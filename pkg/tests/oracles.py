"""Independent reference computations used by the tests."""
from __future__ import annotations

import itertools

import numpy as np
from scipy.stats import norm


def lp_vertex_optimum(A, b, upper=None):
    """max sum(w) s.t. A w <= b, 0 <= w <= upper by enumerating every basic solution.

    Each candidate vertex fixes n linearly independent constraints (rows of A,
    lower bounds or upper bounds) at equality; the best feasible one wins.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    upper = np.ones(n) if upper is None else np.asarray(upper, dtype=float)
    rows = np.vstack([A, -np.eye(n), np.eye(n)])
    rhs = np.concatenate([b, np.zeros(n), upper])
    best = -np.inf
    combos = np.array(list(itertools.combinations(range(rows.shape[0]), n)))
    M = rows[combos]
    v = rhs[combos]
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-9
    if not ok.any():
        return 0.0
    sols = np.linalg.solve(M[ok], v[ok][..., None])[..., 0]
    feasible = np.all(sols @ rows.T <= rhs + 1e-9, axis=1)
    if feasible.any():
        best = float(sols[feasible].sum(axis=1).max())
    return best


def blowup_grid_oracle(pmf, sigma, alpha, grid=None):
    """sup over threshold sets [t, inf) of P(E) subject to Q(E) <= alpha.

    P mixes N(k, sigma^2) over the count pmf, Q is N(0, sigma^2). Thresholds
    are scanned on a grid and the boundary t = sigma * Phi^-1(1 - alpha) is
    included, since P(E) grows as t decreases.
    """
    pmf = np.asarray(pmf, dtype=float)
    k = np.arange(pmf.size)
    t_star = sigma * norm.isf(alpha)
    if grid is None:
        grid = np.linspace(t_star - 5 * sigma, t_star + 5 * sigma, 20001)
    grid = np.append(grid, t_star)
    q_mass = norm.sf(grid / sigma)
    allowed = grid[q_mass <= alpha * (1 + 1e-12)]
    p_mass = (pmf[None, :] * norm.sf((allowed[:, None] - k[None, :]) / sigma)).sum(axis=1)
    return float(p_mass.max())


def poisson_binomial_brute(rhos):
    """Exact pmf by summing over all inclusion patterns (small inputs only)."""
    rhos = np.asarray(rhos, dtype=float)
    pmf = np.zeros(rhos.size + 1)
    for bits in itertools.product((0, 1), repeat=rhos.size):
        bits = np.array(bits)
        pmf[bits.sum()] += np.prod(np.where(bits == 1, rhos, 1 - rhos))
    return pmf
