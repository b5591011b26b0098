"""Dense bounded-variable primal simplex for small packing LPs.

Solves ``max c @ x  s.t.  A @ x <= b,  0 <= x <= upper`` with ``b >= 0`` so the
all-slack basis is an immediate feasible start. Upper bounds are handled
implicitly (nonbasic variables sit at either bound) which keeps the basis at
``len(b)`` rows however many box constraints there are.

Pricing is Dantzig's largest reduced cost; after ``bland_after`` consecutive
degenerate pivots it switches to Bland's smallest-index rule until progress
resumes, which rules out cycling. Every choice breaks ties by index, so the
returned vertex is a deterministic function of the input ordering.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse


class UnboundedError(ArithmeticError):
    """The objective increases without limit along a feasible ray."""


@dataclass
class LPResult:
    x: np.ndarray
    objective: float
    iterations: int
    slack: np.ndarray


def solve_packing_lp(
    c,
    A,
    b,
    upper=None,
    *,
    tol: float = 1e-10,
    pivot_tol: float = 1e-9,
    max_iter: int = 1_000_000,
    refactor_every: int = 64,
    bland_after: int = 20,
) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError("shape mismatch between c, A and b")
    if np.any(b < 0):
        raise ValueError("right-hand side must be nonnegative")
    up = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
    if np.any(up < 0):
        raise ValueError("upper bounds must be nonnegative")

    if m == 0:
        if np.any((c > 0) & ~np.isfinite(up)):
            raise UnboundedError("LP objective is unbounded")
        x = np.where(c > 0, up, 0.0)
        return LPResult(x=x, objective=float(c @ x), iterations=0, slack=np.zeros(0))

    # columns 0..n-1 structural, n..n+m-1 slack
    full_up = np.concatenate([up, np.full(m, np.inf)])
    cost = np.concatenate([c, np.zeros(m)])

    At = sparse.csr_matrix(A.T)

    def column(j):
        if j < n:
            return A[:, j]
        e = np.zeros(m)
        e[j - n] = 1.0
        return e

    basis = list(range(n, n + m))
    is_basic = np.zeros(n + m, dtype=bool)
    is_basic[n:] = True
    at_upper = np.zeros(n + m, dtype=bool)
    Binv = np.eye(m)
    xB = b.copy()

    def refactor():
        nonlocal Binv, xB
        Bmat = np.column_stack([column(j) for j in basis]) if m else np.zeros((0, 0))
        Binv = np.linalg.inv(Bmat) if m else Bmat
        rhs = b.copy()
        ups = np.flatnonzero(at_upper[:n])
        if ups.size:
            rhs -= A[:, ups] @ up[ups]
        xB = Binv @ rhs

    it = 0
    pivots = 0
    degenerate_run = 0
    while True:
        if it >= max_iter:
            raise RuntimeError(f"simplex did not terminate within {max_iter} iterations")
        it += 1
        y = Binv.T @ cost[basis] if m else np.zeros(0)
        d = np.empty(n + m)
        d[:n] = c - At @ y
        d[n:] = -y
        eligible = ~is_basic & (((~at_upper) & (d > tol)) | (at_upper & (d < -tol)))
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            break
        if degenerate_run >= bland_after:
            q = int(cand[0])
        else:
            q = int(cand[np.argmax(np.abs(d[cand]))])
        direction = -1.0 if at_upper[q] else 1.0
        alpha = Binv @ column(q)
        change = -direction * alpha  # d x_B / d theta

        basis_arr = np.asarray(basis)
        ub = full_up[basis_arr]
        t = np.full(m, np.inf)
        dec = change < -pivot_tol
        t[dec] = np.maximum(xB[dec], 0.0) / -change[dec]
        inc = (change > pivot_tol) & np.isfinite(ub)
        t[inc] = np.maximum(ub[inc] - xB[inc], 0.0) / change[inc]
        theta = min(full_up[q], t.min()) if m else full_up[q]
        leave_row = -1
        if np.isfinite(theta):
            tied = np.flatnonzero(t <= theta + tol)
            if tied.size:
                # Bland tie-break: smallest variable index, the entering flip included
                pick = tied[np.argmin(basis_arr[tied])]
                if not (full_up[q] <= theta + tol and q < basis_arr[pick]):
                    leave_row = int(pick)
                    theta = max(float(t[pick]), 0.0)
        if not np.isfinite(theta):
            raise UnboundedError("LP objective is unbounded")

        degenerate_run = degenerate_run + 1 if theta <= tol else 0
        xB = xB + theta * change
        if leave_row < 0:
            at_upper[q] = not at_upper[q]
            continue

        out = basis[leave_row]
        out_to_upper = change[leave_row] > 0
        entering_value = (full_up[q] if at_upper[q] else 0.0) + direction * theta
        pivot = alpha[leave_row]
        row = Binv[leave_row] / pivot
        Binv = Binv - np.outer(alpha, row)
        Binv[leave_row] = row
        xB[leave_row] = entering_value
        basis[leave_row] = q
        is_basic[q] = True
        at_upper[q] = False
        is_basic[out] = False
        at_upper[out] = bool(out_to_upper)
        pivots += 1
        if pivots % refactor_every == 0:
            refactor()

    refactor()
    x_full = np.where(at_upper, full_up, 0.0)
    x_full[basis] = xB
    x = np.clip(x_full[:n], 0.0, up)
    return LPResult(x=x, objective=float(c @ x), iterations=it, slack=b - A @ x)
