"""Noise calibration for per-secret protection.

Pipeline: a packing LP assigns each private record a weight under the
per-secret capacities, weights become Bernoulli sampling probabilities, and
for every secret the noise scale is searched so that the blow-up of the
shifted-Gaussian mixture at the prior stays below the reconstruction bound.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import ndtr

from .accounting import BudgetError, SecretBudget, eta_from_budget, inv_norm_cdf
from .simplex import solve_packing_lp

log = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-6
EXACT = "exact-mixture"
APPROX = "gaussian-approx"
MODES = (EXACT, APPROX)

# beyond this many LP entries (classes x secrets) the dense simplex hands off to HiGHS
SIMPLEX_MAX_ENTRIES = 200_000


class VacuousBudgetError(BudgetError):
    def __init__(self, secret, message: str = "budget leaves no capacity (eta <= 0)"):
        self.secret = secret
        super().__init__(f"secret {secret!r}: {message}")


class EmptyDatasetError(ValueError):
    """Every record received zero weight, so nothing can be sampled."""


class UnsupportedModeError(ValueError):
    pass


@dataclass(frozen=True)
class SecretIndex:
    """Which records hold which secret.

    ``membership[j]`` is the sorted, duplicate-free array of record indices
    containing secret ``ids[j]``.
    """

    n_records: int
    membership: tuple
    ids: tuple = ()

    def __post_init__(self):
        if self.n_records < 0:
            raise ValueError("n_records must be nonnegative")
        cleaned = []
        for j, rows in enumerate(self.membership):
            arr = np.unique(np.asarray(rows, dtype=np.int64))
            if arr.size and (arr[0] < 0 or arr[-1] >= self.n_records):
                raise ValueError(f"secret {j} references a record outside [0, {self.n_records})")
            arr.setflags(write=False)
            cleaned.append(arr)
        object.__setattr__(self, "membership", tuple(cleaned))
        ids = tuple(self.ids) if self.ids else tuple(range(len(cleaned)))
        if len(ids) != len(cleaned):
            raise ValueError("ids and membership lengths differ")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_record_secrets(cls, record_secrets: Sequence[Iterable], ids: Sequence | None = None):
        """Build from per-record secret lists, e.g. ``[["a"], [], ["a", "b"]]``."""
        if ids is None:
            ids = sorted({s for secrets in record_secrets for s in secrets}, key=str)
        pos = {s: j for j, s in enumerate(ids)}
        rows: list[list[int]] = [[] for _ in ids]
        for i, secrets in enumerate(record_secrets):
            for s in set(secrets):
                if s not in pos:
                    raise KeyError(f"record {i} holds unknown secret {s!r}")
                rows[pos[s]].append(i)
        return cls(len(record_secrets), tuple(rows), tuple(ids))

    @property
    def n_secrets(self) -> int:
        return len(self.membership)

    def incidence(self) -> np.ndarray:
        """Dense secrets x records 0/1 matrix."""
        A = np.zeros((self.n_secrets, self.n_records))
        for j, rows in enumerate(self.membership):
            A[j, rows] = 1.0
        return A


def _lp(c, A, b, upper, solver):
    if solver == "auto":
        solver = "simplex" if A.size <= SIMPLEX_MAX_ENTRIES else "highs"
    if solver == "simplex":
        return solve_packing_lp(c, A, b, upper).x
    if solver == "highs":
        res = linprog(-c, A_ub=A, b_ub=b, bounds=np.column_stack([np.zeros_like(upper), upper]), method="highs")
        if res.status != 0:
            raise RuntimeError(f"HiGHS failed: {res.message}")
        return np.clip(res.x, 0.0, upper)
    raise ValueError(f"unknown LP solver {solver!r}")


def solve_weights(index: SecretIndex, etas, *, solver: str = "auto") -> np.ndarray:
    """Per-record weights in [0, 1] maximizing their total under the capacities.

    Records with identical secret sets are interchangeable in the LP, so they
    are pooled into one variable with upper bound equal to the class size and
    the optimal class total is spread evenly across its members. This keeps
    the result invariant to record order and gives symmetric records equal
    sampling chances. Records holding no secret get weight 1.
    """
    etas = np.asarray(etas, dtype=float)
    if etas.shape != (index.n_secrets,):
        raise ValueError(f"expected {index.n_secrets} capacities, got shape {etas.shape}")
    if np.any(~np.isfinite(etas)) or np.any(etas < 0):
        raise ValueError("capacities must be finite and nonnegative")

    n = index.n_records
    w = np.ones(n)
    if index.n_secrets == 0 or n == 0:
        return w
    A = index.incidence()
    held = A.any(axis=0)
    if not held.any():
        return w
    cols = np.flatnonzero(held)
    sigs, class_of = np.unique(A[:, cols].T, axis=0, return_inverse=True)
    class_of = np.asarray(class_of).ravel()
    sizes = np.bincount(class_of, minlength=len(sigs)).astype(float)
    totals = _lp(np.ones(len(sigs)), sigs.T, etas, sizes, solver)
    w[cols] = np.minimum(totals[class_of] / sizes[class_of], 1.0)
    if np.all(w == 0.0):
        log.warning("all weights are zero; some capacity is zero and covers every record")
    return w


def sampling_probs(weights, rule: str = "scaled") -> np.ndarray:
    """Bernoulli inclusion probabilities from LP weights.

    ``scaled`` is ``w_i / (max(w) * sum(w))`` clamped to [0, 1];
    ``max-normalized`` is the alternative reading ``w_i / max(w)``.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0 or not np.any(w > 0):
        raise EmptyDatasetError("all weights are zero; no record can be sampled")
    top = w.max()
    if rule == "scaled":
        rho = w / (top * w.sum())
    elif rule == "max-normalized":
        rho = w / top
    else:
        raise ValueError(f"unknown sampling rule {rule!r}")
    return np.clip(rho, 0.0, 1.0)


@dataclass(frozen=True)
class CountDistribution:
    """Law of a sampled-record count, pmf over 0..len(pmf)-1."""

    pmf: np.ndarray

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=float)
        if pmf.ndim != 1 or pmf.size == 0 or np.any(pmf < 0):
            raise ValueError("pmf must be a nonempty nonnegative vector")
        if abs(pmf.sum() - 1.0) > 1e-9:
            raise ValueError(f"pmf sums to {pmf.sum()!r}, not 1")
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def point_mass(cls, k: int) -> "CountDistribution":
        pmf = np.zeros(k + 1)
        pmf[k] = 1.0
        return cls(pmf)

    @property
    def mean(self) -> float:
        return float(np.arange(self.pmf.size) @ self.pmf)

    @property
    def support_max(self) -> int:
        return self.pmf.size - 1


def poisson_binomial(rhos) -> CountDistribution:
    """Exact pmf of a sum of independent Bernoulli(rho_i), by iterated convolution."""
    pmf = np.ones(1)
    for rho in np.asarray(rhos, dtype=float).ravel():
        if not 0.0 <= rho <= 1.0:
            raise ValueError(f"Bernoulli parameter outside [0, 1]: {rho!r}")
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1.0 - rho)
        nxt[1:] += pmf * rho
        pmf = nxt
    return CountDistribution(pmf / pmf.sum())


def mixture_blowup(dist: CountDistribution, sigma: float, alpha: float) -> float:
    """Largest P(E) over events with Q(E) <= alpha for P = sum_k pmf[k] N(k, sigma^2), Q = N(0, sigma^2).

    The likelihood ratio is increasing in the observation, so the optimal
    event is an upper half-line and the supremum has a closed form.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if alpha <= 0.0:
        return 0.0
    if alpha >= 1.0:
        return 1.0
    z = inv_norm_cdf(alpha)
    k = np.arange(dist.pmf.size)
    return float(np.clip(dist.pmf @ ndtr(k / sigma + z), 0.0, 1.0))


def _check_budget(p: float, r: float, secret=None) -> None:
    if not (0.0 < p < 1.0 and 0.0 < r < 1.0):
        raise BudgetError(f"secret {secret!r}: budget entries must lie in (0, 1)")
    if p >= r:
        raise VacuousBudgetError(secret, f"p={p!r} >= r={r!r} leaves no capacity")


def calibrate_sigma(
    dist: CountDistribution,
    p: float,
    r: float,
    T: int = 1,
    mode: str = APPROX,
    *,
    worst_case: bool = False,
    eta: float | None = None,
    secret=None,
    floor: float = SIGMA_FLOOR,
) -> float:
    """Smallest noise scale keeping the blow-up at ``p`` below ``r``.

    ``gaussian-approx`` replaces the mixture by one Gaussian shifted by the
    count mean (or by the support size with ``worst_case``) and composes T
    rounds, giving ``shift * sqrt(T) / eta``. ``exact-mixture`` bisects on
    :func:`mixture_blowup` and supports only T = 1.
    """
    _check_budget(p, r, secret)
    if T < 1:
        raise ValueError("T must be a positive integer")
    if eta is None:
        eta = eta_from_budget(p, r)
    if not eta > 0:
        raise VacuousBudgetError(secret)
    if mode == APPROX:
        shift = float(dist.support_max) if worst_case else dist.mean
        if shift <= 0:
            return floor
        return max(shift * math.sqrt(T) / eta, floor)
    if mode != EXACT:
        raise UnsupportedModeError(f"unknown calibration mode {mode!r}")
    if T != 1:
        raise UnsupportedModeError("exact-mixture calibration only supports T = 1")

    def ok(s):
        return mixture_blowup(dist, s, p) <= r

    if ok(floor):
        return floor
    lo, hi = floor, 1.0
    while not ok(hi):
        lo, hi = hi, hi * 2.0
        if hi > 1e15:
            raise RuntimeError("failed to bracket the noise scale")
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class CalibrationResult:
    weights: np.ndarray
    sampling_probs: np.ndarray
    sigma: float
    rounds: int
    mode: str
    secret_sigmas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    etas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    binding: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    ids: tuple = ()


def secret_noise(
    index: SecretIndex,
    budget: SecretBudget,
    T: int = 1,
    mode: str = APPROX,
    *,
    worst_case: bool = False,
    rho_rule: str = "scaled",
    etas=None,
    solver: str = "auto",
    threads: int = 1,
) -> CalibrationResult:
    """Weights, sampling probabilities and one noise scale covering every secret.

    ``etas`` overrides the capacities derived from ``budget`` (heuristic
    choices are allowed); the noise search still targets the (p, r) pair.
    """
    if len(budget) != index.n_secrets:
        raise ValueError(f"budget covers {len(budget)} secrets, index has {index.n_secrets}")
    if mode == EXACT and T != 1:
        raise UnsupportedModeError("exact-mixture calibration only supports T = 1")
    for j, (p, r) in enumerate(zip(budget.p, budget.r)):
        if p >= r:
            raise VacuousBudgetError(index.ids[j], f"p={p!r} >= r={r!r} leaves no capacity")
    caps = budget.eta if etas is None else np.asarray(etas, dtype=float)
    for j, eta in enumerate(caps):
        if not eta > 0:
            raise VacuousBudgetError(index.ids[j])

    weights = solve_weights(index, caps, solver=solver)
    try:
        rho = sampling_probs(weights, rho_rule)
    except EmptyDatasetError as exc:
        raise EmptyDatasetError(f"{exc} (capacities {caps.tolist()})") from None

    def one(j):
        dist = poisson_binomial(rho[index.membership[j]])
        return calibrate_sigma(
            dist, float(budget.p[j]), float(budget.r[j]), T, mode,
            worst_case=worst_case, eta=float(budget.eta[j]), secret=index.ids[j],
        )

    if threads > 1 and index.n_secrets > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sigmas = np.array(list(pool.map(one, range(index.n_secrets))))
    else:
        sigmas = np.array([one(j) for j in range(index.n_secrets)])
    loads = np.array([weights[rows].sum() for rows in index.membership])
    binding = np.abs(loads - caps) <= 1e-9 if index.n_secrets else np.zeros(0, dtype=bool)
    sigma = float(sigmas.max()) if sigmas.size else SIGMA_FLOOR
    return CalibrationResult(
        weights=weights,
        sampling_probs=rho,
        sigma=max(sigma, SIGMA_FLOOR),
        rounds=T,
        mode=mode,
        secret_sigmas=sigmas,
        etas=caps,
        binding=binding,
        ids=index.ids,
    )
