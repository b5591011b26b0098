"""Desk-scale experiments: noise-ratio simulation, voting benchmark, convergence run."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .accounting import SecretBudget, eta_from_budget
from .backends import IdentityEmbedder, MockGenerator
from .calibration import APPROX, SecretIndex, secret_noise
from .clustering import NoisyClusterSummary
from .evolution import PipelineConfig, PipelineResult, run_pipeline, vote, vote_pointwise
from .geometry import DistanceCounter


@dataclass
class SimulationSpec:
    N: int = 8000
    m: int = 400
    q: float = 0.01
    p: float = 1e-4
    ratios: list[float] = field(default_factory=lambda: [2, 10, 50, 100, 200, 400])
    seed: int = 0
    T: int = 1

    def __post_init__(self):
        if self.N < 1 or self.m < 1:
            raise ValueError("N and m must be >= 1")
        if not 0.0 < self.q <= 1.0:
            raise ValueError("q must lie in (0, 1]")
        if not 0.0 < self.p < 1.0:
            raise ValueError("p must lie in (0, 1)")
        if not self.ratios:
            raise ValueError("ratios must be nonempty")
        for x in self.ratios:
            if not x > 1 or self.p * x >= 1.0:
                raise ValueError(f"ratio {x!r} must exceed 1 and keep r = ratio * p below 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")


@dataclass
class RatioRow:
    ratio: float
    sigma_gdp: float
    sigma_secret: float

    @property
    def noise_ratio(self) -> float:
        return self.sigma_gdp / self.sigma_secret


def random_membership(N: int, m: int, q: float, seed) -> SecretIndex:
    """Each record holds each secret independently with probability ``q``."""
    rng = np.random.default_rng(seed)
    mask = rng.random((m, N)) < q
    return SecretIndex(N, tuple(np.flatnonzero(row) for row in mask))


def gdp_sigma(index: SecretIndex, mu: float, T: int = 1) -> float:
    """Full-participation Gaussian baseline: sensitivity is the largest secret group."""
    largest = max((len(rows) for rows in index.membership), default=0)
    return max(largest, 1) * math.sqrt(T) / mu


def noise_ratio_simulation(spec: SimulationSpec, *, solver: str = "auto") -> list[RatioRow]:
    """sigma_GDP / sigma_secret for each r/p ratio, rows sorted by ratio."""
    index = random_membership(spec.N, spec.m, spec.q, spec.seed)
    rows = []
    for ratio in sorted(float(x) for x in spec.ratios):
        r = spec.p * ratio
        budget = SecretBudget.uniform(spec.m, spec.p, r)
        calib = secret_noise(index, budget, T=spec.T, mode=APPROX, solver=solver)
        mu = eta_from_budget(spec.p, r)
        rows.append(RatioRow(ratio, gdp_sigma(index, mu, spec.T), calib.sigma))
    return rows


@dataclass
class VoteBenchRow:
    engine: str
    seconds: float
    distance_evals: int


def bench_vote(M: int, K: int, N_syn: int, d: int, seed=0, *, repeats: int = 1):
    """Time pointwise voting (every private point) against representative voting (K centers).

    Returns ``(rows, histograms)``. The representative engine votes with
    ``K`` noisy centers standing in for the released cluster summary.
    """
    if M < K:
        raise ValueError("M must be >= K")
    rng = np.random.default_rng(seed)
    private = rng.standard_normal((M, d))
    candidates = rng.standard_normal((N_syn, d))
    centers = private[rng.choice(M, size=K, replace=False)]
    sizes = np.full(K, M / K)
    noisy = NoisyClusterSummary(centers=centers, sizes=sizes, sigma=0.0, radius=float("inf"))

    def timed(fn, *args):
        best, out, count = math.inf, None, 0
        for _ in range(max(1, repeats)):
            counter = DistanceCounter()
            t0 = time.perf_counter()
            out = fn(*args, counter)
            best = min(best, time.perf_counter() - t0)
            count = counter.count
        return best, out, count

    tp, hist_p, cp = timed(vote_pointwise, private, candidates)
    tr, hist_r, cr = timed(vote, noisy, candidates)
    rows = [VoteBenchRow("pointwise", tp, cp), VoteBenchRow("representative", tr, cr)]
    return rows, {"pointwise": hist_p, "representative": hist_r}


# Benchmark setting for the convergence check. Eight public clusters and
# 32 survivors give every private mode several lineages to descend from.
CONVERGENCE_DEFAULTS = dict(d=8, L=8, T=40, K=8, N_syn=32, n_private=50, n_public=200, spread=0.6, std=0.01)


def four_cluster_data(n: int, d: int, seed, *, spread: float = 0.6, std: float = 0.01) -> np.ndarray:
    """Round-robin samples from four Gaussians centered at +-spread on the first two axes."""
    if d < 2:
        raise ValueError("need d >= 2")
    means = np.zeros((4, d))
    means[0, 0], means[1, 0], means[2, 1], means[3, 1] = spread, -spread, spread, -spread
    rng = np.random.default_rng(seed)
    return means[np.arange(n) % 4] + std * rng.standard_normal((n, d))


def diameter(X) -> float:
    X = np.asarray(X, dtype=np.float64)
    sq = np.einsum("ij,ij->i", X, X)
    d2 = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    return float(np.sqrt(max(d2.max(), 0.0)))


def convergence_run(seed: int, *, sigma: float = 0.0, **overrides) -> tuple[PipelineResult, float]:
    """One mock pipeline run on the four-cluster data; returns the result and the data diameter."""
    cfg = dict(CONVERGENCE_DEFAULTS, **overrides)
    ss = np.random.SeedSequence(seed)
    priv_seq, pub_seq = ss.spawn(2)
    private = four_cluster_data(cfg["n_private"], cfg["d"], priv_seq, spread=cfg["spread"], std=cfg["std"])
    public = four_cluster_data(cfg["n_public"], cfg["d"], pub_seq, spread=cfg["spread"], std=cfg["std"])
    config = PipelineConfig(N_syn=cfg["N_syn"], L=cfg["L"], T=cfg["T"], K=cfg["K"], R=1.0, seed=seed)
    result = run_pipeline(
        config, public, private,
        MockGenerator(cfg["d"], 1.0, seed=seed), IdentityEmbedder(1.0),
        sigma=sigma, rhos=1.0,
    )
    return result, diameter(private)
