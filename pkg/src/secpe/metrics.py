"""Fidelity and convergence statistics on embeddings and texts."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import EmbeddingSet, nearest


@dataclass
class GaussianSummary:
    mean: np.ndarray
    covariance: np.ndarray
    count: int

    @property
    def d(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(emb: EmbeddingSet | np.ndarray) -> GaussianSummary:
    """Sample mean and unbiased covariance (divisor n - 1)."""
    X = emb.vectors if isinstance(emb, EmbeddingSet) else np.asarray(emb, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least two samples to fit a Gaussian")
    mu = X.mean(axis=0)
    C = X - mu
    cov = C.T @ C / (X.shape[0] - 1)
    cov = 0.5 * (cov + cov.T)
    return GaussianSummary(mean=mu, covariance=cov, count=X.shape[0])


def _psd_sqrt(S):
    vals, vecs = np.linalg.eigh(0.5 * (S + S.T))
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def frechet_distance(a: GaussianSummary, b: GaussianSummary) -> float:
    """Squared Frechet distance between two Gaussians.

    The cross term is tr((S_a S_b)^{1/2}) evaluated as the trace of the
    symmetric root of S_a^{1/2} S_b S_a^{1/2}, which has the same spectrum.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    diff = a.mean - b.mean
    root_a = _psd_sqrt(a.covariance)
    middle = root_a @ b.covariance @ root_a
    vals = np.linalg.eigvalsh(0.5 * (middle + middle.T))
    cross = np.sqrt(np.clip(vals, 0.0, None)).sum()
    fd = float(diff @ diff + np.trace(a.covariance) + np.trace(b.covariance) - 2.0 * cross)
    return max(fd, 0.0)


def coverage_distance(private: EmbeddingSet | np.ndarray, synthetic: EmbeddingSet | np.ndarray) -> float:
    """Largest distance from a private point to its nearest synthetic point.

    A one-sided surrogate for the Wasserstein convergence target: it is zero
    only when every private point is matched exactly.
    """
    P = private.vectors if isinstance(private, EmbeddingSet) else np.asarray(private, dtype=np.float64)
    S = synthetic.vectors if isinstance(synthetic, EmbeddingSet) else np.asarray(synthetic, dtype=np.float64)
    if P.shape[0] == 0 or S.shape[0] == 0:
        raise ValueError("coverage distance needs nonempty sets")
    _, d2 = nearest(P, S)
    return float(np.sqrt(d2.max()))


@dataclass
class LengthStats:
    lengths: list[int]
    bucket_width: int
    buckets: dict[int, int] = field(default_factory=dict)
    mean: float = float("nan")
    median: float = float("nan")


def length_stats(texts, bucket_width: int = 16) -> LengthStats:
    """Whitespace token counts bucketed as ``[b*w, (b+1)*w)``; keys are bucket lower edges."""
    lengths = [len(t.split()) for t in texts]
    stats = LengthStats(lengths=lengths, bucket_width=bucket_width)
    if not lengths:
        return stats
    for n in lengths:
        lo = (n // bucket_width) * bucket_width
        stats.buckets[lo] = stats.buckets.get(lo, 0) + 1
    stats.buckets = dict(sorted(stats.buckets.items()))
    stats.mean = float(np.mean(lengths))
    stats.median = float(np.median(lengths))
    return stats


@dataclass
class ConvergenceReport:
    coverage: list[float] = field(default_factory=list)
    mis_selection: list[float] = field(default_factory=list)
    distance_evals: list[int] = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.coverage)

    def rows(self):
        for t, (c, m, e) in enumerate(zip(self.coverage, self.mis_selection, self.distance_evals), start=1):
            yield {"round": t, "coverage_distance": c, "mis_selection": m, "vote_distance_evals": e}
