"""Public k-means and the noisy release of privately shifted cluster summaries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EmbeddingSet, clip, clip_rows, nearest

__all__ = [
    "ClusterSummary",
    "NoisyClusterSummary",
    "clip",
    "kmeans",
    "pooled_statistics",
    "secret_clustering",
]


@dataclass
class ClusterSummary:
    centers: np.ndarray
    sizes: np.ndarray
    labels: np.ndarray | None = None

    @property
    def K(self) -> int:
        return self.centers.shape[0]


@dataclass
class NoisyClusterSummary:
    centers: np.ndarray
    sizes: np.ndarray
    sigma: float
    radius: float

    @property
    def K(self) -> int:
        return self.centers.shape[0]


def _seed_seq(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)


def _kmeans_pp(X, K, rng):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        total = d2.sum()
        if total <= 0:
            centers[k:] = centers[0]
            break
        i = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
        centers[k] = X[min(i, n - 1)]
        d2 = np.minimum(d2, np.sum((X - centers[k]) ** 2, axis=1))
    return centers


def _repair_empty(X, labels, centers, K):
    """Hand each empty cluster the point farthest from its own center."""
    sizes = np.bincount(labels, minlength=K)
    for k in np.flatnonzero(sizes == 0):
        d2 = np.sum((X - centers[labels]) ** 2, axis=1)
        d2[sizes[labels] <= 1] = -1.0  # never empty another cluster
        i = int(np.argmax(d2))
        sizes[labels[i]] -= 1
        labels[i] = k
        sizes[k] = 1
        centers[k] = X[i]
    return labels


def kmeans(points: EmbeddingSet, K: int, seed=0, *, max_iter: int = 100) -> ClusterSummary:
    """Lloyd's algorithm with k-means++ seeding.

    Stops once no center moves more than ``1e-6 * R``. Empty clusters are
    re-seeded so every returned cluster holds at least one point.
    """
    X = points.vectors
    n = X.shape[0]
    if K < 1:
        raise ValueError("K must be >= 1")
    if n < K:
        raise ValueError(f"cannot form {K} clusters from {n} points")
    rng = np.random.default_rng(_seed_seq(seed))
    centers = _kmeans_pp(X, K, rng)
    tol = 1e-6 * points.radius
    labels = np.zeros(n, dtype=np.int64)
    for _ in range(max_iter):
        labels, _ = nearest(X, centers)
        labels = _repair_empty(X, labels, centers, K)
        sizes = np.bincount(labels, minlength=K)
        new = np.zeros_like(centers)
        np.add.at(new, labels, X)
        new /= sizes[:, None]
        shift = np.max(np.linalg.norm(new - centers, axis=1))
        centers = new
        if shift < tol:
            break
    labels, _ = nearest(X, centers)
    labels = _repair_empty(X, labels, centers, K)
    sizes = np.bincount(labels, minlength=K)
    centers = np.zeros_like(centers)
    np.add.at(centers, labels, X)
    centers /= sizes[:, None]
    return ClusterSummary(centers=centers, sizes=sizes.astype(np.int64), labels=labels)


def pooled_statistics(public: ClusterSummary, private_vectors, included):
    """Exact pooled centers, private counts m_k and private labels before noise."""
    P = np.asarray(private_vectors, dtype=np.float64)
    n_k = np.asarray(public.sizes, dtype=np.float64)
    sums = public.centers * n_k[:, None]
    m = np.zeros(public.K, dtype=np.int64)
    labels = np.full(P.shape[0], -1, dtype=np.int64)
    chosen = np.flatnonzero(included)
    if chosen.size:
        lab, _ = nearest(P[chosen], public.centers)
        labels[chosen] = lab
        np.add.at(sums, lab, P[chosen])
        m = np.bincount(lab, minlength=public.K)
    pooled = sums / (n_k + m)[:, None]
    return pooled, m, labels


def secret_clustering(
    public: ClusterSummary,
    private: EmbeddingSet,
    rhos,
    sigma: float,
    seed=0,
) -> NoisyClusterSummary:
    """Shift public clusters by a Bernoulli sample of private points and release with noise.

    Each private vector joins with probability ``rhos[i]`` and is pooled into
    its nearest public center. Centers get Gaussian noise of scale
    ``2R/n_k * sigma`` per coordinate and sizes get scale ``sigma``.
    """
    rhos = np.asarray(rhos, dtype=float)
    if rhos.shape != (private.n,):
        raise ValueError(f"expected {private.n} sampling probabilities, got {rhos.shape}")
    if private.n and private.d != public.centers.shape[1]:
        raise ValueError("private and public dimensions differ")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    n_k = np.asarray(public.sizes, dtype=np.float64)
    if np.any(n_k < 1):
        raise ValueError("every public cluster needs at least one point (noise scale 2R/n_k)")

    K, d = public.centers.shape
    R = private.radius
    root = _seed_seq(seed)
    incl_seq, *cluster_seqs = root.spawn(K + 1)
    included = np.random.default_rng(incl_seq).random(private.n) < rhos
    P = clip_rows(private.vectors, R) if private.n else private.vectors
    pooled, m, _ = pooled_statistics(public, P, included)

    centers = pooled.copy()
    sizes = (n_k + m).astype(np.float64)
    if sigma > 0:
        for k, seq in enumerate(cluster_seqs):
            g = np.random.default_rng(seq)
            centers[k] += (2.0 * R / n_k[k]) * sigma * g.standard_normal(d)
            sizes[k] += sigma * g.standard_normal()
    return NoisyClusterSummary(centers=centers, sizes=sizes, sigma=float(sigma), radius=float(R))
