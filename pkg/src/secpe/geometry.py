"""Embedding containers and chunked nearest-neighbour search."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_CHUNK_BYTES = 64 * 2**20


@dataclass
class EmbeddingSet:
    """``n x d`` float matrix of embeddings with a declared clipping radius."""

    vectors: np.ndarray
    radius: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64)
        if v.ndim == 1 and v.size == 0:
            v = v.reshape(0, 1)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"embeddings must be an n x d matrix with d >= 1, got shape {v.shape}")
        if not self.radius > 0:
            raise ValueError("clipping radius must be positive")
        self.vectors = v

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return self.n

    def clipped(self) -> "EmbeddingSet":
        return EmbeddingSet(clip_rows(self.vectors, self.radius), self.radius)

    def normalized(self) -> "EmbeddingSet":
        """Unit-normalize rows; cosine geometry with R = 1."""
        norms = np.linalg.norm(self.vectors, axis=1, keepdims=True)
        out = np.divide(self.vectors, norms, out=np.zeros_like(self.vectors), where=norms > 0)
        return EmbeddingSet(out, 1.0)


def clip(v, R: float) -> np.ndarray:
    """Scale ``v`` into the l2 ball of radius R; vectors inside are returned unchanged."""
    if not R > 0:
        raise ValueError("R must be positive")
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= R:
        return v.copy()
    return v * (R / norm)


def clip_rows(X, R: float) -> np.ndarray:
    if not R > 0:
        raise ValueError("R must be positive")
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    scale = np.minimum(1.0, R / np.maximum(norms, np.finfo(float).tiny))
    return np.where(norms > R, X * scale, X)


class DistanceCounter:
    """Tally of point-to-point distance evaluations."""

    def __init__(self):
        self.count = 0

    def add(self, k: int) -> None:
        self.count += int(k)


def nearest(queries, refs, counter: DistanceCounter | None = None):
    """Index of (and squared distance to) the nearest row of ``refs`` for each query.

    Ties resolve to the lowest reference index. Work is chunked over queries
    so memory stays bounded for large query sets.
    """
    Q = np.asarray(queries, dtype=np.float64)
    Rf = np.asarray(refs, dtype=np.float64)
    if Q.ndim != 2 or Rf.ndim != 2:
        raise ValueError("queries and refs must be 2-d")
    if Q.shape[1] != Rf.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {Rf.shape[1]}")
    if Rf.shape[0] == 0:
        raise ValueError("no reference points")
    nq = Q.shape[0]
    idx = np.empty(nq, dtype=np.int64)
    dist = np.empty(nq)
    ref_sq = np.einsum("ij,ij->i", Rf, Rf)
    step = max(1, _CHUNK_BYTES // (8 * Rf.shape[0]))
    for start in range(0, nq, step):
        q = Q[start:start + step]
        d2 = ref_sq[None, :] - 2.0 * (q @ Rf.T)
        j = np.argmin(d2, axis=1)
        idx[start:start + step] = j
        # recompute the winning distance directly; the expanded form cancels badly near zero
        diff = q - Rf[j]
        dist[start:start + step] = np.einsum("ij,ij->i", diff, diff)
    if counter is not None:
        counter.add(nq * Rf.shape[0])
    return idx, dist
