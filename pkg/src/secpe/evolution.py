"""Representative voting, top-N selection and the evolution loop."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .accounting import SecretBudget
from .backends import BackendError, Embedder, Generator
from .calibration import APPROX, CalibrationResult, SecretIndex, secret_noise
from .clustering import ClusterSummary, NoisyClusterSummary, kmeans, secret_clustering
from .geometry import DistanceCounter, EmbeddingSet, nearest
from .metrics import ConvergenceReport, coverage_distance

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    N_syn: int
    L: int
    T: int
    K: int
    R: float = 1.0
    p: float = 1e-4
    r: float = 1e-3
    seed: int = 0
    distance: str = "euclidean"
    calibration_mode: str = APPROX
    worst_case: bool = False
    rho_rule: str = "scaled"

    def __post_init__(self):
        for name in ("N_syn", "L", "T", "K"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if self.distance not in ("euclidean", "cosine"):
            raise ValueError(f"unknown distance {self.distance!r}")

    @property
    def radius(self) -> float:
        return 1.0 if self.distance == "cosine" else float(self.R)


def vote(noisy: NoisyClusterSummary, candidates: EmbeddingSet | np.ndarray, counter: DistanceCounter | None = None) -> np.ndarray:
    """Each noisy center adds its noisy size to the nearest candidate (ties to the lowest index)."""
    C = candidates.vectors if isinstance(candidates, EmbeddingSet) else np.asarray(candidates, dtype=np.float64)
    if C.shape[0] == 0:
        raise ValueError("no candidates to vote for")
    idx, _ = nearest(noisy.centers, C, counter)
    votes = np.zeros(C.shape[0])
    np.add.at(votes, idx, noisy.sizes)
    return votes


def vote_pointwise(private: EmbeddingSet | np.ndarray, candidates: EmbeddingSet | np.ndarray, counter: DistanceCounter | None = None) -> np.ndarray:
    """Baseline: every private point gives one vote to its nearest candidate."""
    P = private.vectors if isinstance(private, EmbeddingSet) else np.asarray(private, dtype=np.float64)
    C = candidates.vectors if isinstance(candidates, EmbeddingSet) else np.asarray(candidates, dtype=np.float64)
    idx, _ = nearest(P, C, counter)
    return np.bincount(idx, minlength=C.shape[0]).astype(np.float64)


def select_top(votes, N_syn: int) -> np.ndarray:
    """Indices of the ``N_syn`` largest votes, descending, ties to the lowest index."""
    votes = np.asarray(votes, dtype=float)
    if votes.shape[0] < N_syn:
        raise ValueError(f"pool of {votes.shape[0]} candidates is smaller than N_syn={N_syn}")
    return np.argsort(-votes, kind="stable")[:N_syn]


def mis_selection_rate(private: np.ndarray, noisy: NoisyClusterSummary, candidates: np.ndarray, selected) -> float:
    """Fraction of private points whose nearest noisy center voted for an unselected candidate."""
    if private.shape[0] == 0:
        return 0.0
    voted, _ = nearest(noisy.centers, candidates)
    home, _ = nearest(private, noisy.centers)
    chosen = np.zeros(candidates.shape[0], dtype=bool)
    chosen[np.asarray(selected)] = True
    return float(np.mean(~chosen[voted[home]]))


def _take(items, idx):
    if isinstance(items, np.ndarray):
        return items[idx]
    return [items[i] for i in idx]


def _concat(a, b):
    if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
        return np.vstack([np.asarray(a).reshape(-1, np.asarray(b).shape[1]), b])
    return list(a) + list(b)


@dataclass
class PipelineResult:
    synthetic: object
    embeddings: EmbeddingSet
    report: ConvergenceReport
    sigma: float
    calibration: CalibrationResult | None = None
    public_clusters: ClusterSummary | None = None
    pool_sizes: list[int] = field(default_factory=list)


def _prepare(emb: EmbeddingSet, config: PipelineConfig) -> EmbeddingSet:
    if config.distance == "cosine":
        return emb.normalized()
    return EmbeddingSet(emb.vectors, config.radius).clipped()


def run_pipeline(
    config: PipelineConfig,
    public_items,
    private_items,
    generator: Generator,
    embedder: Embedder,
    index: SecretIndex | None = None,
    budget: SecretBudget | None = None,
    *,
    sigma: float | None = None,
    rhos=None,
    threads: int = 1,
) -> PipelineResult:
    """Run the secret-protected evolution loop for ``config.T`` rounds.

    Noise is calibrated once for all T rounds unless ``sigma`` is given; the
    sampling probabilities come from the same calibration unless ``rhos`` is.
    Cluster noise is drawn fresh every round.
    """
    private = _prepare(embedder.embed(private_items), config)
    public = _prepare(embedder.embed(public_items), config)
    if public.n < config.K:
        raise ValueError(f"K={config.K} exceeds the {public.n} public records")

    calib = None
    if sigma is None or rhos is None:
        if index is None:
            index = SecretIndex(private.n, ())
        if budget is None:
            budget = SecretBudget.uniform(index.n_secrets, config.p, config.r)
        calib = secret_noise(
            index, budget, T=config.T, mode=config.calibration_mode,
            worst_case=config.worst_case, rho_rule=config.rho_rule, threads=threads,
        )
    sigma = calib.sigma if sigma is None else float(sigma)
    rho = calib.sampling_probs if rhos is None else np.broadcast_to(np.asarray(rhos, dtype=float), (private.n,))
    log.info("noise scale %.6g, expected private inclusions %.3f", sigma, float(np.sum(rho)))

    root = np.random.SeedSequence(config.seed)
    km_seq, *round_seqs = root.spawn(config.T + 1)
    clusters = kmeans(public, config.K, km_seq)

    try:
        pool = generator.random_samples(config.N_syn * config.L)
    except Exception as exc:  # noqa: BLE001 - surface any backend failure with its round
        raise BackendError(f"initial sampling failed: {exc}", round_index=0) from exc

    report = ConvergenceReport()
    pool_sizes = []
    selected_items = None
    selected_emb = None
    for t in range(config.T):
        pool_sizes.append(len(pool))
        try:
            cand = _prepare(embedder.embed(pool), config)
        except Exception as exc:  # noqa: BLE001
            raise BackendError(f"embedding failed: {exc}", round_index=t + 1) from exc
        noisy = secret_clustering(clusters, private, rho, sigma, seed=round_seqs[t])
        counter = DistanceCounter()
        votes = vote(noisy, cand, counter)
        chosen = select_top(votes, config.N_syn)
        selected_items = _take(pool, chosen)
        selected_emb = EmbeddingSet(cand.vectors[chosen], cand.radius)
        report.coverage.append(coverage_distance(private, selected_emb) if private.n else 0.0)
        report.mis_selection.append(mis_selection_rate(private.vectors, noisy, cand.vectors, chosen))
        report.distance_evals.append(counter.count)
        if t == config.T - 1:
            break
        try:
            children = generator.variations(selected_items, config.L, t)
        except Exception as exc:  # noqa: BLE001
            raise BackendError(f"variation failed: {exc}", round_index=t + 1) from exc
        pool = _concat(children, selected_items)

    return PipelineResult(
        synthetic=selected_items,
        embeddings=selected_emb,
        report=report,
        sigma=sigma,
        calibration=calib,
        public_clusters=clusters,
        pool_sizes=pool_sizes,
    )
