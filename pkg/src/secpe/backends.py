"""Generator and embedder backends for the evolution loop.

A generator offers ``random_samples(count)`` and ``variations(items, L, t)``
(``L`` variations per item, item-major order). An embedder maps a list of
items to an :class:`EmbeddingSet`. The mock pair works directly in embedding
space; the HTTP generator talks to a chat-completions endpoint.
"""
from __future__ import annotations

import hashlib
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol, Sequence

import numpy as np
import requests

from .data import tokenize
from .geometry import EmbeddingSet, clip_rows

log = logging.getLogger(__name__)

API_KEY_ENV = "SECPE_API_KEY"


class BackendError(RuntimeError):
    def __init__(self, message: str, round_index: int | None = None):
        super().__init__(message)
        self.round_index = round_index


class Generator(Protocol):
    def random_samples(self, count: int) -> list: ...

    def variations(self, items: Sequence, L: int, t: int) -> list: ...


class Embedder(Protocol):
    def embed(self, items: Sequence) -> EmbeddingSet: ...


def variation_scale(t: int, s0: float, gamma: float) -> float:
    return s0 * gamma**t


def mock_variation(sample, L: int, t: int, seed, *, s0: float = 0.5, gamma: float = 0.8) -> np.ndarray:
    """``L`` Gaussian perturbations of ``sample`` with per-coordinate scale ``s0 * gamma**t``."""
    sample = np.asarray(sample, dtype=np.float64)
    if L <= 0:
        return np.empty((0, sample.shape[0]))
    scale = variation_scale(t, s0, gamma)
    rng = np.random.default_rng(seed)
    return sample[None, :] + scale * rng.standard_normal((L, sample.shape[0]))


class MockGenerator:
    """Embedding-space stand-in for a foundation model.

    Random samples are uniform in the ball of radius ``R``; variations follow
    :func:`mock_variation` with a geometric scale schedule and are projected
    back into the ball, so items stay in the region embeddings can occupy.
    """

    def __init__(self, dim: int, radius: float = 1.0, seed: int = 0, *, s0: float | None = None, gamma: float = 0.8):
        self.dim = dim
        self.radius = radius
        self.seed = seed
        self.s0 = 0.5 * radius if s0 is None else s0
        self.gamma = gamma
        self._draws = 0

    def random_samples(self, count: int) -> np.ndarray:
        rng = np.random.default_rng([self.seed, 0x5EED, self._draws])
        self._draws += 1
        g = rng.standard_normal((count, self.dim))
        g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
        radii = self.radius * rng.random(count) ** (1.0 / self.dim)
        return g * radii[:, None]

    def variations(self, items, L: int, t: int) -> np.ndarray:
        items = np.asarray(items, dtype=np.float64)
        if L <= 0 or items.shape[0] == 0:
            return np.empty((0, self.dim))
        out = [
            mock_variation(x, L, t, [self.seed, t, i], s0=self.s0, gamma=self.gamma)
            for i, x in enumerate(items)
        ]
        return clip_rows(np.vstack(out), self.radius)


class IdentityEmbedder:
    """Items are already vectors."""

    def __init__(self, radius: float = 1.0):
        self.radius = radius

    def embed(self, items) -> EmbeddingSet:
        return EmbeddingSet(np.asarray(items, dtype=np.float64), self.radius)


class HashingEmbedder:
    """Deterministic signed feature hashing of case-folded tokens, unit-normalized."""

    def __init__(self, dim: int = 256, radius: float = 1.0):
        self.dim = dim
        self.radius = radius

    def _slot(self, token: str):
        h = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        v = int.from_bytes(h, "little")
        return v % self.dim, 1.0 if (v >> 63) & 1 else -1.0

    def embed(self, items: Sequence[str]) -> EmbeddingSet:
        X = np.zeros((len(items), self.dim))
        for i, text in enumerate(items):
            for tok in tokenize(text):
                j, sign = self._slot(tok)
                X[i, j] += sign
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)
        return EmbeddingSet(clip_rows(X, self.radius), self.radius)


class SentenceTransformerEmbedder:
    def __init__(self, model_name: str = "all-MiniLM-L6-v2", radius: float = 1.0):
        from sentence_transformers import SentenceTransformer

        self.model = SentenceTransformer(model_name)
        self.radius = radius

    def embed(self, items: Sequence[str]) -> EmbeddingSet:
        X = self.model.encode(list(items), convert_to_numpy=True, show_progress_bar=False)
        return EmbeddingSet(np.asarray(X, dtype=np.float64), self.radius)


class HttpChatGenerator:
    """Text generator backed by an OpenAI-compatible chat-completions endpoint.

    Prompt templates are opaque strings: ``random_prompt`` may use ``{index}``
    and ``variation_prompt`` must use ``{text}``.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        *,
        random_prompt: str,
        variation_prompt: str,
        temperature: float = 1.2,
        max_tokens: int = 448,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        threads: int = 1,
        api_key: str | None = None,
        session: requests.Session | None = None,
    ):
        self.url = base_url.rstrip("/") + "/v1/chat/completions"
        self.model = model
        self.random_prompt = random_prompt
        self.variation_prompt = variation_prompt
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.threads = max(1, threads)
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.session = session or requests.Session()

    def _payload(self, prompt: str) -> dict:
        return {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }

    def complete(self, prompt: str) -> str:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self.session.post(self.url, json=self._payload(prompt), headers=headers, timeout=self.timeout)
            except requests.RequestException as exc:
                last = f"request failed: {exc}"
                log.warning("%s (attempt %d)", last, attempt + 1)
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last = f"HTTP {resp.status_code}"
                log.warning("%s from %s (attempt %d)", last, self.url, attempt + 1)
                continue
            if resp.status_code != 200:
                raise BackendError(f"HTTP {resp.status_code} from {self.url}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise BackendError(f"malformed completion response: {exc!r}") from None
        raise BackendError(f"giving up after {self.retries + 1} attempts: {last}")

    def _map(self, prompts: list[str]) -> list[str]:
        if self.threads == 1 or len(prompts) <= 1:
            return [self.complete(p) for p in prompts]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(self.complete, prompts))

    def random_samples(self, count: int) -> list[str]:
        return self._map([self.random_prompt.format(index=i) for i in range(count)])

    def variations(self, items: Sequence[str], L: int, t: int) -> list[str]:
        prompts = [self.variation_prompt.format(text=text) for text in items for _ in range(L)]
        return self._map(prompts)
