"""Dataset files, secret detection and the binary embedding format.

Embedding files: the 8 magic bytes ``SECPEMB1``, little-endian uint32 row
count and dimension, then row-major little-endian float32 values.
"""
from __future__ import annotations

import json
import math
import re
import struct
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import EmbeddingSet

MAGIC = b"SECPEMB1"
_HEADER = struct.Struct("<8sII")
_TOKEN = re.compile(r"[^\W_]+")


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    id: str
    text: str
    label: str | None = None
    secrets: tuple[str, ...] = ()

    def to_json(self) -> dict:
        out = {"id": self.id, "text": self.text}
        if self.label is not None:
            out["label"] = self.label
        out["secrets"] = list(self.secrets)
        return out


@dataclass
class CatalogEntry:
    keywords: list[str]
    p: float | None = None
    r: float | None = None


@dataclass
class SecretCatalog:
    entries: dict[str, CatalogEntry] = field(default_factory=dict)

    def __post_init__(self):
        for sid, entry in self.entries.items():
            if not entry.keywords:
                raise DataFormatError(f"secret {sid!r} has an empty keyword list")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return list(self.entries)

    def to_json(self) -> dict:
        out = {}
        for sid, e in self.entries.items():
            item: dict = {"keywords": list(e.keywords)}
            if e.p is not None:
                item["p"] = e.p
            if e.r is not None:
                item["r"] = e.r
            out[sid] = item
        return out


def tokenize(text: str) -> list[str]:
    """Case-folded alphanumeric runs."""
    return _TOKEN.findall(text.casefold())


def load_jsonl(path) -> list[Record]:
    records: list[Record] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or not isinstance(obj.get("text"), str):
                raise DataFormatError(f"{path}:{lineno}: missing required string field 'text'")
            rid = str(obj.get("id", lineno - 1))
            if rid in seen:
                raise DataFormatError(f"{path}:{lineno}: duplicate id {rid!r}")
            seen.add(rid)
            label = obj.get("label")
            secrets = obj.get("secrets") or []
            if not isinstance(secrets, list):
                raise DataFormatError(f"{path}:{lineno}: 'secrets' must be a list")
            records.append(Record(rid, obj["text"], None if label is None else str(label),
                                  tuple(str(s) for s in secrets)))
    return records


def write_jsonl(records: Iterable[Record], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True) + "\n")


def load_catalog(path) -> SecretCatalog:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise DataFormatError("catalog must be a JSON object keyed by secret id")
    entries = {}
    for sid, item in raw.items():
        if not isinstance(item, dict) or not isinstance(item.get("keywords"), list):
            raise DataFormatError(f"catalog entry {sid!r} needs a 'keywords' list")
        unknown = set(item) - {"keywords", "p", "r"}
        if unknown:
            raise DataFormatError(f"catalog entry {sid!r} has unknown keys {sorted(unknown)}")
        entries[str(sid)] = CatalogEntry([str(k) for k in item["keywords"]], item.get("p"), item.get("r"))
    return SecretCatalog(entries)


def save_catalog(catalog: SecretCatalog, path) -> None:
    Path(path).write_text(json.dumps(catalog.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _contains(tokens: Sequence[str], phrase: Sequence[str]) -> bool:
    k = len(phrase)
    if k == 0 or k > len(tokens):
        return False
    if k == 1:
        return phrase[0] in tokens
    return any(list(tokens[i:i + k]) == list(phrase) for i in range(len(tokens) - k + 1))


def detect_secrets_catalog(records: Sequence[Record], catalog: SecretCatalog) -> list[Record]:
    """Attach every catalog secret whose keyword occurs as a whole-word match."""
    if not len(catalog):
        raise ValueError("catalog is empty")
    phrases = {sid: [tokenize(k) for k in e.keywords] for sid, e in catalog.entries.items()}
    out = []
    for rec in records:
        tokens = tokenize(rec.text)
        token_set = set(tokens)
        found = set(rec.secrets)
        for sid, plist in phrases.items():
            for ph in plist:
                hit = ph[0] in token_set if len(ph) == 1 else _contains(tokens, ph)
                if hit:
                    found.add(sid)
                    break
        out.append(replace(rec, secrets=tuple(sorted(found))))
    return out


def frequency_ranking(records: Sequence[Record]) -> list[tuple[str, int]]:
    """Vocabulary sorted by descending corpus count, ties lexicographic."""
    counts = Counter()
    for rec in records:
        counts.update(tokenize(rec.text))
    return sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))


def quantile_start(vocab_size: int, quantile: float, window: int) -> int:
    """First selected rank: floor(quantile * vocab_size), pulled back so the window fits."""
    start = math.floor(quantile * vocab_size)
    return max(0, min(start, vocab_size - window))


def detect_secrets_frequency(records: Sequence[Record], quantile: float = 0.2, window: int = 1):
    """Pick ``window`` consecutive frequency ranks at the quantile as secret words.

    Returns ``(catalog, annotated_records)``.
    """
    if not 0.0 < quantile < 1.0:
        raise ValueError("quantile must lie in (0, 1)")
    if window < 1:
        raise ValueError("window must be >= 1")
    ranking = frequency_ranking(records)
    if len(ranking) < window:
        raise ValueError(f"vocabulary has {len(ranking)} words, fewer than window={window}")
    start = quantile_start(len(ranking), quantile, window)
    words = [w for w, _ in ranking[start:start + window]]
    catalog = SecretCatalog({w: CatalogEntry([w]) for w in words})
    return catalog, detect_secrets_catalog(records, catalog)


def write_embeddings(emb: EmbeddingSet | np.ndarray, path) -> None:
    X = emb.vectors if isinstance(emb, EmbeddingSet) else np.asarray(emb)
    if X.ndim != 2:
        raise ValueError("embeddings must be 2-d")
    if not np.all(np.isfinite(X)):
        raise ValueError("embeddings must be finite")
    n, d = X.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, d))
        fh.write(np.ascontiguousarray(X, dtype="<f4").tobytes())


def read_embeddings(path, radius: float = 1.0) -> EmbeddingSet:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise DataFormatError(f"{path}: truncated header")
    magic, n, d = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if d < 1:
        raise DataFormatError(f"{path}: dimension must be >= 1")
    expected = _HEADER.size + 4 * n * d
    if len(raw) != expected:
        raise DataFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")
    X = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(n, d)
    return EmbeddingSet(X.astype(np.float64), radius)
