"""Sentence embedders used for reranking, pruning and demo selection."""

from __future__ import annotations

import hashlib
import math
from enum import Enum
from functools import lru_cache
from typing import Protocol, Sequence

import httpx
import numpy as np

from .errors import BackendUnavailable, LengthMismatch
from .types import tokenize


class EmbedderKind(str, Enum):
    HASHED_BAG_OF_WORDS = "HashedBagOfWords"
    REMOTE_SERVICE = "RemoteService"


class Embedder(Protocol):
    kind: EmbedderKind
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


def _token_hash(token: str) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "big")


class HashedBagOfWords:
    """Signed feature hashing over normalized tokens, L2-normalized.

    Word order is ignored, so permuted texts embed identically.
    """

    kind = EmbedderKind.HASHED_BAG_OF_WORDS

    def __init__(self, dimension: int = 256):
        if dimension <= 0:
            raise ValueError("dimension must be positive")
        self.dimension = dimension
        self._cached = lru_cache(maxsize=4096)(self._embed)

    def _embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            h = _token_hash(token)
            sign = -1.0 if (h >> 63) & 1 else 1.0
            vec[h % self.dimension] += sign
        norm = float(np.linalg.norm(vec))
        if norm > 0:
            vec /= norm
        vec.flags.writeable = False
        return vec

    def embed(self, text: str) -> np.ndarray:
        return self._cached(text)

    def __repr__(self) -> str:
        return f"HashedBagOfWords(dimension={self.dimension})"


class RemoteServiceEmbedder:
    """Embeds through an HTTP service: POST {"texts": [...]} -> {"vectors": [[...]]}."""

    kind = EmbedderKind.REMOTE_SERVICE

    def __init__(self, url: str, dimension: int, timeout: float = 30.0):
        self.url = url
        self.dimension = dimension
        self.timeout = timeout

    def embed_many(self, texts: Sequence[str]) -> list[np.ndarray]:
        try:
            resp = httpx.post(self.url, json={"texts": list(texts)}, timeout=self.timeout)
            resp.raise_for_status()
            vectors = resp.json()["vectors"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise BackendUnavailable(f"embedding service at {self.url}: {exc}") from exc
        out = [np.asarray(v, dtype=np.float64) for v in vectors]
        if len(out) != len(texts) or any(v.shape != (self.dimension,) for v in out):
            raise BackendUnavailable("embedding service returned vectors of the wrong shape")
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]


def cosine(u: Sequence[float] | np.ndarray, v: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise LengthMismatch(f"vectors of length {u.shape} and {v.shape}")
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    c = float(np.dot(u, v)) / (nu * nv)
    return max(-1.0, min(1.0, c))
