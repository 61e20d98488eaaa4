"""Text embedding: deterministic feature-hash embedder plus a remote HTTP client.

Every embedder output is unit-normalized here, so downstream cosine similarity
reduces to a dot product regardless of provider.
"""

from __future__ import annotations

from dataclasses import dataclass

import httpx
import numpy as np

from .corpus import tokenize

DEFAULT_DIM = 256

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


class EmbedError(ValueError):
    """Raised for invalid embedding inputs."""


class TransportError(RuntimeError):
    """Remote embedder transport failure."""

    def __init__(self, message: str, retry_safe: bool = True):
        super().__init__(message)
        self.retry_safe = retry_safe


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash, the fixed hash behind the feature-hash embedder."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm; the zero vector is returned unchanged."""
    v = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(v)):
        raise EmbedError("non-finite values in vector")
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return v.copy()
    return v / norm


def hash_embed(tokens: list[str], dim: int = DEFAULT_DIM) -> np.ndarray:
    """Signed feature hashing over lowercased unigrams and adjacent bigrams.

    index = hash % dim, sign from the next base-dim digit of the hash.
    Deterministic across processes and platforms.
    """
    if dim < 2:
        raise EmbedError("dim must be >= 2")
    out = np.zeros(dim, dtype=np.float64)
    lowered = [t.lower() for t in tokens]
    features = [f"uni:{t}" for t in lowered]
    features += [f"bi:{a}\x1f{b}" for a, b in zip(lowered, lowered[1:])]
    for feat in features:
        h = fnv1a64(feat.encode("utf-8"))
        idx = h % dim
        sign = 1.0 if ((h // dim) & 1) == 0 else -1.0
        out[idx] += sign
    return normalize(out)


@dataclass(frozen=True)
class EmbedderDescriptor:
    kind: str = "hash"  # "hash" or "remote"
    dim: int = DEFAULT_DIM
    model_name: str | None = None

    def __post_init__(self):
        if self.kind not in ("hash", "remote"):
            raise EmbedError(f"unknown embedder kind {self.kind!r}")
        if self.dim < 2:
            raise EmbedError("dim must be >= 2")


class HashEmbedder:
    """Deterministic offline embedder; the test double for the remote encoder."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            raise EmbedError("empty text")
        return hash_embed(tokens, self.dim)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    """HTTP embedding client: POST {"texts": [...]} -> {"vectors": [[...], ...]}.

    The auth token is read from configuration and never logged. Raw provider
    vectors are normalized locally so the norm contract holds regardless of
    provider behavior.
    """

    def __init__(self, endpoint: str, dim: int, token: str | None = None,
                 timeout: float = 30.0, max_in_flight: int = 4):
        self.endpoint = endpoint
        self.dim = dim
        self._token = token
        self._timeout = timeout
        import threading

        self._slots = threading.Semaphore(max_in_flight)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        for t in texts:
            if not tokenize(t):
                raise EmbedError("empty text")
        headers = {}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        with self._slots:
            try:
                resp = httpx.post(
                    self.endpoint, json={"texts": texts}, headers=headers,
                    timeout=self._timeout,
                )
                resp.raise_for_status()
            except httpx.HTTPError as exc:
                raise TransportError(f"embedding endpoint unreachable: {exc}") from exc
        vectors = resp.json()["vectors"]
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dim,):
                raise EmbedError(f"provider returned dim {arr.shape}, expected {self.dim}")
            out.append(normalize(arr))
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]


def make_embedder(desc: EmbedderDescriptor, endpoint: str | None = None,
                  token: str | None = None):
    if desc.kind == "hash":
        return HashEmbedder(desc.dim)
    if not endpoint:
        raise EmbedError("remote embedder requires an endpoint")
    return RemoteEmbedder(endpoint, desc.dim, token=token)


def embed_text(text: str, embedder) -> np.ndarray:
    """Embed one text through any embedder object exposing .embed()."""
    return embedder.embed(text)
