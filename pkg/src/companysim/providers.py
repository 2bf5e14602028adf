"""Chunk embedding providers: hashed bag-of-words, TF-IDF (with optional
random projection), and a generic remote HTTP endpoint.

The offline providers are deterministic given their seeds so the whole
evaluation pipeline can run reproducibly without model servers. The remote
protocol is a single JSON POST:

    POST {endpoint}/embed
    request  {"provider_id": str, "texts": [str, ...]}
    response {"dimension": int, "embeddings": [[float, ...], ...]}

Any non-200 status is a failure. An auth token can be injected from an
environment variable; it is sent as a Bearer header and never logged.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
import requests

from .errors import (
    ProviderError,
    RemoteProtocolError,
    RemoteStatusError,
    RemoteTransportError,
)
from .textprep import TokenSequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    """Declared provider configuration; dimension may be None for providers
    that resolve it at fit time (plain TF-IDF)."""

    provider_id: str
    dimension: int | None = None
    params: dict = field(default_factory=dict)


class EmbeddingProvider:
    """Base chunk embedder. Instances are immutable after construction and
    safe for concurrent read-only use."""

    provider_id: str
    dimension: int

    def embed_chunk(self, chunk: TokenSequence) -> np.ndarray:
        raise NotImplementedError

    def embed_chunks(self, chunks: Sequence[TokenSequence]) -> np.ndarray:
        """Embed chunks one by one; failures are re-raised with the chunk index."""
        rows = []
        for i, chunk in enumerate(chunks):
            try:
                rows.append(np.asarray(self.embed_chunk(chunk), dtype=np.float64))
            except ProviderError:
                raise
            except Exception as e:
                raise ProviderError(
                    f"provider {self.provider_id!r} failed on chunk {i}: {e}"
                ) from e
        return np.vstack(rows) if rows else np.zeros((0, self.dimension))


def _sign_hash(token: str, seed: int) -> tuple[int, float]:
    """Deterministic (index-source, sign) for a token; stable across processes."""
    key = (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=9, key=key).digest()
    return int.from_bytes(digest[:8], "little"), (1.0 if digest[8] & 1 else -1.0)


def hash_bow_embed(chunk: TokenSequence, dimension: int, seed: int) -> np.ndarray:
    """Signed feature-hashing bag of words, L2-normalized unless all-zero."""
    if dimension < 2:
        raise ValueError(f"dimension must be >= 2, got {dimension}")
    vec = np.zeros(dimension, dtype=np.float64)
    for token in chunk:
        bucket, sign = _sign_hash(token, seed)
        vec[bucket % dimension] += sign
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    return vec


class HashBowProvider(EmbeddingProvider):
    def __init__(self, dimension: int, seed: int = 0, provider_id: str = "hash-bow"):
        if dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {dimension}")
        self.provider_id = provider_id
        self.dimension = dimension
        self.seed = seed

    def embed_chunk(self, chunk: TokenSequence) -> np.ndarray:
        return hash_bow_embed(chunk, self.dimension, self.seed)


@dataclass
class TfidfModel:
    """Fitted vocabulary and inverse document frequencies."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    n_docs: int


def tfidf_fit(corpus_tokens: Sequence[TokenSequence], max_features: int) -> TfidfModel:
    """Fit on document frequencies: the vocabulary keeps the ``max_features``
    most frequent tokens (ties broken lexicographically) with
    idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    """
    if len(corpus_tokens) == 0:
        raise ValueError("tfidf_fit needs a non-empty corpus")
    if len(corpus_tokens) < 2:
        raise ValueError("tfidf_fit needs at least 2 documents")
    if max_features < 1:
        raise ValueError(f"max_features must be >= 1, got {max_features}")
    df: dict[str, int] = {}
    for doc in corpus_tokens:
        for token in set(doc.tokens):
            df[token] = df.get(token, 0) + 1
    selected = sorted(df, key=lambda t: (-df[t], t))[:max_features]
    vocabulary = {token: i for i, token in enumerate(sorted(selected))}
    n = len(corpus_tokens)
    idf = np.array(
        [math.log((1 + n) / (1 + df[token])) + 1.0 for token in vocabulary],
        dtype=np.float64,
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, n_docs=n)


@lru_cache(maxsize=8)
def _gaussian_projection(n_features: int, dimension: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n_features, dimension)) / math.sqrt(dimension)


def tfidf_embed(
    model: TfidfModel,
    chunk: TokenSequence,
    projection: tuple[int, int] | None = None,
) -> np.ndarray:
    """tf*idf over the fitted vocabulary, L2-normalized; out-of-vocabulary
    tokens are ignored. With ``projection`` = (dimension, seed), the vector is
    passed through a seeded Gaussian random projection and re-normalized.
    """
    tf = np.zeros(len(model.vocabulary), dtype=np.float64)
    for token in chunk:
        idx = model.vocabulary.get(token)
        if idx is not None:
            tf[idx] += 1.0
    vec = tf * model.idf
    norm = float(np.linalg.norm(vec))
    if norm > 0.0:
        vec /= norm
    if projection is not None:
        dim, seed = projection
        vec = vec @ _gaussian_projection(len(model.vocabulary), dim, seed)
        norm = float(np.linalg.norm(vec))
        if norm > 0.0:
            vec /= norm
    return vec


class TfidfProvider(EmbeddingProvider):
    def __init__(
        self,
        model: TfidfModel,
        projection: tuple[int, int] | None = None,
        provider_id: str | None = None,
    ):
        self.model = model
        self.projection = projection
        self.provider_id = provider_id or ("tfidf-rp" if projection else "tfidf")
        self.dimension = projection[0] if projection else len(model.vocabulary)

    @classmethod
    def fit(
        cls,
        corpus_tokens: Sequence[TokenSequence],
        max_features: int = 4096,
        projection_dim: int | None = None,
        seed: int = 0,
        provider_id: str | None = None,
    ) -> "TfidfProvider":
        model = tfidf_fit(corpus_tokens, max_features)
        projection = (projection_dim, seed) if projection_dim else None
        return cls(model, projection, provider_id)

    def embed_chunk(self, chunk: TokenSequence) -> np.ndarray:
        return tfidf_embed(self.model, chunk, self.projection)


def remote_embed(
    endpoint: str,
    provider_id: str,
    texts: Sequence[str],
    timeout: float = 10.0,
    retries: int = 2,
    backoff: float = 0.25,
    auth_env: str | None = None,
    session: requests.Session | None = None,
) -> list[np.ndarray]:
    """POST texts to {endpoint}/embed and return one vector per text, in order.

    Transport failures and non-200 statuses are retried up to ``retries``
    times with exponential backoff; protocol violations (malformed body,
    count mismatch, dimension mismatch) are raised immediately as
    RemoteProtocolError with a machine-readable ``reason``.
    """
    if not texts:
        raise ValueError("remote_embed needs at least one text")
    url = endpoint.rstrip("/") + "/embed"
    headers = {"Content-Type": "application/json"}
    if auth_env:
        token = os.environ.get(auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    post = session.post if session is not None else requests.post
    payload = {"provider_id": provider_id, "texts": list(texts)}

    last_error: Exception | None = None
    for attempt in range(retries + 1):
        if attempt > 0:
            delay = backoff * (2 ** (attempt - 1))
            logger.warning(
                "remote_embed retry %d/%d after %s (sleeping %.2fs)",
                attempt, retries, last_error, delay,
            )
            time.sleep(delay)
        try:
            response = post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as e:
            last_error = RemoteTransportError(f"POST {url} failed: {e}")
            continue
        if response.status_code != 200:
            last_error = RemoteStatusError(
                f"POST {url} returned status {response.status_code}",
                status=response.status_code,
            )
            continue
        return _parse_embed_response(response, len(texts), url)
    assert last_error is not None
    raise last_error


def _parse_embed_response(response, n_texts: int, url: str) -> list[np.ndarray]:
    try:
        body = response.json()
    except ValueError:
        raise RemoteProtocolError(f"{url}: response is not JSON", reason="malformed_body") from None
    if not isinstance(body, dict) or "embeddings" not in body or "dimension" not in body:
        raise RemoteProtocolError(
            f"{url}: response must carry 'dimension' and 'embeddings'",
            reason="malformed_body",
        )
    embeddings = body["embeddings"]
    dimension = body["dimension"]
    if not isinstance(embeddings, list) or not isinstance(dimension, int) or dimension < 1:
        raise RemoteProtocolError(f"{url}: malformed embeddings payload", reason="malformed_body")
    if len(embeddings) != n_texts:
        raise RemoteProtocolError(
            f"{url}: count mismatch, sent {n_texts} texts but received "
            f"{len(embeddings)} embeddings",
            reason="count_mismatch",
        )
    vectors: list[np.ndarray] = []
    for i, row in enumerate(embeddings):
        if not isinstance(row, list) or len(row) != dimension:
            raise RemoteProtocolError(
                f"{url}: embedding {i} has length {len(row) if isinstance(row, list) else '?'}"
                f", declared dimension is {dimension}",
                reason="dimension_mismatch",
            )
        vec = np.asarray(row, dtype=np.float64)
        if not np.all(np.isfinite(vec)):
            raise RemoteProtocolError(
                f"{url}: embedding {i} contains non-finite entries",
                reason="malformed_body",
            )
        vectors.append(vec)
    return vectors


class RemoteProvider(EmbeddingProvider):
    """Embeds chunks through the generic remote protocol, one POST per document."""

    def __init__(
        self,
        endpoint: str,
        provider_id: str,
        dimension: int,
        timeout: float = 10.0,
        retries: int = 2,
        backoff: float = 0.25,
        auth_env: str | None = None,
        session: requests.Session | None = None,
    ):
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.endpoint = endpoint
        self.provider_id = provider_id
        self.dimension = dimension
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.auth_env = auth_env
        self.session = session

    def embed_chunk(self, chunk: TokenSequence) -> np.ndarray:
        return self.embed_chunks([chunk])[0]

    def embed_chunks(self, chunks: Sequence[TokenSequence]) -> np.ndarray:
        vectors = remote_embed(
            self.endpoint,
            self.provider_id,
            [c.text() for c in chunks],
            timeout=self.timeout,
            retries=self.retries,
            backoff=self.backoff,
            auth_env=self.auth_env,
            session=self.session,
        )
        out = np.vstack(vectors)
        if out.shape[1] != self.dimension:
            raise RemoteProtocolError(
                f"endpoint returned dimension {out.shape[1]}, "
                f"provider declared {self.dimension}",
                reason="dimension_mismatch",
            )
        return out
