"""Document embeddings via chunk-average pooling, and the aligned
id -> row matrix used by every downstream task."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus
from .errors import DataValidationError, ProviderError
from .providers import EmbeddingProvider
from .textprep import ChunkingConfig, prepare_chunks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DocumentEmbedding:
    """One pooled vector for one document."""

    company_id: str
    vector: np.ndarray
    n_chunks: int

    def __post_init__(self) -> None:
        if self.n_chunks < 1:
            raise ValueError(f"n_chunks must be >= 1, got {self.n_chunks}")


def pool_chunk_embeddings(
    chunk_vectors: np.ndarray,
    weights: Sequence[float] | None = None,
) -> np.ndarray:
    """Mean over chunk rows, accumulated in float64.

    With ``weights`` (e.g. chunk token counts) the mean is weighted, so a
    short final chunk no longer counts as much as a full one.
    """
    if chunk_vectors.ndim != 2 or chunk_vectors.shape[0] == 0:
        raise ValueError("need a non-empty (n_chunks, dimension) array")
    rows = chunk_vectors.astype(np.float64, copy=False)
    if weights is None:
        return np.mean(rows, axis=0)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (rows.shape[0],) or np.any(w <= 0):
        raise ValueError("weights must be positive, one per chunk")
    return (w[:, None] * rows).sum(axis=0) / w.sum()


def embed_document(
    raw_text: str,
    provider: EmbeddingProvider,
    config: ChunkingConfig,
    company_id: str = "",
    length_weighted: bool = False,
) -> DocumentEmbedding:
    """Clean, chunk, embed each chunk, and mean-pool.

    The empty-after-cleaning case is a data error, not a zero vector: every
    row in an embedding matrix must come from actual text.
    """
    chunks = prepare_chunks(raw_text, config, source_id=company_id)
    if not chunks:
        raise DataValidationError(
            f"document {company_id!r} has no tokens after cleaning"
        )
    try:
        chunk_vectors = provider.embed_chunks(chunks)
    except ProviderError:
        raise
    except Exception as e:
        raise ProviderError(
            f"provider {provider.provider_id!r} failed on document {company_id!r}: {e}"
        ) from e
    weights = [len(c.tokens) for c in chunks] if length_weighted else None
    return DocumentEmbedding(
        company_id=company_id,
        vector=pool_chunk_embeddings(chunk_vectors, weights),
        n_chunks=len(chunks),
    )


@dataclass
class EmbeddingMatrix:
    """Company ids aligned with float32 embedding rows.

    Stored as float32 so that the binary cache round-trip is bit-exact;
    similarity math upcasts to float64 where it matters.
    """

    ids: list[str]
    matrix: np.ndarray
    provider_id: str
    context_budget: int
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if self.matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-d, got shape {self.matrix.shape}")
        if len(self.ids) != self.matrix.shape[0]:
            raise ValueError(
                f"{len(self.ids)} ids but {self.matrix.shape[0]} matrix rows"
            )
        self._index = {}
        for i, company_id in enumerate(self.ids):
            if company_id in self._index:
                raise ValueError(f"duplicate company id {company_id!r}")
            self._index[company_id] = i

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def dimension(self) -> int:
        return int(self.matrix.shape[1])

    def __contains__(self, company_id: str) -> bool:
        return company_id in self._index

    def index(self, company_id: str) -> int:
        if company_id not in self._index:
            raise KeyError(f"unknown company id {company_id!r}")
        return self._index[company_id]

    def row(self, company_id: str) -> np.ndarray:
        return self.matrix[self.index(company_id)]

    def subset(self, ids: Iterable[str]) -> "EmbeddingMatrix":
        """New matrix restricted to ``ids``, preserving the given order."""
        wanted = list(ids)
        rows = [self.index(company_id) for company_id in wanted]
        return EmbeddingMatrix(
            ids=wanted,
            matrix=self.matrix[rows].copy(),
            provider_id=self.provider_id,
            context_budget=self.context_budget,
        )


def embed_corpus(
    corpus: Corpus,
    provider: EmbeddingProvider,
    config: ChunkingConfig,
    ids: Sequence[str] | None = None,
    length_weighted: bool = False,
) -> EmbeddingMatrix:
    """Embed every company description; rows follow the corpus id order."""
    wanted = list(ids) if ids is not None else corpus.ids()
    vectors = np.zeros((len(wanted), provider.dimension), dtype=np.float64)
    total_chunks = 0
    for i, company_id in enumerate(wanted):
        record = corpus.get(company_id)
        doc = embed_document(record.description, provider, config, company_id,
                             length_weighted=length_weighted)
        if doc.vector.shape[0] != provider.dimension:
            raise ProviderError(
                f"provider {provider.provider_id!r} returned dimension "
                f"{doc.vector.shape[0]}, declared {provider.dimension}"
            )
        vectors[i] = doc.vector
        total_chunks += doc.n_chunks
    logger.info(
        "embedded %d documents (%d chunks) with provider=%s budget=%d",
        len(wanted), total_chunks, provider.provider_id, config.context_budget,
    )
    return EmbeddingMatrix(
        ids=wanted,
        matrix=vectors.astype(np.float32),
        provider_id=provider.provider_id,
        context_budget=config.context_budget,
    )
