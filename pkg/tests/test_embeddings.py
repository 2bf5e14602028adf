import numpy as np
import pytest

from companysim.embeddings import (
    EmbeddingMatrix,
    embed_corpus,
    embed_document,
    pool_chunk_embeddings,
)
from companysim.errors import DataValidationError
from companysim.providers import HashBowProvider
from companysim.textprep import ChunkingConfig


def test_pooling_is_arithmetic_mean():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(7, 5))
    pooled = pool_chunk_embeddings(rows)
    assert np.allclose(pooled, rows.mean(axis=0), atol=1e-15)


def test_pooling_single_chunk_identity():
    row = np.arange(4.0)[None, :]
    assert np.array_equal(pool_chunk_embeddings(row), np.arange(4.0))


def test_pooling_weighted_mean():
    rows = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    pooled = pool_chunk_embeddings(rows, weights=[2.0, 1.0, 1.0])
    assert np.allclose(pooled, [0.75, 0.5], atol=1e-15)
    # equal weights reduce to the plain mean
    assert np.allclose(
        pool_chunk_embeddings(rows, weights=[3.0, 3.0, 3.0]),
        rows.mean(axis=0), atol=1e-15,
    )


@pytest.mark.parametrize("weights", [[1.0, 2.0], [1.0, 0.0, 2.0], [1.0, -1.0, 2.0]])
def test_pooling_rejects_bad_weights(weights):
    rows = np.ones((3, 4))
    with pytest.raises(ValueError):
        pool_chunk_embeddings(rows, weights=weights)


def test_embed_document_matches_manual_pooling():
    provider = HashBowProvider(32, seed=5)
    cfg = ChunkingConfig(window=3, context_budget=12)
    text = "alpha beta gamma delta epsilon zeta eta theta iota"
    doc = embed_document(text, provider, cfg, company_id="X")
    assert doc.n_chunks == 3
    from companysim.textprep import prepare_chunks

    chunks = prepare_chunks(text, cfg, "X")
    manual = np.mean([provider.embed_chunk(c) for c in chunks], axis=0)
    assert np.allclose(doc.vector, manual, atol=1e-15)


def test_embed_document_length_weighted_downweights_short_tail():
    provider = HashBowProvider(32, seed=5)
    cfg = ChunkingConfig(window=4, context_budget=16)
    # 6 tokens -> chunks of 4 and 2; the short tail gets weight 2, not 1/2
    text = "alpha beta gamma delta epsilon zeta"
    plain = embed_document(text, provider, cfg, "X")
    weighted = embed_document(text, provider, cfg, "X", length_weighted=True)
    from companysim.textprep import prepare_chunks

    chunks = prepare_chunks(text, cfg, "X")
    vecs = np.array([provider.embed_chunk(c) for c in chunks])
    manual = (4.0 * vecs[0] + 2.0 * vecs[1]) / 6.0
    assert np.allclose(weighted.vector, manual, atol=1e-15)
    assert not np.allclose(weighted.vector, plain.vector)


def test_embed_document_rejects_empty_text():
    provider = HashBowProvider(8, seed=0)
    with pytest.raises(DataValidationError):
        embed_document("☃☃", provider, ChunkingConfig(), "E")


def test_embed_corpus_aligned_with_ids(small_corpus):
    provider = HashBowProvider(64, seed=1)
    cfg = ChunkingConfig(window=64, context_budget=128)
    matrix = embed_corpus(small_corpus, provider, cfg)
    assert matrix.ids == small_corpus.ids()
    assert matrix.matrix.shape == (len(small_corpus), 64)
    assert matrix.matrix.dtype == np.float32
    one = embed_document(
        small_corpus.get(matrix.ids[5]).description, provider, cfg, matrix.ids[5]
    )
    assert np.allclose(matrix.row(matrix.ids[5]), one.vector, atol=1e-6)


def test_matrix_subset_and_lookup():
    mat = EmbeddingMatrix(
        ids=["a", "b", "c"],
        matrix=np.arange(12, dtype=np.float32).reshape(3, 4),
        provider_id="p",
        context_budget=512,
    )
    assert mat.index("b") == 1
    assert "c" in mat and "z" not in mat
    sub = mat.subset(["c", "a"])
    assert sub.ids == ["c", "a"]
    assert np.array_equal(sub.matrix[0], mat.row("c"))
    with pytest.raises(KeyError):
        mat.row("z")


def test_matrix_rejects_misaligned_or_duplicate_ids():
    with pytest.raises(ValueError):
        EmbeddingMatrix(["a"], np.zeros((2, 3), dtype=np.float32), "p", 512)
    with pytest.raises(ValueError):
        EmbeddingMatrix(["a", "a"], np.zeros((2, 3), dtype=np.float32), "p", 512)
