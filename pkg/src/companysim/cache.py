"""On-disk embedding cache.

Binary layout (all integers little-endian):

    magic   4 bytes  b"CEMB"
    version u32      currently 1
    u16              length of provider_id in bytes
    bytes            provider_id, UTF-8
    u32              context_budget
    u32              dimension
    u32              row count
    f32[count*dim]   rows, C order

Company ids live in a text sidecar at ``<path>.ids``, one id per line in row
order. Rows are float32, so a save/load round-trip reproduces the in-memory
matrix bit for bit.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .embeddings import EmbeddingMatrix
from .errors import CacheFormatError

logger = logging.getLogger(__name__)

MAGIC = b"CEMB"
VERSION = 1
_HEADER_TAIL = struct.Struct("<III")  # context_budget, dimension, count


def _ids_path(path: Path) -> Path:
    return path.with_name(path.name + ".ids")


def save_cache(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Write the matrix and its id sidecar atomically enough for reruns
    (full rewrite, no partial headers)."""
    path = Path(path)
    rows = np.ascontiguousarray(matrix.matrix, dtype="<f4")
    provider_bytes = matrix.provider_id.encode("utf-8")
    if len(provider_bytes) > 0xFFFF:
        raise ValueError("provider_id too long to encode")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<H", len(provider_bytes)))
        f.write(provider_bytes)
        f.write(_HEADER_TAIL.pack(matrix.context_budget, matrix.dimension, len(matrix)))
        f.write(rows.tobytes())
    with open(_ids_path(path), "w", encoding="utf-8") as f:
        for company_id in matrix.ids:
            f.write(company_id + "\n")
    logger.info("saved %d embeddings to %s", len(matrix), path)


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CacheFormatError(f"truncated cache file while reading {what}")
    return data


def load_cache(path: str | Path) -> EmbeddingMatrix:
    path = Path(path)
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise CacheFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise CacheFormatError(f"unsupported cache version {version}")
        (provider_len,) = struct.unpack("<H", _read_exact(f, 2, "provider id length"))
        provider_id = _read_exact(f, provider_len, "provider id").decode("utf-8")
        budget, dimension, count = _HEADER_TAIL.unpack(
            _read_exact(f, _HEADER_TAIL.size, "header")
        )
        if dimension < 1:
            raise CacheFormatError(f"invalid dimension {dimension}")
        payload = _read_exact(f, 4 * dimension * count, "embedding rows")
        trailing = f.read(1)
        if trailing:
            raise CacheFormatError("trailing bytes after embedding rows")
    rows = np.frombuffer(payload, dtype="<f4").reshape(count, dimension)

    ids_file = _ids_path(path)
    if not ids_file.exists():
        raise CacheFormatError(f"missing id sidecar {ids_file}")
    with open(ids_file, "r", encoding="utf-8") as f:
        ids = [line.rstrip("\n") for line in f if line.rstrip("\n")]
    if len(ids) != count:
        raise CacheFormatError(
            f"id sidecar has {len(ids)} ids but cache declares {count} rows"
        )
    return EmbeddingMatrix(
        ids=ids,
        matrix=rows.copy(),
        provider_id=provider_id,
        context_budget=budget,
    )


def append_cache(matrix: EmbeddingMatrix, path: str | Path) -> EmbeddingMatrix:
    """Merge new rows into an existing cache file (or create it).

    Provider, budget, and dimension must match; duplicate ids must carry
    identical rows, otherwise the append is rejected.
    """
    path = Path(path)
    if not path.exists():
        save_cache(matrix, path)
        return matrix
    existing = load_cache(path)
    if existing.provider_id != matrix.provider_id:
        raise CacheFormatError(
            f"cache provider {existing.provider_id!r} != {matrix.provider_id!r}"
        )
    if existing.context_budget != matrix.context_budget:
        raise CacheFormatError(
            f"cache context budget {existing.context_budget} != {matrix.context_budget}"
        )
    if existing.dimension != matrix.dimension:
        raise CacheFormatError(
            f"cache dimension {existing.dimension} != {matrix.dimension}"
        )
    ids = list(existing.ids)
    rows = [existing.matrix]
    for company_id in matrix.ids:
        if company_id in existing:
            if not np.array_equal(existing.row(company_id), matrix.row(company_id)):
                raise CacheFormatError(
                    f"id {company_id!r} already cached with different values"
                )
            continue
        ids.append(company_id)
        rows.append(matrix.row(company_id)[None, :])
    merged = EmbeddingMatrix(
        ids=ids,
        matrix=np.vstack(rows),
        provider_id=existing.provider_id,
        context_budget=existing.context_budget,
    )
    save_cache(merged, path)
    return merged


def sync_cache(
    path: str | Path,
    wanted_ids: Sequence[str],
    embed_missing: Callable[[list[str]], EmbeddingMatrix],
) -> EmbeddingMatrix:
    """Resumable embedding: load what exists, embed only the missing ids,
    append, and return the matrix restricted to ``wanted_ids`` in order."""
    path = Path(path)
    cached: EmbeddingMatrix | None = load_cache(path) if path.exists() else None
    missing = [
        company_id
        for company_id in wanted_ids
        if cached is None or company_id not in cached
    ]
    if missing:
        logger.info("cache %s: embedding %d missing of %d wanted",
                    path, len(missing), len(wanted_ids))
        fresh = embed_missing(missing)
        cached = append_cache(fresh, path)
    assert cached is not None
    return cached.subset(wanted_ids)


def export_jsonl(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Human-inspectable export: one JSON object per row."""
    with open(path, "w", encoding="utf-8") as f:
        for company_id in matrix.ids:
            record = {
                "company_id": company_id,
                "provider_id": matrix.provider_id,
                "context_budget": matrix.context_budget,
                "vector": [float(x) for x in matrix.row(company_id)],
            }
            f.write(json.dumps(record, sort_keys=True) + "\n")
