"""Dense retrieval: normalized embedding index with exact cosine search."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Corpus
from .providers import ProviderError


class DenseIndexError(Exception):
    """Raised when embeddings cannot be built or are dimensionally invalid."""


class DenseIndex:
    """Article ids paired with unit-norm embedding rows; exhaustive search."""

    def __init__(self, ids: list[str], vectors: np.ndarray):
        if vectors.ndim != 2 or len(ids) != vectors.shape[0]:
            raise DenseIndexError("ids and vector rows must align")
        self.ids = list(ids)
        self.vectors = vectors.astype(np.float64, copy=False)
        self.dim = int(vectors.shape[1])
        self.row_of = {aid: i for i, aid in enumerate(self.ids)}

    def __len__(self) -> int:
        return len(self.ids)


def _normalize_rows(ids: list[str], vectors: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(vectors, axis=1)
    zero = np.nonzero(norms == 0.0)[0]
    if zero.size:
        raise DenseIndexError(f"zero embedding vector for article {ids[zero[0]]!r}")
    return vectors / norms[:, None]


def build_dense_index(
    corpus: Corpus, provider, batch_size: int = 32
) -> DenseIndex:
    """Embed every article's content and store unit-normalized vectors."""
    ids = [a.id for a in corpus]
    contents = [a.content for a in corpus]
    rows: list[list[float]] = []
    dim: int | None = None
    for start in range(0, len(contents), batch_size):
        batch_ids = ids[start : start + batch_size]
        try:
            vectors = provider.embed(contents[start : start + batch_size])
        except ProviderError as exc:
            raise DenseIndexError(
                f"embedding failed for articles {batch_ids[0]}..{batch_ids[-1]}: {exc}"
            ) from exc
        for aid, vec in zip(batch_ids, vectors):
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise DenseIndexError(
                    f"article {aid!r}: embedding dimension {len(vec)} != {dim}"
                )
            rows.append(vec)
    if not rows:
        return DenseIndex([], np.zeros((0, 0)))
    matrix = np.asarray(rows, dtype=np.float64)
    return DenseIndex(ids, _normalize_rows(ids, matrix))


def dense_search(
    index: DenseIndex, query_vec, depth: int
) -> list[tuple[str, float]]:
    """Top-`depth` articles by cosine similarity, ties by ascending id."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if len(index) == 0:
        return []
    q = np.asarray(query_vec, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DenseIndexError(
            f"query vector has shape {q.shape}, index dimension is {index.dim}"
        )
    norm = np.linalg.norm(q)
    if norm == 0.0:
        raise DenseIndexError("query vector must be non-zero")
    scores = index.vectors @ (q / norm)
    ranked = sorted(zip(index.ids, scores.tolist()), key=lambda p: (-p[1], p[0]))
    return ranked[:depth]


def embed_query(provider, text: str) -> np.ndarray:
    """Convenience: one query embedding as a numpy vector."""
    return np.asarray(provider.embed([text])[0], dtype=np.float64)


def save_dense_index(index: DenseIndex, path: str | Path) -> None:
    # fixed-width unicode ids keep the archive pickle-free and byte-stable
    np.savez(path, ids=np.asarray(index.ids, dtype=str), vectors=index.vectors)


def load_dense_index(path: str | Path) -> DenseIndex:
    data = np.load(path)
    return DenseIndex([str(x) for x in data["ids"]], data["vectors"])
