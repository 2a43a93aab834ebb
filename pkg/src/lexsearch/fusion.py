"""Arctan score normalization and weighted sparse/dense fusion."""

from __future__ import annotations

import math
from dataclasses import dataclass


def normalize_score(raw: float) -> float:
    """Map a raw path score onto (0, 1): 1/2 + arctan(raw)/pi.

    Strictly increasing, so it preserves each path's ranking order.
    """
    if not math.isfinite(raw):
        raise ValueError(f"raw score must be finite, got {raw!r}")
    return 0.5 + math.atan(raw) / math.pi


def fuse(norm_sparse: float, norm_dense: float, alpha: float) -> float:
    """Weighted combination: alpha on the sparse path, (1 - alpha) on dense."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return alpha * norm_sparse + (1.0 - alpha) * norm_dense


@dataclass(frozen=True)
class ScoredCandidate:
    article_id: str
    raw_sparse: float | None
    raw_dense: float | None
    norm_sparse: float
    norm_dense: float
    fused: float
    initial_rank: int


@dataclass(frozen=True)
class CandidatePool:
    """Fused candidates ordered by score, sized for the reranking stage."""

    candidates: tuple[ScoredCandidate, ...]
    query_id: str | None = None

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self):
        return iter(self.candidates)


def merge_candidates(
    sparse_results: list[tuple[str, float]],
    dense_results: list[tuple[str, float]],
    alpha: float,
    pool_size: int,
    query_id: str | None = None,
) -> CandidatePool:
    """Union both result lists, fuse normalized scores, keep the top pool_size.

    A candidate absent from one path gets normalized score 0 on that path
    (the value the normalization approaches as raw score falls to -inf).
    Ties break by ascending article id; initial_rank is 1-based.
    """
    if pool_size < 1:
        raise ValueError(f"pool_size must be >= 1, got {pool_size}")
    sparse_by_id = dict(sparse_results)
    dense_by_id = dict(dense_results)
    merged = []
    for article_id in set(sparse_by_id) | set(dense_by_id):
        raw_sp = sparse_by_id.get(article_id)
        raw_de = dense_by_id.get(article_id)
        norm_sp = normalize_score(raw_sp) if raw_sp is not None else 0.0
        norm_de = normalize_score(raw_de) if raw_de is not None else 0.0
        merged.append((article_id, raw_sp, raw_de, norm_sp, norm_de, fuse(norm_sp, norm_de, alpha)))
    merged.sort(key=lambda row: (-row[5], row[0]))
    candidates = tuple(
        ScoredCandidate(
            article_id=aid,
            raw_sparse=raw_sp,
            raw_dense=raw_de,
            norm_sparse=norm_sp,
            norm_dense=norm_de,
            fused=fused,
            initial_rank=rank,
        )
        for rank, (aid, raw_sp, raw_de, norm_sp, norm_de, fused) in enumerate(
            merged[:pool_size], 1
        )
    )
    return CandidatePool(candidates=candidates, query_id=query_id)
