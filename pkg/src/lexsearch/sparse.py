"""Inverted index with BM25 scoring over article contents."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus

# CJK runs are indexed as overlapping character bigrams; everything else as
# lowercased alphanumeric runs.
_CJK_RANGE = "㐀-䶿一-鿿豈-﫿"
_WORD_RUN = re.compile(r"[^\W_]+", re.UNICODE)
_SEGMENT = re.compile(f"[{_CJK_RANGE}]+|[^{_CJK_RANGE}]+")
_IS_CJK = re.compile(f"[{_CJK_RANGE}]")


def tokenize(text: str) -> list[str]:
    """Lowercased alphanumeric-run tokens; CJK runs become character bigrams.

    A lone CJK character (run of length 1) is kept as a unigram so it stays
    searchable.
    """
    tokens: list[str] = []
    for run in _WORD_RUN.findall(text.lower()):
        for seg in _SEGMENT.findall(run):
            if _IS_CJK.match(seg):
                if len(seg) == 1:
                    tokens.append(seg)
                else:
                    tokens.extend(seg[i : i + 2] for i in range(len(seg) - 1))
            else:
                tokens.append(seg)
    return tokens


@dataclass
class SparseIndex:
    postings: dict[str, dict[str, int]]  # token -> {article_id: term frequency}
    doc_lengths: dict[str, int]
    doc_count: int
    avg_doc_length: float
    k1: float
    b: float

    def idf(self, token: str) -> float:
        n = len(self.postings.get(token, ()))
        if n == 0:
            return 0.0
        return math.log((self.doc_count - n + 0.5) / (n + 0.5) + 1.0)


def build_sparse_index(corpus: Corpus, k1: float = 1.2, b: float = 0.75) -> SparseIndex:
    """Index every article's content. Deterministic: rebuilds are identical."""
    if k1 <= 0:
        raise ValueError(f"k1 must be > 0, got {k1}")
    if not 0.0 <= b <= 1.0:
        raise ValueError(f"b must be in [0, 1], got {b}")
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for article in corpus:
        tokens = tokenize(article.content)
        doc_lengths[article.id] = len(tokens)
        for tok in tokens:
            bucket = postings.setdefault(tok, {})
            bucket[article.id] = bucket.get(article.id, 0) + 1
    count = len(doc_lengths)
    avg = sum(doc_lengths.values()) / count if count else 0.0
    return SparseIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        doc_count=count,
        avg_doc_length=avg,
        k1=k1,
        b=b,
    )


def _length_norm(index: SparseIndex, article_id: str) -> float:
    dl = index.doc_lengths[article_id]
    if index.avg_doc_length == 0:
        return index.k1
    return index.k1 * (1.0 - index.b + index.b * dl / index.avg_doc_length)


def bm25_score(index: SparseIndex, query_tokens: list[str], article_id: str) -> float:
    """Raw BM25 score of one article; query tokens count with multiplicity."""
    if article_id not in index.doc_lengths:
        raise KeyError(f"unknown article id {article_id!r}")
    norm = _length_norm(index, article_id)
    score = 0.0
    for tok in query_tokens:
        tf = index.postings.get(tok, {}).get(article_id, 0)
        if tf == 0:
            continue
        score += index.idf(tok) * tf * (index.k1 + 1.0) / (tf + norm)
    return score


def sparse_search(
    index: SparseIndex, query_text: str, depth: int
) -> list[tuple[str, float]]:
    """Top-`depth` articles by BM25 over the tokenized query text.

    Zero-scoring articles are omitted; ties break by ascending article id.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    query_tokens = tokenize(query_text)
    scores: dict[str, float] = {}
    # Accumulate token by token so each article's additions happen in query
    # order: per-article sums are then bit-identical to bm25_score.
    for tok in query_tokens:
        bucket = index.postings.get(tok)
        if not bucket:
            continue
        idf = index.idf(tok)
        for article_id, tf in bucket.items():
            contribution = idf * tf * (index.k1 + 1.0) / (tf + _length_norm(index, article_id))
            scores[article_id] = scores.get(article_id, 0.0) + contribution
    ranked = sorted(
        ((aid, s) for aid, s in scores.items() if s > 0.0),
        key=lambda pair: (-pair[1], pair[0]),
    )
    return ranked[:depth]


def save_sparse_index(index: SparseIndex, path: str | Path) -> None:
    payload = {
        "postings": index.postings,
        "doc_lengths": index.doc_lengths,
        "doc_count": index.doc_count,
        "avg_doc_length": index.avg_doc_length,
        "k1": index.k1,
        "b": index.b,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, sort_keys=True)


def load_sparse_index(path: str | Path) -> SparseIndex:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return SparseIndex(
        postings=payload["postings"],
        doc_lengths=payload["doc_lengths"],
        doc_count=payload["doc_count"],
        avg_doc_length=payload["avg_doc_length"],
        k1=payload["k1"],
        b=payload["b"],
    )
