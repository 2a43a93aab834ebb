"""Intent-aware reranking: cross-encoder score + retrieval prior + intent match."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

from .corpus import Corpus
from .expand import PromptTemplates
from .fusion import CandidatePool, normalize_score
from .providers import ProviderError

logger = logging.getLogger(__name__)


class IntentLabel(str, Enum):
    """Functional role of a legal query or article."""

    DEFINITION = "Definition"
    APPLICABILITY = "Applicability"
    CONSEQUENCE = "Consequence"
    PROCEDURE = "Procedure"
    OTHERS = "Others"


_LABELS_BY_NAME = {label.value: label for label in IntentLabel}


def parse_intent_label(raw: str) -> IntentLabel | None:
    """Exact label-name match after trimming; None when unparseable."""
    return _LABELS_BY_NAME.get(raw.strip())


def classify_intent(
    text: str,
    kind: str,
    llm,
    templates: PromptTemplates,
) -> IntentLabel:
    """Few-shot LLM classification into one of the five intent labels.

    `kind` selects the query or article template. Provider failures and
    unparseable outputs degrade to Others with a warning, never an error.
    Responses are cached at the provider layer keyed by the template hash.
    """
    if kind not in ("query", "article"):
        raise ValueError(f"kind must be 'query' or 'article', got {kind!r}")
    template_name = "query_intent" if kind == "query" else "article_intent"
    template = getattr(templates, template_name)
    try:
        raw = llm.complete(
            template.format(text=text),
            scope=f"{kind}:{templates.hash_of(template_name)}",
        )
    except ProviderError as exc:
        logger.warning("intent classification failed for %s: %s", kind, exc)
        return IntentLabel.OTHERS
    label = parse_intent_label(raw)
    if label is None:
        logger.warning(
            "unparseable intent label %r for %s text %r", raw.strip()[:40], kind, text[:40]
        )
        return IntentLabel.OTHERS
    return label


def precompute_article_intents(
    corpus: Corpus,
    llm,
    templates: PromptTemplates,
    parallelism: int = 4,
) -> dict[str, IntentLabel]:
    """Classify every article once; safe to run offline ahead of queries."""
    articles = list(corpus)
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        labels = list(
            pool.map(
                lambda a: classify_intent(a.content, "article", llm, templates), articles
            )
        )
    return {a.id: label for a, label in zip(articles, labels)}


def intent_consistency(query_label: IntentLabel, article_label: IntentLabel) -> int:
    """1 when the labels agree, else 0."""
    return 1 if query_label == article_label else 0


def prior_score(initial_rank: int, pool_size: int) -> float:
    """Linear decay over the initial fused ranking: rank 1 -> 1.0, rank W -> 1/W."""
    if not 1 <= initial_rank <= pool_size:
        raise ValueError(
            f"initial_rank must be in [1, {pool_size}], got {initial_rank}"
        )
    return (pool_size - initial_rank + 1) / pool_size


@dataclass(frozen=True)
class RerankWeights:
    reranker: float = 0.6  # lambda_1, on the cross-encoder score
    prior: float = 0.2  # lambda_2, on the initial-ranking prior
    intent: float = 0.2  # lambda_3, on intent consistency

    def __post_init__(self) -> None:
        if min(self.reranker, self.prior, self.intent) < 0:
            raise ValueError("rerank weights must be non-negative")
        if self.reranker + self.prior + self.intent <= 0:
            raise ValueError("at least one rerank weight must be positive")


@dataclass(frozen=True)
class RankedResult:
    article_id: str
    score: float
    reranker_score: float  # s_r, arctan-normalized cross-encoder output
    prior: float  # s_p
    intent_match: int  # s_i
    query_intent: IntentLabel
    article_intent: IntentLabel
    initial_rank: int
    fused: float


def rerank(
    query: str,
    pool: CandidatePool,
    corpus: Corpus,
    cross_encoder,
    llm,
    templates: PromptTemplates,
    weights: RerankWeights,
    top_k: int,
    article_intents: dict[str, IntentLabel] | None = None,
    classify_parallelism: int = 4,
) -> list[RankedResult]:
    """Score the pool with the combined reranking score and keep the top K.

    score = w_reranker * s_r + w_prior * s_p + w_intent * s_i, sorted
    descending with ties broken by the initial fused rank. A cross-encoder
    failure zeroes s_r for the affected candidates; the other terms still
    apply.
    """
    if len(pool) < 1:
        raise ValueError("cannot rerank an empty candidate pool")
    if not 1 <= top_k <= len(pool):
        raise ValueError(f"top_k must be in [1, {len(pool)}], got {top_k}")

    contents = [corpus.by_id[c.article_id].content for c in pool]
    try:
        raw_scores = cross_encoder.score(query, contents)
        reranker_scores = [normalize_score(s) for s in raw_scores]
    except ProviderError as exc:
        logger.warning("cross-encoder failed, zeroing reranker scores: %s", exc)
        reranker_scores = [0.0] * len(pool)

    query_label = classify_intent(query, "query", llm, templates)
    if article_intents is None:
        candidates = list(pool)
        with ThreadPoolExecutor(max_workers=max(1, classify_parallelism)) as ex:
            labels = list(
                ex.map(
                    lambda c: classify_intent(
                        corpus.by_id[c.article_id].content, "article", llm, templates
                    ),
                    candidates,
                )
            )
        article_intents = {c.article_id: lab for c, lab in zip(candidates, labels)}

    pool_size = len(pool)
    results = []
    for candidate, s_r in zip(pool, reranker_scores):
        article_label = article_intents.get(candidate.article_id, IntentLabel.OTHERS)
        s_p = prior_score(candidate.initial_rank, pool_size)
        s_i = intent_consistency(query_label, article_label)
        score = weights.reranker * s_r + weights.prior * s_p + weights.intent * s_i
        results.append(
            RankedResult(
                article_id=candidate.article_id,
                score=score,
                reranker_score=s_r,
                prior=s_p,
                intent_match=s_i,
                query_intent=query_label,
                article_intent=article_label,
                initial_rank=candidate.initial_rank,
                fused=candidate.fused,
            )
        )
    results.sort(key=lambda r: (-r.score, r.initial_rank))
    return results[:top_k]
