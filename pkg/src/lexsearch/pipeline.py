"""The retrieval engine behind both the CLI and the HTTP service.

Index-time work (corpus, citation graph, sparse and dense indexes) persists
to an artifact directory with a content-hash manifest; query-time work
(expansion, fused retrieval, reranking) runs over the loaded artifacts.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from . import citations, corpus as corpus_mod, dense, evaluation, fusion, mining, rerank, sparse
from .config import PipelineConfig
from .expand import ExpandedQuery, PromptTemplates, irac_expand
from .providers import make_chat_provider, make_embedding_provider, make_rerank_provider

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ARTIFACT_FILES = {
    "corpus": "corpus.jsonl",
    "citation_graph": "citation_graph.jsonl",
    "sparse_index": "sparse_index.json",
    "dense_index": "dense_index.npz",
}


class ArtifactError(Exception):
    """Missing or stale index artifacts."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _packaged(name: str) -> Path:
    return Path(str(resources.files("lexsearch.data").joinpath(name)))


@dataclass
class SearchHit:
    rank: int
    article_id: str
    law_title: str
    article_number: int
    score: float
    breakdown: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "article_id": self.article_id,
            "law_title": self.law_title,
            "article_number": self.article_number,
            "score": self.score,
            "breakdown": self.breakdown,
        }


class Pipeline:
    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        rules_path = config.hierarchy_rules_path or _packaged("hierarchy_rules_zh.json")
        patterns_path = config.citation_patterns_path or _packaged("citation_patterns_zh.json")
        self.rules = corpus_mod.HierarchyRuleSet.load(rules_path)
        self.patterns = citations.CitationPatternSet.load(patterns_path)
        self.templates = PromptTemplates.load(
            analysis_path=config.prompts.analysis,
            keyword_path=config.prompts.keyword_extract,
            query_intent_path=config.prompts.query_intent,
            article_intent_path=config.prompts.article_intent,
        )
        self.chat = make_chat_provider(config.chat_provider)
        self.embedder = make_embedding_provider(config.embed_provider)
        self.cross_encoder = make_rerank_provider(config.rerank_provider)
        self.corpus: corpus_mod.Corpus | None = None
        self.graph: citations.CitationGraph | None = None
        self.sparse_index: sparse.SparseIndex | None = None
        self.dense_index: dense.DenseIndex | None = None

    # -- index-time ---------------------------------------------------------

    def build(self) -> None:
        """Build all indexes from the configured corpus file."""
        self.corpus = corpus_mod.load_corpus(self.config.corpus_path, self.rules)
        self.graph = citations.build_graph(self.corpus, self.patterns)
        stats = self.graph.stats
        logger.info(
            "citation graph: %d edges (%d extracted, %d resolved, %d unresolved, "
            "%d self-loops dropped)",
            len(self.graph.edges), stats.extracted, stats.resolved,
            stats.unresolved, stats.self_loops_dropped,
        )
        self.sparse_index = sparse.build_sparse_index(self.corpus)
        self.dense_index = dense.build_dense_index(self.corpus, self.embedder)

    def save_artifacts(self) -> dict:
        """Persist indexes and write a manifest of content hashes."""
        out = Path(self.config.artifact_dir)
        out.mkdir(parents=True, exist_ok=True)
        corpus_mod.save_corpus(self.corpus, out / ARTIFACT_FILES["corpus"])
        citations.save_graph(self.graph, out / ARTIFACT_FILES["citation_graph"])
        sparse.save_sparse_index(self.sparse_index, out / ARTIFACT_FILES["sparse_index"])
        dense.save_dense_index(self.dense_index, out / ARTIFACT_FILES["dense_index"])
        manifest = {
            "artifacts": {
                name: {"path": fname, "sha256": _sha256(out / fname)}
                for name, fname in sorted(ARTIFACT_FILES.items())
            }
        }
        with open(out / MANIFEST_NAME, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
            f.write("\n")
        return manifest

    def load_artifacts(self) -> None:
        """Load persisted indexes, verifying them against the manifest."""
        out = Path(self.config.artifact_dir)
        manifest_path = out / MANIFEST_NAME
        if not manifest_path.exists():
            raise ArtifactError(
                f"no index manifest at {manifest_path}; run the index command first"
            )
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
        for name, entry in manifest["artifacts"].items():
            path = out / entry["path"]
            if not path.exists():
                raise ArtifactError(f"artifact {name} missing at {path}")
            digest = _sha256(path)
            if digest != entry["sha256"]:
                raise ArtifactError(
                    f"artifact {name} is stale: hash {digest[:12]} != "
                    f"manifest {entry['sha256'][:12]}; re-run the index command"
                )
        self.corpus = corpus_mod.load_resolved_corpus(out / ARTIFACT_FILES["corpus"])
        self.graph = citations.load_graph(out / ARTIFACT_FILES["citation_graph"], self.corpus)
        self.sparse_index = sparse.load_sparse_index(out / ARTIFACT_FILES["sparse_index"])
        self.dense_index = dense.load_dense_index(out / ARTIFACT_FILES["dense_index"])

    def ensure_loaded(self) -> None:
        if self.corpus is None:
            self.load_artifacts()

    # -- query-time ---------------------------------------------------------

    def expand_query(self, query: str) -> ExpandedQuery:
        return irac_expand(
            query, self.chat, self.templates, max_keywords=self.config.max_keywords
        )

    def search(
        self,
        query: str,
        k: int | None = None,
        expand: bool = True,
        use_rerank: bool = True,
        use_sparse: bool = True,
        use_dense: bool = True,
    ) -> list[SearchHit]:
        """Run the configured pipeline subset and return ranked hits."""
        self.ensure_loaded()
        if not (use_sparse or use_dense):
            raise ValueError("at least one of the sparse/dense paths must be enabled")
        k = k or self.config.top_k

        expanded = None
        sparse_results: list[tuple[str, float]] = []
        if use_sparse:
            if expand:
                expanded = self.expand_query(query)
                sparse_text = expanded.expanded_text
            else:
                sparse_text = query
            sparse_results = sparse.sparse_search(
                self.sparse_index, sparse_text, self.config.sparse_depth
            )
        dense_results: list[tuple[str, float]] = []
        if use_dense:
            query_vec = dense.embed_query(self.embedder, query)
            dense_results = dense.dense_search(
                self.dense_index, query_vec, self.config.dense_depth
            )

        pool = fusion.merge_candidates(
            sparse_results, dense_results, self.config.alpha, self.config.pool_size
        )
        if len(pool) == 0:
            return []

        hits: list[SearchHit] = []
        if use_rerank:
            ranked = rerank.rerank(
                query,
                pool,
                self.corpus,
                self.cross_encoder,
                self.chat,
                self.templates,
                self.config.weights,
                top_k=min(k, len(pool)),
                classify_parallelism=self.config.chat_provider.parallelism,
            )
            by_id = {c.article_id: c for c in pool}
            for rank_i, result in enumerate(ranked, 1):
                candidate = by_id[result.article_id]
                article = self.corpus.by_id[result.article_id]
                hits.append(
                    SearchHit(
                        rank=rank_i,
                        article_id=result.article_id,
                        law_title=article.norm_title,
                        article_number=article.article_number,
                        score=result.score,
                        breakdown={
                            "fused": candidate.fused,
                            "norm_sparse": candidate.norm_sparse,
                            "norm_dense": candidate.norm_dense,
                            "raw_sparse": candidate.raw_sparse,
                            "raw_dense": candidate.raw_dense,
                            "initial_rank": candidate.initial_rank,
                            "reranker_score": result.reranker_score,
                            "prior": result.prior,
                            "intent_match": result.intent_match,
                            "query_intent": result.query_intent.value,
                            "article_intent": result.article_intent.value,
                        },
                    )
                )
        else:
            for candidate in list(pool)[: min(k, len(pool))]:
                article = self.corpus.by_id[candidate.article_id]
                hits.append(
                    SearchHit(
                        rank=candidate.initial_rank,
                        article_id=candidate.article_id,
                        law_title=article.norm_title,
                        article_number=article.article_number,
                        score=candidate.fused,
                        breakdown={
                            "fused": candidate.fused,
                            "norm_sparse": candidate.norm_sparse,
                            "norm_dense": candidate.norm_dense,
                            "raw_sparse": candidate.raw_sparse,
                            "raw_dense": candidate.raw_dense,
                            "initial_rank": candidate.initial_rank,
                        },
                    )
                )
        if expanded is not None and expanded.keywords:
            for hit in hits:
                hit.breakdown["expansion_keywords"] = list(expanded.keywords)
        return hits

    def run_labeled_query(
        self,
        labeled: evaluation.LabeledQuery,
        k: int,
        expand: bool = True,
        use_rerank: bool = True,
        use_sparse: bool = True,
        use_dense: bool = True,
    ) -> list[str]:
        hits = self.search(
            labeled.query_text(self.config.query_mode),
            k=k,
            expand=expand,
            use_rerank=use_rerank,
            use_sparse=use_sparse,
            use_dense=use_dense,
        )
        return [h.article_id for h in hits]

    def evaluate_queries(
        self,
        queries: list[evaluation.LabeledQuery],
        expand: bool = True,
        use_rerank: bool = True,
        use_sparse: bool = True,
        use_dense: bool = True,
    ) -> evaluation.EvalReport:
        self.ensure_loaded()
        queries, _ = evaluation.validate_queries(queries, self.corpus)
        k = max(self.config.metric_ks)
        return evaluation.evaluate(
            lambda q: self.run_labeled_query(
                q, k,
                expand=expand,
                use_rerank=use_rerank,
                use_sparse=use_sparse,
                use_dense=use_dense,
            ),
            queries,
            ks=self.config.metric_ks,
        )

    # -- mining -------------------------------------------------------------

    def mine(
        self, queries: list[evaluation.LabeledQuery]
    ) -> tuple[list[mining.TrainingTriplet], dict]:
        """One triplet per (query, gold positive) pair; failures are skipped."""
        self.ensure_loaded()
        triplets: list[mining.TrainingTriplet] = []
        summary = {"queries": 0, "triplets": 0, "skipped": 0, "empty_negative_sets": 0}
        for labeled in sorted(queries, key=lambda q: q.query_id):
            summary["queries"] += 1
            text = labeled.query_text(self.config.query_mode)
            for positive in sorted(labeled.gold_ids):
                if positive not in self.corpus:
                    logger.warning(
                        "skipping positive %s for query %s: not in corpus",
                        positive, labeled.query_id,
                    )
                    summary["skipped"] += 1
                    continue
                triplet = mining.mine_negatives(
                    text,
                    positive,
                    set(labeled.gold_ids),
                    self.corpus,
                    self.graph,
                    self.dense_index,
                    self.embedder,
                    self.config.mining,
                )
                if not triplet.negative_ids:
                    summary["empty_negative_sets"] += 1
                triplets.append(triplet)
                summary["triplets"] += 1
        return triplets, summary
