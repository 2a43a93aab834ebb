"""Intent classification, prior scores, and the combined reranking order."""

import pytest

from lexsearch.expand import PromptTemplates
from lexsearch.fusion import merge_candidates, normalize_score
from lexsearch.providers import CannedChatProvider, TokenOverlapReranker, _PassthroughChat
from lexsearch.rerank import (
    IntentLabel,
    RankedResult,
    RerankWeights,
    classify_intent,
    intent_consistency,
    precompute_article_intents,
    prior_score,
    rerank,
)

from testutil import make_corpus


TEMPLATES = PromptTemplates(
    analysis="an: {query}",
    keyword_extract="kw: {analysis}",
    query_intent="qi: {text}",
    article_intent="ai: {text}",
)


def chat_with(responses, default=None):
    return _PassthroughChat(CannedChatProvider(responses, default=default))


class TestClassifyIntent:
    def test_exact_label_parse(self):
        llm = chat_with({"qi: what is a penalty": "Definition"})
        assert classify_intent("what is a penalty", "query", llm, TEMPLATES) is IntentLabel.DEFINITION

    def test_whitespace_trimmed(self):
        llm = chat_with({"ai: some article": "  Procedure \n"})
        assert classify_intent("some article", "article", llm, TEMPLATES) is IntentLabel.PROCEDURE

    def test_unparseable_falls_back_to_others(self):
        llm = chat_with({"qi: q": "banana"})
        assert classify_intent("q", "query", llm, TEMPLATES) is IntentLabel.OTHERS

    def test_provider_failure_falls_back_to_others(self):
        llm = chat_with({})
        assert classify_intent("q", "query", llm, TEMPLATES) is IntentLabel.OTHERS

    def test_invalid_kind(self):
        with pytest.raises(ValueError, match="kind"):
            classify_intent("q", "paragraph", chat_with({}), TEMPLATES)

    def test_precompute_covers_corpus(self, ascii_rules):
        corpus = make_corpus(
            [("a", "L", 1, "defines a term"), ("b", "L", 2, "imposes a fine")],
            ascii_rules,
        )
        llm = chat_with(
            {"ai: defines a term": "Definition", "ai: imposes a fine": "Consequence"}
        )
        labels = precompute_article_intents(corpus, llm, TEMPLATES, parallelism=2)
        assert labels == {"a": IntentLabel.DEFINITION, "b": IntentLabel.CONSEQUENCE}


class TestIntentConsistency:
    def test_equal_labels(self):
        assert intent_consistency(IntentLabel.DEFINITION, IntentLabel.DEFINITION) == 1

    def test_different_labels(self):
        assert intent_consistency(IntentLabel.DEFINITION, IntentLabel.PROCEDURE) == 0

    def test_others_matches_others(self):
        assert intent_consistency(IntentLabel.OTHERS, IntentLabel.OTHERS) == 1


class TestPriorScore:
    def test_rank_one_is_full_score(self):
        assert prior_score(1, 20) == pytest.approx(1.0)

    def test_last_rank(self):
        assert prior_score(20, 20) == pytest.approx(0.05)

    def test_middle_rank(self):
        assert prior_score(10, 20) == pytest.approx(0.55)

    def test_strictly_decreasing(self):
        values = [prior_score(r, 20) for r in range(1, 21)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            prior_score(0, 20)
        with pytest.raises(ValueError):
            prior_score(21, 20)


class TestRerankWeights:
    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            RerankWeights(reranker=-0.1)

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            RerankWeights(reranker=0, prior=0, intent=0)


def build_pool_corpus(ascii_rules, contents):
    rows = [(aid, "LawA", i + 1, text) for i, (aid, text) in enumerate(contents)]
    corpus = make_corpus(rows, ascii_rules)
    sparse = [(aid, float(len(contents) - i)) for i, (aid, _) in enumerate(contents)]
    pool = merge_candidates(sparse, [], 1.0, len(contents))
    return corpus, pool


class TestRerank:
    def test_three_candidate_hand_evaluation(self, ascii_rules):
        corpus, pool = build_pool_corpus(
            ascii_rules, [("a", "ca"), ("b", "cb"), ("c", "cc")]
        )
        # intents: query Definition; a mismatch, b match, c mismatch
        llm = chat_with(
            {
                "qi: q": "Definition",
                "ai: ca": "Procedure",
                "ai: cb": "Definition",
                "ai: cc": "Others",
            }
        )

        class FixedCross:
            model_id = "fixed"

            def score(self, query, docs):
                raw = {"ca": 3.0, "cb": 1.0, "cc": 2.0}
                return [raw[d] for d in docs]

        weights = RerankWeights(reranker=0.6, prior=0.2, intent=0.2)
        results = rerank("q", pool, corpus, FixedCross(), llm, TEMPLATES, weights, top_k=3)

        # hand evaluation of the combined score for each candidate
        expected = {}
        for aid, raw, rank, s_i in (("a", 3.0, 1, 0), ("b", 1.0, 2, 1), ("c", 2.0, 3, 0)):
            s_r = normalize_score(raw)
            s_p = (3 - rank + 1) / 3
            expected[aid] = 0.6 * s_r + 0.2 * s_p + 0.2 * s_i
        want_order = sorted(expected, key=lambda a: -expected[a])
        assert [r.article_id for r in results] == want_order
        for r in results:
            assert r.score == pytest.approx(expected[r.article_id], abs=1e-12)

    def test_zero_intent_weight_reduces_to_no_intent_order(self, ascii_rules):
        corpus, pool = build_pool_corpus(
            ascii_rules, [("a", "ca"), ("b", "cb"), ("c", "cc")]
        )
        llm = chat_with({}, default="Definition")
        cross = TokenOverlapReranker()
        with_intent_zero = rerank(
            "cb", pool, corpus, cross, llm, TEMPLATES,
            RerankWeights(reranker=0.7, prior=0.3, intent=0.0), top_k=3,
        )
        # independent combination without the intent term
        no_intent_scores = {
            r.article_id: 0.7 * r.reranker_score + 0.3 * r.prior for r in with_intent_zero
        }
        want = sorted(
            with_intent_zero,
            key=lambda r: (-no_intent_scores[r.article_id], r.initial_rank),
        )
        assert [r.article_id for r in with_intent_zero] == [r.article_id for r in want]

    def test_intent_match_breaks_tie_upward(self, ascii_rules):
        # identical cross-encoder scores and adjacent priors; only s_i differs
        corpus, pool = build_pool_corpus(ascii_rules, [("a", "same"), ("b", "same2")])
        llm = chat_with(
            {"qi: q": "Consequence", "ai: same": "Others", "ai: same2": "Consequence"}
        )

        class FlatCross:
            model_id = "flat"

            def score(self, query, docs):
                return [1.0 for _ in docs]

        weights = RerankWeights(reranker=0.6, prior=0.0, intent=0.4)
        results = rerank("q", pool, corpus, FlatCross(), llm, TEMPLATES, weights, top_k=2)
        assert results[0].article_id == "b"
        assert results[0].intent_match == 1

    def test_cross_encoder_failure_zeroes_reranker_term(self, ascii_rules):
        corpus, pool = build_pool_corpus(ascii_rules, [("a", "ca"), ("b", "cb")])
        llm = chat_with({}, default="Others")

        class Broken:
            model_id = "broken"

            def score(self, query, docs):
                from lexsearch.providers import ProviderError

                raise ProviderError("down")

        results = rerank(
            "q", pool, corpus, Broken(), llm, TEMPLATES, RerankWeights(), top_k=2
        )
        assert all(r.reranker_score == 0.0 for r in results)
        # prior still applies: order falls back to the initial ranking
        assert [r.article_id for r in results] == ["a", "b"]

    def test_output_is_subset_permutation_of_pool(self, ascii_rules):
        contents = [(f"d{i}", f"text {i}") for i in range(8)]
        corpus, pool = build_pool_corpus(ascii_rules, contents)
        llm = chat_with({}, default="Others")
        results = rerank(
            "text 3", pool, corpus, TokenOverlapReranker(), llm, TEMPLATES,
            RerankWeights(), top_k=5,
        )
        ids = [r.article_id for r in results]
        assert len(ids) == 5
        assert len(set(ids)) == 5
        assert set(ids) <= {c.article_id for c in pool.candidates}

    def test_component_scores_bounded(self, ascii_rules):
        contents = [(f"d{i}", f"text {i}") for i in range(5)]
        corpus, pool = build_pool_corpus(ascii_rules, contents)
        llm = chat_with({}, default="Definition")
        weights = RerankWeights(reranker=0.5, prior=0.3, intent=0.2)
        results = rerank(
            "text 1", pool, corpus, TokenOverlapReranker(), llm, TEMPLATES, weights, top_k=5
        )
        for r in results:
            assert 0.0 <= r.reranker_score <= 1.0
            assert 0.0 <= r.prior <= 1.0
            assert r.intent_match in (0, 1)
            assert 0.0 <= r.score <= 0.5 + 0.3 + 0.2

    def test_top_k_bounds(self, ascii_rules):
        corpus, pool = build_pool_corpus(ascii_rules, [("a", "x")])
        llm = chat_with({}, default="Others")
        with pytest.raises(ValueError, match="top_k"):
            rerank("q", pool, corpus, TokenOverlapReranker(), llm, TEMPLATES,
                   RerankWeights(), top_k=2)

    def test_precomputed_article_intents_used(self, ascii_rules):
        corpus, pool = build_pool_corpus(ascii_rules, [("a", "ca"), ("b", "cb")])
        llm = chat_with({"qi: q": "Definition"})  # article prompts would fail
        results = rerank(
            "q", pool, corpus, TokenOverlapReranker(), llm, TEMPLATES,
            RerankWeights(), top_k=2,
            article_intents={"a": IntentLabel.DEFINITION, "b": IntentLabel.OTHERS},
        )
        by_id = {r.article_id: r for r in results}
        assert by_id["a"].intent_match == 1
        assert by_id["b"].intent_match == 0
