"""Tokenizer and BM25 index behavior, checked against brute-force scoring."""

import math
import random

import pytest

from lexsearch.sparse import (
    bm25_score,
    build_sparse_index,
    sparse_search,
    tokenize,
)

from testutil import make_corpus


class TestTokenize:
    def test_whitespace_split_lowercase(self):
        assert tokenize("Food Safety") == ["food", "safety"]

    def test_empty(self):
        assert tokenize("") == []

    def test_three_char_cjk_run_gives_two_bigrams(self):
        assert tokenize("行政法") == ["行政", "政法"]

    def test_single_cjk_char_kept(self):
        assert tokenize("法") == ["法"]

    def test_mixed_scripts(self):
        assert tokenize("GB2760食品添加剂") == ["gb2760", "食品", "品添", "添加", "加剂"]

    def test_punctuation_ignored(self):
        assert tokenize("a, b; c_d") == ["a", "b", "c", "d"]

    def test_deterministic(self):
        text = "Administrative Penalty 行政处罚 2024"
        assert tokenize(text) == tokenize(text)


class TestBuildIndex:
    def test_document_count(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "x y"), ("b", "LawA", 2, "y z"), ("c", "LawA", 3, "z")],
            ascii_rules,
        )
        index = build_sparse_index(corpus)
        assert index.doc_count == 3

    def test_rebuild_identical(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "x y"), ("b", "LawA", 2, "y z")], ascii_rules
        )
        i1 = build_sparse_index(corpus)
        i2 = build_sparse_index(corpus)
        assert i1.postings == i2.postings
        assert i1.avg_doc_length == i2.avg_doc_length

    def test_average_length(self, ascii_rules):
        corpus = make_corpus(
            [
                ("a", "LawA", 1, "t1 t2"),
                ("b", "LawA", 2, "t1 t2 t3 t4"),
                ("c", "LawA", 3, "t1 t2 t3 t4 t5 t6"),
            ],
            ascii_rules,
        )
        assert build_sparse_index(corpus).avg_doc_length == 4.0

    def test_posting_df_matches_containing_docs(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "x y x"), ("b", "LawA", 2, "y"), ("c", "LawA", 3, "z")],
            ascii_rules,
        )
        index = build_sparse_index(corpus)
        assert set(index.postings["y"]) == {"a", "b"}
        assert index.postings["x"] == {"a": 2}

    def test_empty_corpus(self, ascii_rules):
        index = build_sparse_index(make_corpus([], ascii_rules))
        assert index.doc_count == 0
        assert sparse_search(index, "anything", 5) == []

    def test_invalid_parameters(self, ascii_rules):
        corpus = make_corpus([("a", "LawA", 1, "x")], ascii_rules)
        with pytest.raises(ValueError, match="k1"):
            build_sparse_index(corpus, k1=0)
        with pytest.raises(ValueError, match="b"):
            build_sparse_index(corpus, b=1.5)


class TestBm25Score:
    def test_no_shared_tokens_scores_zero(self, ascii_rules):
        corpus = make_corpus([("a", "LawA", 1, "alpha beta")], ascii_rules)
        index = build_sparse_index(corpus)
        assert bm25_score(index, tokenize("gamma delta"), "a") == 0.0

    def test_single_doc_hand_evaluation(self, ascii_rules):
        # one doc of two tokens, one matching query term, k1=1.2, b=0.75:
        # idf = ln((1-1+0.5)/(1+0.5)+1) = ln(4/3); tf saturation term is
        # 1*(k1+1)/(1 + k1*(1-b+b*2/2)) = 2.2/2.2 = 1
        corpus = make_corpus([("a", "LawA", 1, "penalty notice")], ascii_rules)
        index = build_sparse_index(corpus, k1=1.2, b=0.75)
        expected = math.log(4.0 / 3.0)
        assert bm25_score(index, ["penalty"], "a") == pytest.approx(expected, abs=1e-12)

    def test_duplicated_query_token_never_decreases(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "penalty notice fine"), ("b", "LawA", 2, "other text")],
            ascii_rules,
        )
        index = build_sparse_index(corpus)
        for aid in ("a", "b"):
            single = bm25_score(index, ["penalty"], aid)
            double = bm25_score(index, ["penalty", "penalty"], aid)
            assert double >= single
            if single > 0:
                assert double > single

    def test_unknown_article_errors(self, ascii_rules):
        corpus = make_corpus([("a", "LawA", 1, "x")], ascii_rules)
        index = build_sparse_index(corpus)
        with pytest.raises(KeyError):
            bm25_score(index, ["x"], "missing")


def brute_force_bm25(contents: dict[str, str], query_text: str, k1: float, b: float):
    """Independent BM25 scorer: recomputes everything from raw contents."""
    docs = {aid: tokenize(text) for aid, text in contents.items()}
    n_docs = len(docs)
    avg = sum(len(t) for t in docs.values()) / n_docs if n_docs else 0.0
    scores = {}
    for aid, toks in docs.items():
        dl = len(toks)
        norm = k1 * (1 - b + b * dl / avg) if avg else k1
        s = 0.0
        for q in tokenize(query_text):
            tf = toks.count(q)
            if tf == 0:
                continue
            df = sum(1 for ts in docs.values() if q in ts)
            idf = math.log((n_docs - df + 0.5) / (df + 0.5) + 1.0)
            s += idf * tf * (k1 + 1.0) / (tf + norm)
        if s > 0.0:
            scores[aid] = s
    return sorted(scores.items(), key=lambda p: (-p[1], p[0]))


class TestSparseSearch:
    def test_single_matching_article(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "penalty"), ("b", "LawA", 2, "unrelated")], ascii_rules
        )
        index = build_sparse_index(corpus)
        results = sparse_search(index, "penalty", 1)
        assert [aid for aid, _ in results] == ["a"]

    def test_equal_scores_tie_break_by_id(self, ascii_rules):
        corpus = make_corpus(
            [("b", "LawA", 2, "penalty"), ("a", "LawA", 1, "penalty")], ascii_rules
        )
        index = build_sparse_index(corpus)
        results = sparse_search(index, "penalty", 10)
        assert [aid for aid, _ in results] == ["a", "b"]

    def test_zero_scores_omitted(self, ascii_rules):
        corpus = make_corpus(
            [("a", "LawA", 1, "penalty"), ("b", "LawA", 2, "unrelated")], ascii_rules
        )
        index = build_sparse_index(corpus)
        assert len(sparse_search(index, "penalty", 10)) == 1

    def test_matches_brute_force_on_toy_corpus(self, ascii_rules):
        rows = [
            ("d1", "LawA", 1, "fine penalty fine"),
            ("d2", "LawA", 2, "penalty appeal"),
            ("d3", "LawA", 3, "appeal appeal deadline"),
            ("d4", "LawA", 4, "deadline"),
            ("d5", "LawA", 5, "fine appeal penalty deadline"),
        ]
        corpus = make_corpus(rows, ascii_rules)
        index = build_sparse_index(corpus)
        contents = {aid: text for aid, _, _, text in rows}
        expected = brute_force_bm25(contents, "penalty appeal", 1.2, 0.75)
        assert sparse_search(index, "penalty appeal", 5) == expected

    def test_randomized_against_brute_force(self, ascii_rules):
        rng = random.Random(20240601)
        vocab = [f"t{i}" for i in range(8)]
        for trial in range(50):
            n_docs = rng.randint(1, 10)
            rows = []
            contents = {}
            for d in range(n_docs):
                words = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
                aid = f"d{d:02d}"
                rows.append((aid, "LawA", d + 1, " ".join(words)))
                contents[aid] = " ".join(words)
            corpus = make_corpus(rows, ascii_rules)
            index = build_sparse_index(corpus)
            query = " ".join(rng.choice(vocab) for _ in range(rng.randint(1, 5)))
            assert sparse_search(index, query, n_docs) == brute_force_bm25(
                contents, query, 1.2, 0.75
            ), f"trial {trial}: query={query!r} contents={contents}"

    def test_added_unique_keyword_never_lowers_rank(self, ascii_rules):
        # monotonicity: a keyword occurring only in `a` cannot demote `a`
        # relative to articles that lack it
        corpus = make_corpus(
            [
                ("a", "LawA", 1, "penalty special"),
                ("b", "LawA", 2, "penalty penalty"),
                ("c", "LawA", 3, "penalty fine"),
            ],
            ascii_rules,
        )
        index = build_sparse_index(corpus)

        def rank_of(results, aid):
            ids = [x for x, _ in results]
            return ids.index(aid) if aid in ids else len(ids)

        base = sparse_search(index, "penalty", 3)
        boosted = sparse_search(index, "penalty special", 3)
        for other in ("b", "c"):
            before = rank_of(base, "a") < rank_of(base, other)
            after = rank_of(boosted, "a") < rank_of(boosted, other)
            assert after or not before

    def test_full_depth_is_permutation_of_positive_scoring(self, ascii_rules):
        rows = [(f"d{i}", "LawA", i + 1, f"penalty t{i}") for i in range(6)]
        corpus = make_corpus(rows, ascii_rules)
        index = build_sparse_index(corpus)
        results = sparse_search(index, "penalty t0 t3", 6)
        assert sorted(aid for aid, _ in results) == [f"d{i}" for i in range(6)]
