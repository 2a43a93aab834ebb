"""Query-set loading, deterministic splits, and Recall@K / NDCG@K reports."""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .corpus import Corpus

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LabeledQuery:
    query_id: str
    gold_ids: frozenset[str]
    text: str | None = None
    turns: tuple[str, ...] = ()
    group_id: str | None = None

    def __post_init__(self) -> None:
        if not self.gold_ids:
            raise ValueError(f"query {self.query_id!r}: gold_ids must be non-empty")
        if self.text is None and not self.turns:
            raise ValueError(f"query {self.query_id!r}: needs text or dialogue turns")

    def query_text(self, mode: str = "last_turn") -> str:
        """Flatten dialogue turns: last turn only (default) or full history."""
        if self.text is not None:
            return self.text
        if mode == "last_turn":
            return self.turns[-1]
        if mode == "concat":
            return " ".join(self.turns)
        raise ValueError(f"unknown query construction mode {mode!r}")


def load_queries(path: str | Path) -> list[LabeledQuery]:
    """Parse line-delimited {query_id, text | turns, gold_ids, group_id?}."""
    queries = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                queries.append(
                    LabeledQuery(
                        query_id=str(row["query_id"]),
                        gold_ids=frozenset(str(g) for g in row["gold_ids"]),
                        text=row.get("text"),
                        turns=tuple(row.get("turns", ())),
                        group_id=row.get("group_id"),
                    )
                )
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad query record: {exc}") from exc
    return queries


def validate_queries(
    queries: Iterable[LabeledQuery], corpus: Corpus
) -> tuple[list[LabeledQuery], list[str]]:
    """Drop gold ids missing from the corpus; exclude queries left with none."""
    kept, warnings = [], []
    for q in queries:
        resolvable = frozenset(g for g in q.gold_ids if g in corpus)
        missing = q.gold_ids - resolvable
        if missing:
            warnings.append(
                f"query {q.query_id}: gold ids not in corpus: {sorted(missing)}"
            )
        if not resolvable:
            warnings.append(f"query {q.query_id}: excluded, no resolvable gold ids")
            continue
        if missing:
            q = LabeledQuery(
                query_id=q.query_id,
                gold_ids=resolvable,
                text=q.text,
                turns=q.turns,
                group_id=q.group_id,
            )
        kept.append(q)
    for w in warnings:
        logger.warning("%s", w)
    return kept, warnings


def _partition_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    total = sum(ratios)
    exact = [n * r / total for r in ratios]
    sizes = [int(x) for x in exact]
    remainders = sorted(
        range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i)
    )
    for i in remainders[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split_dataset(
    queries: Sequence[LabeledQuery],
    ratios: Sequence[float] = (7, 1, 2),
    seed: int = 0,
    group_aware: bool = False,
) -> tuple[list[LabeledQuery], list[LabeledQuery], list[LabeledQuery]]:
    """Deterministic train/dev/test split.

    When group_aware, queries sharing a group_id always land in the same
    split (units are groups; ungrouped queries are their own unit).
    """
    if len(ratios) != 3 or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise ValueError(f"ratios must be three non-negative values, got {ratios}")
    rng = random.Random(seed)
    if group_aware:
        groups: dict[str, list[LabeledQuery]] = {}
        for q in queries:
            groups.setdefault(q.group_id or q.query_id, []).append(q)
        units = [groups[k] for k in sorted(groups)]
    else:
        units = [[q] for q in queries]
    rng.shuffle(units)
    sizes = _partition_sizes(len(units), ratios)
    train = [q for unit in units[: sizes[0]] for q in unit]
    dev = [q for unit in units[sizes[0] : sizes[0] + sizes[1]] for q in unit]
    test = [q for unit in units[sizes[0] + sizes[1] :] for q in unit]
    return train, dev, test


def recall_at_k(ranked_ids: Sequence[str], gold: set[str] | frozenset[str], k: int) -> float:
    """Fraction of gold ids present in the top-k ranked ids."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not gold:
        raise ValueError("gold set must be non-empty")
    return len(set(ranked_ids[:k]) & set(gold)) / len(gold)


def ndcg_at_k(ranked_ids: Sequence[str], gold: set[str] | frozenset[str], k: int) -> float:
    """Binary-relevance NDCG with the ideal gain truncated at min(k, |gold|)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not gold:
        raise ValueError("gold set must be non-empty")
    dcg = sum(
        1.0 / math.log2(i + 1)
        for i, aid in enumerate(ranked_ids[:k], 1)
        if aid in gold
    )
    idcg = sum(1.0 / math.log2(i + 1) for i in range(1, min(k, len(gold)) + 1))
    return dcg / idcg


@dataclass(frozen=True)
class QueryResult:
    query_id: str
    ranked_ids: tuple[str, ...]
    recall: dict[int, float]
    ndcg: dict[int, float]
    flagged: bool = False  # no retrievable results


@dataclass(frozen=True)
class EvalReport:
    ks: tuple[int, ...]
    rows: tuple[QueryResult, ...]
    macro_recall: dict[int, float] = field(default_factory=dict)  # percentages
    macro_ndcg: dict[int, float] = field(default_factory=dict)

    def render_table(self) -> str:
        header = ["metric"] + [f"@{k}" for k in self.ks]
        recall_row = ["Recall"] + [f"{self.macro_recall[k]:.2f}" for k in self.ks]
        ndcg_row = ["NDCG"] + [f"{self.macro_ndcg[k]:.2f}" for k in self.ks]
        widths = [max(len(r[i]) for r in (header, recall_row, ndcg_row)) for i in range(len(header))]
        lines = []
        for row in (header, recall_row, ndcg_row):
            lines.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
        lines.append(f"queries: {len(self.rows)}")
        return "\n".join(lines)

    def write(self, table_path: str | Path, rows_path: str | Path) -> None:
        Path(table_path).write_text(self.render_table() + "\n", encoding="utf-8")
        with open(rows_path, "w", encoding="utf-8") as f:
            for row in self.rows:
                f.write(
                    json.dumps(
                        {
                            "query_id": row.query_id,
                            "ranked_ids": list(row.ranked_ids),
                            "recall": {str(k): v for k, v in row.recall.items()},
                            "ndcg": {str(k): v for k, v in row.ndcg.items()},
                            "flagged": row.flagged,
                        },
                        ensure_ascii=False,
                        sort_keys=True,
                    )
                    + "\n"
                )


def evaluate(
    run_query: Callable[[LabeledQuery], Sequence[str]],
    queries: Sequence[LabeledQuery],
    ks: Sequence[int] = (1, 3, 5),
) -> EvalReport:
    """Macro-averaged Recall@K / NDCG@K over the query set, as percentages.

    Queries yielding no results are scored 0 and flagged. Rows are ordered by
    query id so reports are stable regardless of execution order.
    """
    ks = tuple(sorted(ks))
    rows = []
    for q in sorted(queries, key=lambda q: q.query_id):
        ranked = list(run_query(q))
        if not ranked:
            logger.warning("query %s returned no results", q.query_id)
            rows.append(
                QueryResult(
                    query_id=q.query_id,
                    ranked_ids=(),
                    recall={k: 0.0 for k in ks},
                    ndcg={k: 0.0 for k in ks},
                    flagged=True,
                )
            )
            continue
        rows.append(
            QueryResult(
                query_id=q.query_id,
                ranked_ids=tuple(ranked),
                recall={k: recall_at_k(ranked, q.gold_ids, k) for k in ks},
                ndcg={k: ndcg_at_k(ranked, q.gold_ids, k) for k in ks},
            )
        )
    n = len(rows)
    macro_recall = {
        k: round(100.0 * sum(r.recall[k] for r in rows) / n, 2) if n else 0.0 for k in ks
    }
    macro_ndcg = {
        k: round(100.0 * sum(r.ndcg[k] for r in rows) / n, 2) if n else 0.0 for k in ks
    }
    return EvalReport(
        ks=ks, rows=tuple(rows), macro_recall=macro_recall, macro_ndcg=macro_ndcg
    )
