"""Structure-aware hard-negative mining over hierarchy buckets and citations.

For each (query, positive) pair, candidates retrieved by dense search are
partitioned into hierarchy-level buckets; negatives are drawn from the
positive's own level and its adjacent levels within the ordered 0-4 range,
then unioned with the positive's citation neighbors.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path

from .citations import CitationGraph, citation_neighbors
from .corpus import Corpus, is_ordered_level
from .dense import DenseIndex, dense_search, embed_query

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MiningConfig:
    retrieval_depth: int = 100
    negative_budget: int = 8
    random_seed: int = 0
    sampling: str = "rank"  # "rank" (default) or "random" within each bucket

    def __post_init__(self) -> None:
        if not self.retrieval_depth >= self.negative_budget >= 1:
            raise ValueError(
                "mining config requires retrieval_depth >= negative_budget >= 1, "
                f"got depth={self.retrieval_depth} budget={self.negative_budget}"
            )
        if self.sampling not in ("rank", "random"):
            raise ValueError(f"sampling must be 'rank' or 'random', got {self.sampling!r}")


@dataclass(frozen=True)
class TrainingTriplet:
    query: str
    positive_id: str
    negative_ids: tuple[str, ...]


def target_levels(positive_level: int) -> set[int]:
    """The positive's level plus valid adjacent levels.

    Adjacency only exists inside the ordered 0-4 range; judicial
    interpretations (5) and other normative documents (6) have no neighbors.
    """
    targets = {positive_level}
    if is_ordered_level(positive_level):
        for adjacent in (positive_level - 1, positive_level + 1):
            if is_ordered_level(adjacent):
                targets.add(adjacent)
    return targets


RankedCandidate = tuple[int, str]  # (dense rank, article id)


def sample_by_hierarchy(
    buckets: dict[int, list[RankedCandidate]],
    positive_level: int,
    targets: set[int],
    budget: int,
    *,
    sampling: str = "rank",
    seed: int = 0,
) -> list[str]:
    """Budgeted draw across the targeted hierarchy buckets.

    Up to ceil(budget/2) comes from the positive's own level; the rest is
    split evenly over the other target levels (odd remainder to the lower
    level index). Shortfalls are refilled from the remaining target-level
    candidates in global dense-rank order. Default order within buckets is
    dense rank; "random" sampling shuffles each bucket with the given seed.
    """
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    pools: dict[int, list[RankedCandidate]] = {
        lvl: list(buckets.get(lvl, ())) for lvl in sorted(targets)
    }
    if sampling == "random":
        rng = random.Random(seed)
        for lvl in sorted(pools):
            rng.shuffle(pools[lvl])

    picked: list[str] = []
    picked_set: set[str] = set()

    def take(level: int, quota: int) -> None:
        for _, aid in pools.get(level, ()):
            if quota == 0:
                break
            if aid in picked_set:
                continue
            picked.append(aid)
            picked_set.add(aid)
            quota -= 1

    take(positive_level, math.ceil(budget / 2))
    others = sorted(lvl for lvl in targets if lvl != positive_level)
    remaining = budget - len(picked)
    if others and remaining > 0:
        base, extra = divmod(remaining, len(others))
        for i, lvl in enumerate(others):
            take(lvl, base + (1 if i < extra else 0))
    if len(picked) < budget:
        leftovers = sorted(
            (
                cand
                for lvl in targets
                for cand in pools.get(lvl, ())
                if cand[1] not in picked_set
            ),
        )
        take_from = [aid for _, aid in leftovers][: budget - len(picked)]
        picked.extend(take_from)
        picked_set.update(take_from)
    return picked


def mine_negatives(
    query: str,
    positive_id: str,
    gold_ids: set[str],
    corpus: Corpus,
    graph: CitationGraph,
    index: DenseIndex,
    provider,
    config: MiningConfig,
) -> TrainingTriplet:
    """One training triplet: hierarchy-sampled negatives plus citation neighbors.

    Negatives never intersect the query's full gold set, and citation
    neighbors are unioned after budgeting (they do not count against it).
    """
    if positive_id not in corpus:
        raise ValueError(f"positive article {positive_id!r} not in corpus")
    if positive_id not in gold_ids:
        raise ValueError(f"positive article {positive_id!r} must be in the gold set")

    positive_level = int(corpus.level(positive_id))
    ranked = dense_search(index, embed_query(provider, query), config.retrieval_depth)
    candidates = [aid for aid, _ in ranked if aid not in gold_ids]
    buckets: dict[int, list[RankedCandidate]] = {}
    for rank, aid in enumerate(candidates):
        buckets.setdefault(int(corpus.level(aid)), []).append((rank, aid))

    targets = target_levels(positive_level)
    negatives = sample_by_hierarchy(
        buckets,
        positive_level,
        targets,
        config.negative_budget,
        sampling=config.sampling,
        seed=config.random_seed,
    )
    cited = citation_neighbors(graph, positive_id) - gold_ids
    negatives.extend(sorted(cited - set(negatives)))

    if not negatives:
        logger.warning(
            "no negatives for query %r (positive %s): all candidates were gold "
            "and the positive has no citation neighbors",
            query[:60], positive_id,
        )
    return TrainingTriplet(
        query=query, positive_id=positive_id, negative_ids=tuple(negatives)
    )


@dataclass(frozen=True)
class TripletRecord:
    """On-disk triplet form: article contents, ready for contrastive trainers."""

    query: str
    pos: tuple[str, ...]
    neg: tuple[str, ...]


def export_triplets(
    triplets: list[TrainingTriplet], corpus: Corpus, path: str | Path
) -> None:
    """Write line-delimited {query, pos: [content], neg: [contents...]} records."""
    with open(path, "w", encoding="utf-8") as f:
        for t in triplets:
            record = {
                "query": t.query,
                "pos": [corpus.by_id[t.positive_id].content],
                "neg": [corpus.by_id[aid].content for aid in t.negative_ids],
            }
            f.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")


def load_triplets(path: str | Path) -> list[TripletRecord]:
    records = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            records.append(
                TripletRecord(
                    query=row["query"], pos=tuple(row["pos"]), neg=tuple(row["neg"])
                )
            )
    return records
