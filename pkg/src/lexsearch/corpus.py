"""Legal-article corpus: ingestion, title normalization, and hierarchy labels."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator


class CorpusError(Exception):
    """Raised when a corpus file is malformed or violates uniqueness."""


class HierarchyLevel(IntEnum):
    """Authority level of the law a given article belongs to (0 = highest)."""

    CONSTITUTION = 0
    PRIMARY_STATUTE = 1
    ADMINISTRATIVE_REGULATION = 2
    LOCAL_OR_AUTONOMOUS_REGULATION = 3
    DEPARTMENTAL_OR_LOCAL_RULE = 4
    JUDICIAL_INTERPRETATION = 5
    OTHER_NORMATIVE = 6


# Levels 0-4 form the ordered authority ladder; judicial interpretations (5)
# and other normative documents (6) sit outside the order.
ORDERED_LEVELS = frozenset(
    {
        HierarchyLevel.CONSTITUTION,
        HierarchyLevel.PRIMARY_STATUTE,
        HierarchyLevel.ADMINISTRATIVE_REGULATION,
        HierarchyLevel.LOCAL_OR_AUTONOMOUS_REGULATION,
        HierarchyLevel.DEPARTMENTAL_OR_LOCAL_RULE,
    }
)


def is_ordered_level(level: int) -> bool:
    """True when `level` participates in the 0-4 authority order."""
    return level in ORDERED_LEVELS


_TITLE_BRACKETS = "《》〈〉「」『』【】"
_WS_RUN = re.compile(r"\s+")


def normalize_title(raw: str) -> str:
    """Canonical form of a law title: no wrapping brackets, single spaces.

    Idempotent: normalize_title(normalize_title(x)) == normalize_title(x).
    """
    text = raw.strip()
    text = text.strip(_TITLE_BRACKETS)
    text = text.strip()
    return _WS_RUN.sub(" ", text)


@dataclass(frozen=True)
class HierarchyRule:
    pattern: re.Pattern
    level: HierarchyLevel


@dataclass(frozen=True)
class HierarchyRuleSet:
    """Ordered title-pattern rules; first match wins, default level 6."""

    rules: tuple[HierarchyRule, ...]
    default: HierarchyLevel = HierarchyLevel.OTHER_NORMATIVE

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, int]]) -> "HierarchyRuleSet":
        rules = tuple(
            HierarchyRule(re.compile(pat), HierarchyLevel(level)) for pat, level in pairs
        )
        return cls(rules=rules)

    @classmethod
    def load(cls, path: str | Path) -> "HierarchyRuleSet":
        """Load an ordered JSON array of {pattern, level} objects."""
        with open(path, encoding="utf-8") as f:
            entries = json.load(f)
        if not isinstance(entries, list):
            raise CorpusError(f"hierarchy rule file {path}: expected a JSON array")
        return cls.from_pairs((e["pattern"], e["level"]) for e in entries)


def assign_hierarchy(title: str, rules: HierarchyRuleSet) -> HierarchyLevel:
    """Level of the first rule whose pattern matches `title`, else the default."""
    for rule in rules.rules:
        if rule.pattern.search(title):
            return rule.level
    return rules.default


@dataclass(frozen=True)
class LegalArticle:
    """One statute article: the corpus unit."""

    id: str
    law_title: str
    article_number: int
    content: str
    hierarchy_level: HierarchyLevel
    norm_title: str

    def __post_init__(self) -> None:
        if self.article_number < 1:
            raise CorpusError(f"article {self.id}: article_number must be >= 1")
        if not self.content:
            raise CorpusError(f"article {self.id}: content must be non-empty")


class Corpus:
    """Immutable article collection with the (title, number) lookup index."""

    def __init__(self, articles: Iterable[LegalArticle]):
        self.articles: list[LegalArticle] = list(articles)
        self.by_id: dict[str, LegalArticle] = {}
        self.index: dict[tuple[str, int], LegalArticle] = {}
        for art in self.articles:
            if art.id in self.by_id:
                raise CorpusError(f"duplicate article id {art.id!r}")
            key = (art.norm_title, art.article_number)
            if key in self.index:
                raise CorpusError(
                    f"duplicate (title, number) {key!r}: "
                    f"articles {self.index[key].id!r} and {art.id!r}"
                )
            self.by_id[art.id] = art
            self.index[key] = art

    def __len__(self) -> int:
        return len(self.articles)

    def __iter__(self) -> Iterator[LegalArticle]:
        return iter(self.articles)

    def __contains__(self, article_id: str) -> bool:
        return article_id in self.by_id

    def get(self, article_id: str) -> LegalArticle | None:
        return self.by_id.get(article_id)

    def lookup(self, norm_title: str, number: int) -> LegalArticle | None:
        """The article registered under (normalized title, number), if any."""
        return self.index.get((norm_title, number))

    def level(self, article_id: str) -> HierarchyLevel:
        return self.by_id[article_id].hierarchy_level


def build_article(row: dict, rules: HierarchyRuleSet) -> LegalArticle:
    norm = normalize_title(row["law_title"])
    return LegalArticle(
        id=str(row["id"]),
        law_title=row["law_title"],
        article_number=int(row["article_number"]),
        content=row["content"],
        hierarchy_level=assign_hierarchy(norm, rules),
        norm_title=norm,
    )


_REQUIRED_FIELDS = ("id", "law_title", "article_number", "content")


def load_corpus(path: str | Path, rules: HierarchyRuleSet) -> Corpus:
    """Parse a UTF-8 line-delimited corpus file into a Corpus.

    Each line is one JSON object with fields id, law_title, article_number,
    content. Malformed lines and duplicate (title, number) pairs are hard
    errors naming the offending line/articles.
    """
    articles = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            missing = [k for k in _REQUIRED_FIELDS if k not in row]
            if missing:
                raise CorpusError(f"{path}:{lineno}: missing fields {missing}")
            try:
                articles.append(build_article(row, rules))
            except (CorpusError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return Corpus(articles)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the resolved corpus (normalized titles, levels) as JSON lines."""
    with open(path, "w", encoding="utf-8") as f:
        for art in corpus:
            f.write(
                json.dumps(
                    {
                        "id": art.id,
                        "law_title": art.law_title,
                        "article_number": art.article_number,
                        "content": art.content,
                        "hierarchy_level": int(art.hierarchy_level),
                        "norm_title": art.norm_title,
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )


def load_resolved_corpus(path: str | Path) -> Corpus:
    """Load a corpus previously written by save_corpus (levels pre-assigned)."""
    articles = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            articles.append(
                LegalArticle(
                    id=row["id"],
                    law_title=row["law_title"],
                    article_number=row["article_number"],
                    content=row["content"],
                    hierarchy_level=HierarchyLevel(row["hierarchy_level"]),
                    norm_title=row["norm_title"],
                )
            )
    return Corpus(articles)
