"""Citation mention extraction and the directed article-level citation graph."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .corpus import Corpus, LegalArticle, normalize_title

logger = logging.getLogger(__name__)


class PatternConfigError(Exception):
    """Raised at pattern-load time when a pattern misses a declared group."""


_CJK_DIGITS = {"零": 0, "〇": 0, "一": 1, "二": 2, "两": 2, "三": 3, "四": 4,
               "五": 5, "六": 6, "七": 7, "八": 8, "九": 9}
_CJK_UNITS = {"十": 10, "百": 100, "千": 1000}
_FULLWIDTH = str.maketrans("０１２３４５６７８９", "0123456789")


def parse_article_number(text: str) -> int | None:
    """Parse an article number written in ASCII, fullwidth, or CJK numerals.

    Returns None when the text does not denote a positive integer.
    """
    s = text.strip().translate(_FULLWIDTH)
    if s.isdigit():
        n = int(s)
        return n if n >= 1 else None
    # place-value CJK numerals, e.g. 五十三 -> 53, 一百零三 -> 103
    total, current = 0, 0
    seen = False
    for ch in s:
        if ch in _CJK_DIGITS:
            current = current * 10 + _CJK_DIGITS[ch] if current else _CJK_DIGITS[ch]
            seen = True
        elif ch in _CJK_UNITS:
            unit = _CJK_UNITS[ch]
            total += (current or 1) * unit
            current = 0
            seen = True
        else:
            return None
    total += current
    return total if seen and total >= 1 else None


@dataclass(frozen=True)
class CitationPattern:
    kind: str  # "cross_law" or "internal"
    regex: re.Pattern
    number_group: str | int
    title_group: str | int | None = None

    def _check_group(self, group: str | int, role: str) -> None:
        if isinstance(group, int):
            if not 1 <= group <= self.regex.groups:
                raise PatternConfigError(
                    f"pattern {self.regex.pattern!r}: {role} group {group} out of range"
                )
        elif group not in self.regex.groupindex:
            raise PatternConfigError(
                f"pattern {self.regex.pattern!r}: missing named group {group!r} for {role}"
            )

    def __post_init__(self) -> None:
        if self.kind not in ("cross_law", "internal"):
            raise PatternConfigError(f"unknown pattern kind {self.kind!r}")
        self._check_group(self.number_group, "number")
        if self.kind == "cross_law":
            if self.title_group is None:
                raise PatternConfigError(
                    f"cross_law pattern {self.regex.pattern!r} requires a title group"
                )
            self._check_group(self.title_group, "title")


@dataclass(frozen=True)
class CitationPatternSet:
    """Cross-law patterns first, then internal ones; declaration order matters."""

    cross_law: tuple[CitationPattern, ...]
    internal: tuple[CitationPattern, ...]

    @classmethod
    def from_specs(cls, specs: Iterable[dict]) -> "CitationPatternSet":
        cross, internal = [], []
        for spec in specs:
            pat = CitationPattern(
                kind=spec["kind"],
                regex=re.compile(spec["regex"]),
                number_group=spec["number_group"],
                title_group=spec.get("title_group"),
            )
            (cross if pat.kind == "cross_law" else internal).append(pat)
        return cls(cross_law=tuple(cross), internal=tuple(internal))

    @classmethod
    def load(cls, path: str | Path) -> "CitationPatternSet":
        with open(path, encoding="utf-8") as f:
            specs = json.load(f)
        if not isinstance(specs, list):
            raise PatternConfigError(f"pattern file {path}: expected a JSON array")
        return cls.from_specs(specs)

    def in_order(self) -> tuple[CitationPattern, ...]:
        return self.cross_law + self.internal


@dataclass(frozen=True)
class CitationMention:
    source_id: str
    target_title: str  # normalized; the source's own title for internal mentions
    target_number: int
    char_span: tuple[int, int]


def extract_citations(
    article: LegalArticle, patterns: CitationPatternSet
) -> list[CitationMention]:
    """All non-overlapping citation mentions in `article.content`, in text order.

    Patterns are applied in declaration order; a later pattern's match that
    overlaps an already-claimed span is dropped.
    """
    claimed: list[tuple[int, int]] = []
    mentions: list[CitationMention] = []
    for pat in patterns.in_order():
        for m in pat.regex.finditer(article.content):
            start, end = m.span()
            if any(start < c_end and end > c_start for c_start, c_end in claimed):
                continue
            number = parse_article_number(m.group(pat.number_group))
            if number is None:
                continue
            if pat.kind == "cross_law":
                title = normalize_title(m.group(pat.title_group))
            else:
                title = article.norm_title
            claimed.append((start, end))
            mentions.append(
                CitationMention(
                    source_id=article.id,
                    target_title=title,
                    target_number=number,
                    char_span=(start, end),
                )
            )
    mentions.sort(key=lambda mn: mn.char_span)
    return mentions


def resolve(mention: CitationMention, corpus: Corpus) -> str | None:
    """Article id the mention points to, or None when it cannot be resolved."""
    target = corpus.lookup(mention.target_title, mention.target_number)
    return target.id if target is not None else None


@dataclass(frozen=True)
class GraphBuildStats:
    extracted: int = 0
    resolved: int = 0
    unresolved: int = 0
    self_loops_dropped: int = 0


@dataclass(frozen=True)
class CitationGraph:
    nodes: frozenset[str]
    edges: frozenset[tuple[str, str]]
    out_edges: dict[str, frozenset[str]] = field(default_factory=dict)
    in_edges: dict[str, frozenset[str]] = field(default_factory=dict)
    stats: GraphBuildStats = field(default_factory=GraphBuildStats)


def _adjacency(edges: Iterable[tuple[str, str]]):
    out: dict[str, set[str]] = {}
    into: dict[str, set[str]] = {}
    for src, dst in edges:
        out.setdefault(src, set()).add(dst)
        into.setdefault(dst, set()).add(src)
    return (
        {k: frozenset(v) for k, v in out.items()},
        {k: frozenset(v) for k, v in into.items()},
    )


def build_graph(corpus: Corpus, patterns: CitationPatternSet) -> CitationGraph:
    """Directed graph over all corpus articles from resolvable citation mentions.

    Self-loops are dropped; unresolvable mentions are logged and counted, never
    errors. Deterministic: articles are processed in ascending id order.
    """
    edges: set[tuple[str, str]] = set()
    extracted = resolved = unresolved = self_loops = 0
    for article in sorted(corpus, key=lambda a: a.id):
        for mention in extract_citations(article, patterns):
            extracted += 1
            target_id = resolve(mention, corpus)
            if target_id is None:
                unresolved += 1
                logger.debug(
                    "unresolved citation in %s: (%s, %d)",
                    article.id, mention.target_title, mention.target_number,
                )
                continue
            resolved += 1
            if target_id == article.id:
                self_loops += 1
                continue
            edges.add((article.id, target_id))
    out_edges, in_edges = _adjacency(edges)
    return CitationGraph(
        nodes=frozenset(a.id for a in corpus),
        edges=frozenset(edges),
        out_edges=out_edges,
        in_edges=in_edges,
        stats=GraphBuildStats(
            extracted=extracted,
            resolved=resolved,
            unresolved=unresolved,
            self_loops_dropped=self_loops,
        ),
    )


def citation_neighbors(graph: CitationGraph, article_id: str) -> set[str]:
    """Undirected neighborhood: out-neighbors plus in-neighbors, minus self."""
    neighbors = set(graph.out_edges.get(article_id, ())) | set(
        graph.in_edges.get(article_id, ())
    )
    neighbors.discard(article_id)
    return neighbors


def save_graph(graph: CitationGraph, path: str | Path) -> None:
    """Write edges as line-delimited {source_id, target_id} records."""
    with open(path, "w", encoding="utf-8") as f:
        for src, dst in sorted(graph.edges):
            f.write(json.dumps({"source_id": src, "target_id": dst}, sort_keys=True) + "\n")


def load_graph(path: str | Path, corpus: Corpus) -> CitationGraph:
    edges = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            edges.add((row["source_id"], row["target_id"]))
    out_edges, in_edges = _adjacency(edges)
    return CitationGraph(
        nodes=frozenset(a.id for a in corpus),
        edges=frozenset(edges),
        out_edges=out_edges,
        in_edges=in_edges,
    )
