"""Two-stage LLM query expansion: legal-issue analysis, then keyword extraction."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .providers import ProviderError

logger = logging.getLogger(__name__)

_WS = re.compile(r"\s+")


def _template_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class PromptTemplates:
    """The four prompt templates used by expansion and intent classification.

    analysis has a {query} placeholder, keyword_extract {analysis}, and the
    two intent templates {text}.
    """

    analysis: str
    keyword_extract: str
    query_intent: str
    article_intent: str

    def hash_of(self, name: str) -> str:
        return _template_hash(getattr(self, name))

    @classmethod
    def load(
        cls,
        analysis_path: str | Path | None = None,
        keyword_path: str | Path | None = None,
        query_intent_path: str | Path | None = None,
        article_intent_path: str | Path | None = None,
    ) -> "PromptTemplates":
        """Load templates from files, falling back to the packaged defaults."""

        def read(path: str | Path | None, default_name: str) -> str:
            if path is not None:
                return Path(path).read_text(encoding="utf-8")
            ref = resources.files("lexsearch.data.prompts").joinpath(default_name)
            return ref.read_text(encoding="utf-8")

        return cls(
            analysis=read(analysis_path, "issue_analysis.txt"),
            keyword_extract=read(keyword_path, "keyword_extract.txt"),
            query_intent=read(query_intent_path, "query_intent.txt"),
            article_intent=read(article_intent_path, "article_intent.txt"),
        )


@dataclass(frozen=True)
class ExpandedQuery:
    original: str
    keywords: tuple[str, ...]
    expanded_text: str
    analysis_raw: str | None = None
    keywords_raw: str | None = None
    warning: str | None = None

    @classmethod
    def plain(cls, query: str, warning: str | None = None) -> "ExpandedQuery":
        return cls(original=query, keywords=(), expanded_text=query, warning=warning)


def parse_keywords(raw: str, max_keywords: int) -> tuple[str, ...]:
    """One keyword per line; deduplicated (case/whitespace-insensitive)."""
    seen: set[str] = set()
    keywords: list[str] = []
    for line in raw.splitlines():
        kw = line.strip()
        if not kw:
            continue
        key = _WS.sub(" ", kw.casefold())
        if key in seen:
            continue
        seen.add(key)
        keywords.append(kw)
        if len(keywords) >= max_keywords:
            break
    return tuple(keywords)


def irac_expand(
    query: str,
    llm,
    templates: PromptTemplates,
    max_keywords: int = 10,
) -> ExpandedQuery:
    """Expand a query with legal keywords distilled from a two-stage analysis.

    Stage 1 asks the model for an issue/rule/application/conclusion breakdown
    of the query; stage 2 extracts retrieval keywords from that breakdown.
    Any provider failure or unparseable keyword output degrades to the plain
    query with a warning, never an error.
    """
    try:
        analysis = llm.complete(
            templates.analysis.format(query=query),
            scope=templates.hash_of("analysis"),
        )
    except ProviderError as exc:
        logger.warning("query expansion: analysis stage failed: %s", exc)
        return ExpandedQuery.plain(query, warning=f"analysis stage failed: {exc}")
    try:
        keywords_raw = llm.complete(
            templates.keyword_extract.format(analysis=analysis),
            scope=templates.hash_of("keyword_extract"),
        )
    except ProviderError as exc:
        logger.warning("query expansion: keyword stage failed: %s", exc)
        return ExpandedQuery(
            original=query,
            keywords=(),
            expanded_text=query,
            analysis_raw=analysis,
            warning=f"keyword stage failed: {exc}",
        )
    keywords = parse_keywords(keywords_raw, max_keywords)
    warning = None
    if not keywords:
        warning = "keyword extraction produced no keywords; using the plain query"
        logger.warning("query expansion: %s", warning)
    expanded = query if not keywords else query + " " + " ".join(keywords)
    return ExpandedQuery(
        original=query,
        keywords=keywords,
        expanded_text=expanded,
        analysis_raw=analysis,
        keywords_raw=keywords_raw,
        warning=warning,
    )
