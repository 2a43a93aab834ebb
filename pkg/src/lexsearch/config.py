"""Single-file pipeline configuration shared by the CLI and the HTTP service."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .mining import MiningConfig
from .providers import ProviderConfig
from .rerank import RerankWeights


class ConfigError(Exception):
    """Raised when the configuration violates a documented invariant."""


@dataclass(frozen=True)
class PromptPaths:
    analysis: str | None = None
    keyword_extract: str | None = None
    query_intent: str | None = None
    article_intent: str | None = None


@dataclass(frozen=True)
class PipelineConfig:
    corpus_path: str
    artifact_dir: str = "artifacts"
    cache_dir: str | None = None
    hierarchy_rules_path: str | None = None  # None -> packaged default
    citation_patterns_path: str | None = None  # None -> packaged default
    prompts: PromptPaths = field(default_factory=PromptPaths)
    chat_provider: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(kind="chat")
    )
    embed_provider: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(kind="embed")
    )
    rerank_provider: ProviderConfig = field(
        default_factory=lambda: ProviderConfig(kind="rerank")
    )
    alpha: float = 0.4
    weights: RerankWeights = field(default_factory=RerankWeights)
    pool_size: int = 20
    top_k: int = 5
    sparse_depth: int = 100
    dense_depth: int = 100
    mining: MiningConfig = field(default_factory=MiningConfig)
    metric_ks: tuple[int, ...] = (1, 3, 5)
    seed: int = 0
    max_keywords: int = 10
    query_mode: str = "last_turn"
    group_aware_split: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha: must be in [0, 1], got {self.alpha}")
        if self.top_k < 1:
            raise ConfigError(f"top_k: must be >= 1, got {self.top_k}")
        if self.pool_size <= self.top_k:
            raise ConfigError(
                f"pool_size: must exceed top_k ({self.top_k}), got {self.pool_size}"
            )
        if self.sparse_depth < self.pool_size:
            raise ConfigError(
                f"sparse_depth: must be >= pool_size ({self.pool_size}), "
                f"got {self.sparse_depth}"
            )
        if self.dense_depth < self.pool_size:
            raise ConfigError(
                f"dense_depth: must be >= pool_size ({self.pool_size}), "
                f"got {self.dense_depth}"
            )
        if any(k < 1 for k in self.metric_ks) or not self.metric_ks:
            raise ConfigError(f"metric_ks: must be positive, got {self.metric_ks}")
        if self.max_keywords < 0:
            raise ConfigError(f"max_keywords: must be >= 0, got {self.max_keywords}")
        if self.query_mode not in ("last_turn", "concat"):
            raise ConfigError(
                f"query_mode: must be 'last_turn' or 'concat', got {self.query_mode!r}"
            )


def _resolve(base: Path, value: str | None) -> str | None:
    if value is None:
        return None
    path = Path(value)
    return str(path if path.is_absolute() else base / path)


def _provider_from(raw: dict, kind: str, base: Path, default_cache: str | None) -> ProviderConfig:
    raw = dict(raw)
    raw.setdefault("kind", kind)
    if raw.get("cache_dir") is None and default_cache is not None:
        raw["cache_dir"] = str(Path(default_cache) / kind)
    elif raw.get("cache_dir"):
        raw["cache_dir"] = _resolve(base, raw["cache_dir"])
    options = raw.get("options", {})
    if "map_path" in options:
        options = dict(options)
        options["map_path"] = _resolve(base, options["map_path"])
        raw["options"] = options
    try:
        return ProviderConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"providers.{kind}: {exc}") from exc


def load_config(path: str | Path) -> PipelineConfig:
    """Load and validate a JSON config; relative paths resolve against it."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path}: invalid JSON ({exc.msg})") from exc

    base = path.parent
    if "corpus_path" not in raw:
        raise ConfigError("corpus_path: required")
    cache_dir = _resolve(base, raw.get("cache_dir"))
    prompts_raw = raw.get("prompts", {})
    providers_raw = raw.get("providers", {})
    try:
        weights = RerankWeights(**raw.get("weights", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"weights: {exc}") from exc
    try:
        mining = MiningConfig(**raw.get("mining", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"mining: {exc}") from exc

    config = PipelineConfig(
        corpus_path=_resolve(base, raw["corpus_path"]),
        artifact_dir=_resolve(base, raw.get("artifact_dir", "artifacts")),
        cache_dir=cache_dir,
        hierarchy_rules_path=_resolve(base, raw.get("hierarchy_rules_path")),
        citation_patterns_path=_resolve(base, raw.get("citation_patterns_path")),
        prompts=PromptPaths(
            analysis=_resolve(base, prompts_raw.get("analysis")),
            keyword_extract=_resolve(base, prompts_raw.get("keyword_extract")),
            query_intent=_resolve(base, prompts_raw.get("query_intent")),
            article_intent=_resolve(base, prompts_raw.get("article_intent")),
        ),
        chat_provider=_provider_from(providers_raw.get("chat", {}), "chat", base, cache_dir),
        embed_provider=_provider_from(providers_raw.get("embed", {}), "embed", base, cache_dir),
        rerank_provider=_provider_from(providers_raw.get("rerank", {}), "rerank", base, cache_dir),
        alpha=float(raw.get("alpha", 0.4)),
        weights=weights,
        pool_size=int(raw.get("pool_size", 20)),
        top_k=int(raw.get("top_k", 5)),
        sparse_depth=int(raw.get("sparse_depth", 100)),
        dense_depth=int(raw.get("dense_depth", 100)),
        mining=mining,
        metric_ks=tuple(raw.get("metric_ks", (1, 3, 5))),
        seed=int(raw.get("seed", 0)),
        max_keywords=int(raw.get("max_keywords", 10)),
        query_mode=raw.get("query_mode", "last_turn"),
        group_aware_split=bool(raw.get("group_aware_split", False)),
    )
    config.validate()
    return config
