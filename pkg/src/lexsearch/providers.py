"""Chat, embedding, and reranker provider clients with caching and mocks.

Wire protocol (all UTF-8 JSON, non-200 responses carry {"error": ...}):
    POST /v1/chat    {model, prompt}              -> {text}
    POST /v1/embed   {model, texts: [...]}        -> {vectors: [[...]]}
    POST /v1/rerank  {model, query, documents}    -> {scores: [...]}
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx
import numpy as np

from .sparse import tokenize

logger = logging.getLogger(__name__)


class ProviderError(Exception):
    """A provider call failed after exhausting retries."""


@dataclass(frozen=True)
class ProviderConfig:
    kind: str  # chat | embed | rerank
    backend: str = "http"  # http | canned | hash | hashbag | overlap
    endpoint: str = ""
    model: str = ""
    timeout: float = 30.0
    max_retries: int = 2
    parallelism: int = 4
    cache_dir: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("chat", "embed", "rerank"):
            raise ValueError(f"provider kind must be chat|embed|rerank, got {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("provider timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("provider max_retries must be >= 0")
        if self.parallelism < 1:
            raise ValueError("provider parallelism must be >= 1")


# ---------------------------------------------------------------------------
# Response cache
# ---------------------------------------------------------------------------


def cache_key(kind: str, model: str, scope: str, text: str) -> str:
    """Exact-match key over (kind, model, template/scope hash, input text)."""
    h = hashlib.sha256()
    for part in (kind, model, scope, text):
        h.update(part.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


class ResponseCache:
    """Disk cache of raw provider outputs; entries are immutable once written.

    One JSON file per key, written atomically so concurrent readers never see
    partial entries.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        try:
            with open(path, encoding="utf-8") as f:
                return json.load(f)["value"]
        except FileNotFoundError:
            return None

    def put(self, key: str, value: str) -> None:
        path = self._path(key)
        if path.exists():
            return
        tmp = path.with_suffix(f".tmp.{os.getpid()}.{threading.get_ident()}")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump({"value": value, "created_at": time.time()}, f, ensure_ascii=False)
        os.replace(tmp, path)


# ---------------------------------------------------------------------------
# HTTP transport
# ---------------------------------------------------------------------------


class _HttpBase:
    route = ""

    def __init__(self, config: ProviderConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self.model_id = config.model
        self._client = httpx.Client(
            base_url=config.endpoint,
            timeout=config.timeout,
            transport=transport,
        )
        self._slots = threading.BoundedSemaphore(config.parallelism)
        # base delay kept configurable so retry tests stay fast
        self._backoff = float(config.options.get("retry_backoff", 0.25))

    def _post(self, payload: dict) -> dict:
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                time.sleep(self._backoff * 2 ** (attempt - 1))
            try:
                with self._slots:
                    resp = self._client.post(self.route, json=payload)
                if resp.status_code == 200:
                    return resp.json()
                try:
                    detail = resp.json().get("error", resp.text)
                except (json.JSONDecodeError, ValueError):
                    detail = resp.text
                last_exc = ProviderError(f"{self.route} returned {resp.status_code}: {detail}")
                # client errors will not succeed on retry
                if 400 <= resp.status_code < 500:
                    break
            except httpx.HTTPError as exc:
                last_exc = exc
        raise ProviderError(
            f"{self.config.kind} provider failed after "
            f"{self.config.max_retries + 1} attempt(s): {last_exc}"
        ) from last_exc


class HttpChatProvider(_HttpBase):
    route = "/v1/chat"

    def complete(self, prompt: str) -> str:
        data = self._post({"model": self.model_id, "prompt": prompt})
        return data["text"]


class HttpEmbeddingProvider(_HttpBase):
    route = "/v1/embed"

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("embed requires at least one text")
        data = self._post({"model": self.model_id, "texts": texts})
        vectors = data["vectors"]
        if len(vectors) != len(texts):
            raise ProviderError(
                f"embed returned {len(vectors)} vectors for {len(texts)} texts"
            )
        dims = {len(v) for v in vectors}
        if len(dims) > 1:
            raise ProviderError(f"inconsistent embedding dimensions in response: {dims}")
        return vectors


class HttpRerankProvider(_HttpBase):
    route = "/v1/rerank"

    def score(self, query: str, documents: list[str]) -> list[float]:
        if not documents:
            raise ValueError("rerank requires at least one document")
        data = self._post({"model": self.model_id, "query": query, "documents": documents})
        scores = data["scores"]
        if len(scores) != len(documents):
            raise ProviderError(
                f"rerank returned {len(scores)} scores for {len(documents)} documents"
            )
        return [float(s) for s in scores]


# ---------------------------------------------------------------------------
# Deterministic in-process mocks
# ---------------------------------------------------------------------------


class CannedChatProvider:
    """Chat mock backed by an exact prompt -> completion map."""

    def __init__(self, responses: dict[str, str], default: str | None = None, model: str = "canned"):
        self.responses = dict(responses)
        self.default = default
        self.model_id = model
        self.calls = 0

    def complete(self, prompt: str) -> str:
        self.calls += 1
        if prompt in self.responses:
            return self.responses[prompt]
        if self.default is not None:
            return self.default
        raise ProviderError(f"no canned response for prompt: {prompt[:80]!r}")


def _stable_seed(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class HashEmbedder:
    """Whole-text hash embedder: each text seeds a pseudo-random unit vector."""

    def __init__(self, dim: int = 16, model: str = "hash"):
        self.dim = dim
        self.model_id = f"{model}-{dim}"
        self.calls = 0

    def _vector(self, text: str) -> np.ndarray:
        rng = np.random.default_rng(_stable_seed(text))
        v = rng.standard_normal(self.dim)
        return v / np.linalg.norm(v)

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("embed requires at least one text")
        self.calls += 1
        return [self._vector(t).tolist() for t in texts]


class HashingBagEmbedder:
    """Bag-of-tokens hash embedder: texts sharing tokens land nearby.

    The sum of per-token hash vectors, normalized; a text with no tokens maps
    to the zero vector.
    """

    def __init__(self, dim: int = 16, model: str = "hashbag"):
        self.dim = dim
        self.model_id = f"{model}-{dim}"
        self.calls = 0
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        v = self._token_cache.get(token)
        if v is None:
            rng = np.random.default_rng(_stable_seed(token))
            v = rng.standard_normal(self.dim)
            v /= np.linalg.norm(v)
            self._token_cache[token] = v
        return v

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("embed requires at least one text")
        self.calls += 1
        out = []
        for text in texts:
            acc = np.zeros(self.dim)
            for tok in tokenize(text):
                acc += self._token_vector(tok)
            norm = np.linalg.norm(acc)
            if norm > 0:
                acc /= norm
            out.append(acc.tolist())
        return out


class TokenOverlapReranker:
    """Rerank mock: raw score is the number of shared unique tokens."""

    def __init__(self, model: str = "overlap"):
        self.model_id = model
        self.calls = 0

    def score(self, query: str, documents: list[str]) -> list[float]:
        if not documents:
            raise ValueError("rerank requires at least one document")
        self.calls += 1
        q = set(tokenize(query))
        return [float(len(q & set(tokenize(d)))) for d in documents]


# ---------------------------------------------------------------------------
# Caching wrappers
# ---------------------------------------------------------------------------


class CachedChatProvider:
    """Cache-first wrapper; `scope` carries the caller's template hash."""

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.model_id = inner.model_id

    def complete(self, prompt: str, scope: str = "") -> str:
        key = cache_key("chat", self.model_id, scope, prompt)
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        out = self.inner.complete(prompt)
        self.cache.put(key, out)
        return out


class CachedEmbeddingProvider:
    """Per-text cache keyed by (provider id, text hash); misses are batched."""

    def __init__(self, inner, cache: ResponseCache):
        self.inner = inner
        self.cache = cache
        self.model_id = inner.model_id

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("embed requires at least one text")
        keys = [cache_key("embed", self.model_id, "", t) for t in texts]
        results: list[list[float] | None] = []
        misses: list[int] = []
        for i, key in enumerate(keys):
            hit = self.cache.get(key)
            if hit is None:
                results.append(None)
                misses.append(i)
            else:
                results.append(json.loads(hit))
        if misses:
            fresh = self.inner.embed([texts[i] for i in misses])
            for i, vec in zip(misses, fresh):
                self.cache.put(keys[i], json.dumps(vec))
                results[i] = vec
        return results  # type: ignore[return-value]


class _PassthroughChat:
    """Uncached chat provider exposing the same `scope` keyword."""

    def __init__(self, inner):
        self.inner = inner
        self.model_id = inner.model_id

    def complete(self, prompt: str, scope: str = "") -> str:
        return self.inner.complete(prompt)


# ---------------------------------------------------------------------------
# Factories
# ---------------------------------------------------------------------------


def _load_canned_map(config: ProviderConfig) -> dict[str, str]:
    if "map" in config.options:
        return dict(config.options["map"])
    if "map_path" in config.options:
        with open(config.options["map_path"], encoding="utf-8") as f:
            return json.load(f)
    return {}


def make_chat_provider(config: ProviderConfig, transport=None):
    if config.kind != "chat":
        raise ValueError(f"expected a chat provider config, got kind={config.kind!r}")
    if config.backend == "http":
        inner = HttpChatProvider(config, transport=transport)
    elif config.backend == "canned":
        inner = CannedChatProvider(
            _load_canned_map(config), default=config.options.get("default")
        )
    else:
        raise ValueError(f"unknown chat backend {config.backend!r}")
    if config.cache_dir:
        return CachedChatProvider(inner, ResponseCache(config.cache_dir))
    return _PassthroughChat(inner)


def make_embedding_provider(config: ProviderConfig, transport=None):
    if config.kind != "embed":
        raise ValueError(f"expected an embed provider config, got kind={config.kind!r}")
    if config.backend == "http":
        inner = HttpEmbeddingProvider(config, transport=transport)
    elif config.backend == "hash":
        inner = HashEmbedder(dim=int(config.options.get("dim", 16)))
    elif config.backend == "hashbag":
        inner = HashingBagEmbedder(dim=int(config.options.get("dim", 16)))
    else:
        raise ValueError(f"unknown embed backend {config.backend!r}")
    if config.cache_dir:
        return CachedEmbeddingProvider(inner, ResponseCache(config.cache_dir))
    return inner


def make_rerank_provider(config: ProviderConfig, transport=None):
    if config.kind != "rerank":
        raise ValueError(f"expected a rerank provider config, got kind={config.kind!r}")
    if config.backend == "http":
        return HttpRerankProvider(config, transport=transport)
    if config.backend == "overlap":
        return TokenOverlapReranker()
    raise ValueError(f"unknown rerank backend {config.backend!r}")
