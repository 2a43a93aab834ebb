"""Model backends behind the chat/embed/rerank routes.

Builtin backends ("hash:<dim>", "overlap", "echo") run with no ML
dependencies; any other model identifier is loaded through transformers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np


class ModelLoadError(Exception):
    """Raised at startup when a bound model cannot be loaded."""


@dataclass(frozen=True)
class ModelBinding:
    kind: str  # chat | embed | rerank
    model_id: str
    device: str = "cpu"
    max_batch_size: int = 32

    def __post_init__(self) -> None:
        if self.kind not in ("chat", "embed", "rerank"):
            raise ModelLoadError(f"unknown route kind {self.kind!r}")
        if self.max_batch_size < 1:
            raise ModelLoadError("max_batch_size must be >= 1")


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


# ---------------------------------------------------------------------------
# Builtin backends (dependency-free)
# ---------------------------------------------------------------------------


def _stable_seed(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


class HashEmbedBackend:
    """Deterministic hash-projection embeddings, unit norm."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ModelLoadError(f"hash embedder dimension must be >= 1, got {dim}")
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        out = []
        for text in texts:
            rng = np.random.default_rng(_stable_seed(text))
            v = rng.standard_normal(self.dim)
            out.append((v / np.linalg.norm(v)).tolist())
        return out


class OverlapRerankBackend:
    """Relevance as the count of shared lowercase word tokens."""

    def score(self, query: str, documents: list[str]) -> list[float]:
        q = set(query.lower().split())
        return [float(len(q & set(d.lower().split()))) for d in documents]


class EchoChatBackend:
    """Returns the prompt's final line; a deterministic plumbing stand-in."""

    def generate(self, prompt: str) -> str:
        lines = [line for line in prompt.splitlines() if line.strip()]
        return lines[-1] if lines else ""


# ---------------------------------------------------------------------------
# Hugging Face backends
# ---------------------------------------------------------------------------


class HFEmbedBackend:
    """Mean-pooled encoder states from a transformers model."""

    def __init__(self, binding: ModelBinding):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"model {binding.model_id!r} needs torch and transformers installed"
            ) from exc
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(binding.model_id)
            self.model = AutoModel.from_pretrained(binding.model_id).to(binding.device)
        except Exception as exc:
            raise ModelLoadError(f"cannot load embed model {binding.model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = binding.device
        self.batch_size = binding.max_batch_size
        self.dim = int(self.model.config.hidden_size)

    def embed(self, texts: list[str]) -> list[list[float]]:
        torch = self._torch
        out: list[list[float]] = []
        for batch in _batches(texts, self.batch_size):
            enc = self.tokenizer(
                batch, return_tensors="pt", padding=True, truncation=True, max_length=512
            ).to(self.device)
            with torch.no_grad():
                hidden = self.model(**enc).last_hidden_state
            mask = enc["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1)
            out.extend(pooled.cpu().numpy().astype(float).tolist())
        return out


class HFRerankBackend:
    """Sequence-classification score over (query, document) pairs."""

    def __init__(self, binding: ModelBinding):
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"model {binding.model_id!r} needs torch and transformers installed"
            ) from exc
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(binding.model_id)
            self.model = AutoModelForSequenceClassification.from_pretrained(
                binding.model_id
            ).to(binding.device)
        except Exception as exc:
            raise ModelLoadError(f"cannot load rerank model {binding.model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = binding.device
        self.batch_size = binding.max_batch_size

    def score(self, query: str, documents: list[str]) -> list[float]:
        torch = self._torch
        scores: list[float] = []
        for batch in _batches(documents, self.batch_size):
            enc = self.tokenizer(
                [query] * len(batch), batch, return_tensors="pt",
                padding=True, truncation=True, max_length=512,
            ).to(self.device)
            with torch.no_grad():
                logits = self.model(**enc).logits
            scores.extend(float(x) for x in logits[:, 0].cpu().numpy())
        return scores


class HFChatBackend:
    """Greedy causal-LM completion; returns only the continuation."""

    def __init__(self, binding: ModelBinding, max_new_tokens: int = 256):
        try:
            import torch
            from transformers import AutoModelForCausalLM, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(
                f"model {binding.model_id!r} needs torch and transformers installed"
            ) from exc
        self._torch = torch
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(binding.model_id)
            self.model = AutoModelForCausalLM.from_pretrained(binding.model_id).to(
                binding.device
            )
        except Exception as exc:
            raise ModelLoadError(f"cannot load chat model {binding.model_id!r}: {exc}") from exc
        self.model.eval()
        self.device = binding.device
        self.max_new_tokens = max_new_tokens

    def generate(self, prompt: str) -> str:
        torch = self._torch
        enc = self.tokenizer(prompt, return_tensors="pt", truncation=True).to(self.device)
        with torch.no_grad():
            out = self.model.generate(
                **enc, max_new_tokens=self.max_new_tokens, do_sample=False,
                pad_token_id=self.tokenizer.pad_token_id or self.tokenizer.eos_token_id,
            )
        continuation = out[0][enc["input_ids"].shape[1] :]
        return self.tokenizer.decode(continuation, skip_special_tokens=True)


# ---------------------------------------------------------------------------
# Binding resolution
# ---------------------------------------------------------------------------


def build_embed_backend(binding: ModelBinding):
    if binding.model_id.startswith("hash:"):
        return HashEmbedBackend(int(binding.model_id.split(":", 1)[1]))
    return HFEmbedBackend(binding)


def build_rerank_backend(binding: ModelBinding):
    if binding.model_id == "overlap":
        return OverlapRerankBackend()
    return HFRerankBackend(binding)


def build_chat_backend(binding: ModelBinding):
    if binding.model_id == "echo":
        return EchoChatBackend()
    return HFChatBackend(binding)
