"""Capability protocols for everything backed by a model or external service.

Concrete model identities (which judge, which embedder, which scorer) are
configuration, not code: anything satisfying these protocols can back the
pipelines, including the offline stubs used for deterministic testing.
"""

from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable


@runtime_checkable
class ChatProvider(Protocol):
    """Single-turn chat completion with optional constrained-JSON replies."""

    provider_id: str
    model: str

    def complete(
        self,
        messages: Sequence[dict],
        *,
        temperature: float = 0.0,
        json_object: bool = False,
    ) -> str: ...


@runtime_checkable
class EmbeddingProvider(Protocol):
    provider_id: str
    model: str
    dimension: int
    max_chars: int | None  # None means unbounded input

    def embed(self, texts: Sequence[str]) -> list[list[float]]: ...


@runtime_checkable
class LogLikelihoodProvider(Protocol):
    """Per-token negative log-likelihoods in nats, one value per token."""

    provider_id: str
    model: str

    def score(self, text: str) -> list[float]: ...


@runtime_checkable
class SentenceSegmenter(Protocol):
    provider_id: str

    def segment(self, text: str) -> list[str]: ...


@runtime_checkable
class SyntaxProvider(Protocol):
    """Dependency-parse depth of one sentence.

    Depth counts nodes on the longest root-to-leaf path, with a bare root
    counting as 1. Backends may approximate the parse, but all report depth
    in this node-count convention.
    """

    provider_id: str

    def parse_depth(self, sentence: str) -> int: ...
