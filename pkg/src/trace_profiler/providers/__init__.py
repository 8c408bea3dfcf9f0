"""Model-backed capabilities: protocols, offline stubs, cache, wire clients."""

from __future__ import annotations

from dataclasses import dataclass

from .base import (
    ChatProvider,
    EmbeddingProvider,
    LogLikelihoodProvider,
    SentenceSegmenter,
    SyntaxProvider,
)
from .cache import CachedChat, CachedEmbedder, ResponseCache, canonical_json, request_key
from .http import (
    HttpChatProvider,
    HttpEmbeddingProvider,
    HttpScoreProvider,
    SidecarClient,
    SidecarEmbedder,
    SidecarSegmenter,
    SidecarSyntax,
    call_with_retries,
)
from .limits import get_parallelism, set_parallelism
from .stubs import (
    HashEmbedder,
    LogDepthSyntax,
    RuleChatStub,
    RuleSegmenter,
    UniformScorer,
    split_sentences,
)


@dataclass
class ProviderSet:
    """One provider per capability, as a pipeline consumes them."""

    chat: ChatProvider
    embedder: EmbeddingProvider
    scorer: LogLikelihoodProvider
    segmenter: SentenceSegmenter
    syntax: SyntaxProvider


def offline_provider_set(
    seed: int = 0,
    *,
    vocab_size: int = 1000,
    dimension: int = 64,
    rules: tuple[tuple[str, str], ...] = (),
) -> ProviderSet:
    """All-stub set; pipelines run on it without network, bit-reproducibly."""
    return ProviderSet(
        chat=RuleChatStub(rules=rules),
        embedder=HashEmbedder(dimension=dimension, seed=seed),
        scorer=UniformScorer(vocab_size=vocab_size),
        segmenter=RuleSegmenter(),
        syntax=LogDepthSyntax(),
    )


__all__ = [
    "ChatProvider",
    "EmbeddingProvider",
    "LogLikelihoodProvider",
    "SentenceSegmenter",
    "SyntaxProvider",
    "ProviderSet",
    "offline_provider_set",
    "ResponseCache",
    "CachedChat",
    "CachedEmbedder",
    "canonical_json",
    "request_key",
    "HttpChatProvider",
    "HttpEmbeddingProvider",
    "HttpScoreProvider",
    "SidecarClient",
    "SidecarEmbedder",
    "SidecarSegmenter",
    "SidecarSyntax",
    "call_with_retries",
    "HashEmbedder",
    "LogDepthSyntax",
    "RuleChatStub",
    "RuleSegmenter",
    "UniformScorer",
    "split_sentences",
    "set_parallelism",
    "get_parallelism",
]
