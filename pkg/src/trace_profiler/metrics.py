"""Six per-example metrics over reasoning traces, aggregated per corpus.

All metrics read the reasoning trace; semantic alignment additionally reads
the query. Two are self-contained text statistics (redundancy, symbolic
fraction); the rest consume providers (embeddings, segmentation, parse
depth, token likelihoods). Given identical provider replies every value is
bit-reproducible, and corpus aggregation is permutation-invariant because
rows are sorted by example id before averaging.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from typing import Sequence

from .corpus import Corpus, Example
from .errors import (
    EmptyText,
    EmptyTokenization,
    MetricError,
    ProfileFailure,
    ProviderError,
    ZeroVector,
)
from .providers import EmbeddingProvider, ProviderSet

# Raw DEFLATE (RFC 1951), no container header, fixed level. Pinning both is
# what makes redundancy values comparable across machines and runs.
_DEFLATE_LEVEL = 6
_RAW_DEFLATE_WBITS = -15


def redundancy_ratio(text: str) -> float:
    """1 minus the DEFLATE-compressed fraction of the UTF-8 byte length.

    Always < 1; slightly negative for tiny incompressible inputs, where the
    compressor's framing overhead exceeds its savings.
    """
    if not text:
        raise EmptyText("redundancy_ratio requires non-empty text")
    data = text.encode("utf-8")
    compressor = zlib.compressobj(_DEFLATE_LEVEL, zlib.DEFLATED, _RAW_DEFLATE_WBITS)
    compressed = compressor.compress(data) + compressor.flush()
    return 1.0 - len(compressed) / len(data)


def symbolic_fraction(text: str) -> float:
    """Fraction of non-whitespace characters that are not alphanumeric.

    Whitespace is excluded from both sides of the ratio so the value tracks
    notation density rather than formatting.
    """
    total = 0
    symbolic = 0
    for ch in text:
        if ch.isspace():
            continue
        total += 1
        if not ch.isalnum():
            symbolic += 1
    if total == 0:
        raise EmptyText("symbolic_fraction requires a non-whitespace character")
    return symbolic / total


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    if len(u) != len(v):
        raise ValueError(f"vector lengths differ: {len(u)} vs {len(v)}")
    dot = 0.0
    norm_u = 0.0
    norm_v = 0.0
    for a, b in zip(u, v):
        dot += a * b
        norm_u += a * a
        norm_v += b * b
    if norm_u == 0.0 or norm_v == 0.0:
        raise ZeroVector("cosine undefined for a zero vector")
    value = dot / math.sqrt(norm_u * norm_v)
    return max(-1.0, min(1.0, value))


def _equal_spans(text: str, max_chars: int) -> list[str]:
    n_chunks = -(-len(text) // max_chars)
    span = -(-len(text) // n_chunks)
    return [text[i : i + span] for i in range(0, len(text), span)]


def embed_pooled(embedder: EmbeddingProvider, text: str) -> list[float]:
    """Embed, chunking into equal spans and mean-pooling when the text
    exceeds the embedder's input limit."""
    limit = embedder.max_chars
    if limit is None or len(text) <= limit:
        return embedder.embed([text])[0]
    vectors = embedder.embed(_equal_spans(text, limit))
    pooled = [0.0] * len(vectors[0])
    for vec in vectors:
        for i, x in enumerate(vec):
            pooled[i] += x
    return [x / len(vectors) for x in pooled]


def semantic_alignment(query: str, reasoning: str, embedder: EmbeddingProvider) -> float:
    if not query:
        raise EmptyText("semantic_alignment requires a non-empty query")
    if not reasoning:
        raise EmptyText("semantic_alignment requires non-empty reasoning")
    return cosine(embed_pooled(embedder, query), embed_pooled(embedder, reasoning))


def _embed_sentences(
    embedder: EmbeddingProvider, sentences: Sequence[str]
) -> list[list[float]]:
    limit = embedder.max_chars
    if limit is not None and any(len(s) > limit for s in sentences):
        return [embed_pooled(embedder, s) for s in sentences]
    return embedder.embed(list(sentences))


def semantic_flow(reasoning: str, segmenter, embedder) -> float | None:
    """Mean cosine between consecutive sentences; None below two sentences."""
    if not reasoning:
        raise EmptyText("semantic_flow requires non-empty reasoning")
    sentences = segmenter.segment(reasoning)
    if len(sentences) < 2:
        return None
    vectors = _embed_sentences(embedder, sentences)
    pairs = [cosine(vectors[i], vectors[i + 1]) for i in range(len(vectors) - 1)]
    return sum(pairs) / len(pairs)


def syntactic_depth(reasoning: str, segmenter, syntax) -> float:
    """Mean parse depth over sentences (node count, bare root = 1)."""
    if not reasoning:
        raise EmptyText("syntactic_depth requires non-empty reasoning")
    sentences = segmenter.segment(reasoning)
    if not sentences:
        raise EmptyText("syntactic_depth found no sentences")
    depths = [syntax.parse_depth(s) for s in sentences]
    return sum(depths) / len(depths)


def perplexity(text: str, scorer) -> float:
    """exp of the mean per-token negative log-likelihood (nats)."""
    nlls = scorer.score(text)
    if not nlls:
        raise EmptyTokenization("perplexity requires at least one token")
    return math.exp(sum(nlls) / len(nlls))


@dataclass
class ExampleMetrics:
    id: str
    redundancy_ratio: float
    symbolic_fraction: float
    semantic_alignment: float
    semantic_flow: float | None
    syntactic_depth: float
    perplexity: float

    def to_row(self) -> dict:
        return {
            "id": self.id,
            "redundancy_ratio": self.redundancy_ratio,
            "symbolic_fraction": self.symbolic_fraction,
            "semantic_alignment": self.semantic_alignment,
            "semantic_flow": self.semantic_flow,
            "syntactic_depth": self.syntactic_depth,
            "perplexity": self.perplexity,
        }


@dataclass
class MetricProfile:
    syntactic_depth: float
    semantic_flow: float | None
    semantic_alignment: float
    perplexity: float
    redundancy_ratio: float
    symbolic_fraction: float
    n_examples: int
    n_flow_skipped: int = 0
    n_failed: int = 0

    def to_json(self) -> dict:
        return {
            "syntactic_depth": self.syntactic_depth,
            "semantic_flow": self.semantic_flow,
            "semantic_alignment": self.semantic_alignment,
            "perplexity": self.perplexity,
            "redundancy_ratio": self.redundancy_ratio,
            "symbolic_fraction": self.symbolic_fraction,
            "n_examples": self.n_examples,
            "n_flow_skipped": self.n_flow_skipped,
            "n_failed": self.n_failed,
        }

    def as_metric_table_row(self) -> dict[str, float]:
        """The five (or six) values keyed by metric name, flow omitted when
        absent; the shape correlation matrices consume."""
        row = {
            "syntactic_depth": self.syntactic_depth,
            "semantic_alignment": self.semantic_alignment,
            "perplexity": self.perplexity,
            "redundancy_ratio": self.redundancy_ratio,
            "symbolic_fraction": self.symbolic_fraction,
        }
        if self.semantic_flow is not None:
            row["semantic_flow"] = self.semantic_flow
        return row


def example_metrics(example: Example, providers: ProviderSet) -> ExampleMetrics:
    reasoning = example.reasoning
    return ExampleMetrics(
        id=example.id,
        redundancy_ratio=redundancy_ratio(reasoning),
        symbolic_fraction=symbolic_fraction(reasoning),
        semantic_alignment=semantic_alignment(
            example.query, reasoning, providers.embedder
        ),
        semantic_flow=semantic_flow(reasoning, providers.segmenter, providers.embedder),
        syntactic_depth=syntactic_depth(
            reasoning, providers.segmenter, providers.syntax
        ),
        perplexity=perplexity(reasoning, providers.scorer),
    )


def collect_metrics(
    corpus: Corpus, providers: ProviderSet
) -> tuple[list[ExampleMetrics], list[tuple[str, str]]]:
    """Per-example metrics plus (id, reason) pairs for examples that failed."""
    rows: list[ExampleMetrics] = []
    failures: list[tuple[str, str]] = []
    for example in corpus.examples:
        try:
            rows.append(example_metrics(example, providers))
        except (MetricError, ProviderError) as exc:
            failures.append((example.id, str(exc)))
    return rows, failures


def aggregate_profile(
    rows: Sequence[ExampleMetrics], n_failed: int = 0
) -> MetricProfile:
    if not rows:
        raise ProfileFailure(n_failed, n_failed, [])
    ordered = sorted(rows, key=lambda r: r.id)
    flows = [r.semantic_flow for r in ordered if r.semantic_flow is not None]
    n = len(ordered)
    return MetricProfile(
        syntactic_depth=sum(r.syntactic_depth for r in ordered) / n,
        semantic_flow=sum(flows) / len(flows) if flows else None,
        semantic_alignment=sum(r.semantic_alignment for r in ordered) / n,
        perplexity=sum(r.perplexity for r in ordered) / n,
        redundancy_ratio=sum(r.redundancy_ratio for r in ordered) / n,
        symbolic_fraction=sum(r.symbolic_fraction for r in ordered) / n,
        n_examples=n,
        n_flow_skipped=n - len(flows),
        n_failed=n_failed,
    )


def profile_corpus(
    corpus: Corpus,
    providers: ProviderSet,
    *,
    max_failure_fraction: float = 0.1,
) -> MetricProfile:
    rows, failures = collect_metrics(corpus, providers)
    if len(failures) > max_failure_fraction * len(corpus) or not rows:
        raise ProfileFailure(len(failures), len(corpus), failures)
    return aggregate_profile(rows, n_failed=len(failures))


def dump_rows(rows: Sequence[ExampleMetrics]) -> str:
    """Newline-delimited JSON of per-example metrics, input order preserved."""
    lines = [
        json.dumps(r.to_row(), ensure_ascii=False, separators=(",", ":"))
        for r in rows
    ]
    return "\n".join(lines) + ("\n" if lines else "")
