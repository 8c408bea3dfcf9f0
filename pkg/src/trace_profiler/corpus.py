"""Reasoning-supervision corpora: loading, validation, and summary statistics.

A corpus is a newline-delimited JSON file. Two record layouts are accepted:

* ``structured``: ``{"id", "domain", "query", "reasoning", "answer"}`` with an
  optional ``"meta"`` string map.
* ``chat``: ``{"id", "domain", "messages": [...]}`` where the assistant turn
  carries the reasoning span between ``<think>`` and ``</think>`` tags,
  followed by the final answer.

Character counts throughout are Unicode code-point counts, not byte counts,
so non-ASCII text does not skew length statistics.
"""

from __future__ import annotations

import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, runtime_checkable

from .errors import (
    ContentBeforeThink,
    DuplicateId,
    EmptyCorpus,
    MissingField,
    NoThinkSpan,
    SchemaError,
    UnbalancedTags,
)

DOMAINS = ("math", "code", "science", "other")

THINK_OPEN = "<think>"
THINK_CLOSE = "</think>"


@dataclass
class Example:
    """One supervision record: a query, its reasoning trace, and the final answer."""

    id: str
    domain: str
    query: str
    reasoning: str
    answer: str
    meta: dict[str, str] = field(default_factory=dict)

    def total_sequence(self) -> str:
        """Deterministic assembly used for all length accounting."""
        return f"{self.query}\n{self.reasoning}\n{self.answer}"


@dataclass
class Provenance:
    source: str
    loaded_at: str  # ISO timestamp; never serialized into artifacts


@dataclass
class Corpus:
    name: str
    examples: list[Example]
    provenance: Provenance

    def __len__(self) -> int:
        return len(self.examples)

    def ids(self) -> list[str]:
        return [ex.id for ex in self.examples]


@dataclass
class CorpusStats:
    avg_reasoning_tokens: float
    avg_reasoning_chars: float
    avg_total_tokens: float
    avg_total_chars: float
    tokenizer_id: str
    n_examples: int
    domain_histogram: dict[str, int]

    def to_json(self) -> dict:
        return {
            "avg_reasoning_tokens": self.avg_reasoning_tokens,
            "avg_reasoning_chars": self.avg_reasoning_chars,
            "avg_total_tokens": self.avg_total_tokens,
            "avg_total_chars": self.avg_total_chars,
            "tokenizer_id": self.tokenizer_id,
            "n_examples": self.n_examples,
            "domain_histogram": dict(sorted(self.domain_histogram.items())),
        }


@runtime_checkable
class Tokenizer(Protocol):
    """Pluggable token counter. Concrete model tokenizers are configuration;
    the whitespace splitter below is the built-in fallback."""

    id: str

    def count(self, text: str) -> int: ...


class WhitespaceTokenizer:
    id = "whitespace"

    def count(self, text: str) -> int:
        return len(text.split())


def split_reasoning(assistant_text: str) -> tuple[str, str]:
    """Split an assistant turn into (reasoning, answer) at the think tags.

    The text must contain exactly one opening and one closing tag, opening
    first, with nothing but whitespace before the opening tag. The answer is
    everything after the closing tag with leading whitespace trimmed.
    """
    n_open = assistant_text.count(THINK_OPEN)
    n_close = assistant_text.count(THINK_CLOSE)
    if n_open == 0 and n_close == 0:
        raise NoThinkSpan(f"no {THINK_OPEN}...{THINK_CLOSE} span found")
    if n_open != 1 or n_close != 1:
        raise UnbalancedTags(f"expected exactly one tag pair, got {n_open} open / {n_close} close")
    open_at = assistant_text.index(THINK_OPEN)
    close_at = assistant_text.index(THINK_CLOSE)
    if close_at < open_at:
        raise UnbalancedTags("closing tag precedes opening tag")
    if assistant_text[:open_at].strip():
        raise ContentBeforeThink(f"content before {THINK_OPEN}: {assistant_text[:open_at][:40]!r}")
    reasoning = assistant_text[open_at + len(THINK_OPEN): close_at]
    answer = assistant_text[close_at + len(THINK_CLOSE):].lstrip()
    return reasoning, answer


def _require(record: dict, line: int, fname: str) -> str:
    value = record.get(fname)
    if not isinstance(value, str) or value == "":
        raise MissingField(line, fname)
    return value


def _parse_structured(record: dict, line: int) -> Example:
    ex_id = _require(record, line, "id")
    domain = _require(record, line, "domain")
    if domain not in DOMAINS:
        raise SchemaError(line, "domain", f"{domain!r} not one of {DOMAINS}")
    query = _require(record, line, "query")
    reasoning = _require(record, line, "reasoning")
    answer = _require(record, line, "answer")
    meta = record.get("meta") or {}
    if not isinstance(meta, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in meta.items()
    ):
        raise SchemaError(line, "meta", "must be a string-to-string map")
    return Example(id=ex_id, domain=domain, query=query, reasoning=reasoning, answer=answer, meta=meta)


def _parse_chat(record: dict, line: int) -> Example:
    ex_id = _require(record, line, "id")
    domain = _require(record, line, "domain")
    if domain not in DOMAINS:
        raise SchemaError(line, "domain", f"{domain!r} not one of {DOMAINS}")
    messages = record.get("messages")
    if not isinstance(messages, list) or not messages:
        raise MissingField(line, "messages")
    user = next((m for m in messages if isinstance(m, dict) and m.get("role") == "user"), None)
    assistant = next((m for m in messages if isinstance(m, dict) and m.get("role") == "assistant"), None)
    if user is None or not isinstance(user.get("content"), str) or not user["content"]:
        raise MissingField(line, "messages[role=user].content")
    if assistant is None or not isinstance(assistant.get("content"), str) or not assistant["content"]:
        raise MissingField(line, "messages[role=assistant].content")
    try:
        reasoning, answer = split_reasoning(assistant["content"])
    except (NoThinkSpan, UnbalancedTags, ContentBeforeThink) as exc:
        raise SchemaError(line, "messages[role=assistant].content", str(exc)) from exc
    return Example(id=ex_id, domain=domain, query=user["content"], reasoning=reasoning, answer=answer)


def load_corpus(path: str | Path, schema: str = "structured", name: str | None = None) -> Corpus:
    """Load a newline-delimited JSON corpus, failing fast on schema violations."""
    if schema not in ("structured", "chat"):
        raise ValueError(f"unknown schema {schema!r}")
    path = Path(path)
    parse = _parse_structured if schema == "structured" else _parse_chat
    examples: list[Example] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, "<record>", f"invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise SchemaError(line_no, "<record>", "record is not a JSON object")
            example = parse(record, line_no)
            if example.id in seen:
                raise DuplicateId(example.id)
            seen.add(example.id)
            examples.append(example)
    if not examples:
        raise EmptyCorpus(f"no records in {path}")
    provenance = Provenance(source=str(path), loaded_at=_dt.datetime.now(_dt.timezone.utc).isoformat())
    return Corpus(name=name or path.stem, examples=examples, provenance=provenance)


def example_to_record(example: Example) -> dict:
    record = {
        "id": example.id,
        "domain": example.domain,
        "query": example.query,
        "reasoning": example.reasoning,
        "answer": example.answer,
    }
    if example.meta:
        record["meta"] = example.meta
    return record


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the canonical structured form; load -> save round-trips byte-identically."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for example in corpus.examples:
            fh.write(json.dumps(example_to_record(example), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def compute_stats(corpus: Corpus, tokenizer: Tokenizer) -> CorpusStats:
    """Arithmetic means of reasoning / total-sequence lengths over the corpus."""
    if not corpus.examples:
        raise EmptyCorpus(corpus.name)
    n = len(corpus.examples)
    histogram = {d: 0 for d in DOMAINS}
    r_tokens = r_chars = t_tokens = t_chars = 0
    for ex in corpus.examples:
        total = ex.total_sequence()
        r_tokens += tokenizer.count(ex.reasoning)
        r_chars += len(ex.reasoning)
        t_tokens += tokenizer.count(total)
        t_chars += len(total)
        histogram[ex.domain] += 1
    return CorpusStats(
        avg_reasoning_tokens=r_tokens / n,
        avg_reasoning_chars=r_chars / n,
        avg_total_tokens=t_tokens / n,
        avg_total_chars=t_chars / n,
        tokenizer_id=tokenizer.id,
        n_examples=n,
        domain_histogram={d: c for d, c in histogram.items() if c},
    )


def filter_by_length(
    corpus: Corpus, tokenizer: Tokenizer, limit: int = 32768
) -> tuple[Corpus, list[str]]:
    """Drop examples whose total sequence exceeds ``limit`` tokens, preserving order."""
    if limit <= 0:
        raise ValueError(f"token limit must be positive, got {limit}")
    kept: list[Example] = []
    removed: list[str] = []
    for ex in corpus.examples:
        if tokenizer.count(ex.total_sequence()) <= limit:
            kept.append(ex)
        else:
            removed.append(ex.id)
    if not kept:
        raise EmptyCorpus(f"length filter at {limit} tokens removed every example of {corpus.name}")
    return Corpus(name=corpus.name, examples=kept, provenance=corpus.provenance), removed


def subset(corpus: Corpus, ids: Iterable[str], name: str | None = None) -> Corpus:
    """Corpus restricted to ``ids``, keeping the original example order."""
    wanted = set(ids)
    picked = [ex for ex in corpus.examples if ex.id in wanted]
    if not picked:
        raise EmptyCorpus(f"subset of {corpus.name} is empty")
    return Corpus(name=name or corpus.name, examples=picked, provenance=corpus.provenance)
