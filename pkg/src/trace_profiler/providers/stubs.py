"""Deterministic offline providers.

Every stub is a pure function of its inputs and a seed, so any pipeline run
entirely on stubs is bit-reproducible and needs no network. They are default
providers for offline runs and the backbone of the test suite; they make no
attempt to be linguistically accurate.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from typing import Sequence

from ..errors import PermanentProviderError

_SENTENCE_BREAK = re.compile(r"(?<=[.!?…])\s+")
_ARITHMETIC = re.compile(r"(\d+)\s*([+\-*])\s*(\d+)\s*=\s*(\d+)")
_TEMPLATE_TAG = re.compile(r"\[template:([a-z_.0-9]+)\]")


def split_sentences(text: str) -> list[str]:
    """Split on whitespace that follows terminal punctuation.

    Non-empty input always yields at least one sentence; a trailing fragment
    without terminal punctuation counts as a sentence.
    """
    parts = _SENTENCE_BREAK.split(text.strip())
    return [p.strip() for p in parts if p.strip()]


class RuleSegmenter:
    provider_id = "stub-segmenter"

    def segment(self, text: str) -> list[str]:
        return split_sentences(text)


class LogDepthSyntax:
    """Depth surrogate: 1 + floor(log2(tokens + 1)) on whitespace tokens."""

    provider_id = "stub-syntax"

    def parse_depth(self, sentence: str) -> int:
        tokens = len(sentence.split())
        return 1 + int(math.log2(tokens + 1))


class UniformScorer:
    """Assigns every whitespace token probability 1/vocab_size.

    NLLs are in nats, so perplexity over any text is exactly vocab_size.
    """

    provider_id = "stub-scorer"

    def __init__(self, vocab_size: int = 1000) -> None:
        if vocab_size < 1:
            raise ValueError(f"vocab_size must be >= 1, got {vocab_size}")
        self.vocab_size = vocab_size
        self.model = f"uniform-{vocab_size}"

    def score(self, text: str) -> list[float]:
        nll = math.log(self.vocab_size)
        return [nll for _ in text.split()]


class HashEmbedder:
    """64-dim embedding from signed byte-trigram buckets, L2-normalized.

    Trigrams are taken over the UTF-8 bytes framed by sentinel bytes so even
    one-character texts produce features. Hashing is keyed BLAKE2b, never the
    process-salted builtin hash, so vectors are stable across processes.
    """

    def __init__(
        self,
        dimension: int = 64,
        seed: int = 0,
        max_chars: int | None = None,
    ) -> None:
        if dimension < 1:
            raise ValueError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension
        self.seed = seed
        self.max_chars = max_chars
        self.provider_id = "stub-hash-embedder"
        self.model = f"hash-{dimension}d"
        self._key = seed.to_bytes(8, "big", signed=True)

    def _vector(self, text: str) -> list[float]:
        data = b"\x02" + text.encode("utf-8") + b"\x03"
        acc = [0.0] * self.dimension
        for i in range(len(data) - 2):
            digest = hashlib.blake2b(
                data[i : i + 3], digest_size=8, key=self._key
            ).digest()
            value = int.from_bytes(digest, "big")
            bucket = value % self.dimension
            sign = 1.0 if (value >> 32) & 1 else -1.0
            acc[bucket] += sign
        norm = math.sqrt(sum(a * a for a in acc))
        if norm == 0.0:
            # Full cancellation across buckets; pin a deterministic direction.
            acc[data[0] % self.dimension] = 1.0
            norm = 1.0
        return [a / norm for a in acc]

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        return [self._vector(t) for t in texts]


def _normalize(text: str) -> str:
    return " ".join(text.split()).casefold()


def _bad_arithmetic(step: str) -> bool:
    for left, op, right, claimed in _ARITHMETIC.findall(step):
        a, b, c = int(left), int(right), int(claimed)
        actual = a + b if op == "+" else a - b if op == "-" else a * b
        if actual != c:
            return True
    return False


class RuleChatStub:
    """Chat provider driven by fixed rules instead of a model.

    Dispatch order: first the optional ``rules`` table, a list of
    ``(substring, reply)`` pairs matched against the last user message; then
    the ``[template:...]`` tag found in the system message. Template
    behavior:

    - ``atomizer.v1``: steps are the sentence splits of the trace.
    - ``judge_step.v1``: all four dimensions pass unless a rule fires.
      Utility fails when the step repeats an earlier step after whitespace
      and case normalization (a reasoning loop). Validity fails when the
      step contains a wrong ``a op b = c`` equation for ``+ - *``. Factuality
      fails when the step leans on unstated authority ("everyone knows").
      Coherence fails when the step flags its own topic break
      ("unrelatedly").
    - ``judge_answer.v1``: correct iff prediction equals reference after
      normalization.
    """

    def __init__(self, rules: Sequence[tuple[str, str]] = ()) -> None:
        self.rules = list(rules)
        self.provider_id = "stub-chat"
        self.model = "rule-table"

    def complete(
        self,
        messages: Sequence[dict],
        *,
        temperature: float = 0.0,
        json_object: bool = False,
    ) -> str:
        system = next(
            (m["content"] for m in messages if m.get("role") == "system"), ""
        )
        user = next(
            (m["content"] for m in reversed(messages) if m.get("role") == "user"),
            "",
        )
        for needle, reply in self.rules:
            if needle in user:
                return reply
        tag = _TEMPLATE_TAG.search(system)
        if tag is None:
            raise PermanentProviderError(
                "stub chat provider matched no rule and found no template tag"
            )
        name = tag.group(1)
        payload = json.loads(user)
        if name == "atomizer.v1":
            return self._atomize(payload)
        if name == "judge_step.v1":
            return self._judge_step(payload)
        if name == "judge_answer.v1":
            return self._judge_answer(payload)
        raise PermanentProviderError(f"stub chat provider: unknown template {name!r}")

    def _atomize(self, payload: dict) -> str:
        steps = split_sentences(payload["reasoning"])
        return json.dumps({"steps": steps}, ensure_ascii=False)

    def _judge_step(self, payload: dict) -> str:
        step = payload["step"]
        prior = payload.get("prior_steps", [])
        fired: list[str] = []
        factuality = "everyone knows" not in step.casefold()
        if not factuality:
            fired.append("appeal to unstated authority")
        validity = not _bad_arithmetic(step)
        if not validity:
            fired.append("incorrect arithmetic")
        coherence = "unrelatedly" not in step.casefold()
        if not coherence:
            fired.append("topic break")
        utility = _normalize(step) not in {_normalize(p) for p in prior}
        if not utility:
            fired.append("repeats an earlier step")
        rationale = "; ".join(fired) if fired else "no rule fired"
        return json.dumps(
            {
                "factuality": factuality,
                "validity": validity,
                "coherence": coherence,
                "utility": utility,
                "rationale": rationale,
            },
            ensure_ascii=False,
        )

    def _judge_answer(self, payload: dict) -> str:
        correct = _normalize(payload["prediction"]) == _normalize(payload["reference"])
        return json.dumps({"correct": correct})
