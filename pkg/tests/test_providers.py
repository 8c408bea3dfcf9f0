"""Retry policy, response cache, stub behavior, and the parallelism gate."""

from __future__ import annotations

import json

import pytest

from trace_profiler.errors import (
    PermanentProviderError,
    RateLimited,
    TransientProviderError,
)
from trace_profiler.providers import (
    CachedChat,
    CachedEmbedder,
    HashEmbedder,
    ResponseCache,
    RuleChatStub,
    RuleSegmenter,
    UniformScorer,
    call_with_retries,
    canonical_json,
    offline_provider_set,
    request_key,
)
from trace_profiler.providers.limits import get_parallelism, set_parallelism


def test_retry_recovers_after_transient_failures():
    calls = []
    delays = []

    def flaky():
        calls.append(1)
        if len(calls) <= 2:
            raise RateLimited("throttled")
        return "ok"

    result = call_with_retries(flaky, sleep=delays.append)
    assert result == "ok"
    assert len(calls) == 3
    assert delays == [0.5, 1.0]


def test_retry_gives_up_after_budget():
    calls = []
    delays = []

    def always_down():
        calls.append(1)
        raise TransientProviderError("unavailable")

    with pytest.raises(PermanentProviderError):
        call_with_retries(always_down, max_retries=5, sleep=delays.append)
    assert len(calls) == 6
    # exponential from the base, capped
    assert delays == [0.5, 1.0, 2.0, 4.0, 8.0]


def test_retry_delay_is_capped():
    delays = []

    def always_down():
        raise TransientProviderError("unavailable")

    with pytest.raises(PermanentProviderError):
        call_with_retries(always_down, max_retries=8, sleep=delays.append)
    assert max(delays) == 30.0


def test_permanent_error_is_not_retried():
    calls = []

    def refused():
        calls.append(1)
        raise PermanentProviderError("bad request")

    with pytest.raises(PermanentProviderError):
        call_with_retries(refused, sleep=lambda _: None)
    assert len(calls) == 1


def test_request_key_ignores_dict_insertion_order():
    a = {"kind": "chat", "model": "m", "request": {"x": 1, "y": 2}}
    b = {"request": {"y": 2, "x": 1}, "model": "m", "kind": "chat"}
    assert request_key(a) == request_key(b)
    assert canonical_json(a) == canonical_json(b)


class CountingChat:
    provider_id = "counting"
    model = "m"

    def __init__(self):
        self.calls = 0

    def complete(self, messages, *, temperature=0.0, json_object=False):
        self.calls += 1
        return f"reply:{messages[-1]['content']}"


def test_cached_chat_second_call_hits_cache(tmp_path):
    inner = CountingChat()
    chat = CachedChat(inner, ResponseCache(tmp_path))
    messages = [{"role": "user", "content": "hello"}]
    first = chat.complete(messages)
    second = chat.complete(messages)
    assert first == second == "reply:hello"
    assert inner.calls == 1


def test_cached_chat_any_byte_change_misses(tmp_path):
    inner = CountingChat()
    chat = CachedChat(inner, ResponseCache(tmp_path))
    chat.complete([{"role": "user", "content": "hello"}])
    chat.complete([{"role": "user", "content": "hello!"}])
    chat.complete([{"role": "user", "content": "hello"}], temperature=0.5)
    assert inner.calls == 3


def test_corrupt_cache_entry_is_miss_then_overwritten(tmp_path):
    inner = CountingChat()
    cache = ResponseCache(tmp_path)
    chat = CachedChat(inner, cache)
    messages = [{"role": "user", "content": "hello"}]
    chat.complete(messages)
    entry_path = next(tmp_path.glob("*.json"))
    entry_path.write_text('{"key": "tampered"}')
    assert chat.complete(messages) == "reply:hello"
    assert inner.calls == 2
    # the refetch rewrote a valid entry
    entry = json.loads(entry_path.read_text())
    assert entry["reply"] == "reply:hello"
    assert chat.complete(messages) == "reply:hello"
    assert inner.calls == 2


def test_cache_reply_hash_guard(tmp_path):
    inner = CountingChat()
    cache = ResponseCache(tmp_path)
    chat = CachedChat(inner, cache)
    chat.complete([{"role": "user", "content": "hello"}])
    entry_path = next(tmp_path.glob("*.json"))
    entry = json.loads(entry_path.read_text())
    entry["request"] = entry["request"].replace("hello", "jello")
    entry_path.write_text(json.dumps(entry))
    chat.complete([{"role": "user", "content": "hello"}])
    assert inner.calls == 2


def test_cached_embedder_roundtrips_vectors(tmp_path):
    class CountingEmbedder:
        provider_id = "counting-embed"
        model = "m"
        dimension = 4
        max_chars = None

        def __init__(self):
            self.calls = 0

        def embed(self, texts):
            self.calls += 1
            return [[0.5, -0.25, 0.125, float(len(t))] for t in texts]

    inner = CountingEmbedder()
    embedder = CachedEmbedder(inner, ResponseCache(tmp_path))
    first = embedder.embed(["abc", "de"])
    second = embedder.embed(["abc", "de"])
    assert first == second
    assert inner.calls == 1


def test_rule_segmenter_splits_on_terminators():
    segmenter = RuleSegmenter()
    assert segmenter.segment("One. Two! Three? Four") == ["One.", "Two!", "Three?", "Four"]
    assert segmenter.segment("No terminator") == ["No terminator"]
    assert segmenter.segment("  padded.  spaced.  ") == ["padded.", "spaced."]


def test_uniform_scorer_one_value_per_token():
    scorer = UniformScorer(vocab_size=100)
    values = scorer.score("three plain tokens")
    assert len(values) == 3
    assert all(v == values[0] for v in values)


def test_stub_chat_rules_table_takes_precedence():
    stub = RuleChatStub(rules=[("magic phrase", '{"canned": true}')])
    reply = stub.complete(
        [
            {"role": "system", "content": "[template:judge_answer.v1] irrelevant"},
            {"role": "user", "content": "contains the magic phrase"},
        ]
    )
    assert reply == '{"canned": true}'


def test_stub_chat_unknown_template_is_permanent_error():
    stub = RuleChatStub()
    with pytest.raises(PermanentProviderError):
        stub.complete(
            [
                {"role": "system", "content": "[template:unknown.v9]"},
                {"role": "user", "content": "{}"},
            ]
        )
    with pytest.raises(PermanentProviderError):
        stub.complete([{"role": "user", "content": "no system message"}])


def test_stub_judge_step_rules():
    stub = RuleChatStub()

    def judge(step, prior=()):
        reply = stub.complete(
            [
                {"role": "system", "content": "[template:judge_step.v1]"},
                {
                    "role": "user",
                    "content": json.dumps({"step": step, "prior_steps": list(prior)}),
                },
            ]
        )
        return json.loads(reply)

    clean = judge("Adding the groups gives 2 + 2 = 4.")
    assert all(clean[d] for d in ("factuality", "validity", "coherence", "utility"))
    assert clean["rationale"] == "no rule fired"
    assert judge("Everyone knows this is true.")["factuality"] is False
    assert judge("So 2 + 2 = 5.")["validity"] is False
    assert judge("Unrelatedly, the sky is blue.")["coherence"] is False
    repeated = judge("The same step.", prior=["the  SAME step."])
    assert repeated["utility"] is False
    assert "repeats" in repeated["rationale"]


def test_stub_atomizer_returns_sentences():
    stub = RuleChatStub()
    reply = stub.complete(
        [
            {"role": "system", "content": "[template:atomizer.v1]"},
            {"role": "user", "content": json.dumps({"reasoning": "First. Second. Third."})},
        ]
    )
    assert json.loads(reply) == {"steps": ["First.", "Second.", "Third."]}


def test_offline_provider_set_is_complete():
    providers = offline_provider_set(seed=0)
    assert providers.chat is not None
    assert providers.embedder.dimension == 64
    assert providers.scorer is not None
    assert providers.segmenter is not None
    assert providers.syntax is not None


def test_hash_embedder_respects_max_chars_attribute():
    embedder = HashEmbedder(dimension=8, seed=0, max_chars=100)
    assert embedder.max_chars == 100


def test_parallelism_gate_roundtrip():
    original = get_parallelism()
    try:
        set_parallelism(3)
        assert get_parallelism() == 3
        with pytest.raises(ValueError):
            set_parallelism(0)
    finally:
        set_parallelism(original)
