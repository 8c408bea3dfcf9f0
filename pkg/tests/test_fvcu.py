"""Step extraction contract, step judging, and score aggregation."""

from __future__ import annotations

import json

import pytest

from trace_profiler.corpus import Corpus, Example, Provenance
from trace_profiler.errors import (
    CoverageError,
    EmptyText,
    NonVerbatimStep,
    NoVerdicts,
)
from trace_profiler.fvcu import (
    StepVerdict,
    aggregate_fvcu,
    atomize,
    example_weighted_scores,
    judge_example,
    run_pipeline,
    rows_to_ndjson,
    verify_steps,
)
from trace_profiler.providers import RuleChatStub, RuleSegmenter


def make_example(i: int = 0, reasoning: str = "First we add. Then we check. Done now.") -> Example:
    return Example(
        id=f"ex{i:03d}",
        domain="math",
        query="What is 2+2? Show steps.",
        reasoning=reasoning,
        answer="4",
        meta={},
    )


def test_verify_steps_accepts_ordered_verbatim_cover():
    source = "First we add. Then we check."
    verify_steps(source, ["First we add.", "Then we check."], 0.9)


def test_verify_steps_rejects_paraphrase():
    with pytest.raises(NonVerbatimStep):
        verify_steps("First we add.", ["We add first."], 0.5)


def test_verify_steps_rejects_out_of_order():
    source = "First we add. Then we check."
    with pytest.raises(NonVerbatimStep):
        verify_steps(source, ["Then we check.", "First we add."], 0.5)


def test_verify_steps_rejects_overlap():
    # the second step starts before the first one ends
    source = "abcdef"
    with pytest.raises(NonVerbatimStep):
        verify_steps(source, ["abcd", "cdef"], 0.5)


def test_verify_steps_enforces_coverage():
    source = "First we add. Then we check. And much more text here."
    with pytest.raises(CoverageError) as err:
        verify_steps(source, ["First we add."], 0.9)
    assert err.value.coverage < 0.9
    assert err.value.minimum == 0.9


def test_atomize_steps_are_verbatim_substrings():
    example = make_example()
    steps = atomize(example, RuleChatStub())
    assert [s.text for s in steps] == ["First we add.", "Then we check.", "Done now."]
    cursor = 0
    for step in steps:
        position = example.reasoning.find(step.text, cursor)
        assert position >= 0
        cursor = position + len(step.text)
        assert step.source_example_id == example.id


def test_atomize_rejects_blank_reasoning():
    with pytest.raises(EmptyText):
        atomize(make_example(reasoning="   "), RuleChatStub())


class RepairableChat:
    """First reply paraphrases; the repair retry returns a verbatim split."""

    provider_id = "repairable"
    model = "m"

    def __init__(self, good_reply: str):
        self.good_reply = good_reply
        self.calls = 0

    def complete(self, messages, *, temperature=0.0, json_object=False):
        self.calls += 1
        if self.calls == 1:
            return json.dumps({"steps": ["A paraphrase, not a quote."]})
        return self.good_reply


def test_atomize_repair_retry_recovers():
    example = make_example()
    chat = RepairableChat(json.dumps({"steps": [example.reasoning]}))
    steps = atomize(example, chat)
    assert chat.calls == 2
    assert steps[0].text == example.reasoning


def test_atomize_second_violation_propagates():
    class StubbornChat:
        provider_id = "stubborn"
        model = "m"
        calls = 0

        def complete(self, messages, *, temperature=0.0, json_object=False):
            self.calls += 1
            return json.dumps({"steps": ["Never a quote."]})

    chat = StubbornChat()
    with pytest.raises(NonVerbatimStep):
        atomize(make_example(), chat)
    assert chat.calls == 2


def test_judge_example_verdicts_align_with_steps():
    example = make_example(
        reasoning="We start plainly. Everyone knows the rest. We start plainly."
    )
    judged = judge_example(example, RuleChatStub(), RuleSegmenter())
    verdicts = [v for _, v in judged]
    assert [v.step_index for v in verdicts] == [0, 1, 2]
    assert verdicts[0].factuality and verdicts[0].utility
    assert not verdicts[1].factuality
    # third sentence repeats the first: the utility rule sees prior steps
    assert not verdicts[2].utility


def make_verdict(i: int, f=True, v=True, c=True, u=True) -> StepVerdict:
    return StepVerdict(
        step_index=i,
        factuality=f,
        validity=v,
        coherence=c,
        utility=u,
        rationale="r",
    )


def test_aggregate_fvcu_hand_counted_sets():
    # set 1: 4 verdicts, one failure per dimension in distinct verdicts
    set1 = [
        make_verdict(0, f=False),
        make_verdict(1, v=False),
        make_verdict(2, c=False),
        make_verdict(3, u=False),
    ]
    s1 = aggregate_fvcu(set1, n_examples=1)
    assert (s1.factuality_pct, s1.validity_pct, s1.coherence_pct, s1.utility_pct) == (
        75.0,
        75.0,
        75.0,
        75.0,
    )
    # set 2: 5 verdicts, 2 validity failures, everything else clean
    set2 = [make_verdict(i, v=(i >= 2)) for i in range(5)]
    s2 = aggregate_fvcu(set2)
    assert s2.validity_pct == 60.0
    assert s2.factuality_pct == 100.0
    # set 3: 8 verdicts, utility fails in 3
    set3 = [make_verdict(i, u=(i % 3 != 0)) for i in range(8)]
    s3 = aggregate_fvcu(set3)
    assert s3.utility_pct == 62.5
    assert s3.n_steps == 8


def test_aggregate_fvcu_rejects_empty():
    with pytest.raises(NoVerdicts):
        aggregate_fvcu([])


def test_example_weighted_is_mean_of_per_example_rates():
    # example A: 1 of 2 validity passes; example B: 4 of 4
    group_a = [make_verdict(0, v=False), make_verdict(1)]
    group_b = [make_verdict(i) for i in range(4)]
    weighted = example_weighted_scores([group_a, group_b])
    assert weighted["validity"] == 75.0
    assert weighted["factuality"] == 100.0
    # step-weighted view differs: 5 of 6 steps pass
    flat = aggregate_fvcu(group_a + group_b)
    assert flat.validity_pct == pytest.approx(500.0 / 6)


def corpus_with_defects() -> Corpus:
    examples = [
        make_example(0),
        make_example(1, reasoning="So 2 + 2 = 5. The rest is fine."),
        make_example(2, reasoning="Unrelatedly, lunch. Back to work now."),
    ]
    return Corpus(name="t", examples=examples, provenance=Provenance("test", ""))


def test_run_pipeline_rows_follow_corpus_order():
    result = run_pipeline(corpus_with_defects(), RuleChatStub(), RuleSegmenter(), max_workers=3)
    ids = [row["example_id"] for row in result.rows]
    assert ids == sorted(ids)
    assert result.scores.n_examples == 3
    assert result.scores.example_weighted is not None
    by_id = {}
    for row in result.rows:
        by_id.setdefault(row["example_id"], []).append(row)
    assert by_id["ex001"][0]["V"] is False
    assert by_id["ex002"][0]["C"] is False


def test_run_pipeline_twice_is_byte_identical():
    corpus = corpus_with_defects()
    a = run_pipeline(corpus, RuleChatStub(), RuleSegmenter(), max_workers=2)
    b = run_pipeline(corpus, RuleChatStub(), RuleSegmenter(), max_workers=1)
    assert rows_to_ndjson(a.rows).encode() == rows_to_ndjson(b.rows).encode()
    assert a.scores.to_json() == b.scores.to_json()


def test_rows_ndjson_shape():
    result = run_pipeline(corpus_with_defects(), RuleChatStub(), RuleSegmenter())
    first = json.loads(rows_to_ndjson(result.rows).splitlines()[0])
    assert list(first) == [
        "example_id",
        "step_index",
        "step_text",
        "F",
        "V",
        "C",
        "U",
        "rationale",
    ]
