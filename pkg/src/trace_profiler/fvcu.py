"""Two-stage step audit: atomize a reasoning trace, then judge each step.

The atomizer must return verbatim, ordered, non-overlapping substrings of
the trace covering at least 90% of its non-whitespace characters; anything
else is rejected here regardless of what the provider claims. The judge
returns one constrained reply per step with four boolean dimensions
(factuality, validity, coherence, utility) judged against the query, the
problem's premises, and the steps so far.

Steps within one example are judged strictly in order because coherence
depends on the preceding steps; distinct examples may run concurrently.
Aggregation is step-weighted, with an example-weighted view kept alongside.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .corpus import Corpus, Example
from .errors import (
    CoverageError,
    EmptyText,
    MalformedVerdict,
    NonVerbatimStep,
    NoVerdicts,
)
from .providers import ChatProvider, SentenceSegmenter
from .resources import prompt_text

ATOMIZER_TEMPLATE = "atomizer_v1.txt"
JUDGE_STEP_TEMPLATE = "judge_step_v1.txt"

DIMENSIONS = ("factuality", "validity", "coherence", "utility")
MIN_COVERAGE = 0.9


@dataclass
class AtomicStep:
    index: int
    text: str
    source_example_id: str


@dataclass
class StepVerdict:
    step_index: int
    factuality: bool
    validity: bool
    coherence: bool
    utility: bool
    rationale: str

    def passes(self, dimension: str) -> bool:
        return bool(getattr(self, dimension))


@dataclass
class FvcuScores:
    factuality_pct: float
    validity_pct: float
    coherence_pct: float
    utility_pct: float
    n_steps: int
    n_examples: int
    example_weighted: dict[str, float] | None = None

    def to_json(self) -> dict:
        out = {
            "factuality_pct": self.factuality_pct,
            "validity_pct": self.validity_pct,
            "coherence_pct": self.coherence_pct,
            "utility_pct": self.utility_pct,
            "n_steps": self.n_steps,
            "n_examples": self.n_examples,
        }
        if self.example_weighted is not None:
            out["example_weighted"] = dict(self.example_weighted)
        return out

    def as_metric_table_row(self) -> dict[str, float]:
        return {
            "factuality": self.factuality_pct,
            "validity": self.validity_pct,
            "coherence": self.coherence_pct,
            "utility": self.utility_pct,
        }


def _non_whitespace(text: str) -> int:
    return sum(1 for ch in text if not ch.isspace())


def verify_steps(source: str, steps: Sequence[str], min_coverage: float) -> None:
    """Enforce the extraction contract on raw atomizer output.

    Each step must be found verbatim at or after the end of the previous
    one, which gives order and non-overlap in one scan.
    """
    cursor = 0
    covered = 0
    for step in steps:
        if not step:
            raise NonVerbatimStep("(empty step)")
        position = source.find(step, cursor)
        if position < 0:
            raise NonVerbatimStep(step)
        cursor = position + len(step)
        covered += _non_whitespace(step)
    total = _non_whitespace(source)
    coverage = covered / total if total else 0.0
    if coverage < min_coverage:
        raise CoverageError(coverage, min_coverage)


def _parse_steps(reply: str) -> list[str]:
    try:
        data = json.loads(reply)
    except ValueError as exc:
        raise MalformedVerdict(f"atomizer reply is not JSON: {reply[:80]!r}") from exc
    steps = data.get("steps") if isinstance(data, dict) else None
    if (
        not isinstance(steps, list)
        or not steps
        or not all(isinstance(s, str) for s in steps)
    ):
        raise MalformedVerdict("atomizer reply lacks a non-empty 'steps' list")
    return steps


def atomize(
    example: Example,
    chat: ChatProvider,
    *,
    min_coverage: float = MIN_COVERAGE,
) -> list[AtomicStep]:
    """Split one reasoning trace into verified atomic steps.

    A reply that fails parsing or verification earns a single repair retry
    with the violation spelled out; a second failure propagates.
    """
    if not example.reasoning.strip():
        raise EmptyText(f"example {example.id} has empty reasoning")
    messages = [
        {"role": "system", "content": prompt_text(ATOMIZER_TEMPLATE)},
        {
            "role": "user",
            "content": json.dumps(
                {"reasoning": example.reasoning}, ensure_ascii=False
            ),
        },
    ]
    reply = chat.complete(messages, temperature=0.0, json_object=True)
    try:
        steps = _parse_steps(reply)
        verify_steps(example.reasoning, steps, min_coverage)
    except (MalformedVerdict, NonVerbatimStep, CoverageError) as first:
        repair = messages + [
            {"role": "assistant", "content": reply},
            {
                "role": "user",
                "content": (
                    f"Your reply was rejected: {first}. Reply again with only "
                    '{"steps": [...]} where every step is an exact contiguous '
                    "substring of the trace, in order, covering it."
                ),
            },
        ]
        reply = chat.complete(repair, temperature=0.0, json_object=True)
        steps = _parse_steps(reply)
        verify_steps(example.reasoning, steps, min_coverage)
    return [
        AtomicStep(index=i, text=s, source_example_id=example.id)
        for i, s in enumerate(steps)
    ]


@dataclass
class JudgeContext:
    example_id: str
    query: str
    premises: tuple[str, ...]
    prior_steps: tuple[str, ...]


def _parse_verdict(reply: str, step_index: int) -> StepVerdict | None:
    try:
        data = json.loads(reply)
    except ValueError:
        return None
    if not isinstance(data, dict):
        return None
    if not all(isinstance(data.get(d), bool) for d in DIMENSIONS):
        return None
    rationale = data.get("rationale")
    if not isinstance(rationale, str) or not rationale.strip():
        return None
    return StepVerdict(
        step_index=step_index,
        factuality=data["factuality"],
        validity=data["validity"],
        coherence=data["coherence"],
        utility=data["utility"],
        rationale=rationale,
    )


def judge_step(
    step: AtomicStep,
    context: JudgeContext,
    chat: ChatProvider,
    *,
    retries: int = 2,
) -> StepVerdict:
    """One constrained judge call covering all four dimensions."""
    if step.source_example_id != context.example_id:
        raise ValueError(
            f"step from {step.source_example_id} judged against context "
            f"of {context.example_id}"
        )
    messages = [
        {"role": "system", "content": prompt_text(JUDGE_STEP_TEMPLATE)},
        {
            "role": "user",
            "content": json.dumps(
                {
                    "query": context.query,
                    "premises": list(context.premises),
                    "prior_steps": list(context.prior_steps),
                    "step": step.text,
                },
                ensure_ascii=False,
            ),
        },
    ]
    last = ""
    for _ in range(retries + 1):
        reply = chat.complete(messages, temperature=0.0, json_object=True)
        verdict = _parse_verdict(reply, step.index)
        if verdict is not None:
            return verdict
        last = reply
    raise MalformedVerdict(
        f"judge reply for {context.example_id}[{step.index}] stayed malformed "
        f"after {retries} retries: {last[:80]!r}"
    )


def judge_example(
    example: Example,
    chat: ChatProvider,
    segmenter: SentenceSegmenter,
    *,
    min_coverage: float = MIN_COVERAGE,
    retries: int = 2,
) -> list[tuple[AtomicStep, StepVerdict]]:
    """Atomize then judge one example, steps strictly in order."""
    steps = atomize(example, chat, min_coverage=min_coverage)
    premises = tuple(segmenter.segment(example.query)) if example.query.strip() else ()
    judged: list[tuple[AtomicStep, StepVerdict]] = []
    prior: list[str] = []
    for step in steps:
        context = JudgeContext(
            example_id=example.id,
            query=example.query,
            premises=premises,
            prior_steps=tuple(prior),
        )
        verdict = judge_step(step, context, chat, retries=retries)
        judged.append((step, verdict))
        prior.append(step.text)
    return judged


def aggregate_fvcu(verdicts: Sequence[StepVerdict], n_examples: int = 0) -> FvcuScores:
    """Step-weighted pass percentages per dimension."""
    if not verdicts:
        raise NoVerdicts("no verdicts to aggregate")
    n = len(verdicts)
    pct = {
        d: 100.0 * sum(1 for v in verdicts if v.passes(d)) / n for d in DIMENSIONS
    }
    return FvcuScores(
        factuality_pct=pct["factuality"],
        validity_pct=pct["validity"],
        coherence_pct=pct["coherence"],
        utility_pct=pct["utility"],
        n_steps=n,
        n_examples=n_examples,
    )


def example_weighted_scores(
    per_example: Sequence[Sequence[StepVerdict]],
) -> dict[str, float]:
    """Mean over examples of each example's own pass percentage."""
    groups = [g for g in per_example if g]
    if not groups:
        raise NoVerdicts("no verdicts to aggregate")
    out: dict[str, float] = {}
    for dimension in DIMENSIONS:
        per = [
            100.0 * sum(1 for v in g if v.passes(dimension)) / len(g) for g in groups
        ]
        out[dimension] = sum(per) / len(per)
    return out


@dataclass
class PipelineResult:
    rows: list[dict]
    scores: FvcuScores


def run_pipeline(
    corpus: Corpus,
    chat: ChatProvider,
    segmenter: SentenceSegmenter,
    *,
    max_workers: int = 1,
    min_coverage: float = MIN_COVERAGE,
    retries: int = 2,
) -> PipelineResult:
    """Audit a whole corpus; row order follows corpus order regardless of
    worker count."""

    def process(example: Example) -> list[tuple[AtomicStep, StepVerdict]]:
        return judge_example(
            example, chat, segmenter, min_coverage=min_coverage, retries=retries
        )

    if max_workers <= 1:
        judged_lists = [process(ex) for ex in corpus.examples]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            judged_lists = list(pool.map(process, corpus.examples))

    rows: list[dict] = []
    all_verdicts: list[StepVerdict] = []
    per_example: list[list[StepVerdict]] = []
    for example, judged in zip(corpus.examples, judged_lists):
        verdicts = [v for _, v in judged]
        per_example.append(verdicts)
        all_verdicts.extend(verdicts)
        for step, verdict in judged:
            rows.append(
                {
                    "example_id": example.id,
                    "step_index": step.index,
                    "step_text": step.text,
                    "F": verdict.factuality,
                    "V": verdict.validity,
                    "C": verdict.coherence,
                    "U": verdict.utility,
                    "rationale": verdict.rationale,
                }
            )
    scores = aggregate_fvcu(all_verdicts, n_examples=len(corpus))
    scores.example_weighted = example_weighted_scores(per_example)
    return PipelineResult(rows=rows, scores=scores)


def rows_to_ndjson(rows: Sequence[dict]) -> str:
    lines = [
        json.dumps(row, ensure_ascii=False, separators=(",", ":")) for row in rows
    ]
    return "\n".join(lines) + ("\n" if lines else "")
