"""Benchmark scoring via a judge model, plus the report arithmetic.

A judge marks each prediction correct or incorrect against the reference
answer (temperature 0, constrained JSON, bounded retries). Accuracies,
relative changes, and macro averages are computed from unrounded values and
rounded only when rendered. The audit path compares two verdict lists with
observed agreement and Cohen's kappa.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Hashable, Mapping, Sequence

from .errors import (
    DuplicateId,
    EmptyInput,
    LengthMismatch,
    MalformedVerdict,
    MissingField,
    SchemaError,
    ZeroBaseline,
)
from .providers import ChatProvider
from .resources import prompt_text

JUDGE_ANSWER_TEMPLATE = "judge_answer_v1.txt"

_PREDICTION_FIELDS = (
    "example_id",
    "benchmark",
    "model_variant",
    "query",
    "reference",
    "prediction",
)


@dataclass
class PredictionRecord:
    example_id: str
    benchmark: str
    model_variant: str
    query: str
    reference: str
    prediction: str

    def key(self) -> tuple[str, str, str]:
        return (self.example_id, self.benchmark, self.model_variant)


def load_predictions(path: str | Path) -> list[PredictionRecord]:
    """Read newline-delimited prediction records, failing on the first bad
    line with its line number."""
    path = Path(path)
    records: list[PredictionRecord] = []
    seen: set[tuple[str, str, str]] = set()
    with path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except ValueError as exc:
                raise SchemaError(line_no, "", f"invalid JSON: {exc}") from exc
            if not isinstance(raw, dict):
                raise SchemaError(line_no, "", "line is not a JSON object")
            for field in _PREDICTION_FIELDS:
                if field not in raw:
                    raise MissingField(line_no, field)
                if not isinstance(raw[field], str):
                    raise SchemaError(line_no, field, "must be a string")
            record = PredictionRecord(**{f: raw[f] for f in _PREDICTION_FIELDS})
            if record.key() in seen:
                raise DuplicateId("/".join(record.key()))
            seen.add(record.key())
            records.append(record)
    if not records:
        raise EmptyInput(f"no prediction records in {path}")
    return records


def judge_prediction(
    record: PredictionRecord, chat: ChatProvider, *, retries: int = 2
) -> bool:
    """Ask the judge for a binary decision on one prediction."""
    for field in ("query", "reference", "prediction"):
        if not getattr(record, field):
            raise EmptyInput(f"prediction record {record.key()} has empty {field}")
    messages = [
        {"role": "system", "content": prompt_text(JUDGE_ANSWER_TEMPLATE)},
        {
            "role": "user",
            "content": json.dumps(
                {
                    "query": record.query,
                    "reference": record.reference,
                    "prediction": record.prediction,
                },
                ensure_ascii=False,
            ),
        },
    ]
    last_error = ""
    for _ in range(retries + 1):
        reply = chat.complete(messages, temperature=0.0, json_object=True)
        try:
            data = json.loads(reply)
        except ValueError:
            last_error = f"not JSON: {reply[:80]!r}"
            continue
        if isinstance(data, dict) and isinstance(data.get("correct"), bool):
            return data["correct"]
        last_error = f"no boolean 'correct' field: {reply[:80]!r}"
    raise MalformedVerdict(
        f"judge reply for {record.key()} stayed malformed after "
        f"{retries} retries ({last_error})"
    )


def judge_records(
    records: Sequence[PredictionRecord],
    chat: ChatProvider,
    *,
    retries: int = 2,
    max_workers: int = 1,
) -> list[bool]:
    """Judge every record, preserving input order in the result."""
    if max_workers <= 1:
        return [judge_prediction(r, chat, retries=retries) for r in records]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(lambda r: judge_prediction(r, chat, retries=retries), records))


def accuracy(judgments: Sequence[bool]) -> float:
    if not judgments:
        raise EmptyInput("accuracy requires at least one judgment")
    return sum(1 for j in judgments if j) / len(judgments)


def relative_change(base: float, tuned: float) -> float:
    """Percent change of tuned over base."""
    if base == 0:
        raise ZeroBaseline("relative change undefined for a zero baseline")
    return 100.0 * (tuned - base) / base


def macro_average(scores: Sequence[float]) -> float:
    if not scores:
        raise EmptyInput("macro_average requires at least one score")
    return sum(scores) / len(scores)


@dataclass
class BenchmarkResult:
    model_variant: str
    benchmark: str
    accuracy: float
    n: int


def score_records(
    records: Sequence[PredictionRecord], judgments: Sequence[bool]
) -> list[BenchmarkResult]:
    """Accuracy per (model_variant, benchmark), sorted by that key."""
    grouped = score_grouped(records, judgments, lambda r: (r.model_variant, r.benchmark))
    return [
        BenchmarkResult(
            model_variant=variant, benchmark=benchmark, accuracy=acc, n=n
        )
        for (variant, benchmark), (acc, n) in sorted(grouped.items())
    ]


def score_grouped(
    records: Sequence[PredictionRecord],
    judgments: Sequence[bool],
    keyfn: Callable[[PredictionRecord], Hashable],
) -> dict[Hashable, tuple[float, int]]:
    """Map group key -> (accuracy, n) for an arbitrary grouping."""
    if len(records) != len(judgments):
        raise LengthMismatch(
            f"{len(records)} records but {len(judgments)} judgments"
        )
    if not records:
        raise EmptyInput("no records to score")
    counts: dict[Hashable, list[int]] = {}
    for record, verdict in zip(records, judgments):
        bucket = counts.setdefault(keyfn(record), [0, 0])
        bucket[0] += 1 if verdict else 0
        bucket[1] += 1
    return {key: (correct / n, n) for key, (correct, n) in counts.items()}


def results_csv(results: Sequence[BenchmarkResult], baseline: str | None = None) -> str:
    """CSV of per-benchmark accuracies with percent change vs a baseline
    variant. Baseline rows show 0; cells without a usable baseline (absent,
    or zero accuracy) render as undefined."""
    base_by_benchmark: dict[str, float] = {}
    if baseline is not None:
        for result in results:
            if result.model_variant == baseline:
                base_by_benchmark[result.benchmark] = result.accuracy
    lines = ["model_variant,benchmark,n,accuracy,relative_change_pct"]
    for result in results:
        if baseline is None:
            change = ""
        else:
            base = base_by_benchmark.get(result.benchmark)
            if base is None or base == 0:
                change = "undefined"
            else:
                change = repr(relative_change(base, result.accuracy))
        lines.append(
            f"{result.model_variant},{result.benchmark},{result.n},"
            f"{result.accuracy!r},{change}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class AuditReport:
    agreement: float
    kappa: float | None
    kappa_undefined: bool
    n: int
    confusion: dict[str, int]

    def to_json(self) -> dict:
        return {
            "agreement": self.agreement,
            "kappa": self.kappa,
            "kappa_undefined": self.kappa_undefined,
            "n": self.n,
            "confusion": dict(self.confusion),
        }


def cohen_kappa(a: Sequence[bool], b: Sequence[bool]) -> AuditReport:
    """Two-rater binary agreement: observed rate and chance-corrected kappa.

    When chance agreement is 1 (both raters constant and equal marginals),
    kappa is undefined and flagged rather than forced to a number.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"rater lists differ: {len(a)} vs {len(b)}")
    if not a:
        raise EmptyInput("cohen_kappa requires at least one pair")
    n = len(a)
    tt = sum(1 for x, y in zip(a, b) if x and y)
    tf = sum(1 for x, y in zip(a, b) if x and not y)
    ft = sum(1 for x, y in zip(a, b) if not x and y)
    ff = n - tt - tf - ft
    observed = (tt + ff) / n
    p_a = (tt + tf) / n
    p_b = (tt + ft) / n
    expected = p_a * p_b + (1 - p_a) * (1 - p_b)
    if expected == 1.0:
        kappa = None
        undefined = True
    else:
        kappa = (observed - expected) / (1 - expected)
        undefined = False
    return AuditReport(
        agreement=observed,
        kappa=kappa,
        kappa_undefined=undefined,
        n=n,
        confusion={
            "true_true": tt,
            "true_false": tf,
            "false_true": ft,
            "false_false": ff,
        },
    )


def implied_chance_agreement(observed: float, kappa: float) -> float:
    """Solve the kappa definition for chance agreement.

    Lets a reported (agreement, kappa) pair be checked for internal
    consistency when the underlying confusion counts are unavailable.
    """
    if kappa == 1.0:
        raise ZeroBaseline("chance agreement unrecoverable at kappa = 1")
    return (observed - kappa) / (1 - kappa)


def domain_grouping(
    domain_of: Mapping[str, str]
) -> Callable[[PredictionRecord], tuple[str, str]]:
    """Group key (model_variant, domain) using an example-id -> domain map."""

    def keyfn(record: PredictionRecord) -> tuple[str, str]:
        return (record.model_variant, domain_of[record.example_id])

    return keyfn
