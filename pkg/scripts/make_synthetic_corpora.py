#!/usr/bin/env python3
"""Regenerate the bundled synthetic corpora and performance fixture.

Four style variants share the same 50 example ids and underlying problems;
they differ in verbosity and in deliberately planted defects that the stub
judge detects (wrong arithmetic, appeals to authority, topic breaks,
repeated steps). Output is deterministic for a fixed seed, so the committed
files can be reproduced exactly.

Usage: python scripts/make_synthetic_corpora.py [--out src/trace_profiler/data/synthetic]
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from trace_profiler.corpus import Corpus, Example, Provenance, save_corpus

SEED = 7
N_EXAMPLES = 50
DOMAIN_PLAN = ["math"] * 15 + ["code"] * 9 + ["science"] * 21 + ["other"] * 5
VARIANTS = ("detailed", "summarized", "babythink", "lengthy")


def math_problem(rng: random.Random) -> dict:
    a, b = rng.randint(12, 97), rng.randint(13, 88)
    c = a + b
    return {
        "query": (
            f"A crate holds {a} red apples and {b} green apples. "
            "How many apples are in the crate? Give the total."
        ),
        "answer": str(c),
        "facts": {"a": a, "b": b, "c": c},
        "kind": "math",
    }


def code_problem(rng: random.Random) -> dict:
    k, x = rng.randint(3, 9), rng.randint(4, 19)
    y = x * k
    return {
        "query": (
            f"The function scale(x) returns x * {k}. "
            f"What does scale({x}) return? Trace the call."
        ),
        "answer": str(y),
        "facts": {"k": k, "x": x, "y": y},
        "kind": "code",
    }


def science_problem(rng: random.Random) -> dict:
    t = rng.choice([86, 91, 94, 97, 100, 101, 104])
    boiling = t >= 100
    return {
        "query": (
            "Water boils at 100 C at sea level. "
            f"A kettle at sea level reads {t} C. "
            "Is the water boiling? Answer yes or no."
        ),
        "answer": "yes" if boiling else "no",
        "facts": {"t": t, "boiling": boiling},
        "kind": "science",
    }


def other_problem(rng: random.Random) -> dict:
    h, d = rng.randint(6, 15), rng.randint(2, 8)
    arr = h + d
    return {
        "query": (
            f"A train departs at {h}:00 and the trip lasts {d} hours. "
            "When does it arrive? Use 24-hour time."
        ),
        "answer": f"{arr}:00",
        "facts": {"h": h, "d": d, "arr": arr},
        "kind": "other",
    }


MAKERS = {
    "math": math_problem,
    "code": code_problem,
    "science": science_problem,
    "other": other_problem,
}


def core_steps(problem: dict) -> list[str]:
    f = problem["facts"]
    kind = problem["kind"]
    if kind == "math":
        return [
            f"The crate holds {f['a']} red apples.",
            f"It also holds {f['b']} green apples.",
            f"Adding the groups gives {f['a']} + {f['b']} = {f['c']}.",
            f"The total is {f['c']} apples.",
        ]
    if kind == "code":
        return [
            f"The call binds x to {f['x']}.",
            f"The body multiplies x by {f['k']}.",
            f"So scale({f['x']}) computes {f['x']} * {f['k']} = {f['y']}.",
            f"The function returns {f['y']}.",
        ]
    if kind == "science":
        state = "at least" if f["boiling"] else "below"
        verdict = "is" if f["boiling"] else "is not"
        word = "yes" if f["boiling"] else "no"
        return [
            "At sea level the boiling point of water is 100 C.",
            f"The kettle reads {f['t']} C.",
            f"Since {f['t']} C is {state} 100 C, the water {verdict} boiling.",
            f"The answer is {word}.",
        ]
    return [
        f"The train departs at {f['h']}:00.",
        f"The trip lasts {f['d']} hours.",
        f"Arrival is at {f['h']} + {f['d']} = {f['arr']}, so {f['arr']}:00.",
        f"The train arrives at {f['arr']}:00.",
    ]


def break_arithmetic(step: str, facts: dict) -> str:
    """Make the equation in a step wrong by one."""
    for key in ("c", "y", "arr"):
        if key in facts:
            right = str(facts[key])
            wrong = str(facts[key] + 1)
            if f"= {right}" in step:
                return step.replace(f"= {right}", f"= {wrong}", 1)
    return step


def detailed_reasoning(problem: dict, idx: int, rng: random.Random) -> str:
    steps = core_steps(problem)
    steps.insert(0, "We restate the problem carefully before computing.")
    steps.append("A quick re-read confirms every quantity was used once.")
    return " ".join(steps)


def summarized_reasoning(problem: dict, idx: int, rng: random.Random) -> str:
    steps = core_steps(problem)
    return " ".join([steps[2], steps[3]])


def babythink_reasoning(problem: dict, idx: int, rng: random.Random) -> str:
    steps = core_steps(problem)
    if idx % 5 == 1:
        steps[2] = break_arithmetic(steps[2], problem["facts"])
    if idx % 7 == 3:
        steps.insert(2, "Everyone knows this part is easy.")
    if idx % 6 == 2:
        steps.append(steps[1])
    if idx % 11 == 4:
        steps.insert(3, "Unrelatedly, lunch was very good today.")
    return " ".join(steps)


def lengthy_reasoning(problem: dict, idx: int, rng: random.Random) -> str:
    steps = core_steps(problem)
    steps.insert(0, "We restate the problem carefully before computing.")
    steps.append(steps[3])
    steps.append("We check the same computation once more to be safe.")
    if idx % 2 == 0:
        steps.append(steps[3])
    steps.append("Nothing in the problem statement remains unused.")
    return " ".join(steps)


STYLES = {
    "detailed": detailed_reasoning,
    "summarized": summarized_reasoning,
    "babythink": babythink_reasoning,
    "lengthy": lengthy_reasoning,
}


def build_performance(rng: random.Random) -> dict:
    """Synthetic downstream relative changes for the correlate step."""
    benchmarks = ("bench_alpha", "bench_beta", "bench_gamma")
    performance = {}
    for benchmark in benchmarks:
        row = {}
        used = set()
        for variant in sorted(VARIANTS):
            value = round(rng.uniform(-60.0, 30.0), 1)
            while value in used:
                value = round(rng.uniform(-60.0, 30.0), 1)
            used.add(value)
            row[variant] = value
        performance[benchmark] = row
    return {
        "family": "synthetic",
        "variants": sorted(VARIANTS),
        "performance": performance,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--out",
        default="src/trace_profiler/data/synthetic",
        help="output directory",
    )
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    problems = []
    for idx in range(N_EXAMPLES):
        domain = DOMAIN_PLAN[idx]
        problems.append((f"ex{idx:03d}", domain, MAKERS[domain](rng)))

    for variant in VARIANTS:
        style = STYLES[variant]
        examples = []
        for idx, (example_id, domain, problem) in enumerate(problems):
            examples.append(
                Example(
                    id=example_id,
                    domain=domain,
                    query=problem["query"],
                    reasoning=style(problem, idx, rng),
                    answer=problem["answer"],
                    meta={},
                )
            )
        corpus = Corpus(
            name=variant, examples=examples, provenance=Provenance(source="synthetic", loaded_at="")
        )
        save_corpus(corpus, out_dir / f"{variant}.jsonl")
        print(f"wrote {variant}.jsonl ({len(examples)} examples)")

    mini = Corpus(
        name="mini20",
        examples=[
            Example(
                id=example_id,
                domain=domain,
                query=problem["query"],
                reasoning=detailed_reasoning(problem, idx, rng),
                answer=problem["answer"],
                meta={},
            )
            for idx, (example_id, domain, problem) in enumerate(problems[:20])
        ],
        provenance=Provenance(source="synthetic", loaded_at=""),
    )
    save_corpus(mini, out_dir / "mini20.jsonl")
    print("wrote mini20.jsonl (20 examples)")

    perf = build_performance(random.Random(SEED + 1))
    with (out_dir / "performance.json").open("w", encoding="utf-8") as handle:
        json.dump(perf, handle, indent=2, ensure_ascii=False, sort_keys=True)
        handle.write("\n")
    print("wrote performance.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
