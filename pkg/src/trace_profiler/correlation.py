"""Tie-aware Spearman rank correlation and metric-by-benchmark matrices.

Ranks are descending (rank 1 = largest) with fractional tie averaging, and
rho is the Pearson correlation of the two rank lists. A constant series has
no defined rank correlation; those cells are reported as undefined, never
as 0, because at four variants a fabricated 0 would look like a real value.

The ranking and Pearson steps are hand-rolled on purpose: they are the
quantity under test, and tests check them against an independently coded
brute-force oracle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DegenerateSeries, TooFewVariants, VariantMismatch

ANALYTICAL_METRICS = (
    "redundancy_ratio",
    "semantic_alignment",
    "semantic_flow",
    "symbolic_fraction",
    "syntactic_depth",
)
OPTIONAL_ANALYTICAL = ("perplexity",)
MODEL_BASED_METRICS = ("validity", "factuality", "coherence", "utility")


def average_ranks(values: Sequence[float]) -> list[float]:
    """Descending fractional ranks: rank 1 is the largest value and ties
    share the mean of the positions they span."""
    if not values:
        raise ValueError("average_ranks requires at least one value")
    order = sorted(range(len(values)), key=lambda i: -values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        shared = (i + j + 2) / 2  # mean of 1-based positions i+1 .. j+1
        for k in range(i, j + 1):
            ranks[order[k]] = shared
        i = j + 1
    return ranks


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    cov = 0.0
    var_x = 0.0
    var_y = 0.0
    for x, y in zip(xs, ys):
        dx = x - mean_x
        dy = y - mean_y
        cov += dx * dy
        var_x += dx * dx
        var_y += dy * dy
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateSeries("correlation undefined for a constant series")
    value = cov / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, value))


@dataclass
class SeriesPair:
    labels: tuple[str, ...]
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.labels) == len(self.xs) == len(self.ys)):
            raise ValueError("labels, xs, ys must have equal lengths")
        if len(self.labels) < 3:
            raise TooFewVariants(len(self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate labels: {self.labels}")


def spearman(pair: SeriesPair) -> float:
    """Rank correlation of the pair; DegenerateSeries when either side is
    constant."""
    if len(set(pair.xs)) == 1 or len(set(pair.ys)) == 1:
        raise DegenerateSeries("correlation undefined for a constant series")
    return _pearson(average_ranks(pair.xs), average_ranks(pair.ys))


def spearman_values(xs: Sequence[float], ys: Sequence[float]) -> float:
    labels = tuple(str(i) for i in range(len(xs)))
    return spearman(SeriesPair(labels, tuple(xs), tuple(ys)))


@dataclass
class CorrelationCell:
    rho: float | None
    n: int
    degenerate: bool = False


@dataclass
class CorrelationMatrix:
    family: str
    variants: tuple[str, ...]
    benchmarks: tuple[str, ...]
    analytical: tuple[str, ...]
    model_based: tuple[str, ...]
    cells: dict[tuple[str, str], CorrelationCell] = field(default_factory=dict)

    def rows(self) -> tuple[str, ...]:
        return self.analytical + self.model_based

    def cell(self, metric: str, benchmark: str) -> CorrelationCell:
        return self.cells[(metric, benchmark)]

    def row_mean(self, metric: str) -> float | None:
        defined = [
            c.rho
            for b in self.benchmarks
            if (c := self.cells[(metric, b)]).rho is not None
        ]
        if not defined:
            return None
        return sum(defined) / len(defined)

    def to_csv(self) -> str:
        lines = ["metric," + ",".join(self.benchmarks)]
        for metric in self.rows():
            values = []
            for benchmark in self.benchmarks:
                cell = self.cells[(metric, benchmark)]
                values.append("undefined" if cell.rho is None else repr(cell.rho))
            lines.append(metric + "," + ",".join(values))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "variants": list(self.variants),
            "benchmarks": list(self.benchmarks),
            "analytical": list(self.analytical),
            "model_based": list(self.model_based),
            "cells": {
                metric: {
                    benchmark: {
                        "rho": cell.rho,
                        "n": cell.n,
                        "degenerate": cell.degenerate,
                    }
                    for benchmark in self.benchmarks
                    for cell in [self.cells[(metric, benchmark)]]
                }
                for metric in self.rows()
            },
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "CorrelationMatrix":
        matrix = cls(
            family=str(data["family"]),
            variants=tuple(data["variants"]),
            benchmarks=tuple(data["benchmarks"]),
            analytical=tuple(data["analytical"]),
            model_based=tuple(data["model_based"]),
        )
        for metric, row in data["cells"].items():
            for benchmark, cell in row.items():
                matrix.cells[(metric, benchmark)] = CorrelationCell(
                    rho=cell["rho"],
                    n=int(cell["n"]),
                    degenerate=bool(cell["degenerate"]),
                )
        return matrix


def _check_variants(
    table: Mapping[str, Mapping[str, float]],
    expected: set[str],
    side: str,
) -> None:
    for name, series in table.items():
        got = set(series)
        if got != expected:
            raise VariantMismatch(
                f"{side} {name!r} covers variants {sorted(got)}, "
                f"expected {sorted(expected)}"
            )


def build_matrix(
    metric_table: Mapping[str, Mapping[str, float]],
    performance: Mapping[str, Mapping[str, float]],
    *,
    family: str = "",
    include_perplexity: bool = False,
) -> CorrelationMatrix:
    """One Spearman rho per (metric, benchmark) across aligned variants.

    ``metric_table`` maps metric name -> variant -> value; ``performance``
    maps benchmark name -> variant -> value. Benchmark column order follows
    the input mapping; metric rows follow the canonical partition order.
    """
    if not metric_table or not performance:
        raise VariantMismatch("metric table and performance must be non-empty")
    variant_set = set(next(iter(performance.values())))
    _check_variants(performance, variant_set, "benchmark")
    _check_variants(metric_table, variant_set, "metric")
    if len(variant_set) < 3:
        raise TooFewVariants(len(variant_set))
    variants = tuple(sorted(variant_set))

    analytical = [m for m in ANALYTICAL_METRICS if m in metric_table]
    if include_perplexity:
        analytical += [m for m in OPTIONAL_ANALYTICAL if m in metric_table]
    model_based = [m for m in MODEL_BASED_METRICS if m in metric_table]
    known = set(ANALYTICAL_METRICS) | set(OPTIONAL_ANALYTICAL) | set(MODEL_BASED_METRICS)
    analytical += sorted(set(metric_table) - known)

    benchmarks = tuple(performance)
    matrix = CorrelationMatrix(
        family=family,
        variants=variants,
        benchmarks=benchmarks,
        analytical=tuple(analytical),
        model_based=tuple(model_based),
    )
    for metric in matrix.rows():
        xs = tuple(metric_table[metric][v] for v in variants)
        for benchmark in benchmarks:
            ys = tuple(performance[benchmark][v] for v in variants)
            try:
                rho = spearman(SeriesPair(variants, xs, ys))
                cell = CorrelationCell(rho=rho, n=len(variants))
            except DegenerateSeries:
                cell = CorrelationCell(rho=None, n=len(variants), degenerate=True)
            matrix.cells[(metric, benchmark)] = cell
    return matrix


@dataclass
class CorrelationFixture:
    """Bundled metric and performance series for one model family."""

    family: str
    variants: tuple[str, ...]
    metrics: dict[str, dict[str, float]]
    performance: dict[str, dict[str, float]]


def load_fixture(path: str | Path, *, family: str | None = None) -> CorrelationFixture:
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    try:
        variants = tuple(str(v) for v in data["variants"])
        metrics = {
            str(m): {str(v): float(x) for v, x in series.items()}
            for m, series in data["metrics"].items()
        }
        performance = {
            str(b): {str(v): float(x) for v, x in series.items()}
            for b, series in data["performance"].items()
        }
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise VariantMismatch(f"fixture {path.name} is malformed: {exc}") from exc
    name = family or str(data.get("family") or path.stem)
    expected = set(variants)
    _check_variants(metrics, expected, "metric")
    _check_variants(performance, expected, "benchmark")
    return CorrelationFixture(
        family=name, variants=variants, metrics=metrics, performance=performance
    )


def fixture_matrix(
    fixture: CorrelationFixture, *, include_perplexity: bool = False
) -> CorrelationMatrix:
    return build_matrix(
        fixture.metrics,
        fixture.performance,
        family=fixture.family,
        include_perplexity=include_perplexity,
    )


def _fmt(value: float, digits: int) -> str:
    rounded = round(value, digits)
    if rounded == 0.0:
        rounded = 0.0  # avoid "-0.00"
    return f"{rounded:.{digits}f}"


def _profile_table(profiles: Mapping[str, Mapping]) -> list[str]:
    columns = (
        "syntactic_depth",
        "semantic_flow",
        "semantic_alignment",
        "perplexity",
        "redundancy_ratio",
        "symbolic_fraction",
    )
    lines = [
        "| corpus | " + " | ".join(columns) + " | examples |",
        "|---" * (len(columns) + 2) + "|",
    ]
    for name in sorted(profiles):
        profile = profiles[name]
        cells = []
        for column in columns:
            value = profile.get(column)
            cells.append("n/a" if value is None else _fmt(float(value), 3))
        lines.append(
            f"| {name} | " + " | ".join(cells) + f" | {profile.get('n_examples', '')} |"
        )
    return lines


def _fvcu_table(scores: Mapping[str, Mapping]) -> list[str]:
    columns = ("factuality_pct", "validity_pct", "coherence_pct", "utility_pct")
    heads = [c.removesuffix("_pct") for c in columns]
    lines = [
        "| corpus | " + " | ".join(heads) + " | steps |",
        "|---" * (len(columns) + 2) + "|",
    ]
    for name in sorted(scores):
        row = scores[name]
        cells = [_fmt(float(row[c]), 1) for c in columns]
        lines.append(
            f"| {name} | " + " | ".join(cells) + f" | {row.get('n_steps', '')} |"
        )
    return lines


def _performance_tables(
    performance: Mapping[str, Mapping[str, Mapping[str, float]]]
) -> list[str]:
    lines: list[str] = []
    for family in sorted(performance):
        benchmarks = list(performance[family])
        variants = sorted(
            {v for series in performance[family].values() for v in series}
        )
        lines.append(f"### {family}")
        lines.append("")
        lines.append("| variant | " + " | ".join(benchmarks) + " |")
        lines.append("|---" * (len(benchmarks) + 1) + "|")
        for variant in variants:
            cells = []
            for benchmark in benchmarks:
                value = performance[family][benchmark].get(variant)
                cells.append("n/a" if value is None else _fmt(float(value), 1))
            lines.append(f"| {variant} | " + " | ".join(cells) + " |")
        lines.append("")
    return lines


def _matrix_section(matrix: CorrelationMatrix) -> list[str]:
    lines = [f"### {matrix.family}" if matrix.family else "### correlations", ""]
    lines.append(
        f"{len(matrix.variants)} variants per cell: "
        + ", ".join(matrix.variants)
        + "."
    )
    lines.append("")
    for title, metrics in (
        ("Analytical metrics", matrix.analytical),
        ("Model-based metrics", matrix.model_based),
    ):
        if not metrics:
            continue
        lines.append(f"#### {title}")
        lines.append("")
        lines.append("| metric | " + " | ".join(matrix.benchmarks) + " | avg |")
        lines.append("|---" * (len(matrix.benchmarks) + 2) + "|")
        for metric in metrics:
            cells = []
            for benchmark in matrix.benchmarks:
                cell = matrix.cells[(metric, benchmark)]
                if cell.rho is None:
                    cells.append("undef (const)")
                else:
                    cells.append(_fmt(cell.rho, 2))
            mean = matrix.row_mean(metric)
            avg = "undef" if mean is None else _fmt(mean, 2)
            lines.append(f"| {metric} | " + " | ".join(cells) + f" | {avg} |")
        lines.append("")
    return lines


def render_report(
    matrices: Sequence[CorrelationMatrix],
    *,
    profiles: Mapping[str, Mapping] | None = None,
    fvcu: Mapping[str, Mapping] | None = None,
    performance: Mapping[str, Mapping[str, Mapping[str, float]]] | None = None,
) -> str:
    """Deterministic Markdown report over whatever artifacts are present.

    ``profiles`` and ``fvcu`` map corpus name to the JSON form of a profile
    or score object; ``performance`` maps family -> benchmark -> variant ->
    value (typically relative changes). Sections without data are omitted.
    """
    lines: list[str] = ["# Data selection report", ""]
    if profiles:
        lines += ["## Corpus metric profiles", ""]
        lines += _profile_table(profiles)
        lines.append("")
    if fvcu:
        lines += ["## Step-level verdict scores", ""]
        lines += _fvcu_table(fvcu)
        lines.append("")
    if performance:
        lines += ["## Benchmark performance", ""]
        lines += _performance_tables(performance)
    if matrices:
        lines += ["## Rank correlations", ""]
        lines.append(
            "Cells marked undef (const) have a constant series, where rank "
            "correlation is undefined."
        )
        lines.append("")
        for matrix in matrices:
            lines += _matrix_section(matrix)
    text = "\n".join(lines)
    return text.rstrip("\n") + "\n"
