"""Tie-aware rank correlation against an independent counting oracle."""

from __future__ import annotations

import itertools
import random

import pytest
from oracle_utils import counting_ranks, oracle_spearman

from trace_profiler.correlation import (
    CorrelationMatrix,
    SeriesPair,
    average_ranks,
    build_matrix,
    spearman,
    spearman_values,
)
from trace_profiler.errors import DegenerateSeries, TooFewVariants, VariantMismatch


def test_average_ranks_hand_cases():
    # descending: largest value gets rank 1; ties share the average position
    assert average_ranks([3.0, 1.0, 2.0]) == [1.0, 3.0, 2.0]
    assert average_ranks([5.0, 5.0]) == [1.5, 1.5]
    assert average_ranks([-45.3, -59.3, -58.7, -59.3]) == [1.0, 3.5, 2.0, 3.5]
    assert average_ranks([7.0]) == [1.0]
    assert average_ranks([2.0, 2.0, 2.0]) == [2.0, 2.0, 2.0]


def test_average_ranks_match_counting_oracle():
    rng = random.Random(17)
    for _ in range(500):
        n = rng.randint(1, 9)
        values = [rng.choice([0.0, 0.5, 1.0, 2.5, rng.random()]) for _ in range(n)]
        assert average_ranks(values) == counting_ranks(values)


def test_spearman_matches_oracle_on_seeded_pairs_with_ties():
    rng = random.Random(23)
    checked = 0
    while checked < 1000:
        n = rng.randint(3, 8)
        pool = [rng.uniform(-10, 10) for _ in range(max(2, n - 2))]
        xs = [rng.choice(pool) for _ in range(n)]
        ys = [rng.choice(pool) for _ in range(n)]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        got = spearman_values(xs, ys)
        want = oracle_spearman(xs, ys)
        assert abs(got - want) <= 1e-12
        checked += 1


def test_spearman_tie_free_permutations_land_on_exact_grid():
    # n=4 without ties: rho is k/5 for integer k, exactly representable
    grid = {-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0}
    xs = [10.0, 20.0, 30.0, 40.0]
    seen = set()
    for perm in itertools.permutations([1.0, 2.0, 3.0, 4.0]):
        rho = spearman_values(xs, list(perm))
        assert rho in grid
        seen.add(rho)
    assert 1.0 in seen and -1.0 in seen


def test_spearman_invariant_under_monotone_transform():
    rng = random.Random(41)
    for _ in range(200):
        n = rng.randint(3, 8)
        xs = [rng.uniform(-5, 5) for _ in range(n)]
        ys = [rng.uniform(-5, 5) for _ in range(n)]
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            continue
        base = spearman_values(xs, ys)
        warped = spearman_values([x**3 + 7 for x in xs], ys)
        assert abs(base - warped) <= 1e-12


def test_spearman_is_symmetric():
    rng = random.Random(3)
    for _ in range(200):
        xs = [rng.uniform(0, 1) for _ in range(5)]
        ys = [rng.uniform(0, 1) for _ in range(5)]
        assert spearman_values(xs, ys) == spearman_values(ys, xs)


def test_spearman_rejects_constant_series():
    with pytest.raises(DegenerateSeries):
        spearman_values([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateSeries):
        spearman_values([1.0, 2.0, 3.0], [4.0, 4.0, 4.0])


def test_series_pair_validation():
    with pytest.raises(TooFewVariants):
        SeriesPair(("a", "b"), (1.0, 2.0), (3.0, 4.0))
    with pytest.raises(ValueError):
        SeriesPair(("a", "a", "b"), (1.0, 2.0, 3.0), (1.0, 2.0, 3.0))
    pair = SeriesPair(("a", "b", "c"), (1.0, 2.0, 3.0), (3.0, 2.0, 1.0))
    assert spearman(pair) == -1.0


def metric_table():
    return {
        "redundancy_ratio": {"a": 0.1, "b": 0.2, "c": 0.3, "d": 0.4},
        "validity": {"a": 90.0, "b": 80.0, "c": 70.0, "d": 60.0},
    }


def performance_table():
    return {
        "bench1": {"a": 1.0, "b": 2.0, "c": 3.0, "d": 4.0},
        "bench2": {"a": 4.0, "b": 3.0, "c": 2.0, "d": 1.0},
    }


def test_build_matrix_partitions_rows():
    matrix = build_matrix(metric_table(), performance_table(), family="f")
    assert matrix.analytical == ("redundancy_ratio",)
    assert matrix.model_based == ("validity",)
    assert matrix.cell("redundancy_ratio", "bench1").rho == 1.0
    assert matrix.cell("redundancy_ratio", "bench2").rho == -1.0
    assert matrix.cell("validity", "bench1").rho == -1.0


def test_build_matrix_rejects_variant_mismatch():
    bad = performance_table()
    bad["bench1"] = {"a": 1.0, "b": 2.0, "c": 3.0, "x": 4.0}
    with pytest.raises(VariantMismatch):
        build_matrix(metric_table(), bad, family="f")


def test_build_matrix_rejects_too_few_variants():
    metrics = {"validity": {"a": 1.0, "b": 2.0}}
    performance = {"bench1": {"a": 1.0, "b": 2.0}}
    with pytest.raises(TooFewVariants):
        build_matrix(metrics, performance, family="f")


def test_build_matrix_marks_constant_series_degenerate():
    metrics = dict(metric_table())
    metrics["coherence"] = {"a": 50.0, "b": 50.0, "c": 50.0, "d": 50.0}
    matrix = build_matrix(metrics, performance_table(), family="f")
    cell = matrix.cell("coherence", "bench1")
    assert cell.rho is None
    assert cell.degenerate
    assert matrix.row_mean("coherence") is None
    assert "undefined" in matrix.to_csv()


def test_matrix_json_roundtrip():
    matrix = build_matrix(metric_table(), performance_table(), family="f")
    clone = CorrelationMatrix.from_json(matrix.to_json())
    assert clone.family == matrix.family
    assert clone.rows() == matrix.rows()
    assert clone.benchmarks == matrix.benchmarks
    for key, cell in matrix.cells.items():
        assert clone.cells[key] == cell


def test_matrix_csv_full_precision():
    matrix = build_matrix(metric_table(), performance_table(), family="f")
    lines = matrix.to_csv().splitlines()
    assert lines[0] == "metric,bench1,bench2"
    assert lines[1] == "redundancy_ratio,1.0,-1.0"
