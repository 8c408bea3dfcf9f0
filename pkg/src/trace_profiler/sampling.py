"""Deterministic stratified subsampling over domain and reasoning length.

Allocation is hierarchical: examples are first apportioned across domains by
largest-remainder rounding against n, then within each domain across
length-quantile bins against the domain's allocation. Each stage's
allocations land within 1 of its exact proportional share. Draws come from
per-stratum generators seeded by (seed, domain, bin) over id-sorted members,
so results are identical across runs and input permutations.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Corpus, Tokenizer, WhitespaceTokenizer, subset
from .errors import NTooLarge


@dataclass
class StrataSpec:
    domain_axis: bool = True
    length_quantiles: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.length_quantiles < 1:
            raise ValueError(
                f"length_quantiles must be >= 1, got {self.length_quantiles}"
            )


def largest_remainder(counts: Sequence[int], pick: int) -> list[int]:
    """Apportion ``pick`` across strata proportionally to ``counts``.

    Integer arithmetic throughout, so shares are exact; ties on remainders
    break toward the lower index. Each share is within 1 of its exact
    proportion and the shares sum to ``pick``.
    """
    total = sum(counts)
    if pick > total:
        raise ValueError(f"cannot pick {pick} from {total}")
    shares = [(pick * c) // total for c in counts]
    remainders = [(pick * c) % total for c in counts]
    leftover = pick - sum(shares)
    order = sorted(range(len(counts)), key=lambda i: (-remainders[i], i))
    for i in order[:leftover]:
        shares[i] += 1
    return shares


def _stratum_rng(seed: int, domain: str, bin_index: int) -> random.Random:
    digest = hashlib.sha256(f"{seed}|{domain}|{bin_index}".encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest, "big"))


def _length_bins(
    ids: Sequence[str], lengths: Mapping[str, int], q: int
) -> list[list[str]]:
    """Split ids into q rank-quantile bins by length, id as tiebreak.

    Rank-based binning keeps bin sizes within 1 of each other regardless of
    ties, and the (length, id) sort key makes membership independent of
    input order.
    """
    ranked = sorted(ids, key=lambda i: (lengths[i], i))
    n = len(ranked)
    bins: list[list[str]] = [[] for _ in range(q)]
    for rank, example_id in enumerate(ranked):
        bins[rank * q // n].append(example_id)
    return bins


def stratify(
    corpus: Corpus,
    n: int,
    spec: StrataSpec,
    tokenizer: Tokenizer | None = None,
) -> Corpus:
    """Sample n examples preserving domain and length-quantile proportions."""
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    if n > len(corpus):
        raise NTooLarge(n, len(corpus))
    tokenizer = tokenizer or WhitespaceTokenizer()
    lengths = {ex.id: tokenizer.count(ex.reasoning) for ex in corpus.examples}

    by_domain: dict[str, list[str]] = {}
    for ex in corpus.examples:
        key = ex.domain if spec.domain_axis else ""
        by_domain.setdefault(key, []).append(ex.id)
    domains = sorted(by_domain)

    domain_share = largest_remainder([len(by_domain[d]) for d in domains], n)

    chosen: set[str] = set()
    for domain, share in zip(domains, domain_share):
        if share == 0:
            continue
        bins = _length_bins(by_domain[domain], lengths, spec.length_quantiles)
        bin_share = largest_remainder([len(b) for b in bins], share)
        for bin_index, (members, k) in enumerate(zip(bins, bin_share)):
            if k == 0:
                continue
            rng = _stratum_rng(spec.seed, domain, bin_index)
            chosen.update(rng.sample(sorted(members), k))

    sampled = subset(corpus, [i for i in corpus.ids() if i in chosen])
    return sampled
