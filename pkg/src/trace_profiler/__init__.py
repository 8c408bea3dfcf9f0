"""Validation toolkit for reasoning-supervision datasets.

Profiles corpora of reasoning traces with six intrinsic metrics, audits
step-level quality with an atomize-and-judge pipeline, scores benchmark
predictions with a judge model, and correlates all of it against downstream
performance with tie-aware Spearman matrices.
"""

__version__ = "0.1.0"
