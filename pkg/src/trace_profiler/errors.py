"""Exception types shared across the toolkit.

Loader and parser errors carry enough context (line numbers, field names)
to point at the offending record in an input file.
"""

from __future__ import annotations


class TraceProfilerError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TraceProfilerError):
    """Invalid or incomplete run configuration."""


# --- corpus loading / parsing ---------------------------------------------

class CorpusError(TraceProfilerError):
    pass


class SchemaError(CorpusError):
    """A record violates the declared input schema."""

    def __init__(self, line: int, field: str, message: str):
        self.line = line
        self.field = field
        super().__init__(f"line {line}: field {field!r}: {message}")


class MissingField(SchemaError):
    def __init__(self, line: int, field: str):
        super().__init__(line, field, "missing or empty")


class DuplicateId(CorpusError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"duplicate id {record_id!r}")


class EmptyCorpus(CorpusError):
    pass


class NoThinkSpan(CorpusError):
    """Assistant text contains no think-tag span."""


class UnbalancedTags(CorpusError):
    """Think tags are repeated, unmatched, or out of order."""


class ContentBeforeThink(CorpusError):
    """Non-whitespace content precedes the opening think tag."""


# --- metrics ----------------------------------------------------------------

class MetricError(TraceProfilerError):
    pass


class EmptyText(MetricError):
    """Metric input is empty (or whitespace-only where that counts as empty)."""


class ZeroVector(MetricError):
    """Cosine similarity is undefined for a zero-norm vector."""


class EmptyTokenization(MetricError):
    """Scorer produced no tokens for a non-empty text."""


class ProfileFailure(MetricError):
    """Too large a fraction of examples failed during corpus profiling."""

    def __init__(self, n_failed: int, n_total: int, failures: list[tuple[str, str]]):
        self.n_failed = n_failed
        self.n_total = n_total
        self.failures = failures
        super().__init__(
            f"{n_failed}/{n_total} examples failed while profiling "
            f"(first: {failures[0][0]}: {failures[0][1]})"
        )


# --- providers ---------------------------------------------------------------

class ProviderError(TraceProfilerError):
    """Base class for model-backed capability failures."""


class TransientProviderError(ProviderError):
    """Retryable failure (network blip, 5xx)."""


class Timeout(TransientProviderError):
    pass


class RateLimited(TransientProviderError):
    pass


class PermanentProviderError(ProviderError):
    """Non-retryable failure, or the retry budget was exhausted."""


class CacheCorrupt(ProviderError):
    """A cache entry failed its integrity check; treated as a miss."""


# --- fvcu / evaluation -------------------------------------------------------

class FvcuError(TraceProfilerError):
    pass


class NonVerbatimStep(FvcuError):
    """Atomizer returned a step that is not a contiguous span of the source."""

    def __init__(self, step_text: str):
        self.step_text = step_text
        super().__init__(f"step is not a verbatim span of the source: {step_text[:80]!r}")


class CoverageError(FvcuError):
    """Atomization covered too little of the source reasoning."""

    def __init__(self, coverage: float, minimum: float):
        self.coverage = coverage
        self.minimum = minimum
        super().__init__(f"step coverage {coverage:.1%} below the required {minimum:.0%}")


class MalformedVerdict(FvcuError):
    """Judge reply could not be parsed as the required structured object."""


class NoVerdicts(FvcuError):
    pass


class EvaluationError(TraceProfilerError):
    pass


class EmptyInput(EvaluationError):
    pass


class ZeroBaseline(EvaluationError):
    """Relative change is undefined for a zero baseline accuracy."""


class LengthMismatch(EvaluationError):
    pass


# --- sampling ----------------------------------------------------------------

class SamplingError(TraceProfilerError):
    pass


class NTooLarge(SamplingError):
    def __init__(self, n: int, available: int):
        self.n = n
        self.available = available
        super().__init__(f"requested sample of {n} from a corpus of {available}")


# --- correlation -------------------------------------------------------------

class CorrelationError(TraceProfilerError):
    pass


class DegenerateSeries(CorrelationError):
    """A series is constant; the rank correlation is undefined, not zero."""


class VariantMismatch(CorrelationError):
    pass


class TooFewVariants(CorrelationError):
    def __init__(self, n: int):
        self.n = n
        super().__init__(f"need at least 3 aligned variants, got {n}")
