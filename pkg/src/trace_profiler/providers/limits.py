"""Process-wide concurrency limit shared by all remote providers."""

from __future__ import annotations

import threading

DEFAULT_PARALLELISM = 8

_lock = threading.Lock()
_semaphore = threading.BoundedSemaphore(DEFAULT_PARALLELISM)
_value = DEFAULT_PARALLELISM


def set_parallelism(n: int) -> None:
    """Cap concurrent in-flight provider requests at ``n``."""
    global _semaphore, _value
    if n < 1:
        raise ValueError(f"parallelism must be >= 1, got {n}")
    with _lock:
        _semaphore = threading.BoundedSemaphore(n)
        _value = n


def get_parallelism() -> int:
    with _lock:
        return _value


def request_slot() -> threading.BoundedSemaphore:
    """Return the semaphore guarding remote calls; hold it for one request."""
    with _lock:
        return _semaphore
