"""Access to files bundled with the package (prompt templates, fixtures)."""

from __future__ import annotations

from importlib.resources import files
from pathlib import Path


def prompt_text(name: str) -> str:
    """Return the text of a bundled prompt template, e.g. ``atomizer_v1.txt``."""
    return (files("trace_profiler") / "prompts" / name).read_text(encoding="utf-8")


def data_path(*parts: str) -> Path:
    """Return the path of a bundled data file under ``data/``.

    Assumes a filesystem install (editable or regular), which is how the
    package is distributed.
    """
    return Path(str(files("trace_profiler") / "data")).joinpath(*parts)
