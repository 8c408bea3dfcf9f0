"""Shared fixtures: bundled data paths, offline providers, network guard."""

from __future__ import annotations

import socket

import pytest

from trace_profiler.providers import offline_provider_set
from trace_profiler.resources import data_path

VARIANTS = ("babythink", "detailed", "lengthy", "summarized")


@pytest.fixture(scope="session")
def synthetic_dir():
    return data_path("synthetic")


@pytest.fixture(scope="session")
def reference_dir():
    return data_path("reference")


@pytest.fixture()
def providers():
    return offline_provider_set(seed=0)


@pytest.fixture()
def no_network(monkeypatch):
    """Any socket creation in-process fails the test."""

    def guard(*args, **kwargs):
        raise AssertionError("network access attempted during offline test")

    monkeypatch.setattr(socket, "socket", guard)
    monkeypatch.setattr(socket, "create_connection", guard)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion after the normal summary."""
    stats = terminalreporter.stats
    rows = []
    for outcome in ("passed", "failed", "error"):
        for report in stats.get(outcome, []):
            if "test_acceptance.py::" not in report.nodeid:
                continue
            if getattr(report, "when", "call") != "call" and outcome == "passed":
                continue
            name = report.nodeid.split("::")[-1]
            rows.append((name, outcome))
    if not rows:
        return
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        CRITERIA = {}
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(set(rows)):
        label = CRITERIA.get(name, name)
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {label}")
