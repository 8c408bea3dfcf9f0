"""Conformance: the core provider clients against a running sidecar satisfy
the same invariants the offline stubs satisfy. Skipped until the sidecar is
built (npm install and npm run build under sidecar/)."""

import json
import math
import os
import subprocess
import time
import urllib.request
from pathlib import Path

import pytest

from trace_profiler.providers.http import (
    PermanentProviderError,
    SidecarClient,
    SidecarEmbedder,
    SidecarSegmenter,
    SidecarSyntax,
)

SERVER = Path(__file__).parent.parent / "sidecar" / "dist" / "src" / "server.js"
TOKEN = "conformance-token"

# Depths hand-verified against the sidecar's documented chunk convention.
FROZEN_DEPTHS = [
    ("Stones sink.", 2),
    ("The cat sat on the mat.", 3),
    ("He said that she left early because the train was late.", 5),
    ("Mix.", 1),
    ("Add two and three to get five.", 4),
    ("It is on.", 2),
]

pytestmark = pytest.mark.skipif(
    not SERVER.exists(),
    reason="sidecar is not built; run npm install and npm run build in sidecar/",
)


@pytest.fixture(scope="module")
def sidecar_base():
    env = dict(os.environ, NLP_SIDECAR_PORT="0", NLP_SIDECAR_TOKEN=TOKEN)
    proc = subprocess.Popen(
        ["node", str(SERVER)],
        stdout=subprocess.PIPE,
        stderr=subprocess.STDOUT,
        text=True,
        env=env,
    )
    try:
        line = proc.stdout.readline().strip()
        assert line.startswith("nlp-sidecar listening on "), line
        base = f"http://127.0.0.1:{int(line.rsplit(' ', 1)[-1])}"
        deadline = time.monotonic() + 10
        while time.monotonic() < deadline:
            try:
                with urllib.request.urlopen(f"{base}/healthz", timeout=1) as reply:
                    if json.loads(reply.read())["ready"]:
                        break
            except OSError:
                time.sleep(0.05)
        else:
            pytest.fail("sidecar never reported ready")
        yield base
    finally:
        proc.terminate()
        proc.wait(timeout=5)


@pytest.fixture(scope="module")
def client(sidecar_base):
    return SidecarClient(sidecar_base, token=TOKEN, max_retries=1)


def test_segments_are_ordered_and_reconstruct_input(client):
    segmenter = SidecarSegmenter(client)
    assert segmenter.segment("A. B.") == ["A.", "B."]
    assert segmenter.segment("Only one sentence here.") == [
        "Only one sentence here."
    ]
    text = "First point. Second point! Third point? Done."
    parts = segmenter.segment(text)
    assert "".join(parts).replace(" ", "") == text.replace(" ", "")
    assert parts == sorted(parts, key=text.index)


def test_parse_depth_invariants(client):
    syntax = SidecarSyntax(client)
    sentences = [s for s, _ in FROZEN_DEPTHS] + ["word", "a b c d e f g h"]
    depths = syntax.parse_depths(sentences)
    assert len(depths) == len(sentences)
    for sentence, depth in zip(sentences, depths):
        assert depth >= 1
        assert depth <= len(sentence.split())
    assert syntax.parse_depth("word") == 1
    assert syntax.parse_depths(sentences) == depths


def test_parse_depth_frozen_fixtures(client):
    syntax = SidecarSyntax(client)
    got = syntax.parse_depths([s for s, _ in FROZEN_DEPTHS])
    assert got == [d for _, d in FROZEN_DEPTHS]


def test_embed_invariants(client):
    embedder = SidecarEmbedder(client)
    texts = [
        "The train arrives at nine in the morning.",
        "Quartz crystals resonate at a fixed frequency.",
    ]
    vectors = embedder.embed(texts)
    assert embedder.dimension == 256
    for vec in vectors:
        assert abs(math.sqrt(sum(x * x for x in vec)) - 1) < 1e-6
    again = embedder.embed([texts[0], texts[0]])
    assert again[0] == again[1] == vectors[0]
    self_cos = sum(x * y for x, y in zip(vectors[0], vectors[0]))
    assert abs(self_cos - 1) < 1e-6
    cross = sum(x * y for x, y in zip(vectors[0], vectors[1]))
    assert abs(cross) < 0.9
    swapped = embedder.embed(list(reversed(texts)))
    assert swapped == list(reversed(vectors))


def test_wrong_token_is_a_permanent_error(sidecar_base):
    bad = SidecarClient(sidecar_base, token="wrong", max_retries=1)
    with pytest.raises(PermanentProviderError):
        SidecarSegmenter(bad).segment("A. B.")


def test_healthz_is_open_and_carries_model_ids(sidecar_base):
    with urllib.request.urlopen(f"{sidecar_base}/healthz", timeout=5) as reply:
        payload = json.loads(reply.read())
        header = reply.headers.get("X-Model-Ids", "")
    assert payload["ready"] is True
    assert set(payload["models"]) == {"segment", "parse", "embed"}
    for capability, model_id in payload["models"].items():
        assert f"{capability}={model_id}" in header
