"""Content-addressed cache for provider replies.

One file per request, named by the SHA-256 of the canonicalized request
envelope, so distinct requests cannot collide and replays cost no network
calls. Corrupt entries are treated as misses and overwritten on the next
store; they never poison a run.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Any, Mapping, Sequence

from ..errors import CacheCorrupt

logger = logging.getLogger(__name__)


def canonical_json(obj: Any) -> str:
    """Serialize with sorted keys and fixed separators; key-order stable."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def request_key(envelope: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(envelope).encode("utf-8")).hexdigest()


class ResponseCache:
    def __init__(self, directory: str | Path) -> None:
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def path_for(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def _read_entry(self, key: str) -> str:
        path = self.path_for(key)
        try:
            raw = path.read_text(encoding="utf-8")
            entry = json.loads(raw)
        except (OSError, ValueError) as exc:
            raise CacheCorrupt(f"unreadable cache entry {path.name}: {exc}") from exc
        request = entry.get("request")
        reply = entry.get("reply")
        if not isinstance(request, str) or not isinstance(reply, str):
            raise CacheCorrupt(f"cache entry {path.name} missing request or reply")
        digest = hashlib.sha256(request.encode("utf-8")).hexdigest()
        if entry.get("key") != key or digest != key:
            raise CacheCorrupt(f"cache entry {path.name} fails its hash check")
        return reply

    def lookup(self, envelope: Mapping[str, Any]) -> str | None:
        """Return the cached reply, or None on miss or corruption."""
        key = request_key(envelope)
        if not self.path_for(key).exists():
            return None
        try:
            return self._read_entry(key)
        except CacheCorrupt as exc:
            logger.warning("%s; treating as miss", exc)
            return None

    def store(self, envelope: Mapping[str, Any], reply: str) -> None:
        """Write atomically so a crashed run never leaves a torn entry."""
        key = request_key(envelope)
        entry = {
            "key": key,
            "provider_id": envelope.get("provider_id", ""),
            "created_at": time.time(),
            "request": canonical_json(envelope),
            "reply": reply,
        }
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(canonical_json(entry))
            os.replace(tmp, self.path_for(key))
        except BaseException:
            try:
                os.unlink(tmp)
            except OSError:
                pass
            raise


class CachedChat:
    """Chat provider wrapper that consults a ResponseCache before the wire."""

    def __init__(self, inner, cache: ResponseCache) -> None:
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.model = inner.model

    def _envelope(
        self, messages: Sequence[dict], temperature: float, json_object: bool
    ) -> dict:
        return {
            "kind": "chat",
            "provider_id": self.inner.provider_id,
            "model": self.inner.model,
            "request": {
                "messages": list(messages),
                "temperature": temperature,
                "json_object": json_object,
            },
        }

    def complete(
        self,
        messages: Sequence[dict],
        *,
        temperature: float = 0.0,
        json_object: bool = False,
    ) -> str:
        envelope = self._envelope(messages, temperature, json_object)
        hit = self.cache.lookup(envelope)
        if hit is not None:
            return hit
        reply = self.inner.complete(
            messages, temperature=temperature, json_object=json_object
        )
        self.cache.store(envelope, reply)
        return reply


class CachedEmbedder:
    """Embedding wrapper; vectors are stored as the canonical-JSON reply."""

    def __init__(self, inner, cache: ResponseCache) -> None:
        self.inner = inner
        self.cache = cache
        self.provider_id = inner.provider_id
        self.model = inner.model
        self.max_chars = inner.max_chars

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        envelope = {
            "kind": "embed",
            "provider_id": self.inner.provider_id,
            "model": self.inner.model,
            "request": {"texts": list(texts)},
        }
        hit = self.cache.lookup(envelope)
        if hit is not None:
            return json.loads(hit)
        vectors = self.inner.embed(texts)
        self.cache.store(envelope, canonical_json(vectors))
        return vectors
