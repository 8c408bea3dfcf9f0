"""Wire-protocol clients for remote capabilities.

Chat and embeddings speak the common REST shape (``/chat/completions``,
``/embeddings``) used by most hosted inference gateways; the judge wire
contract is exactly that chat shape with ``response_format`` set to a JSON
object. Segmentation, parse depth, and alternative embeddings speak the
sidecar's endpoints. All clients share the process-wide parallelism cap and
retry transient failures with exponential backoff before giving up.
"""

from __future__ import annotations

import logging
import time
from typing import Any, Callable, Sequence, TypeVar

import requests

from ..errors import (
    PermanentProviderError,
    RateLimited,
    Timeout,
    TransientProviderError,
)
from . import limits

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 5
DEFAULT_TIMEOUT = 60.0

T = TypeVar("T")


def call_with_retries(
    fn: Callable[[], T],
    *,
    max_retries: int = DEFAULT_MAX_RETRIES,
    base_delay: float = 0.5,
    max_delay: float = 30.0,
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Run ``fn``, retrying transient failures with exponential backoff.

    After ``max_retries`` retries the failure is escalated to
    PermanentProviderError; permanent failures propagate immediately.
    """
    for attempt in range(max_retries + 1):
        try:
            return fn()
        except TransientProviderError as exc:
            if attempt == max_retries:
                raise PermanentProviderError(
                    f"gave up after {max_retries} retries: {exc}"
                ) from exc
            delay = min(max_delay, base_delay * (2.0**attempt))
            logger.warning(
                "transient provider failure (attempt %d/%d), retrying in %.2fs: %s",
                attempt + 1,
                max_retries + 1,
                delay,
                exc,
            )
            sleep(delay)
    raise AssertionError("unreachable")


def _post_json(
    url: str,
    payload: dict,
    headers: dict[str, str],
    timeout: float,
) -> Any:
    """POST JSON and classify failures as transient or permanent."""
    with limits.request_slot():
        try:
            response = requests.post(
                url, json=payload, headers=headers, timeout=timeout
            )
        except requests.exceptions.Timeout as exc:
            raise Timeout(f"request to {url} timed out after {timeout}s") from exc
        except requests.exceptions.ConnectionError as exc:
            raise TransientProviderError(f"connection to {url} failed: {exc}") from exc
        except requests.exceptions.RequestException as exc:
            raise PermanentProviderError(f"request to {url} failed: {exc}") from exc
    status = response.status_code
    if status == 429:
        raise RateLimited(f"{url} returned 429")
    if 500 <= status < 600:
        raise TransientProviderError(f"{url} returned {status}")
    if status != 200:
        raise PermanentProviderError(
            f"{url} returned {status}: {response.text[:200]}"
        )
    try:
        return response.json()
    except ValueError as exc:
        raise PermanentProviderError(f"{url} returned non-JSON body") from exc


class HttpChatProvider:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_MAX_RETRIES,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.sleep = sleep
        self.provider_id = f"chat:{self.base_url}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def complete(
        self,
        messages: Sequence[dict],
        *,
        temperature: float = 0.0,
        json_object: bool = False,
    ) -> str:
        payload: dict = {
            "model": self.model,
            "messages": list(messages),
            "temperature": temperature,
        }
        if json_object:
            payload["response_format"] = {"type": "json_object"}
        url = f"{self.base_url}/chat/completions"

        def once() -> str:
            data = _post_json(url, payload, self._headers(), self.timeout)
            try:
                content = data["choices"][0]["message"]["content"]
            except (KeyError, IndexError, TypeError) as exc:
                raise PermanentProviderError(
                    f"{url} reply missing choices[0].message.content"
                ) from exc
            if not isinstance(content, str):
                raise PermanentProviderError(f"{url} reply content is not text")
            return content

        return call_with_retries(
            once, max_retries=self.max_retries, sleep=self.sleep
        )


class HttpEmbeddingProvider:
    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        max_chars: int | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_MAX_RETRIES,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.max_chars = max_chars
        self.timeout = timeout
        self.max_retries = max_retries
        self.sleep = sleep
        self.provider_id = f"embed:{self.base_url}"
        self.dimension = 0  # learned from the first reply

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        payload = {"model": self.model, "input": list(texts)}
        url = f"{self.base_url}/embeddings"

        def once() -> list[list[float]]:
            data = _post_json(url, payload, self._headers(), self.timeout)
            try:
                rows = sorted(data["data"], key=lambda r: r["index"])
                vectors = [[float(x) for x in row["embedding"]] for row in rows]
            except (KeyError, TypeError, ValueError) as exc:
                raise PermanentProviderError(
                    f"{url} reply is not an embedding list"
                ) from exc
            if len(vectors) != len(texts):
                raise PermanentProviderError(
                    f"{url} returned {len(vectors)} vectors for {len(texts)} texts"
                )
            return vectors

        vectors = call_with_retries(
            once, max_retries=self.max_retries, sleep=self.sleep
        )
        if vectors and not self.dimension:
            self.dimension = len(vectors[0])
        return vectors


class HttpScoreProvider:
    """Per-token NLLs via the legacy completions endpoint.

    Uses the echo+logprobs convention (``max_tokens: 0, echo: true,
    logprobs: 0``): the endpoint returns logprobs for the prompt's own
    tokens. The first token has no conditioning context and arrives as
    null; it is dropped.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key: str = "",
        *,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_MAX_RETRIES,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.sleep = sleep
        self.provider_id = f"score:{self.base_url}"

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def score(self, text: str) -> list[float]:
        payload = {
            "model": self.model,
            "prompt": text,
            "max_tokens": 0,
            "echo": True,
            "logprobs": 0,
        }
        url = f"{self.base_url}/completions"

        def once() -> list[float]:
            data = _post_json(url, payload, self._headers(), self.timeout)
            try:
                logprobs = data["choices"][0]["logprobs"]["token_logprobs"]
            except (KeyError, IndexError, TypeError) as exc:
                raise PermanentProviderError(
                    f"{url} reply missing token_logprobs"
                ) from exc
            values = [
                max(0.0, -float(lp)) for lp in logprobs if lp is not None
            ]
            if not values:
                raise PermanentProviderError(f"{url} returned no scored tokens")
            return values

        return call_with_retries(
            once, max_retries=self.max_retries, sleep=self.sleep
        )


class SidecarClient:
    """Shared plumbing for the local NLP sidecar's JSON endpoints."""

    def __init__(
        self,
        base_url: str,
        token: str = "",
        *,
        timeout: float = 30.0,
        max_retries: int = DEFAULT_MAX_RETRIES,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout
        self.max_retries = max_retries
        self.sleep = sleep

    def post(self, path: str, payload: dict) -> Any:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["X-Auth-Token"] = self.token
        url = f"{self.base_url}{path}"

        def once() -> Any:
            return _post_json(url, payload, headers, self.timeout)

        return call_with_retries(
            once, max_retries=self.max_retries, sleep=self.sleep
        )


class SidecarSegmenter:
    def __init__(self, client: SidecarClient) -> None:
        self.client = client
        self.provider_id = f"sidecar-segmenter:{client.base_url}"

    def segment(self, text: str) -> list[str]:
        reply = self.client.post("/segment", {"text": text})
        sentences = reply.get("sentences")
        if not isinstance(sentences, list):
            raise PermanentProviderError("/segment reply missing sentences")
        return [str(s) for s in sentences]


class SidecarSyntax:
    def __init__(self, client: SidecarClient) -> None:
        self.client = client
        self.provider_id = f"sidecar-syntax:{client.base_url}"

    def parse_depths(self, sentences: Sequence[str]) -> list[int]:
        reply = self.client.post("/parse-depth", {"sentences": list(sentences)})
        results = reply.get("results")
        if not isinstance(results, list) or len(results) != len(sentences):
            raise PermanentProviderError("/parse-depth reply shape mismatch")
        return [int(r["depth"]) for r in results]

    def parse_depth(self, sentence: str) -> int:
        return self.parse_depths([sentence])[0]


class SidecarEmbedder:
    def __init__(
        self,
        client: SidecarClient,
        *,
        max_chars: int | None = None,
    ) -> None:
        self.client = client
        self.max_chars = max_chars
        self.provider_id = f"sidecar-embedder:{client.base_url}"
        self.model = "sidecar"
        self.dimension = 0

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        reply = self.client.post("/embed", {"texts": list(texts)})
        vectors = reply.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise PermanentProviderError("/embed reply shape mismatch")
        out = [[float(x) for x in vec] for vec in vectors]
        if out and not self.dimension:
            self.dimension = len(out[0])
        return out
