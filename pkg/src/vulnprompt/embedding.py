"""Embedding backends for code-plus-label retrieval.

The default backend is a deterministic signed-hash bag-of-tokens model: every
token is hashed to a coordinate and a sign, counts accumulate, and the result
is L2-normalized. It needs no network access and is stable across processes,
which keeps retrieval experiments reproducible. A remote backend speaking a
minimal JSON contract is provided for real embedding services.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
import time
from dataclasses import dataclass
from typing import Protocol

from .labels import CweLabel, format_labels

NORM_TOLERANCE = 1e-9

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]+")
_HASH_KEY = b"vulnprompt-embed-v1"


class EmbeddingError(Exception):
    """Base class for embedding failures."""


class EmbeddingTransportError(EmbeddingError):
    """The remote embedding endpoint could not be reached or kept failing."""


class EmbeddingInputTooLarge(EmbeddingError):
    """Input exceeds the backend's maximum size; reported before any call."""


class EmbeddingBatchError(EmbeddingError):
    """One or more items of a batch failed; carries (index, error) pairs."""

    def __init__(self, failures: list) -> None:
        self.failures = list(failures)
        summary = "; ".join(f"item {idx}: {err}" for idx, err in self.failures)
        super().__init__(f"{len(self.failures)} batch item(s) failed: {summary}")


@dataclass(frozen=True)
class EmbeddingVector:
    """A unit-norm embedding, validated at construction."""

    values: tuple

    def __post_init__(self) -> None:
        if not self.values:
            raise EmbeddingError("embedding vector must be non-empty")
        norm = math.sqrt(sum(v * v for v in self.values))
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise EmbeddingError(f"embedding vector norm {norm!r} is not 1.0")

    @property
    def dim(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class EmbeddingInput:
    """Text to embed: a code snippet, optionally tagged with its labels.

    Train-side index entries include labels so that samples sharing a label
    pull together in the embedding space; test-side queries never do.
    """

    code: str
    labels: frozenset | None = None

    def __post_init__(self) -> None:
        if not self.code.strip():
            raise EmbeddingError("embedding input code must be non-empty")

    def rendered_text(self) -> str:
        if self.labels:
            return f"{self.code}\nLABELS: {format_labels(self.labels)}"
        return self.code


def tokenize(text: str) -> list:
    """Split text into identifier/number runs and punctuation runs."""
    return _TOKEN_RE.findall(text)


def token_hash(token: str) -> int:
    """64-bit keyed hash of a token, stable across processes."""
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=_HASH_KEY).digest()
    return int.from_bytes(digest, "big")


def token_coordinate(token: str, dimension: int) -> tuple:
    """Map a token to (index, sign) within a given dimension."""
    h = token_hash(token)
    index = h % dimension
    sign = 1.0 if (h >> 63) & 1 == 0 else -1.0
    return index, sign


class EmbeddingBackend(Protocol):
    dimension: int

    def embed(self, item: EmbeddingInput) -> EmbeddingVector: ...

    def embed_batch(self, items: list) -> list: ...


def _batch_via_embed(backend, items: list) -> list:
    """Per-item embedding with aggregated failures and no partial results."""
    results: list = []
    failures: list = []
    for idx, item in enumerate(items):
        try:
            results.append(backend.embed(item))
        except EmbeddingError as exc:
            failures.append((idx, exc))
    if failures:
        raise EmbeddingBatchError(failures)
    return results


class HashedBagOfTokensBackend:
    """Deterministic offline embedding via signed token hashing.

    Equal token multisets map to bitwise-identical vectors: the per-token
    contributions are exact integers accumulated in float64, so summation
    order cannot change the result.
    """

    def __init__(self, dimension: int = 256) -> None:
        if dimension < 1:
            raise EmbeddingError(f"dimension must be >= 1, got {dimension}")
        self.dimension = dimension

    def embed(self, item: EmbeddingInput) -> EmbeddingVector:
        tokens = tokenize(item.rendered_text())
        if not tokens:
            raise EmbeddingError("input produced no tokens")
        accum = [0.0] * self.dimension
        for token in tokens:
            index, sign = token_coordinate(token, self.dimension)
            accum[index] += sign
        norm = math.sqrt(sum(v * v for v in accum))
        if norm == 0.0:
            raise EmbeddingError("token contributions cancelled to a zero vector")
        return EmbeddingVector(values=tuple(v / norm for v in accum))

    def embed_batch(self, items: list) -> list:
        return _batch_via_embed(self, items)


class RemoteEmbeddingBackend:
    """Client for an embedding endpoint speaking a small JSON contract.

    Request:  POST endpoint  {"model": ..., "input": ...}
    Response: 200 with {"embedding": [floats]}

    Responses are L2-normalized on receipt. Transport failures and 5xx/429
    statuses are retried with exponential backoff; anything else fails fast.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        dimension: int,
        api_key_env: str = "EMBEDDING_API_KEY",
        timeout_s: float = 30.0,
        retries: int = 3,
        retry_base_delay_s: float = 0.5,
        max_input_chars: int = 100_000,
        max_in_flight: int = 4,
        session=None,
        sleep=time.sleep,
    ) -> None:
        if session is None:
            import requests

            session = requests.Session()
        self.endpoint = endpoint
        self.model = model
        self.dimension = dimension
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.retries = retries
        self.retry_base_delay_s = retry_base_delay_s
        self.max_input_chars = max_input_chars
        self._session = session
        self._sleep = sleep
        self._semaphore = threading.Semaphore(max_in_flight)

    def _headers(self) -> dict:
        import os

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def embed(self, item: EmbeddingInput) -> EmbeddingVector:
        text = item.rendered_text()
        if len(text) > self.max_input_chars:
            raise EmbeddingInputTooLarge(
                f"input is {len(text)} chars, limit is {self.max_input_chars}"
            )
        payload = {"model": self.model, "input": text}
        last_error: Exception | None = None
        for attempt in range(self.retries):
            if attempt:
                self._sleep(self.retry_base_delay_s * (2 ** (attempt - 1)))
            try:
                with self._semaphore:
                    response = self._session.post(
                        self.endpoint,
                        json=payload,
                        headers=self._headers(),
                        timeout=self.timeout_s,
                    )
            except Exception as exc:
                last_error = EmbeddingTransportError(f"request failed: {exc}")
                continue
            if response.status_code == 200:
                body = response.json()
                raw = body.get("embedding")
                if not isinstance(raw, list) or len(raw) != self.dimension:
                    raise EmbeddingError(
                        f"endpoint returned {len(raw) if isinstance(raw, list) else 'no'}"
                        f" values, expected {self.dimension}"
                    )
                norm = math.sqrt(sum(float(v) ** 2 for v in raw))
                if norm == 0.0:
                    raise EmbeddingError("endpoint returned a zero vector")
                return EmbeddingVector(values=tuple(float(v) / norm for v in raw))
            if response.status_code >= 500 or response.status_code == 429:
                last_error = EmbeddingTransportError(
                    f"endpoint returned status {response.status_code}"
                )
                continue
            raise EmbeddingError(
                f"endpoint returned status {response.status_code}: {response.text[:200]}"
            )
        raise EmbeddingTransportError(
            f"giving up after {self.retries} attempts: {last_error}"
        )

    def embed_batch(self, items: list) -> list:
        return _batch_via_embed(self, items)
