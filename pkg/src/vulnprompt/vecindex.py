"""Exact flat vector index with cosine top-k retrieval.

Corpora in this task are small (hundreds to low thousands of functions), so
brute-force search over a dense matrix is both the simplest and the fastest
correct choice. Ties in similarity break by ascending sample id, which makes
rankings reproducible and prefix-consistent across different k.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embedding import EmbeddingVector
from .fileio import atomic_write_text
from .labels import CweLabel, label_codes, label_set


class VecIndexError(ValueError):
    """Raised on malformed index construction, queries, or files."""


@dataclass(frozen=True)
class IndexEntry:
    """One indexed train sample: id, unit vector, and ground-truth labels."""

    sample_id: str
    vector: EmbeddingVector
    truth: frozenset

    def __post_init__(self) -> None:
        if not self.sample_id:
            raise VecIndexError("index entry sample_id must be non-empty")
        if not self.truth:
            raise VecIndexError(f"entry {self.sample_id!r}: truth must be non-empty")


@dataclass(frozen=True)
class Neighbor:
    """A retrieval hit: the neighbor's id and its cosine similarity."""

    sample_id: str
    similarity: float


class VectorIndex:
    """Immutable collection of entries backed by a dense float64 matrix."""

    def __init__(self, entries: tuple) -> None:
        self._entries = entries
        self._by_id = {entry.sample_id: entry for entry in entries}
        self._matrix = np.array(
            [entry.vector.values for entry in entries], dtype=np.float64
        )
        self._ids = np.array([entry.sample_id for entry in entries])

    @property
    def dimension(self) -> int:
        return int(self._matrix.shape[1])

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def entry(self, sample_id: str) -> IndexEntry:
        try:
            return self._by_id[sample_id]
        except KeyError:
            raise VecIndexError(f"no entry with id {sample_id!r}") from None

    def truth_of(self, sample_id: str) -> frozenset:
        return self.entry(sample_id).truth

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def ids(self) -> np.ndarray:
        return self._ids


def build(entries) -> VectorIndex:
    """Validate entries (non-empty, unique ids, equal dims) and build an index."""
    entries = tuple(entries)
    if not entries:
        raise VecIndexError("cannot build an index from zero entries")
    seen: set[str] = set()
    dim = entries[0].vector.dim
    for entry in entries:
        if entry.sample_id in seen:
            raise VecIndexError(f"duplicate entry id {entry.sample_id!r}")
        seen.add(entry.sample_id)
        if entry.vector.dim != dim:
            raise VecIndexError(
                f"entry {entry.sample_id!r} has dim {entry.vector.dim}, expected {dim}"
            )
    return VectorIndex(entries)


def cosine(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity of two unit vectors (their dot product)."""
    if a.dim != b.dim:
        raise VecIndexError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return float(np.dot(np.asarray(a.values), np.asarray(b.values)))


def top_k(index: VectorIndex, query: EmbeddingVector, k: int) -> list:
    """Exact top-k by cosine similarity, ties broken by ascending sample id.

    Returns min(k, len(index)) neighbors in rank order. The ranking for k is
    always a prefix of the ranking for k+1.
    """
    if k < 1:
        raise VecIndexError(f"k must be >= 1, got {k}")
    if query.dim != index.dimension:
        raise VecIndexError(
            f"query dim {query.dim} does not match index dim {index.dimension}"
        )
    sims = index.matrix @ np.asarray(query.values, dtype=np.float64)
    order = np.lexsort((index.ids, -sims))
    take = min(k, len(index))
    return [
        Neighbor(sample_id=str(index.ids[i]), similarity=float(sims[i]))
        for i in order[:take]
    ]


def save_index(index: VectorIndex, path: str | Path) -> None:
    """Persist an index as JSONL: {"id", "vector", "labels"} per line."""
    lines = []
    for entry in index:
        lines.append(
            json.dumps(
                {
                    "id": entry.sample_id,
                    "vector": list(entry.vector.values),
                    "labels": label_codes(entry.truth),
                },
                sort_keys=True,
            )
        )
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_index(path: str | Path) -> VectorIndex:
    """Load a JSONL index file written by save_index."""
    entries: list[IndexEntry] = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VecIndexError(f"line {line_no}: malformed JSON: {exc}") from None
            for key in ("id", "vector", "labels"):
                if key not in record:
                    raise VecIndexError(f"line {line_no}: missing field {key!r}")
            entries.append(
                IndexEntry(
                    sample_id=record["id"],
                    vector=EmbeddingVector(values=tuple(float(v) for v in record["vector"])),
                    truth=label_set(record["labels"]),
                )
            )
    return build(entries)
