"""Vector math and the in-memory similarity index over the corpus.

Two index kinds exist: a question-only index backing the semantic FAQ
cache, and a combined question+answer index backing retrieval.  Search
is an exhaustive exact scan; the corpus is small enough that exact
search beats any approximate structure and keeps results reproducible.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np

from .corpus import FaqCorpus, FaqEntry

if TYPE_CHECKING:
    from .providers import EmbeddingProvider

MAGIC = b"FQIX"
DEFAULT_MAX_ENTRY_CHARS = 4000


class VectorStoreError(Exception):
    pass


class DimensionMismatchError(VectorStoreError):
    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")


class ZeroVectorError(VectorStoreError):
    pass


class ChecksumMismatchError(VectorStoreError):
    pass


class EntryTooLargeError(VectorStoreError):
    def __init__(self, faq_id: str, length: int, limit: int):
        super().__init__(f"entry {faq_id!r} text is {length} chars, limit {limit}")


class IndexKind(str, Enum):
    QUESTION_ONLY = "question_only"
    COMBINED_QA = "combined_qa"


@dataclass(frozen=True)
class EmbeddingVector:
    """Fixed-dimension float32 vector with provenance."""

    values: np.ndarray
    model_id: str
    text_hash: str

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 1:
            raise VectorStoreError("embedding must be one-dimensional")
        if not np.all(np.isfinite(arr)):
            raise VectorStoreError("embedding contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class ScoredHit:
    faq_id: str
    score: float
    rank: int


def text_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine of the angle between a and b, clamped to [-1, 1]."""
    if a.dim != b.dim:
        raise DimensionMismatchError(a.dim, b.dim)
    av = a.values.astype(np.float64)
    bv = b.values.astype(np.float64)
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for an all-zero vector")
    sim = float(np.dot(av, bv)) / (na * nb)
    return max(-1.0, min(1.0, sim))


def combined_document_text(entry: FaqEntry) -> str:
    """Canonical question+answer string embedded for retrieval."""
    return f"Q: {entry.question}\nA: {entry.answer}"


class EmbeddingIndex:
    """Immutable map of faq_id -> embedding with exact top-k search.

    Row order follows corpus file order, which is also the tie-break
    order for equal scores.  Norms are cached per row so scoring stays
    O(dim) per row without renormalizing provider output.
    """

    def __init__(
        self,
        kind: IndexKind,
        rows: list[tuple[str, EmbeddingVector]],
        model_id: str,
        corpus_checksum: str,
    ):
        if not rows:
            raise VectorStoreError("index must have at least one row")
        dim = rows[0][1].dim
        for faq_id, vec in rows:
            if vec.dim != dim:
                raise DimensionMismatchError(dim, vec.dim)
        self.kind = kind
        self.rows = tuple(rows)
        self.dim = dim
        self.model_id = model_id
        self.corpus_checksum = corpus_checksum
        self._norms = [float(np.linalg.norm(vec.values.astype(np.float64))) for _, vec in rows]
        for (faq_id, _), norm in zip(rows, self._norms):
            if norm == 0.0:
                raise ZeroVectorError(f"row {faq_id!r} is an all-zero vector")

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def ids(self) -> list[str]:
        return [faq_id for faq_id, _ in self.rows]

    def top_k(self, query: EmbeddingVector, k: int) -> list[ScoredHit]:
        """The min(k, len) highest-cosine rows; ties go to the earlier row."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if query.dim != self.dim:
            raise DimensionMismatchError(self.dim, query.dim)
        qv = query.values.astype(np.float64)
        qnorm = float(np.linalg.norm(qv))
        if qnorm == 0.0:
            raise ZeroVectorError("query is an all-zero vector")
        scored = []
        for pos, (faq_id, vec) in enumerate(self.rows):
            sim = float(np.dot(qv, vec.values.astype(np.float64))) / (qnorm * self._norms[pos])
            sim = max(-1.0, min(1.0, sim))
            scored.append((sim, pos, faq_id))
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [
            ScoredHit(faq_id=faq_id, score=sim, rank=rank)
            for rank, (sim, _, faq_id) in enumerate(scored[:k], start=1)
        ]

    def save(self, path: str | Path) -> None:
        """Write the index to its binary file format (deterministic bytes)."""
        header = json.dumps(
            {
                "kind": self.kind.value,
                "dim": self.dim,
                "model_id": self.model_id,
                "corpus_checksum": self.corpus_checksum,
                "count": len(self.rows),
            },
            sort_keys=True,
            separators=(",", ":"),
        ).encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<I", len(header)))
            fh.write(header)
            for faq_id, vec in self.rows:
                id_bytes = faq_id.encode("utf-8")
                fh.write(struct.pack("<H", len(id_bytes)))
                fh.write(id_bytes)
                fh.write(vec.values.astype("<f4").tobytes())

    @classmethod
    def load(cls, path: str | Path, corpus: FaqCorpus | None = None) -> "EmbeddingIndex":
        """Read an index file; if a corpus is given, verify its checksum."""
        with open(path, "rb") as fh:
            if fh.read(4) != MAGIC:
                raise VectorStoreError(f"{path}: not an index file")
            (header_len,) = struct.unpack("<I", fh.read(4))
            header = json.loads(fh.read(header_len).decode("utf-8"))
            dim = int(header["dim"])
            rows = []
            for _ in range(int(header["count"])):
                (id_len,) = struct.unpack("<H", fh.read(2))
                faq_id = fh.read(id_len).decode("utf-8")
                values = np.frombuffer(fh.read(4 * dim), dtype="<f4").copy()
                rows.append(
                    (faq_id, EmbeddingVector(values=values, model_id=header["model_id"], text_hash=""))
                )
        index = cls(
            kind=IndexKind(header["kind"]),
            rows=rows,
            model_id=header["model_id"],
            corpus_checksum=header["corpus_checksum"],
        )
        if corpus is not None and corpus.checksum != index.corpus_checksum:
            raise ChecksumMismatchError(
                f"index was built from a different corpus (index {index.corpus_checksum[:12]}…, "
                f"corpus {corpus.checksum[:12]}…)"
            )
        return index


def build_index(
    corpus: FaqCorpus,
    embedder: "EmbeddingProvider",
    kind: IndexKind,
    max_entry_chars: int = DEFAULT_MAX_ENTRY_CHARS,
) -> EmbeddingIndex:
    """Embed every corpus entry into an index of the requested kind.

    Oversize entries are rejected here rather than truncated at prompt
    time; FAQ entries are expected to be short.
    """
    from .corpus import EmptyCorpusError

    if len(corpus) == 0:
        raise EmptyCorpusError("cannot index an empty corpus")
    rows = []
    for entry in corpus:
        text = entry.question if kind is IndexKind.QUESTION_ONLY else combined_document_text(entry)
        if len(text) > max_entry_chars:
            raise EntryTooLargeError(entry.id, len(text), max_entry_chars)
        rows.append((entry.id, embedder.embed_text(text)))
    return EmbeddingIndex(kind=kind, rows=rows, model_id=embedder.model_id, corpus_checksum=corpus.checksum)
