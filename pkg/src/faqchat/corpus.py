"""FAQ corpus loading, validation, sampling, and lookup.

The corpus is a UTF-8 JSONL file, one record per line with keys
``id``, ``question``, ``answer``, and ``language`` ("en" or "bn").
Entries are immutable after load and the corpus doubles as the
semantic-cache source and the retrieval fact base.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

BENGALI_BLOCK = (0x0980, 0x09FF)


class CorpusError(Exception):
    """Base class for corpus loading and lookup failures."""


class MissingFileError(CorpusError):
    pass


class ParseError(CorpusError):
    def __init__(self, line: int, detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line


class DuplicateIdError(CorpusError):
    def __init__(self, faq_id: str):
        super().__init__(f"duplicate id {faq_id!r}")
        self.faq_id = faq_id


class EmptyFieldError(CorpusError):
    def __init__(self, faq_id: str, fieldname: str):
        super().__init__(f"entry {faq_id!r}: field {fieldname!r} is empty")
        self.faq_id = faq_id
        self.fieldname = fieldname


class EmptyCorpusError(CorpusError):
    pass


class UnknownIdError(CorpusError):
    def __init__(self, faq_id: str):
        super().__init__(f"unknown faq id {faq_id!r}")
        self.faq_id = faq_id


class NTooLargeError(CorpusError):
    def __init__(self, n: int, size: int):
        super().__init__(f"cannot sample {n} entries from corpus of {size}")
        self.n = n
        self.size = size


class Language(str, Enum):
    ENGLISH = "en"
    BENGALI = "bn"


def contains_bengali(text: str) -> bool:
    lo, hi = BENGALI_BLOCK
    return any(lo <= ord(ch) <= hi for ch in text)


@dataclass(frozen=True)
class FaqEntry:
    """One question/answer pair; the retrieval unit."""

    id: str
    question: str
    answer: str
    language: Language


@dataclass(frozen=True)
class FaqCorpus:
    """Ordered, validated FAQ list with a content checksum."""

    entries: tuple[FaqEntry, ...]
    source_path: str
    checksum: str
    _by_id: dict[str, FaqEntry] = field(repr=False, hash=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {e.id: e for e in self.entries})

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, faq_id: str) -> FaqEntry:
        try:
            return self._by_id[faq_id]
        except KeyError:
            raise UnknownIdError(faq_id) from None

    def __contains__(self, faq_id: str) -> bool:
        return faq_id in self._by_id


@dataclass(frozen=True)
class LanguageDistribution:
    english_fraction: float
    bengali_fraction: float

    def __post_init__(self):
        total = self.english_fraction + self.bengali_fraction
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total}, expected 1")


_REQUIRED_KEYS = {"id", "question", "answer", "language"}


def _parse_entry(record: dict, lineno: int) -> FaqEntry:
    missing = _REQUIRED_KEYS - record.keys()
    if missing:
        raise ParseError(lineno, f"missing keys {sorted(missing)}")
    for key in _REQUIRED_KEYS:
        if not isinstance(record[key], str):
            raise ParseError(lineno, f"key {key!r} must be a string")
    try:
        language = Language(record["language"])
    except ValueError:
        raise ParseError(lineno, f"language must be 'en' or 'bn', got {record['language']!r}") from None
    entry = FaqEntry(
        id=record["id"],
        question=record["question"],
        answer=record["answer"],
        language=language,
    )
    for fieldname in ("id", "question", "answer"):
        if not getattr(entry, fieldname).strip():
            raise EmptyFieldError(entry.id or f"<line {lineno}>", fieldname)
    if language is Language.BENGALI and not contains_bengali(entry.question):
        raise ParseError(lineno, f"entry {entry.id!r} tagged 'bn' but question has no Bengali codepoints")
    return entry


def load_faq_corpus(path: str | Path) -> FaqCorpus:
    """Load and validate a JSONL corpus file, preserving file order."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(str(path))
    raw = path.read_bytes()
    checksum = hashlib.sha256(raw).hexdigest()

    entries: list[FaqEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(lineno, f"invalid JSON: {exc.msg}") from None
        if not isinstance(record, dict):
            raise ParseError(lineno, "record must be a JSON object")
        entry = _parse_entry(record, lineno)
        if entry.id in seen:
            raise DuplicateIdError(entry.id)
        seen.add(entry.id)
        entries.append(entry)

    return FaqCorpus(entries=tuple(entries), source_path=str(path), checksum=checksum)


def sample_faqs(corpus: FaqCorpus, n: int, seed: int | None = None) -> list[FaqEntry]:
    """Sample n distinct entries; a fixed seed gives a reproducible sample."""
    if n <= 0:
        raise ValueError(f"sample size must be positive, got {n}")
    if n > len(corpus):
        raise NTooLargeError(n, len(corpus))
    rng = random.Random(seed) if seed is not None else random.Random()
    return rng.sample(list(corpus.entries), n)


def lookup_answer(corpus: FaqCorpus, faq_id: str) -> str:
    """Return the stored answer verbatim, without any transcoding."""
    return corpus.get(faq_id).answer


def corpus_stats(corpus: FaqCorpus) -> LanguageDistribution:
    if len(corpus) == 0:
        raise EmptyCorpusError("cannot compute stats of an empty corpus")
    english = sum(1 for e in corpus if e.language is Language.ENGLISH)
    return LanguageDistribution(
        english_fraction=english / len(corpus),
        bengali_fraction=(len(corpus) - english) / len(corpus),
    )
