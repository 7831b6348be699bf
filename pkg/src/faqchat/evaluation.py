"""Retrieval and generation evaluation harness.

Retrieval metrics are precision@k, recall@k, and MRR@k, averaged over
queries.  Queries with an empty relevant set and queries answered by
the FAQ cache are excluded from retrieval metrics and counted
separately.  Generation quality is scored from human annotations with
a rubric: cache answers score 1, context-grounded answers start from 1
and lose 0.2 per extra-information item and 0.3 per instruction
deviation (clamped to [0, 1]), ungrounded answers score 0, and
no-context queries score 1 only when the answer declined gracefully.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .pipeline import PipelineDeps, ResponseSource, answer_query

LANGUAGE_CODES = ("bn", "en", "banglish")
LANGUAGE_NAMES = {"bn": "Bengali", "en": "English", "banglish": "Banglish"}

EXTRA_INFO_PENALTY = 0.2
DEVIATION_PENALTY = 0.3


class EvaluationError(Exception):
    pass


class MissingJudgmentError(EvaluationError):
    def __init__(self, query_id: str):
        super().__init__(f"no judgment record for query {query_id!r}")
        self.query_id = query_id


class EmptyRelevantSetError(EvaluationError):
    pass


class EmptyAnnotationsError(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# Per-query metrics


def precision_at_k(ranked: list[str], relevant: set[str], k: int) -> float:
    """Relevant hits in the top k over k; short lists keep divisor k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
    return hits / k


def recall_at_k(ranked: list[str], relevant: set[str], k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        raise EmptyRelevantSetError("recall undefined for an empty relevant set")
    hits = sum(1 for doc_id in ranked[:k] if doc_id in relevant)
    return hits / len(relevant)


def mrr_at_k(ranked: list[str], relevant: set[str], k: int) -> float:
    """Reciprocal rank of the first relevant id in the top k, 0 on a miss."""
    if k < 1:
        raise ValueError("k must be >= 1")
    for position, doc_id in enumerate(ranked[:k], start=1):
        if doc_id in relevant:
            return 1.0 / position
    return 0.0


# ---------------------------------------------------------------------------
# Judgments, runs, reports


@dataclass(frozen=True)
class QueryJudgment:
    query_id: str
    query: str
    language: str
    relevant_ids: frozenset[str]

    def __post_init__(self):
        if self.language not in LANGUAGE_CODES:
            raise EvaluationError(f"unknown language tag {self.language!r}")


def load_judgments(path: str | Path) -> dict[str, QueryJudgment]:
    judgments: dict[str, QueryJudgment] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        judgment = QueryJudgment(
            query_id=record["query_id"],
            query=record["query"],
            language=record["language"],
            relevant_ids=frozenset(record["relevant_ids"]),
        )
        if judgment.query_id in judgments:
            raise EvaluationError(f"line {lineno}: duplicate query id {judgment.query_id!r}")
        judgments[judgment.query_id] = judgment
    return judgments


@dataclass(frozen=True)
class QueryRunRecord:
    query_id: str
    before_ids: tuple[str, ...]
    after_ids: tuple[str, ...]
    cache_answered: bool = False

    def __post_init__(self):
        if not set(self.after_ids) <= set(self.before_ids):
            raise EvaluationError(
                f"query {self.query_id!r}: after-rerank ids are not a subset of before-rerank ids"
            )


def load_run(path: str | Path) -> list[QueryRunRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        records.append(
            QueryRunRecord(
                query_id=record["query_id"],
                before_ids=tuple(record["before_ids"]),
                after_ids=tuple(record["after_ids"]),
                cache_answered=bool(record.get("cache_answered", False)),
            )
        )
    return records


def save_run(records: list[QueryRunRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(
                json.dumps(
                    {
                        "query_id": r.query_id,
                        "before_ids": list(r.before_ids),
                        "after_ids": list(r.after_ids),
                        "cache_answered": r.cache_answered,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def _mean(values: list[float]) -> float | None:
    if not values:
        return None
    return math.fsum(values) / len(values)


@dataclass
class _Accumulator:
    query_count: int = 0
    values: dict[str, list[float]] = field(default_factory=dict)

    def add(self, metrics: dict[str, float]) -> None:
        self.query_count += 1
        for key, value in metrics.items():
            self.values.setdefault(key, []).append(value)

    def means(self) -> dict[str, float | None]:
        return {key: _mean(vals) for key, vals in self.values.items()}


@dataclass
class RetrievalReport:
    k_retrieve: int
    k_rerank: int
    included_queries: int
    excluded_no_relevant: int
    excluded_cache_answered: int
    overall: dict[str, dict[str, float | None]]
    per_language: dict[str, dict]

    def stage_keys(self) -> list[str]:
        return [
            f"k{self.k_retrieve}_before",
            f"k{self.k_rerank}_before",
            f"k{self.k_rerank}_after",
        ]

    def to_json_dict(self) -> dict:
        def _round(block: dict[str, float | None]) -> dict:
            return {k: (None if v is None else round(v, 6)) for k, v in block.items()}

        return {
            "schema_version": "1",
            "k_retrieve": self.k_retrieve,
            "k_rerank": self.k_rerank,
            "included_queries": self.included_queries,
            "excluded": {
                "no_relevant_context": self.excluded_no_relevant,
                "cache_answered": self.excluded_cache_answered,
            },
            "overall": {stage: _round(block) for stage, block in self.overall.items()},
            "per_language": {
                lang: {
                    "query_count": slice_["query_count"],
                    **{stage: _round(block) for stage, block in slice_.items() if stage != "query_count"},
                }
                for lang, slice_ in self.per_language.items()
            },
        }

    def format_table(self) -> str:
        def fmt(value: float | None) -> str:
            return "   -" if value is None else f"{value:.2f}"

        def row(label: str, block: dict[str, float | None]) -> str:
            return (
                f"  {label:<18}{fmt(block.get('precision')):>12}{fmt(block.get('recall')):>10}"
                f"{fmt(block.get('mrr')):>8}"
            )

        k5, k3b, k3a = self.stage_keys()
        lines = [
            "Retrieval evaluation"
            f"  (included: {self.included_queries}, excluded: {self.excluded_no_relevant} without"
            f" relevant context, {self.excluded_cache_answered} cache-answered)",
            "",
            f"{'Step':<20}{'Precision@k':>12}{'Recall@k':>10}{'MRR@k':>8}",
            f"k = {self.k_retrieve}: retrieval",
            row("before rerank", self.overall[k5]),
            f"k = {self.k_rerank}: reranking",
            row("before rerank", self.overall[k3b]),
            row("after rerank", self.overall[k3a]),
        ]
        for stage, title in (
            (k5, f"k = {self.k_retrieve}, before rerank"),
            (k3b, f"k = {self.k_rerank}, before rerank"),
            (k3a, f"k = {self.k_rerank}, after rerank"),
        ):
            lines += ["", f"Per language ({title})"]
            lines.append(f"{'Language':<20}{'Precision@k':>12}{'Recall@k':>10}{'MRR@k':>8}")
            for code in LANGUAGE_CODES:
                slice_ = self.per_language.get(code)
                if slice_ is None:
                    continue
                lines.append(row(f"{LANGUAGE_NAMES[code]} (n={slice_['query_count']})", slice_[stage]))
        return "\n".join(lines) + "\n"


def evaluate_retrieval(
    run: list[QueryRunRecord],
    judgments: dict[str, QueryJudgment],
    k_retrieve: int = 5,
    k_rerank: int = 3,
) -> RetrievalReport:
    """Apply the exclusion rules and average the three metrics over
    (k_retrieve, before), (k_rerank, before), (k_rerank, after)."""
    overall = _Accumulator()
    per_language: dict[str, _Accumulator] = {}
    excluded_cache = 0
    excluded_no_relevant = 0

    stage_k5 = f"k{k_retrieve}_before"
    stage_k3b = f"k{k_rerank}_before"
    stage_k3a = f"k{k_rerank}_after"

    for record in run:
        judgment = judgments.get(record.query_id)
        if judgment is None:
            raise MissingJudgmentError(record.query_id)
        if record.cache_answered:
            excluded_cache += 1
            continue
        if not judgment.relevant_ids:
            excluded_no_relevant += 1
            continue
        relevant = set(judgment.relevant_ids)
        before = list(record.before_ids)
        after = list(record.after_ids)
        metrics: dict[str, float] = {}
        for stage, ranked, k in (
            (stage_k5, before, k_retrieve),
            (stage_k3b, before, k_rerank),
            (stage_k3a, after, k_rerank),
        ):
            metrics[f"{stage}.precision"] = precision_at_k(ranked, relevant, k)
            metrics[f"{stage}.recall"] = recall_at_k(ranked, relevant, k)
            metrics[f"{stage}.mrr"] = mrr_at_k(ranked, relevant, k)
        overall.add(metrics)
        per_language.setdefault(judgment.language, _Accumulator()).add(metrics)

    def _blocks(acc: _Accumulator) -> dict[str, dict[str, float | None]]:
        means = acc.means()
        blocks: dict[str, dict[str, float | None]] = {}
        for stage in (stage_k5, stage_k3b, stage_k3a):
            blocks[stage] = {
                "precision": means.get(f"{stage}.precision"),
                "recall": means.get(f"{stage}.recall"),
                "mrr": means.get(f"{stage}.mrr"),
            }
        return blocks

    return RetrievalReport(
        k_retrieve=k_retrieve,
        k_rerank=k_rerank,
        included_queries=overall.query_count,
        excluded_no_relevant=excluded_no_relevant,
        excluded_cache_answered=excluded_cache,
        overall=_blocks(overall),
        per_language={
            lang: {"query_count": acc.query_count, **_blocks(acc)}
            for lang, acc in sorted(per_language.items())
        },
    )


# ---------------------------------------------------------------------------
# Generation rubric


@dataclass(frozen=True)
class GenerationAnnotation:
    query_id: str
    language: str
    lang_match: bool
    was_generated: bool
    no_context: bool = False
    faithful_to_context: bool = True
    extra_info_count: int = 0
    instruction_deviation_count: int = 0
    correct_no_context_behavior: bool = False

    def __post_init__(self):
        if self.language not in LANGUAGE_CODES:
            raise EvaluationError(f"unknown language tag {self.language!r}")
        if self.extra_info_count < 0 or self.instruction_deviation_count < 0:
            raise EvaluationError("penalty counts must be >= 0")

    def accuracy(self) -> float:
        if not self.was_generated:
            return 1.0
        if self.no_context:
            return 1.0 if self.correct_no_context_behavior else 0.0
        # Scored in integer tenths so 0.2/0.3 penalties stay exact decimals.
        tenths = (
            (10 if self.faithful_to_context else 0)
            - round(10 * EXTRA_INFO_PENALTY) * self.extra_info_count
            - round(10 * DEVIATION_PENALTY) * self.instruction_deviation_count
        )
        return max(0, min(10, tenths)) / 10


def load_annotations(path: str | Path) -> list[GenerationAnnotation]:
    annotations = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        annotations.append(
            GenerationAnnotation(
                query_id=record["query_id"],
                language=record["language"],
                lang_match=bool(record["lang_match"]),
                was_generated=bool(record["was_generated"]),
                no_context=bool(record.get("no_context", False)),
                faithful_to_context=bool(record.get("faithful_to_context", True)),
                extra_info_count=int(record.get("extra_info_count", 0)),
                instruction_deviation_count=int(record.get("instruction_deviation_count", 0)),
                correct_no_context_behavior=bool(record.get("correct_no_context_behavior", False)),
            )
        )
    return annotations


@dataclass
class GenerationReport:
    per_language: dict[str, dict[str, float]]
    overall: dict[str, float]

    def to_json_dict(self) -> dict:
        def _round(block: dict[str, float]) -> dict:
            return {k: (v if isinstance(v, int) else round(v, 6)) for k, v in block.items()}

        return {
            "schema_version": "1",
            "overall": _round(self.overall),
            "per_language": {lang: _round(block) for lang, block in self.per_language.items()},
        }

    def format_table(self) -> str:
        lines = [
            f"{'Language':<16}{'Lang. match':>12}{'Gen. rate':>11}{'Accuracy':>10}",
        ]

        def row(label: str, block: dict[str, float]) -> str:
            return (
                f"{label:<16}{block['lang_match_rate']:>12.2f}"
                f"{block['generation_rate']:>11.2f}{block['mean_accuracy']:>10.2f}"
            )

        for code in LANGUAGE_CODES:
            if code in self.per_language:
                lines.append(row(LANGUAGE_NAMES[code], self.per_language[code]))
        lines.append(row("Overall", self.overall))
        return "\n".join(lines) + "\n"


def score_generation(annotations: list[GenerationAnnotation]) -> GenerationReport:
    """Aggregate rubric annotations per language and overall.

    The generation rate counts every annotation in its denominator,
    including no-context queries.
    """
    if not annotations:
        raise EmptyAnnotationsError("no annotations to score")

    def _aggregate(items: list[GenerationAnnotation]) -> dict[str, float]:
        return {
            "query_count": len(items),
            "lang_match_rate": sum(a.lang_match for a in items) / len(items),
            "generation_rate": sum(a.was_generated for a in items) / len(items),
            "mean_accuracy": sum(a.accuracy() for a in items) / len(items),
        }

    by_language: dict[str, list[GenerationAnnotation]] = {}
    for annotation in annotations:
        by_language.setdefault(annotation.language, []).append(annotation)
    return GenerationReport(
        per_language={lang: _aggregate(items) for lang, items in sorted(by_language.items())},
        overall=_aggregate(annotations),
    )


# ---------------------------------------------------------------------------
# End-to-end runner


def load_queries(path: str | Path) -> list[tuple[str, str]]:
    """Read (query_id, query) pairs; judgment files work as query files."""
    queries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        record = json.loads(line)
        queries.append((record["query_id"], record["query"]))
    return queries


def run_end_to_end_eval(
    queries_path: str | Path, deps: PipelineDeps
) -> tuple[list[QueryRunRecord], list[dict]]:
    """Answer every query, capturing before/after-rerank id lists and the
    response projections for later annotation.  Records keep input order."""
    run: list[QueryRunRecord] = []
    responses: list[dict] = []
    for query_id, query in load_queries(queries_path):
        response = answer_query(query, deps)
        cache_answered = response.source is ResponseSource.CACHE
        run.append(
            QueryRunRecord(
                query_id=query_id,
                before_ids=tuple(response.retrieved_ids),
                after_ids=tuple(response.context_ids),
                cache_answered=cache_answered,
            )
        )
        responses.append({"query_id": query_id, **response.to_json_dict()})
    return run, responses


def report_to_json_bytes(report: RetrievalReport | GenerationReport) -> bytes:
    return (json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")
