"""Request pipeline: embed the raw query, try the semantic FAQ cache,
and on a miss translate to English, retrieve, rerank, and generate.

The cache compares the raw (untranslated) query against question-only
embeddings; translation happens only after a cache miss and acts as a
normalization step so multilingual and code-switched queries share one
embedding space.  The reranker receives the translated English query,
keeping the whole retrieval stage in the normalized language.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass, field
from enum import Enum

from .corpus import BENGALI_BLOCK, FaqCorpus
from .prompts import PromptTemplate, build_prompt
from .providers import EmptyTextError, ProviderBundle, ProviderError, RerankProvider
from .vectorstore import (
    EmbeddingIndex,
    EmbeddingVector,
    IndexKind,
    ScoredHit,
    combined_document_text,
)


class EmptyQueryError(Exception):
    pass


class PipelineError(Exception):
    """A provider failure surfaced with the pipeline stage that hit it."""

    def __init__(self, stage: str, cause: ProviderError):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


class QueryLanguage(str, Enum):
    ENGLISH = "english"
    BENGALI = "bengali"
    BANGLISH = "banglish"


class Script(str, Enum):
    ROMAN = "roman"
    BENGALI = "bengali"


@dataclass(frozen=True)
class LanguageTag:
    language: QueryLanguage
    script: Script

    def __post_init__(self):
        # Bengali written in Roman script is the Banglish case by definition.
        if self.language is QueryLanguage.BENGALI and self.script is Script.ROMAN:
            raise ValueError("Bengali in Roman script must be tagged banglish")

    def label(self) -> str:
        return self.language.value


class ResponseSource(str, Enum):
    CACHE = "cache"
    GENERATED = "generated"
    FALLBACK = "fallback"


@dataclass(frozen=True)
class PipelineConfig:
    cache_threshold: float = 0.8
    k_retrieve: int = 5
    k_rerank: int = 3
    rerank_enabled: bool = True

    def __post_init__(self):
        if not (0.0 < self.cache_threshold <= 1.0):
            raise ValueError(f"cache_threshold must be in (0, 1], got {self.cache_threshold}")
        if self.k_retrieve < 1 or self.k_rerank < 1:
            raise ValueError("k_retrieve and k_rerank must be >= 1")
        if self.k_rerank > self.k_retrieve:
            raise ValueError("k_rerank must not exceed k_retrieve")


@dataclass
class ChatResponse:
    answer: str
    source: ResponseSource
    detected_language: LanguageTag
    matched_faq_id: str | None = None
    cache_score: float | None = None
    context_ids: list[str] = field(default_factory=list)
    retrieved_ids: list[str] = field(default_factory=list)
    translated_query: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    provider_calls: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if self.source is ResponseSource.CACHE and self.matched_faq_id is None:
            raise ValueError("cache responses must carry the matched faq id")
        if self.source is ResponseSource.GENERATED and not self.context_ids:
            raise ValueError("generated responses must carry at least one context id")
        if self.source is ResponseSource.FALLBACK and self.context_ids:
            raise ValueError("fallback responses must not carry context ids")

    def to_json_dict(self, include_timings: bool = False) -> dict:
        """Stable JSON projection; timings are excluded by default so
        repeated mock runs serialize identically."""
        out: dict = {
            "answer": self.answer,
            "source": self.source.value,
            "detected_language": {
                "language": self.detected_language.language.value,
                "script": self.detected_language.script.value,
            },
            "provider_calls": dict(sorted(self.provider_calls.items())),
        }
        if self.matched_faq_id is not None:
            out["matched_faq_id"] = self.matched_faq_id
        if self.cache_score is not None:
            out["cache_score"] = self.cache_score
        if self.source is ResponseSource.GENERATED:
            out["context_ids"] = list(self.context_ids)
        if self.translated_query is not None:
            out["translated_query"] = self.translated_query
        if include_timings:
            out["timings"] = dict(self.timings)
        return out


# ---------------------------------------------------------------------------
# Language and script detection

BENGALI_SCRIPT_THRESHOLD = 0.3
BANGLISH_MIN_MATCHES = 2

# Romanized Bengali function words and very common verb forms, with the
# frequent spelling variants.  English loanwords are deliberately absent:
# real Banglish sentences carry them, but detection keys off the Bengali
# grammar words around them.
BANGLISH_LEXICON = frozenset(
    """
    ami amar amra amader amake apni apnar apnara apnader apnake tumi tomar tomra
    se tar tara tader eta eita seta oita ei oi sei ekta ekti kono kichu kichui
    keno kivabe kibhabe kemon kothay kokhon kake
    hoy hocche hochhe hoyeche hoye hobe hole holo chilo chhilo
    ache achhe nei nai na ta
    korte kore kori korchi korchhi korun korben korle korar korbo korena korchena
    dekhte dekhi dekhun dekhacche dekhachhe dichhe dicche diye deya dewa dile dibe deben
    nite niye niben
    parchi parchhi paren parbo parben parina parchina parchhina
    jabe jacche jachhe jacchena jete giye gelo
    asche ashche aschhe eseche esechhe elo asena ashena
    bolte bolchi bolun bole bolben
    janate janan jani janina janabo
    chai chaichi chailam lagbe lagche lagchhe lagse
    theke porjonto jonno jonne sathe shathe moto moton
    abar ekhon tokhon ajke kalke porshu jokhon jodi tahole tarpor karon
    onek khub beshi ektu kom
    bhalo valo kharap notun purono
    taka poisa somossa shomossa somoy shomoy
    atke barbar bondho chalu khulche khulchena dhukte dhuke
    amaro keo keu kau
    """.split()
)

_ROMAN_TOKEN_RE = re.compile(r"[a-z]+")


def detect_language_and_script(text: str) -> LanguageTag:
    """Classify a query as Bengali script, Roman English, or Banglish."""
    if not text.strip():
        raise EmptyTextError("cannot detect language of empty text")
    letters = [ch for ch in text if ch.isalpha()]
    lo, hi = BENGALI_BLOCK
    bengali_letters = sum(1 for ch in letters if lo <= ord(ch) <= hi)
    if letters and bengali_letters / len(letters) >= BENGALI_SCRIPT_THRESHOLD:
        return LanguageTag(QueryLanguage.BENGALI, Script.BENGALI)
    tokens = _ROMAN_TOKEN_RE.findall(text.lower())
    matches = sum(1 for token in tokens if token in BANGLISH_LEXICON)
    if matches >= BANGLISH_MIN_MATCHES:
        return LanguageTag(QueryLanguage.BANGLISH, Script.ROMAN)
    return LanguageTag(QueryLanguage.ENGLISH, Script.ROMAN)


# ---------------------------------------------------------------------------
# Pipeline stages

FALLBACK_ANSWER = (
    "I could not find anything in the knowledge base for this question. "
    "Could you share a few more details, or would you like me to connect "
    "you with a human operator?"
)


def cache_check(
    query_vec: EmbeddingVector, question_index: EmbeddingIndex, threshold: float
) -> tuple[str, float] | None:
    """Best FAQ question iff its similarity is strictly above the threshold."""
    best = question_index.top_k(query_vec, k=1)[0]
    if best.score > threshold:
        return best.faq_id, best.score
    return None


def retrieve_context(english_query, qa_index, embedder, k_retrieve: int) -> list[ScoredHit]:
    if not english_query.strip():
        raise EmptyQueryError("retrieval query must be non-empty")
    query_vec = embedder.embed_text(english_query)
    return qa_index.top_k(query_vec, k=k_retrieve)


def rerank_context(
    query: str,
    hits: list[ScoredHit],
    corpus: FaqCorpus,
    reranker: RerankProvider,
    k_rerank: int,
) -> list[ScoredHit]:
    """Re-score hits against the (translated) query and keep the best
    k_rerank, breaking score ties by the prior retrieval rank."""
    if not hits:
        raise ValueError("rerank requires at least one hit")
    candidates = [combined_document_text(corpus.get(h.faq_id)) for h in hits]
    scores = dict(reranker.rerank(query, candidates))
    order = sorted(range(len(hits)), key=lambda i: (-scores[i], hits[i].rank))
    return [
        ScoredHit(faq_id=hits[i].faq_id, score=scores[i], rank=rank)
        for rank, i in enumerate(order[:k_rerank], start=1)
    ]


@dataclass
class PipelineDeps:
    """Everything answer_query needs; immutable and shareable."""

    corpus: FaqCorpus
    question_index: EmbeddingIndex
    qa_index: EmbeddingIndex
    providers: ProviderBundle
    config: PipelineConfig = field(default_factory=PipelineConfig)
    template: PromptTemplate | None = None

    def __post_init__(self):
        if self.question_index.kind is not IndexKind.QUESTION_ONLY:
            raise ValueError("question_index must be a question-only index")
        if self.qa_index.kind is not IndexKind.COMBINED_QA:
            raise ValueError("qa_index must be a combined question+answer index")
        for index in (self.question_index, self.qa_index):
            if index.corpus_checksum != self.corpus.checksum:
                raise ValueError("index was built against a different corpus")


class _StageClock:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def run(self, stage: str, fn):
        start = time.perf_counter()
        try:
            result = fn()
        except ProviderError as exc:
            self.timings[stage] = time.perf_counter() - start
            raise PipelineError(stage, exc) from exc
        self.timings[stage] = time.perf_counter() - start
        return result


def answer_query(query: str, deps: PipelineDeps) -> ChatResponse:
    """Run the full pipeline for one query."""
    if not query.strip():
        raise EmptyQueryError("query must be non-empty")
    config = deps.config
    clock = _StageClock()
    calls = {"embed": 0, "translate": 0, "rerank": 0, "chat": 0}
    total_start = time.perf_counter()

    language = detect_language_and_script(query)

    def _embed_raw():
        calls["embed"] += 1
        return deps.providers.embedding.embed_text(query)

    query_vec = clock.run("embed_query", _embed_raw)
    hit = clock.run(
        "cache_check", lambda: cache_check(query_vec, deps.question_index, config.cache_threshold)
    )
    if hit is not None:
        faq_id, score = hit
        clock.timings["total"] = time.perf_counter() - total_start
        return ChatResponse(
            answer=deps.corpus.get(faq_id).answer,
            source=ResponseSource.CACHE,
            detected_language=language,
            matched_faq_id=faq_id,
            cache_score=score,
            timings=clock.timings,
            provider_calls=calls,
        )

    def _translate():
        calls["translate"] += 1
        return deps.providers.chat.translate_to_english(query)

    english_query = clock.run("translate", _translate)

    def _retrieve():
        calls["embed"] += 1
        return retrieve_context(english_query, deps.qa_index, deps.providers.embedding, config.k_retrieve)

    retrieved = clock.run("retrieve", _retrieve)

    if retrieved and config.rerank_enabled:

        def _rerank():
            calls["rerank"] += 1
            return rerank_context(
                english_query, retrieved, deps.corpus, deps.providers.rerank, config.k_rerank
            )

        contexts = clock.run("rerank", _rerank)
    else:
        contexts = retrieved[: config.k_rerank]

    if not contexts:
        clock.timings["total"] = time.perf_counter() - total_start
        return ChatResponse(
            answer=FALLBACK_ANSWER,
            source=ResponseSource.FALLBACK,
            detected_language=language,
            retrieved_ids=[h.faq_id for h in retrieved],
            translated_query=english_query,
            timings=clock.timings,
            provider_calls=calls,
        )

    context_triples = [
        (h.faq_id, deps.corpus.get(h.faq_id).question, deps.corpus.get(h.faq_id).answer)
        for h in contexts
    ]
    messages = build_prompt(
        question=query,
        contexts=context_triples,
        language=language.language.value,
        script=language.script.value,
        template=deps.template,
    ).as_chat()

    def _generate():
        calls["chat"] += 1
        return deps.providers.chat.generate_chat(messages)

    answer = clock.run("generate", _generate)
    clock.timings["total"] = time.perf_counter() - total_start
    return ChatResponse(
        answer=answer,
        source=ResponseSource.GENERATED,
        detected_language=language,
        context_ids=[h.faq_id for h in contexts],
        retrieved_ids=[h.faq_id for h in retrieved],
        translated_query=english_query,
        timings=clock.timings,
        provider_calls=calls,
    )
