import numpy as np
import pytest

from faqchat.corpus import load_faq_corpus
from faqchat.pipeline import (
    ChatResponse,
    EmptyQueryError,
    LanguageTag,
    PipelineConfig,
    PipelineDeps,
    PipelineError,
    QueryLanguage,
    ResponseSource,
    Script,
    answer_query,
    cache_check,
    detect_language_and_script,
    rerank_context,
    retrieve_context,
)
from faqchat.providers import (
    EmptyTextError,
    MockChatProvider,
    MockEmbeddingProvider,
    MockRerankProvider,
    ProviderBundle,
    ProviderError,
    ProviderErrorKind,
)
from faqchat.vectorstore import (
    DimensionMismatchError,
    EmbeddingIndex,
    EmbeddingVector,
    IndexKind,
    ScoredHit,
    build_index,
    combined_document_text,
    cosine_similarity,
)

from conftest import write_corpus


# --- language detection -----------------------------------------------------


def test_detect_pure_bengali_script():
    tag = detect_language_and_script("ভিডিও বারবার আটকে যাচ্ছে কেন?")
    assert tag == LanguageTag(QueryLanguage.BENGALI, Script.BENGALI)


def test_detect_roman_english():
    tag = detect_language_and_script("How do I cancel my subscription?")
    assert tag == LanguageTag(QueryLanguage.ENGLISH, Script.ROMAN)


def test_detect_banglish_via_lexicon():
    tag = detect_language_and_script("amar account e problem hocche")
    assert tag == LanguageTag(QueryLanguage.BANGLISH, Script.ROMAN)


def test_detect_single_lexicon_token_stays_english():
    # one match is not enough evidence for code switching
    tag = detect_language_and_script("the taka exchange rate increased")
    assert tag.language is QueryLanguage.ENGLISH


def test_detect_mixed_script_below_threshold_is_roman():
    # 4 Bengali letters out of 20 -> under the 30% script threshold,
    # but the lexicon still flags the Roman part as Banglish
    tag = detect_language_and_script("amar টাকা refund hobe ki?")
    assert tag.script is Script.ROMAN
    assert tag.language is QueryLanguage.BANGLISH


def test_detect_empty_text():
    with pytest.raises(EmptyTextError):
        detect_language_and_script("   ")


def test_language_tag_forbids_bengali_roman_combo():
    with pytest.raises(ValueError):
        LanguageTag(QueryLanguage.BENGALI, Script.ROMAN)


# --- cache check ------------------------------------------------------------


def _vec(*values):
    return EmbeddingVector(np.array(values, dtype=np.float32), "t", "")


def _question_index(rows):
    return EmbeddingIndex(IndexKind.QUESTION_ONLY, rows, "t", "c" * 64)


def test_cache_check_hit_on_identical_vector():
    stored = _vec(0.2, 0.9)
    index = _question_index([("faq-x", stored)])
    hit = cache_check(stored, index, threshold=0.8)
    assert hit is not None
    faq_id, score = hit
    assert faq_id == "faq-x"
    assert score == pytest.approx(1.0, abs=1e-12)


def test_cache_check_boundary_exactly_point_eight_misses():
    # stored (4, 3) has exact norm 5; query (1, 0) gives cosine exactly 0.8
    index = _question_index([("faq-x", _vec(4.0, 3.0))])
    query = _vec(1.0, 0.0)
    assert cosine_similarity(query, index.rows[0][1]) == 0.8
    assert cache_check(query, index, threshold=0.8) is None


def test_cache_check_below_threshold_misses():
    c = 0.79
    stored = _vec(c, np.sqrt(1 - c * c))
    index = _question_index([("faq-x", stored)])
    query = _vec(1.0, 0.0)
    assert cosine_similarity(query, stored) == pytest.approx(0.79, abs=1e-6)
    assert cache_check(query, index, threshold=0.8) is None


def test_cache_check_tie_broken_by_corpus_order():
    shared = _vec(0.6, 0.8)
    index = _question_index([("early", shared), ("late", _vec(0.6, 0.8))])
    hit = cache_check(shared, index, threshold=0.5)
    assert hit is not None and hit[0] == "early"


def test_cache_threshold_monotonicity():
    # raising the threshold never converts a miss into a hit
    rng = np.random.default_rng(5)
    index = _question_index(
        [(f"id-{i}", _vec(*rng.uniform(-1, 1, 4))) for i in range(6)]
    )
    for _ in range(25):
        query = _vec(*rng.uniform(-1, 1, 4))
        thresholds = sorted(rng.uniform(0.01, 1.0, 3))
        hits = [cache_check(query, index, t) is not None for t in thresholds]
        for lo, hi in zip(hits, hits[1:]):
            assert lo or not hi


def test_pipeline_config_validation():
    with pytest.raises(ValueError):
        PipelineConfig(cache_threshold=0.0)
    with pytest.raises(ValueError):
        PipelineConfig(cache_threshold=1.2)
    with pytest.raises(ValueError):
        PipelineConfig(k_retrieve=2, k_rerank=3)


# --- retrieval and rerank ----------------------------------------------------


def test_retrieve_query_equal_to_document_ranks_first(bundled_corpus, bundled_indexes):
    _, qa_index = bundled_indexes
    embedder = MockEmbeddingProvider(dim=64)
    target = combined_document_text(bundled_corpus.get("faq-004"))
    hits = retrieve_context(target, qa_index, embedder, k_retrieve=5)
    assert hits[0].faq_id == "faq-004"
    assert hits[0].score == pytest.approx(1.0, abs=1e-12)
    assert len(hits) == 5


def test_retrieve_matches_exhaustive_oracle(tmp_path):
    entries = [
        {
            "id": f"doc-{i:02d}",
            "question": f"question number {i} about topic {i % 5}",
            "answer": f"answer text {i} mentioning feature {i % 7}",
            "language": "en",
        }
        for i in range(20)
    ]
    corpus = load_faq_corpus(write_corpus(tmp_path / "c.jsonl", entries))
    embedder = MockEmbeddingProvider(dim=16)
    index = build_index(corpus, embedder, IndexKind.COMBINED_QA)
    query = "which feature does topic three have"
    hits = retrieve_context(query, index, embedder, k_retrieve=5)
    qv = embedder.embed_text(query)
    scored = sorted(
        ((cosine_similarity(qv, v), pos, fid) for pos, (fid, v) in enumerate(index.rows)),
        key=lambda t: (-t[0], t[1]),
    )
    assert [(h.faq_id, h.score) for h in hits] == [(fid, s) for s, _, fid in scored[:5]]


def test_rerank_keeps_subset_and_count(bundled_corpus):
    hits = [ScoredHit(f"faq-{i:03d}", 0.9 - i * 0.1, i) for i in range(1, 6)]
    out = rerank_context("refund my payment", hits, bundled_corpus, MockRerankProvider(), 3)
    assert len(out) == 3
    assert {h.faq_id for h in out} <= {h.faq_id for h in hits}
    assert [h.rank for h in out] == [1, 2, 3]


def test_rerank_saturates_with_fewer_hits(bundled_corpus):
    hits = [ScoredHit("faq-001", 0.9, 1), ScoredHit("faq-002", 0.8, 2)]
    out = rerank_context("password reset", hits, bundled_corpus, MockRerankProvider(), 3)
    assert len(out) == 2


def test_rerank_puts_query_identical_candidate_first(bundled_corpus):
    hits = [ScoredHit("faq-001", 0.9, 1), ScoredHit("faq-002", 0.8, 2), ScoredHit("faq-003", 0.7, 3)]
    query = combined_document_text(bundled_corpus.get("faq-002"))
    out = rerank_context(query, hits, bundled_corpus, MockRerankProvider(), 3)
    assert out[0].faq_id == "faq-002"


# --- answer_query -----------------------------------------------------------


def test_answer_query_cache_path(mock_deps):
    question = mock_deps.corpus.get("faq-004").question
    response = answer_query(question, mock_deps)
    assert response.source is ResponseSource.CACHE
    assert response.matched_faq_id == "faq-004"
    assert response.answer == mock_deps.corpus.get("faq-004").answer
    assert response.cache_score == pytest.approx(1.0, abs=1e-12)
    assert response.provider_calls == {"embed": 1, "translate": 0, "rerank": 0, "chat": 0}
    assert mock_deps.providers.chat.counter.calls == 0
    assert mock_deps.providers.rerank.counter.calls == 0
    assert mock_deps.providers.embedding.counter.calls == 1
    assert response.translated_query is None
    for stage in ("embed_query", "cache_check", "total"):
        assert stage in response.timings


def test_answer_query_generated_path(mock_deps):
    response = answer_query("Can I get a refund for an accidental purchase?", mock_deps)
    assert response.source is ResponseSource.GENERATED
    assert 1 <= len(response.context_ids) <= mock_deps.config.k_rerank
    assert set(response.context_ids) <= set(response.retrieved_ids)
    assert len(response.retrieved_ids) == mock_deps.config.k_retrieve
    assert response.provider_calls == {"embed": 2, "translate": 1, "rerank": 1, "chat": 1}
    assert response.translated_query == "Can I get a refund for an accidental purchase?"
    for faq_id in response.context_ids:
        assert faq_id in response.answer
    for stage in ("embed_query", "cache_check", "translate", "retrieve", "rerank", "generate", "total"):
        assert stage in response.timings


def test_answer_query_is_deterministic_apart_from_timings(mock_deps):
    first = answer_query("ami notun device e login korte parchi na", mock_deps)
    second = answer_query("ami notun device e login korte parchi na", mock_deps)
    assert first.to_json_dict() == second.to_json_dict()
    assert first.timings != {}


def test_answer_query_translation_happens_once_per_language(mock_deps):
    queries = {
        "english": "Why does the player crash on startup every time?",
        "banglish": "amar app ta bar bar crash korche keno",
        "bengali": "অ্যাপটা বারবার বন্ধ হয়ে যাচ্ছে কেন?",
    }
    for expected_lang, query in queries.items():
        response = answer_query(query, mock_deps)
        assert response.source is ResponseSource.GENERATED
        assert response.provider_calls["translate"] == 1
        assert response.detected_language.language.value == expected_lang


def test_answer_query_banglish_routing_and_prompt_contents(bundled_corpus, bundled_indexes):
    class RecordingChat(MockChatProvider):
        def __init__(self):
            super().__init__()
            self.seen = []

        def _generate(self, messages):
            self.seen.append(messages)
            return super()._generate(messages)

    question_index, qa_index = bundled_indexes
    chat = RecordingChat()
    deps = PipelineDeps(
        corpus=bundled_corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=ProviderBundle(
            embedding=MockEmbeddingProvider(dim=64), chat=chat, rerank=MockRerankProvider()
        ),
    )
    query = "ami ekta natok dekhte giye dekhi video bar bar atke jacche, apnader app e ki somossa?"
    response = answer_query(query, deps)
    assert response.source is ResponseSource.GENERATED
    assert response.detected_language.language is QueryLanguage.BANGLISH
    instruction = chat.seen[-1][0].content
    assert "Reply in Bengali written in Roman script (Banglish)" in instruction
    for faq_id in response.context_ids:
        assert f"[{faq_id}] Q:" in instruction
    assert chat.seen[-1][1].content == query
    assert query not in instruction


def test_answer_query_empty_query(mock_deps):
    with pytest.raises(EmptyQueryError):
        answer_query("  ", mock_deps)


def test_answer_query_rerank_disabled_uses_retrieval_order(bundled_corpus, bundled_indexes):
    question_index, qa_index = bundled_indexes
    providers = ProviderBundle.mocks(dim=64)
    deps = PipelineDeps(
        corpus=bundled_corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=providers,
        config=PipelineConfig(rerank_enabled=False),
    )
    response = answer_query("Why is my screen flickering during playback?", deps)
    assert response.source is ResponseSource.GENERATED
    assert response.context_ids == response.retrieved_ids[:3]
    assert response.provider_calls["rerank"] == 0
    assert providers.rerank.counter.calls == 0


def test_answer_query_surfaces_stage_on_embed_failure(bundled_corpus, bundled_indexes):
    class DownEmbedder(MockEmbeddingProvider):
        def _embed(self, text):
            raise ProviderError(ProviderErrorKind.UNREACHABLE, "refused")

    question_index, qa_index = bundled_indexes
    deps = PipelineDeps(
        corpus=bundled_corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=ProviderBundle(
            embedding=DownEmbedder(dim=64), chat=MockChatProvider(), rerank=MockRerankProvider()
        ),
    )
    with pytest.raises(PipelineError) as err:
        answer_query("anything at all", deps)
    assert err.value.stage == "embed_query"
    assert err.value.cause.kind is ProviderErrorKind.UNREACHABLE


def test_answer_query_surfaces_stage_on_translate_failure(bundled_corpus, bundled_indexes):
    class DownTranslator(MockChatProvider):
        def translate_to_english(self, query):
            raise ProviderError(ProviderErrorKind.TIMEOUT, "slow")

    question_index, qa_index = bundled_indexes
    deps = PipelineDeps(
        corpus=bundled_corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=ProviderBundle(
            embedding=MockEmbeddingProvider(dim=64),
            chat=DownTranslator(),
            rerank=MockRerankProvider(),
        ),
    )
    with pytest.raises(PipelineError) as err:
        answer_query("a totally novel question", deps)
    assert err.value.stage == "translate"


def test_answer_query_dim_mismatch_between_provider_and_index(bundled_corpus, bundled_indexes):
    question_index, qa_index = bundled_indexes
    deps = PipelineDeps(
        corpus=bundled_corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=ProviderBundle.mocks(dim=32),
    )
    with pytest.raises(DimensionMismatchError):
        answer_query("whatever", deps)


def test_deps_reject_foreign_index(bundled_corpus, tiny_corpus):
    embedder = MockEmbeddingProvider(dim=8)
    q_foreign = build_index(tiny_corpus, embedder, IndexKind.QUESTION_ONLY)
    qa_foreign = build_index(tiny_corpus, embedder, IndexKind.COMBINED_QA)
    with pytest.raises(ValueError):
        PipelineDeps(
            corpus=bundled_corpus,
            question_index=q_foreign,
            qa_index=qa_foreign,
            providers=ProviderBundle.mocks(dim=8),
        )


def test_chat_response_invariants():
    tag = LanguageTag(QueryLanguage.ENGLISH, Script.ROMAN)
    with pytest.raises(ValueError):
        ChatResponse(answer="a", source=ResponseSource.CACHE, detected_language=tag)
    with pytest.raises(ValueError):
        ChatResponse(answer="a", source=ResponseSource.GENERATED, detected_language=tag)
    with pytest.raises(ValueError):
        ChatResponse(
            answer="a",
            source=ResponseSource.FALLBACK,
            detected_language=tag,
            context_ids=["faq-001"],
        )
