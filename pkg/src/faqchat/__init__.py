"""faqchat: multilingual FAQ-grounded customer service answering engine.

Pipeline: embed the query, check the semantic FAQ cache, and on a miss
translate to English, retrieve top-5 from a combined question+answer
index, rerank to top-3, and generate a grounded reply that matches the
customer's language and script.  Ships with deterministic mock model
providers and a retrieval/generation evaluation harness.
"""

from .corpus import FaqCorpus, FaqEntry, Language, corpus_stats, load_faq_corpus, lookup_answer, sample_faqs
from .evaluation import (
    GenerationAnnotation,
    QueryJudgment,
    QueryRunRecord,
    evaluate_retrieval,
    mrr_at_k,
    precision_at_k,
    recall_at_k,
    run_end_to_end_eval,
    score_generation,
)
from .pipeline import (
    ChatResponse,
    LanguageTag,
    PipelineConfig,
    PipelineDeps,
    QueryLanguage,
    ResponseSource,
    Script,
    answer_query,
    cache_check,
    detect_language_and_script,
    rerank_context,
    retrieve_context,
)
from .prompts import PromptTemplate, build_prompt, render_template_docs
from .providers import (
    ChatProvider,
    EmbeddingProvider,
    MockChatProvider,
    MockEmbeddingProvider,
    MockRerankProvider,
    ProviderBundle,
    ProviderError,
    RerankProvider,
)
from .vectorstore import (
    EmbeddingIndex,
    EmbeddingVector,
    IndexKind,
    ScoredHit,
    build_index,
    combined_document_text,
    cosine_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "ChatProvider",
    "ChatResponse",
    "EmbeddingIndex",
    "EmbeddingProvider",
    "EmbeddingVector",
    "FaqCorpus",
    "FaqEntry",
    "GenerationAnnotation",
    "IndexKind",
    "Language",
    "LanguageTag",
    "MockChatProvider",
    "MockEmbeddingProvider",
    "MockRerankProvider",
    "PipelineConfig",
    "PipelineDeps",
    "PromptTemplate",
    "ProviderBundle",
    "ProviderError",
    "QueryJudgment",
    "QueryLanguage",
    "QueryRunRecord",
    "RerankProvider",
    "ResponseSource",
    "ScoredHit",
    "Script",
    "answer_query",
    "build_index",
    "build_prompt",
    "cache_check",
    "combined_document_text",
    "corpus_stats",
    "cosine_similarity",
    "detect_language_and_script",
    "evaluate_retrieval",
    "load_faq_corpus",
    "lookup_answer",
    "mrr_at_k",
    "precision_at_k",
    "recall_at_k",
    "render_template_docs",
    "rerank_context",
    "retrieve_context",
    "run_end_to_end_eval",
    "sample_faqs",
    "score_generation",
]
