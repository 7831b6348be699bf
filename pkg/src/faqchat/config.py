"""Service and provider configuration: JSON config file with environment
variable overrides.  Mock providers are the default so everything runs
offline; HTTP providers are enabled per deployment."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import FaqCorpus, load_faq_corpus
from .pipeline import PipelineConfig, PipelineDeps
from .providers import (
    DEFAULT_CHAT_MODEL,
    DEFAULT_EMBEDDING_MODEL,
    DEFAULT_RERANK_MODEL,
    EndpointConfig,
    HttpChatProvider,
    HttpEmbeddingProvider,
    HttpRerankProvider,
    ProviderBundle,
)
from .vectorstore import EmbeddingIndex

QUESTION_INDEX_FILENAME = "question.idx"
COMBINED_INDEX_FILENAME = "combined_qa.idx"

ENV_PREFIX = "FAQCHAT_"


class ConfigError(Exception):
    pass


@dataclass
class HttpProviderSettings:
    base_url: str = ""
    api_key_env: str = ""
    model_id: str = ""
    timeout: float = 30.0
    retries: int = 2

    def endpoint(self) -> EndpointConfig:
        if not self.base_url:
            raise ConfigError("http provider requires a base_url")
        api_key = os.environ.get(self.api_key_env) if self.api_key_env else None
        return EndpointConfig(
            base_url=self.base_url, api_key=api_key, timeout=self.timeout, retries=self.retries
        )


@dataclass
class ProviderSettings:
    mode: str = "mock"  # "mock" or "http"
    mock_dim: int = 64
    embedding_dim: int = 3072
    temperature: float = 0.0
    max_output_tokens: int = 1024
    embedding: HttpProviderSettings = field(
        default_factory=lambda: HttpProviderSettings(model_id=DEFAULT_EMBEDDING_MODEL)
    )
    chat: HttpProviderSettings = field(
        default_factory=lambda: HttpProviderSettings(model_id=DEFAULT_CHAT_MODEL)
    )
    rerank: HttpProviderSettings = field(
        default_factory=lambda: HttpProviderSettings(model_id=DEFAULT_RERANK_MODEL)
    )

    def build(self) -> ProviderBundle:
        if self.mode == "mock":
            return ProviderBundle.mocks(dim=self.mock_dim)
        if self.mode != "http":
            raise ConfigError(f"unknown provider mode {self.mode!r}")
        return ProviderBundle(
            embedding=HttpEmbeddingProvider(
                endpoint=self.embedding.endpoint(),
                model_id=self.embedding.model_id or DEFAULT_EMBEDDING_MODEL,
                dim=self.embedding_dim,
            ),
            chat=HttpChatProvider(
                endpoint=self.chat.endpoint(),
                model_id=self.chat.model_id or DEFAULT_CHAT_MODEL,
                temperature=self.temperature,
                max_output_tokens=self.max_output_tokens,
            ),
            rerank=HttpRerankProvider(
                endpoint=self.rerank.endpoint(),
                model_id=self.rerank.model_id or DEFAULT_RERANK_MODEL,
            ),
        )


def _http_settings(raw: dict, default_model: str) -> HttpProviderSettings:
    return HttpProviderSettings(
        base_url=raw.get("base_url", ""),
        api_key_env=raw.get("api_key_env", ""),
        model_id=raw.get("model_id", default_model),
        timeout=float(raw.get("timeout", 30.0)),
        retries=int(raw.get("retries", 2)),
    )


def provider_settings_from_dict(raw: dict) -> ProviderSettings:
    return ProviderSettings(
        mode=raw.get("mode", "mock"),
        mock_dim=int(raw.get("mock_dim", 64)),
        embedding_dim=int(raw.get("embedding_dim", 3072)),
        temperature=float(raw.get("temperature", 0.0)),
        max_output_tokens=int(raw.get("max_output_tokens", 1024)),
        embedding=_http_settings(raw.get("embedding", {}), DEFAULT_EMBEDDING_MODEL),
        chat=_http_settings(raw.get("chat", {}), DEFAULT_CHAT_MODEL),
        rerank=_http_settings(raw.get("rerank", {}), DEFAULT_RERANK_MODEL),
    )


@dataclass
class ServiceConfig:
    corpus_path: str
    index_dir: str
    host: str = "127.0.0.1"
    port: int = 8080
    providers: ProviderSettings = field(default_factory=ProviderSettings)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    faq_sample_seed: int | None = None
    cors_origins: tuple[str, ...] = ()
    max_query_chars: int = 2000

    @classmethod
    def from_file(cls, path: str | Path) -> "ServiceConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "ServiceConfig":
        pipeline_raw = raw.get("pipeline", {})
        config = cls(
            corpus_path=raw.get("corpus_path", ""),
            index_dir=raw.get("index_dir", ""),
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", 8080)),
            providers=provider_settings_from_dict(raw.get("providers", {})),
            pipeline=PipelineConfig(
                cache_threshold=float(pipeline_raw.get("cache_threshold", 0.8)),
                k_retrieve=int(pipeline_raw.get("k_retrieve", 5)),
                k_rerank=int(pipeline_raw.get("k_rerank", 3)),
                rerank_enabled=bool(pipeline_raw.get("rerank_enabled", True)),
            ),
            faq_sample_seed=raw.get("faq_sample_seed"),
            cors_origins=tuple(raw.get("cors_origins", [])),
            max_query_chars=int(raw.get("max_query_chars", 2000)),
        )
        return config.apply_env(os.environ)

    def apply_env(self, env: os._Environ | dict) -> "ServiceConfig":
        self.host = env.get(ENV_PREFIX + "HOST", self.host)
        self.port = int(env.get(ENV_PREFIX + "PORT", self.port))
        self.corpus_path = env.get(ENV_PREFIX + "CORPUS", self.corpus_path)
        self.index_dir = env.get(ENV_PREFIX + "INDEX_DIR", self.index_dir)
        self.providers.mode = env.get(ENV_PREFIX + "PROVIDER_MODE", self.providers.mode)
        return self


def load_runtime(
    corpus_path: str | Path,
    index_dir: str | Path,
    providers: ProviderBundle,
    pipeline: PipelineConfig | None = None,
) -> tuple[FaqCorpus, PipelineDeps]:
    """Load the corpus and its two indexes, checksum-verified."""
    corpus = load_faq_corpus(corpus_path)
    index_dir = Path(index_dir)
    question_index = EmbeddingIndex.load(index_dir / QUESTION_INDEX_FILENAME, corpus)
    qa_index = EmbeddingIndex.load(index_dir / COMBINED_INDEX_FILENAME, corpus)
    deps = PipelineDeps(
        corpus=corpus,
        question_index=question_index,
        qa_index=qa_index,
        providers=providers,
        config=pipeline or PipelineConfig(),
    )
    return corpus, deps
