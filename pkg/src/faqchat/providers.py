"""Model provider clients: embedding, chat (also used for translation), rerank.

Real providers speak an OpenAI-compatible HTTP JSON API; the rerank
endpoint accepts {query, documents[]} and returns one score per
document.  Mock providers are pure functions of their inputs so the
whole pipeline can run offline and produce golden-testable output.
"""

from __future__ import annotations

import hashlib
import re
import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import httpx
import numpy as np

from .vectorstore import EmbeddingVector, text_hash

DEFAULT_EMBEDDING_MODEL = "text-embedding-3-large"
DEFAULT_CHAT_MODEL = "gpt-4o"
DEFAULT_RERANK_MODEL = "bge-reranker-v2-m3"

# Authored translation instruction; the upstream system's wording is unknown.
TRANSLATION_INSTRUCTION = (
    "You are a translation assistant for a customer service desk. "
    "Translate the user's message into clear English. Keep product names, "
    "codes, and numbers exactly as written. Reply with the translation only."
)


class EmptyTextError(Exception):
    pass


class ProviderErrorKind(str, Enum):
    TIMEOUT = "timeout"
    AUTH_FAILURE = "auth_failure"
    RATE_LIMITED = "rate_limited"
    BAD_RESPONSE = "bad_response"
    UNREACHABLE = "unreachable"


_RETRYABLE_BY_KIND = {
    ProviderErrorKind.TIMEOUT: True,
    ProviderErrorKind.RATE_LIMITED: True,
    ProviderErrorKind.UNREACHABLE: True,
    ProviderErrorKind.AUTH_FAILURE: False,
    ProviderErrorKind.BAD_RESPONSE: False,
}


class ProviderError(Exception):
    def __init__(self, kind: ProviderErrorKind, detail: str, retryable: bool | None = None):
        super().__init__(f"{kind.value}: {detail}")
        self.kind = kind
        self.detail = detail
        self.retryable = _RETRYABLE_BY_KIND[kind] if retryable is None else retryable


@dataclass
class ChatMessage:
    role: str
    content: str


@dataclass
class EndpointConfig:
    base_url: str
    api_key: str | None = None
    timeout: float = 30.0
    retries: int = 2
    backoff_base: float = 0.5


def with_retries(
    fn: Callable[[], object],
    retries: int,
    backoff_base: float,
    sleep: Callable[[float], None] = time.sleep,
):
    """Run fn, retrying retryable ProviderErrors with exponential backoff."""
    attempt = 0
    while True:
        try:
            return fn()
        except ProviderError as exc:
            if not exc.retryable or attempt >= retries:
                raise
            sleep(backoff_base * (2**attempt))
            attempt += 1


class _CallCounter:
    """Thread-safe invocation counter used by the mock providers."""

    def __init__(self):
        self._lock = threading.Lock()
        self._calls = 0

    def bump(self):
        with self._lock:
            self._calls += 1

    @property
    def calls(self) -> int:
        with self._lock:
            return self._calls


class EmbeddingProvider(ABC):
    model_id: str
    dim: int

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text.strip():
            raise EmptyTextError("cannot embed empty text")
        return self._embed(text)

    @abstractmethod
    def _embed(self, text: str) -> EmbeddingVector: ...


class ChatProvider(ABC):
    model_id: str
    temperature: float
    max_output_tokens: int

    def generate_chat(self, messages: list[ChatMessage]) -> str:
        if not messages:
            raise ValueError("at least one message required")
        if messages[0].role != "system":
            raise ValueError("first message must carry the system/instruction role")
        return self._generate(messages)

    def translate_to_english(self, query: str) -> str:
        """Normalize a query into English ahead of retrieval."""
        if not query.strip():
            raise EmptyTextError("cannot translate empty text")
        return self.generate_chat(
            [ChatMessage("system", TRANSLATION_INSTRUCTION), ChatMessage("user", query)]
        )

    @abstractmethod
    def _generate(self, messages: list[ChatMessage]) -> str: ...


class RerankProvider(ABC):
    model_id: str

    def rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        if not candidates:
            raise ValueError("at least one candidate required")
        return self._rerank(query, candidates)

    @abstractmethod
    def _rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]: ...


# ---------------------------------------------------------------------------
# Deterministic mocks


class MockEmbeddingProvider(EmbeddingProvider):
    """Hash-seeded pseudo-random embeddings: pure in the input text."""

    def __init__(self, dim: int = 64, model_id: str = "mock-embed"):
        self.dim = dim
        self.model_id = model_id
        self.counter = _CallCounter()

    def _embed(self, text: str) -> EmbeddingVector:
        self.counter.bump()
        digest = hashlib.sha256(f"{self.model_id}\x00{text}".encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest, "little"))
        values = rng.uniform(-1.0, 1.0, self.dim).astype(np.float32)
        return EmbeddingVector(values=values, model_id=self.model_id, text_hash=text_hash(text))


_CONTEXT_ID_RE = re.compile(r"(?m)^\[([^\s\]]+)\] ")


class MockChatProvider(ChatProvider):
    """Canned generation echoing the question and any cited context ids."""

    def __init__(self, model_id: str = "mock-chat", temperature: float = 0.0, max_output_tokens: int = 512):
        self.model_id = model_id
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.counter = _CallCounter()

    def _generate(self, messages: list[ChatMessage]) -> str:
        self.counter.bump()
        instruction = messages[0].content
        last_user = next((m.content for m in reversed(messages) if m.role == "user"), "")
        ids = _CONTEXT_ID_RE.findall(instruction)
        cited = ", ".join(ids) if ids else "none"
        return f"[mock answer | sources: {cited}] {last_user}"

    def translate_to_english(self, query: str) -> str:
        # Passthrough for ASCII input; otherwise a tagged deterministic stand-in.
        if not query.strip():
            raise EmptyTextError("cannot translate empty text")
        self.counter.bump()
        if query.isascii():
            return query
        return f"EN({text_hash(query)[:8]}): {query}"


_TOKEN_RE = re.compile(r"\w+", re.UNICODE)


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


class MockRerankProvider(RerankProvider):
    """Scores candidates by token-set overlap (Jaccard) with the query."""

    def __init__(self, model_id: str = "mock-rerank"):
        self.model_id = model_id
        self.counter = _CallCounter()

    def _rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        self.counter.bump()
        q = _tokens(query)
        scores = []
        for i, candidate in enumerate(candidates):
            c = _tokens(candidate)
            union = q | c
            scores.append((i, len(q & c) / len(union) if union else 0.0))
        return scores


# ---------------------------------------------------------------------------
# HTTP providers (OpenAI-compatible embeddings/chat + rerank endpoint)


def _map_status(status: int, body: str) -> ProviderError:
    if status in (401, 403):
        return ProviderError(ProviderErrorKind.AUTH_FAILURE, f"HTTP {status}: {body[:200]}")
    if status == 429:
        return ProviderError(ProviderErrorKind.RATE_LIMITED, f"HTTP {status}: {body[:200]}")
    return ProviderError(ProviderErrorKind.BAD_RESPONSE, f"HTTP {status}: {body[:200]}")


class _HttpClientMixin:
    endpoint: EndpointConfig
    _client: httpx.Client

    def _post(self, path: str, payload: dict) -> dict:
        def attempt() -> dict:
            headers = {}
            if self.endpoint.api_key:
                headers["Authorization"] = f"Bearer {self.endpoint.api_key}"
            try:
                resp = self._client.post(
                    self.endpoint.base_url.rstrip("/") + path,
                    json=payload,
                    headers=headers,
                    timeout=self.endpoint.timeout,
                )
            except httpx.TimeoutException as exc:
                raise ProviderError(ProviderErrorKind.TIMEOUT, str(exc)) from exc
            except httpx.TransportError as exc:
                raise ProviderError(ProviderErrorKind.UNREACHABLE, str(exc)) from exc
            if resp.status_code != 200:
                raise _map_status(resp.status_code, resp.text)
            try:
                return resp.json()
            except ValueError as exc:
                raise ProviderError(ProviderErrorKind.BAD_RESPONSE, "response is not JSON") from exc

        return with_retries(attempt, self.endpoint.retries, self.endpoint.backoff_base)


class HttpEmbeddingProvider(_HttpClientMixin, EmbeddingProvider):
    def __init__(
        self,
        endpoint: EndpointConfig,
        model_id: str = DEFAULT_EMBEDDING_MODEL,
        dim: int = 3072,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.dim = dim
        self._client = client or httpx.Client()

    def _embed(self, text: str) -> EmbeddingVector:
        data = self._post("/embeddings", {"model": self.model_id, "input": text})
        try:
            values = np.asarray(data["data"][0]["embedding"], dtype=np.float32)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(ProviderErrorKind.BAD_RESPONSE, "malformed embedding payload") from exc
        if values.shape[0] != self.dim:
            raise ProviderError(
                ProviderErrorKind.BAD_RESPONSE,
                f"expected dim {self.dim}, got {values.shape[0]}",
            )
        return EmbeddingVector(values=values, model_id=self.model_id, text_hash=text_hash(text))


class HttpChatProvider(_HttpClientMixin, ChatProvider):
    def __init__(
        self,
        endpoint: EndpointConfig,
        model_id: str = DEFAULT_CHAT_MODEL,
        temperature: float = 0.0,
        max_output_tokens: int = 1024,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self._client = client or httpx.Client()

    def _generate(self, messages: list[ChatMessage]) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.model_id,
                "temperature": self.temperature,
                "max_tokens": self.max_output_tokens,
                "messages": [{"role": m.role, "content": m.content} for m in messages],
            },
        )
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(ProviderErrorKind.BAD_RESPONSE, "malformed chat payload") from exc
        if not isinstance(content, str) or not content:
            raise ProviderError(ProviderErrorKind.BAD_RESPONSE, "empty chat completion")
        return content


class HttpRerankProvider(_HttpClientMixin, RerankProvider):
    def __init__(
        self,
        endpoint: EndpointConfig,
        model_id: str = DEFAULT_RERANK_MODEL,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_id = model_id
        self._client = client or httpx.Client()

    def _rerank(self, query: str, candidates: list[str]) -> list[tuple[int, float]]:
        data = self._post("/rerank", {"model": self.model_id, "query": query, "documents": candidates})
        scores = data.get("scores")
        if not isinstance(scores, list) or len(scores) != len(candidates):
            raise ProviderError(
                ProviderErrorKind.BAD_RESPONSE,
                f"expected {len(candidates)} scores, got {scores!r}",
            )
        out = []
        for i, score in enumerate(scores):
            value = float(score)
            if not np.isfinite(value):
                raise ProviderError(ProviderErrorKind.BAD_RESPONSE, "non-finite rerank score")
            out.append((i, value))
        return out


@dataclass
class ProviderBundle:
    """The three model roles the pipeline consumes."""

    embedding: EmbeddingProvider
    chat: ChatProvider
    rerank: RerankProvider

    @classmethod
    def mocks(cls, dim: int = 64) -> "ProviderBundle":
        return cls(
            embedding=MockEmbeddingProvider(dim=dim),
            chat=MockChatProvider(),
            rerank=MockRerankProvider(),
        )
