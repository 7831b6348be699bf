"""HTTP surface for the chat UI: FAQ sampling, direct FAQ answers, and
the chat pipeline, all under /v1/.  The service holds only immutable
state, so it is restart-equivalent at any time."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict

from .corpus import FaqCorpus, NTooLargeError, UnknownIdError, sample_faqs
from .pipeline import EmptyQueryError, PipelineDeps, PipelineError, answer_query

SCHEMA_VERSION = "1"

logger = logging.getLogger("faqchat.service")


@dataclass
class ServiceState:
    corpus: FaqCorpus
    deps: PipelineDeps
    faq_sample_seed: int | None = None
    max_query_chars: int = 2000


class ChatRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    query: str


def _error(status: int, detail: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"schema_version": SCHEMA_VERSION, "error": {"detail": detail, **extra}},
    )


def create_app(state: ServiceState | None, cors_origins: tuple[str, ...] = ()) -> FastAPI:
    app = FastAPI(title="faqchat", docs_url=None, redoc_url=None)
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["GET", "POST"],
            allow_headers=["*"],
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "invalid request: " + "; ".join(str(e.get("msg", e)) for e in exc.errors()))

    class _NotReady(Exception):
        pass

    @app.exception_handler(_NotReady)
    async def _not_ready_handler(request: Request, exc: _NotReady):
        return _error(503, "service not initialized")

    def _ready() -> ServiceState:
        if state is None:
            raise _NotReady()
        return state

    @app.get("/v1/health")
    async def health():
        return {"schema_version": SCHEMA_VERSION, "status": "ready" if state is not None else "not_ready"}

    @app.get("/v1/faqs/sample")
    async def faq_sample(n: int = 3):
        st = _ready()
        if n < 1:
            return _error(400, f"n must be >= 1, got {n}")
        try:
            entries = sample_faqs(st.corpus, n, seed=st.faq_sample_seed)
        except NTooLargeError as exc:
            return _error(400, str(exc))
        return {
            "schema_version": SCHEMA_VERSION,
            "faqs": [
                {"id": e.id, "question": e.question, "language": e.language.value} for e in entries
            ],
        }

    @app.get("/v1/faqs/{faq_id}")
    async def faq_answer(faq_id: str):
        st = _ready()
        try:
            entry = st.corpus.get(faq_id)
        except UnknownIdError:
            return _error(404, f"unknown faq id {faq_id!r}")
        return JSONResponse(
            content={"schema_version": SCHEMA_VERSION, "id": entry.id, "answer": entry.answer},
            headers={"X-Answer-Source": "cache"},
        )

    @app.post("/v1/chat")
    async def chat(body: ChatRequest):
        st = _ready()
        query = body.query
        if not query.strip():
            return _error(400, "query must be non-empty")
        if len(query) > st.max_query_chars:
            return _error(400, f"query exceeds {st.max_query_chars} characters")
        try:
            response = answer_query(query, st.deps)
        except EmptyQueryError:
            return _error(400, "query must be non-empty")
        except PipelineError as exc:
            logger.warning("chat failed at stage %s: %s", exc.stage, exc.cause)
            return _error(502, str(exc.cause), stage=exc.stage)
        logger.info(
            "chat served: source=%s timings=%s provider_calls=%s",
            response.source.value,
            {k: round(v, 6) for k, v in response.timings.items()},
            response.provider_calls,
        )
        return {"schema_version": SCHEMA_VERSION, **response.to_json_dict()}

    return app
