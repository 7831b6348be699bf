"""Command-line interface: corpus ingestion, serving, one-shot queries,
and the evaluation harness."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import (
    COMBINED_INDEX_FILENAME,
    QUESTION_INDEX_FILENAME,
    ConfigError,
    ProviderSettings,
    ServiceConfig,
    load_runtime,
    provider_settings_from_dict,
)
from .corpus import CorpusError, load_faq_corpus
from .evaluation import (
    EvaluationError,
    evaluate_retrieval,
    load_annotations,
    load_judgments,
    load_run,
    report_to_json_bytes,
    run_end_to_end_eval,
    save_run,
    score_generation,
)
from .pipeline import PipelineConfig, PipelineError
from .providers import ProviderError
from .vectorstore import IndexKind, VectorStoreError, build_index


def _provider_settings(args) -> ProviderSettings:
    if getattr(args, "config", None):
        return ServiceConfig.from_file(args.config).providers
    raw = {"mode": getattr(args, "provider_mode", "mock")}
    if getattr(args, "dim", None):
        raw["mock_dim"] = args.dim
    return provider_settings_from_dict(raw)


def _pipeline_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return ServiceConfig.from_file(args.config).pipeline
    return PipelineConfig()


def cmd_ingest(args) -> int:
    corpus = load_faq_corpus(args.corpus)
    providers = _provider_settings(args).build()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    question_index = build_index(corpus, providers.embedding, IndexKind.QUESTION_ONLY)
    qa_index = build_index(corpus, providers.embedding, IndexKind.COMBINED_QA)
    if question_index.dim != qa_index.dim or question_index.corpus_checksum != qa_index.corpus_checksum:
        print("error: built indexes disagree on dim or corpus checksum", file=sys.stderr)
        return 1
    question_index.save(out_dir / QUESTION_INDEX_FILENAME)
    qa_index.save(out_dir / COMBINED_INDEX_FILENAME)
    print(
        f"indexed {len(corpus)} entries (dim {question_index.dim}) -> "
        f"{out_dir / QUESTION_INDEX_FILENAME}, {out_dir / COMBINED_INDEX_FILENAME}"
    )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceState, create_app

    config = ServiceConfig.from_file(args.config)
    corpus, deps = load_runtime(
        config.corpus_path, config.index_dir, config.providers.build(), config.pipeline
    )
    state = ServiceState(
        corpus=corpus,
        deps=deps,
        faq_sample_seed=config.faq_sample_seed,
        max_query_chars=config.max_query_chars,
    )
    app = create_app(state, config.cors_origins)
    uvicorn.run(app, host=config.host, port=config.port)
    return 0


def cmd_ask(args) -> int:
    from .pipeline import answer_query

    _, deps = load_runtime(
        args.corpus, args.index_dir, _provider_settings(args).build(), _pipeline_config(args)
    )
    response = answer_query(args.query, deps)
    print(json.dumps(response.to_json_dict(include_timings=args.include_timings), ensure_ascii=False, indent=2))
    return 0


def cmd_eval_retrieval(args) -> int:
    run = load_run(args.run)
    judgments = load_judgments(args.judgments)
    report = evaluate_retrieval(run, judgments, k_retrieve=args.k_retrieve, k_rerank=args.k_rerank)
    sys.stdout.write(report.format_table())
    if args.json_out:
        Path(args.json_out).write_bytes(report_to_json_bytes(report))
    return 0


def cmd_eval_generation(args) -> int:
    annotations = load_annotations(args.annotations)
    report = score_generation(annotations)
    sys.stdout.write(report.format_table())
    if args.json_out:
        Path(args.json_out).write_bytes(report_to_json_bytes(report))
    return 0


def cmd_eval_run(args) -> int:
    _, deps = load_runtime(
        args.corpus, args.index_dir, _provider_settings(args).build(), _pipeline_config(args)
    )
    run, responses = run_end_to_end_eval(args.queries, deps)
    save_run(run, args.out)
    if args.responses_out:
        with open(args.responses_out, "w", encoding="utf-8") as fh:
            for record in responses:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
    cached = sum(1 for r in run if r.cache_answered)
    print(f"ran {len(run)} queries ({cached} cache-answered) -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="faqchat")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="build both embedding indexes from a corpus")
    p_ingest.add_argument("--corpus", required=True)
    p_ingest.add_argument("--out", required=True)
    p_ingest.add_argument("--provider-mode", default="mock", choices=["mock", "http"])
    p_ingest.add_argument("--dim", type=int, default=None, help="mock embedding dimension")
    p_ingest.add_argument("--config", default=None)
    p_ingest.set_defaults(func=cmd_ingest)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", required=True)
    p_serve.set_defaults(func=cmd_serve)

    p_ask = sub.add_parser("ask", help="answer one query and print the response as JSON")
    p_ask.add_argument("query")
    p_ask.add_argument("--corpus", required=True)
    p_ask.add_argument("--index-dir", required=True)
    p_ask.add_argument("--provider-mode", default="mock", choices=["mock", "http"])
    p_ask.add_argument("--dim", type=int, default=None)
    p_ask.add_argument("--config", default=None)
    p_ask.add_argument("--include-timings", action="store_true")
    p_ask.set_defaults(func=cmd_ask)

    p_eval = sub.add_parser("eval", help="evaluation harness")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)

    p_ret = eval_sub.add_parser("retrieval", help="score a retrieval run against judgments")
    p_ret.add_argument("--run", required=True)
    p_ret.add_argument("--judgments", required=True)
    p_ret.add_argument("--k-retrieve", type=int, default=5)
    p_ret.add_argument("--k-rerank", type=int, default=3)
    p_ret.add_argument("--json-out", default=None)
    p_ret.set_defaults(func=cmd_eval_retrieval)

    p_gen = eval_sub.add_parser("generation", help="aggregate generation annotations")
    p_gen.add_argument("--annotations", required=True)
    p_gen.add_argument("--json-out", default=None)
    p_gen.set_defaults(func=cmd_eval_generation)

    p_run = eval_sub.add_parser("run", help="run every query through the pipeline, record the run")
    p_run.add_argument("--queries", required=True)
    p_run.add_argument("--corpus", required=True)
    p_run.add_argument("--index-dir", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--responses-out", default=None)
    p_run.add_argument("--provider-mode", default="mock", choices=["mock", "http"])
    p_run.add_argument("--dim", type=int, default=None)
    p_run.add_argument("--config", default=None)
    p_run.set_defaults(func=cmd_eval_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"error at pipeline stage {exc.stage!r}: {exc.cause}", file=sys.stderr)
        return 3
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return 3
    except (CorpusError, VectorStoreError, EvaluationError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
