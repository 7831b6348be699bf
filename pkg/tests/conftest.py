import json
from pathlib import Path

import pytest

from faqchat.config import COMBINED_INDEX_FILENAME, QUESTION_INDEX_FILENAME
from faqchat.corpus import load_faq_corpus
from faqchat.pipeline import PipelineDeps
from faqchat.providers import ProviderBundle
from faqchat.vectorstore import IndexKind, build_index

REPO_ROOT = Path(__file__).resolve().parent.parent
CORPUS_PATH = REPO_ROOT / "corpus" / "synthetic_faq.jsonl"
FIXTURES_DIR = REPO_ROOT / "fixtures"

MOCK_DIM = 64


@pytest.fixture(scope="session")
def bundled_corpus():
    return load_faq_corpus(CORPUS_PATH)


@pytest.fixture(scope="session")
def bundled_indexes(bundled_corpus):
    embedder = ProviderBundle.mocks(dim=MOCK_DIM).embedding
    question = build_index(bundled_corpus, embedder, IndexKind.QUESTION_ONLY)
    combined = build_index(bundled_corpus, embedder, IndexKind.COMBINED_QA)
    return question, combined


@pytest.fixture()
def mock_deps(bundled_corpus, bundled_indexes):
    """Pipeline deps over the bundled corpus with fresh mock providers."""
    question, combined = bundled_indexes
    return PipelineDeps(
        corpus=bundled_corpus,
        question_index=question,
        qa_index=combined,
        providers=ProviderBundle.mocks(dim=MOCK_DIM),
    )


@pytest.fixture(scope="session")
def index_dir(tmp_path_factory, bundled_indexes):
    question, combined = bundled_indexes
    out = tmp_path_factory.mktemp("indexes")
    question.save(out / QUESTION_INDEX_FILENAME)
    combined.save(out / COMBINED_INDEX_FILENAME)
    return out


def write_corpus(path: Path, entries: list[dict]) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    return path


@pytest.fixture()
def tiny_corpus(tmp_path):
    path = write_corpus(
        tmp_path / "tiny.jsonl",
        [
            {
                "id": "faq-a",
                "question": "How do I pay?",
                "answer": "Open billing and pay by card.",
                "language": "en",
            },
            {
                "id": "faq-b",
                "question": "আমি কীভাবে টাকা দেব?",
                "answer": "বিলিং পাতায় গিয়ে কার্ড দিয়ে টাকা দিন।",
                "language": "bn",
            },
        ],
    )
    return load_faq_corpus(path)
