from pathlib import Path

import pytest

from guidetree.corpus import ChunkConfig, chunk_document, load_corpus
from guidetree.embed import HashEmbedder
from guidetree.raptor import BuildConfig, build_tree

FIXTURES = Path(__file__).parent / "fixtures"

# slices the fixture corpus into exactly 60 chunks
FIXTURE_CHUNK_CFG = ChunkConfig(max_tokens=44, overlap_tokens=9)
FIXTURE_BUILD_CFG = BuildConfig(chunk_cfg=FIXTURE_CHUNK_CFG, seed=7)


@pytest.fixture(scope="session")
def corpus_path() -> Path:
    return FIXTURES / "fixture_corpus.jsonl"


@pytest.fixture(scope="session")
def benchmark_path() -> Path:
    return FIXTURES / "fixture_benchmark.jsonl"


@pytest.fixture(scope="session")
def fixture_docs(corpus_path):
    return load_corpus(corpus_path)


@pytest.fixture(scope="session")
def fixture_chunks(fixture_docs):
    chunks = []
    for doc in fixture_docs:
        chunks.extend(chunk_document(doc, FIXTURE_CHUNK_CFG))
    return chunks


@pytest.fixture(scope="session")
def embedder():
    return HashEmbedder()


@pytest.fixture(scope="session")
def fixture_tree(fixture_chunks, embedder):
    return build_tree(fixture_chunks, embedder, cfg=FIXTURE_BUILD_CFG)
