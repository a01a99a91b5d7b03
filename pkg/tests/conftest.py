import numpy as np
import pytest

ACCEPTANCE_RESULTS: dict[str, bool] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        ACCEPTANCE_RESULTS[item.name] = report.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, passed in ACCEPTANCE_RESULTS.items():
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"  {status}  {name}")

from devicesearch.corpus import Corpus, DeviceRecord, Pathway
from devicesearch.embedding import (
    EMBEDDING_DIM,
    FEATURE_NAMES,
    DeviceEmbeddings,
    HashingEmbedder,
    embed_device,
)
from devicesearch.extraction import FeatureSet, extract_features
from devicesearch.providers import DeterministicFeatureProvider
from devicesearch.retrieval import SearchIndex, build_index, default_weights
from devicesearch.synth import synth_corpus


def make_feature_set(device_id: str, **overrides) -> FeatureSet:
    """A fully populated FeatureSet with boring defaults."""
    fields = {
        "device_id": device_id,
        "summary": f"summary for {device_id}",
        "keywords": (f"kw-{device_id}", "shared"),
        "questions": (f"question about {device_id}?",),
        "key_concepts": (f"concept {device_id}",),
        "thesis": f"thesis for {device_id}",
        "search_boost": f"boost {device_id}",
        "query_match_1": f"match one {device_id}",
        "query_match_2": f"match two {device_id}",
        "query_match_3": f"match three {device_id}",
    }
    fields.update(overrides)
    return FeatureSet(**fields)


def make_device(device_id: str, **overrides) -> DeviceRecord:
    fields = {
        "submission_id": device_id,
        "device_name": f"Device {device_id}",
        "company": f"Company {device_id}",
        "pathway": Pathway.FIVE_TEN_K,
        "summary_text": f"document text for {device_id}",
    }
    fields.update(overrides)
    return DeviceRecord(**fields)


def index_from_docs(docs: dict[str, str]) -> SearchIndex:
    """Index whose BM25 documents tokenize to exactly the given texts.

    The doc text is stored as the thesis; all other features are empty,
    so bm25_document(features) contributes only the doc tokens.
    """
    embedder = HashingEmbedder()
    devices = tuple(make_device(device_id) for device_id in docs)
    features = {
        device_id: make_feature_set(
            device_id,
            thesis=text,
            keywords=(),
            questions=(),
            key_concepts=(),
            search_boost="",
            query_match_1="",
            query_match_2="",
            query_match_3="",
        )
        for device_id, text in docs.items()
    }
    embeddings = {
        device_id: embed_device(features[device_id], embedder)
        for device_id in docs
    }
    return build_index(Corpus(devices=devices), features, embeddings)


def basis_vector(axis: int) -> np.ndarray:
    vector = np.zeros(EMBEDDING_DIM)
    vector[axis] = 1.0
    return vector


def basis_embeddings(device_id: str, start_axis: int = 0) -> DeviceEmbeddings:
    """Seven orthogonal unit vectors on consecutive axes."""
    return DeviceEmbeddings(
        device_id=device_id,
        vectors={
            name: basis_vector(start_axis + i)
            for i, name in enumerate(FEATURE_NAMES)
        },
    )


@pytest.fixture(scope="session")
def small_pipeline():
    """20 synthetic devices run through the full mock pipeline."""
    corpus = synth_corpus(20, seed=1)
    provider = DeterministicFeatureProvider()
    embedder = HashingEmbedder()
    features = {
        d.submission_id: extract_features(d, provider) for d in corpus
    }
    embeddings = {
        d.submission_id: embed_device(features[d.submission_id], embedder)
        for d in corpus
    }
    index = build_index(corpus, features, embeddings)
    return {
        "corpus": corpus,
        "features": features,
        "embeddings": embeddings,
        "index": index,
        "weights": default_weights(),
        "embedder": embedder,
    }
