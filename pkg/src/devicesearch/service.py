"""Read-only HTTP JSON API over a loaded search index.

All mutation happens in the CLI pipeline; the service loads its artifacts
once and serves them immutably, so concurrent requests need no locking.
Errors use {"error": {"code", "message"}}; successful search and device
responses carry an ETag keyed on the index manifest hash.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .corpus import Corpus, device_to_json, load_corpus
from .embedding import EmbeddingProvider, HashingEmbedder, load_embeddings
from .errors import DeviceSearchError
from .extraction import FeatureSet, feature_set_to_json, load_feature_sets
from .retrieval import (
    RetrievalWeights,
    SearchIndex,
    keyword_search,
    load_index_stats,
    manifest_hash,
    search,
    weights_from_json,
)

MAX_K = 100
DEFAULT_K = 10
THESIS_SNIPPET_CHARS = 240

CORPUS_FILE = "corpus.jsonl"
FEATURES_FILE = "features.jsonl"
EMBEDDINGS_DATA_FILE = "embeddings.bin"
EMBEDDINGS_SIDECAR_FILE = "embeddings.json"
INDEX_DIR = "index"


@dataclass
class ServiceState:
    """Everything the API needs, loaded once at startup."""

    corpus: Corpus
    features: dict[str, FeatureSet]
    index: SearchIndex
    weights: RetrievalWeights
    embed_provider: EmbeddingProvider
    manifest_hash: str


def load_service_state(
    workdir: str | Path, embed_provider: EmbeddingProvider | None = None
) -> ServiceState:
    """Load the pipeline artifacts from a working directory."""
    workdir = Path(workdir)
    corpus = load_corpus(workdir / CORPUS_FILE)
    features = load_feature_sets(workdir / FEATURES_FILE)
    embeddings = load_embeddings(
        workdir / EMBEDDINGS_DATA_FILE, workdir / EMBEDDINGS_SIDECAR_FILE
    )
    index, manifest = load_index_stats(workdir / INDEX_DIR, corpus, embeddings)
    return ServiceState(
        corpus=corpus,
        features=features,
        index=index,
        weights=weights_from_json(manifest["default_weights"]),
        embed_provider=embed_provider or HashingEmbedder(),
        manifest_hash=manifest_hash(workdir / INDEX_DIR),
    )


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "message": message}}
    )


def create_app(
    state: ServiceState | None, cors_origin: str | None = None
) -> FastAPI:
    """Build the API app; ``state=None`` serves 503 until one is attached."""
    app = FastAPI(title="devicesearch", docs_url=None, redoc_url=None)
    app.state.service = state

    if cors_origin:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=[cors_origin],
            allow_methods=["GET"],
            allow_headers=["*"],
        )

    @app.exception_handler(Exception)
    async def on_unhandled(request: Request, exc: Exception) -> JSONResponse:
        return _error(500, "internal", str(exc))

    @app.exception_handler(DeviceSearchError)
    async def on_domain_error(
        request: Request, exc: DeviceSearchError
    ) -> JSONResponse:
        return _error(500, "internal", str(exc))

    def service() -> ServiceState | None:
        return app.state.service

    @app.get("/api/health")
    def health() -> JSONResponse:
        state = service()
        if state is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return JSONResponse(
            content={
                "status": "ok",
                "corpus_size": len(state.corpus),
                "index_manifest_hash": state.manifest_hash,
            }
        )

    @app.get("/api/search")
    def api_search(q: str = "", k: str = str(DEFAULT_K), mode: str = "semantic"):
        state = service()
        if state is None:
            return _error(503, "index_not_loaded", "index is still loading")
        query = q.strip()
        if not query:
            return _error(400, "empty_query", "query parameter q must be non-empty")
        try:
            k_value = int(k)
        except ValueError:
            return _error(400, "invalid_k", f"k must be an integer, got {k!r}")
        if not 1 <= k_value <= MAX_K:
            return _error(400, "invalid_k", f"k must be in [1, {MAX_K}], got {k_value}")
        if mode not in ("semantic", "keyword"):
            return _error(400, "invalid_mode", f"unknown mode {mode!r}")

        started = time.perf_counter()
        if mode == "semantic":
            ranked = search(
                state.index, state.weights, query, state.embed_provider, k_value
            )
            results = [
                _semantic_result(state, item.device_id, item.rank, item.score)
                for item in ranked
            ]
        else:
            matches = keyword_search(state.index, query)[:k_value]
            results = [
                _keyword_result(state, device_id, rank)
                for rank, device_id in enumerate(matches, start=1)
            ]
        took_ms = int((time.perf_counter() - started) * 1000)

        return JSONResponse(
            content={
                "query": query,
                "mode": mode,
                "results": results,
                "took_ms": took_ms,
            },
            headers={"ETag": f'"{state.manifest_hash}"'},
        )

    @app.get("/api/devices/{submission_id}")
    def api_device(submission_id: str):
        state = service()
        if state is None:
            return _error(503, "index_not_loaded", "index is still loading")
        if submission_id not in state.corpus:
            return _error(404, "unknown_device", f"no device {submission_id!r}")
        device = state.corpus.get(submission_id)
        payload = device_to_json(device)
        payload["features"] = feature_set_to_json(state.features[submission_id])
        return JSONResponse(
            content=payload, headers={"ETag": f'"{state.manifest_hash}"'}
        )

    return app


def _base_result(state: ServiceState, device_id: str, rank: int) -> dict:
    device = state.corpus.get(device_id)
    thesis = state.features[device_id].thesis
    return {
        "submission_id": device.submission_id,
        "device_name": device.device_name,
        "company": device.company,
        "pathway": device.pathway.value,
        "rank": rank,
        "thesis_snippet": thesis[:THESIS_SNIPPET_CHARS],
    }


def _semantic_result(
    state: ServiceState, device_id: str, rank: int, score: float
) -> dict:
    result = _base_result(state, device_id, rank)
    result["score"] = score
    return result


def _keyword_result(state: ServiceState, device_id: str, rank: int) -> dict:
    return _base_result(state, device_id, rank)
