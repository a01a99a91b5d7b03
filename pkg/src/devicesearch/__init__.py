"""Hybrid semantic + keyword search over regulatory AI-device summaries."""

from .corpus import (
    Corpus,
    DeviceRecord,
    DocumentChunk,
    Pathway,
    chunk_document,
    load_corpus,
)
from .embedding import (
    EMBEDDING_DIM,
    FEATURE_NAMES,
    CachedEmbedder,
    DeviceEmbeddings,
    HashingEmbedder,
    cosine_similarity,
    embed_device,
    hash_embed,
    tokenize,
)
from .errors import DeviceSearchError
from .evaluation import EvalCase, EvalReport, Variant, evaluate, measure_latency, rank_position
from .extraction import (
    CompletionProvider,
    FeatureSet,
    extract_features,
    generate_simulated_query,
    parse_feature_response,
)
from .retrieval import (
    DEFAULT_FEATURE_WEIGHTS,
    DEFAULT_LAMBDA,
    RetrievalWeights,
    ScoredResult,
    SearchIndex,
    bm25_score,
    build_index,
    default_weights,
    hybrid_score,
    keyword_search,
    search,
)
from .tuning import (
    QueryCase,
    TpeConfig,
    TrialRecord,
    TuningPool,
    grid_search_lambda,
    objective_hit5,
    optimize_weights,
    replace_pairs,
    tpe_suggest,
)

__version__ = "0.1.0"

__all__ = [
    "CachedEmbedder",
    "CompletionProvider",
    "Corpus",
    "DEFAULT_FEATURE_WEIGHTS",
    "DEFAULT_LAMBDA",
    "DeviceEmbeddings",
    "DeviceRecord",
    "DeviceSearchError",
    "DocumentChunk",
    "EMBEDDING_DIM",
    "EvalCase",
    "EvalReport",
    "FEATURE_NAMES",
    "FeatureSet",
    "HashingEmbedder",
    "Pathway",
    "QueryCase",
    "RetrievalWeights",
    "ScoredResult",
    "SearchIndex",
    "TpeConfig",
    "TrialRecord",
    "TuningPool",
    "Variant",
    "bm25_score",
    "build_index",
    "chunk_document",
    "cosine_similarity",
    "default_weights",
    "embed_device",
    "evaluate",
    "extract_features",
    "generate_simulated_query",
    "grid_search_lambda",
    "hash_embed",
    "hybrid_score",
    "keyword_search",
    "load_corpus",
    "measure_latency",
    "objective_hit5",
    "optimize_weights",
    "parse_feature_response",
    "rank_position",
    "replace_pairs",
    "search",
    "tokenize",
    "tpe_suggest",
]
