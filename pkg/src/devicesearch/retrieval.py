"""Hybrid retrieval: blended weighted embedding similarity and BM25.

A device's score for a query is

    score = (lambda / sum_i w_i) * sum_i w_i * cos(e_q, e_d_i)
            + (1 - lambda) * bm25_norm(q, d)

over the seven feature embeddings. BM25 (Okapi, k1=1.2, b=0.75, the
always-positive +1-inside-log IDF) runs over a per-device document built
from the keywords, questions, thesis, key concepts, and search-boost
features. Raw BM25 is unbounded, so it is normalized per query by the
corpus-max BM25 score before blending; lambda therefore stays a convex
blend of two [0, 1]-bounded signals. The keyword-search mode is a plain
all-words substring lookup against a per-device text snippet.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import Corpus
from .embedding import (
    EMBEDDING_DIM,
    FEATURE_NAMES,
    DeviceEmbeddings,
    EmbeddingProvider,
    tokenize,
)
from .errors import IndexBuildError, UnknownDeviceError, ValidationError
from .extraction import FeatureSet

TOKENIZER_VERSION = "1"
BM25_NORMALIZATION = "query_max"

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

WEIGHT_MIN = 0.01
WEIGHT_MAX = 0.5

# Tuned feature weights and blend shipped as defaults.
DEFAULT_FEATURE_WEIGHTS = {
    "keywords": 0.134207,
    "questions": 0.226103,
    "thesis": 0.094972,
    "search_boost": 0.029563,
    "query_match_1": 0.217395,
    "query_match_2": 0.241111,
    "query_match_3": 0.056650,
}
DEFAULT_LAMBDA = 0.8


@dataclass(frozen=True)
class RetrievalWeights:
    """Seven feature weights plus the embedding/BM25 blend coefficient.

    Weights need not sum to 1; scoring divides by their sum. Each weight
    must lie in the tuning box [0.01, 0.5] and lambda in [0, 1].
    """

    w: dict[str, float]
    lam: float

    def __post_init__(self) -> None:
        if set(self.w) != set(FEATURE_NAMES):
            raise ValidationError(
                f"weights must cover exactly {FEATURE_NAMES}, got {sorted(self.w)}"
            )
        for name, value in self.w.items():
            if not WEIGHT_MIN <= value <= WEIGHT_MAX:
                raise ValidationError(
                    f"weight {name!r}={value} outside [{WEIGHT_MIN}, {WEIGHT_MAX}]"
                )
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lambda={self.lam} outside [0, 1]")

    def as_vector(self) -> np.ndarray:
        return np.array([self.w[name] for name in FEATURE_NAMES])

    def with_lambda(self, lam: float) -> "RetrievalWeights":
        return RetrievalWeights(w=dict(self.w), lam=lam)


def default_weights() -> RetrievalWeights:
    return RetrievalWeights(w=dict(DEFAULT_FEATURE_WEIGHTS), lam=DEFAULT_LAMBDA)


def weights_to_json(weights: RetrievalWeights) -> dict:
    return {"w": dict(weights.w), "lambda": weights.lam}


def weights_from_json(raw: Mapping) -> RetrievalWeights:
    return RetrievalWeights(w=dict(raw["w"]), lam=raw["lambda"])


@dataclass(frozen=True)
class ScoredResult:
    """One ranked device with its score decomposition.

    ``rank`` is 1-based and assigned by search; hybrid_score returns
    rank 0 (unranked).
    """

    device_id: str
    score: float
    embedding_component: float
    bm25_component_normalized: float
    rank: int = 0


@dataclass(frozen=True)
class Bm25Stats:
    """Per-device token statistics for the BM25 document collection."""

    term_freqs: tuple[dict[str, int], ...]
    doc_lens: np.ndarray
    avg_doc_len: float
    doc_freq: dict[str, int]
    n_docs: int
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


@dataclass(frozen=True)
class SearchIndex:
    """Immutable scoring state for one corpus; safe for concurrent queries."""

    corpus: Corpus
    device_ids: tuple[str, ...]
    emb_matrix: np.ndarray  # (n_devices, 7, EMBEDDING_DIM), rows unit or zero
    bm25: Bm25Stats
    snippets: tuple[str, ...]
    _row_by_id: dict[str, int] = field(init=False, repr=False, compare=False)
    _postings: dict[str, tuple[np.ndarray, np.ndarray]] = field(
        init=False, repr=False, compare=False
    )
    _idf: dict[str, float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "_row_by_id",
            {device_id: row for row, device_id in enumerate(self.device_ids)},
        )
        postings: dict[str, tuple[list[int], list[int]]] = {}
        for row, freqs in enumerate(self.bm25.term_freqs):
            for token, freq in freqs.items():
                rows, counts = postings.setdefault(token, ([], []))
                rows.append(row)
                counts.append(freq)
        object.__setattr__(
            self,
            "_postings",
            {
                token: (np.array(rows), np.array(counts))
                for token, (rows, counts) in postings.items()
            },
        )
        object.__setattr__(
            self,
            "_idf",
            {token: _idf(self.bm25.n_docs, df) for token, df in self.bm25.doc_freq.items()},
        )

    def __len__(self) -> int:
        return len(self.device_ids)

    def row_of(self, device_id: str) -> int:
        try:
            return self._row_by_id[device_id]
        except KeyError:
            raise UnknownDeviceError(
                f"device {device_id!r} is not in the index"
            ) from None


def _idf(n_docs: int, df: int) -> float:
    return math.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))


def bm25_document(features: FeatureSet) -> str:
    """The concatenated text BM25 indexes for one device."""
    return " ".join(
        [
            " ".join(features.keywords),
            " ".join(features.questions),
            features.thesis,
            " ".join(features.key_concepts),
            features.search_boost,
        ]
    )


def keyword_snippet(device_name: str, submission_id: str, company: str,
                    features: FeatureSet) -> str:
    """Lowercased lookup text for the all-words keyword search."""
    return " ".join(
        [
            submission_id,
            device_name,
            company,
            features.thesis,
            " ".join(features.keywords),
            " ".join(features.key_concepts),
        ]
    ).lower()


def build_index(
    corpus: Corpus,
    features: Mapping[str, FeatureSet],
    embeddings: Mapping[str, DeviceEmbeddings],
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> SearchIndex:
    """Assemble the search index; features and embeddings must cover the corpus."""
    missing = [
        device.submission_id
        for device in corpus
        if device.submission_id not in features
        or device.submission_id not in embeddings
    ]
    if missing:
        raise IndexBuildError(
            f"features/embeddings missing for devices: {', '.join(missing)}"
        )

    device_ids = corpus.ids()
    matrix = np.zeros((len(device_ids), len(FEATURE_NAMES), EMBEDDING_DIM))
    term_freqs: list[dict[str, int]] = []
    doc_lens = np.zeros(len(device_ids), dtype=np.int64)
    doc_freq: dict[str, int] = {}
    snippets: list[str] = []

    for row, device in enumerate(corpus):
        feats = features[device.submission_id]
        for col, name in enumerate(FEATURE_NAMES):
            matrix[row, col] = embeddings[device.submission_id].vectors[name]
        tokens = tokenize(bm25_document(feats))
        freqs: dict[str, int] = {}
        for token in tokens:
            freqs[token] = freqs.get(token, 0) + 1
        term_freqs.append(freqs)
        doc_lens[row] = len(tokens)
        for token in freqs:
            doc_freq[token] = doc_freq.get(token, 0) + 1
        snippets.append(
            keyword_snippet(device.device_name, device.submission_id,
                            device.company, feats)
        )

    avg_doc_len = float(doc_lens.mean()) if len(device_ids) else 0.0
    return SearchIndex(
        corpus=corpus,
        device_ids=device_ids,
        emb_matrix=matrix,
        bm25=Bm25Stats(
            term_freqs=tuple(term_freqs),
            doc_lens=doc_lens,
            avg_doc_len=avg_doc_len,
            doc_freq=doc_freq,
            n_docs=len(device_ids),
            k1=k1,
            b=b,
        ),
        snippets=tuple(snippets),
    )


def bm25_score(
    index: SearchIndex, query_tokens: list[str], device_id: str
) -> float:
    """Okapi BM25 score of one device for a tokenized query.

    Repeated query tokens contribute once per occurrence.
    """
    row = index.row_of(device_id)
    stats = index.bm25
    freqs = stats.term_freqs[row]
    length_norm = stats.k1 * (
        1.0 - stats.b + stats.b * float(stats.doc_lens[row]) / stats.avg_doc_len
    ) if stats.avg_doc_len > 0 else 0.0

    score = 0.0
    for token in query_tokens:
        f = freqs.get(token, 0)
        if f == 0:
            continue
        score += index._idf[token] * f * (stats.k1 + 1.0) / (f + length_norm)
    return score


def bm25_scores_all(index: SearchIndex, query_tokens: list[str]) -> np.ndarray:
    """BM25 scores for every device, token-at-a-time over the inverted index.

    Accumulation order per device matches bm25_score exactly.
    """
    stats = index.bm25
    scores = np.zeros(len(index))
    if stats.avg_doc_len <= 0:
        return scores
    length_norms = stats.k1 * (
        1.0 - stats.b + stats.b * stats.doc_lens.astype(np.float64) / stats.avg_doc_len
    )
    for token in query_tokens:
        posting = index._postings.get(token)
        if posting is None:
            continue
        rows, freqs = posting
        f = freqs.astype(np.float64)
        scores[rows] += index._idf[token] * f * (stats.k1 + 1.0) / (
            f + length_norms[rows]
        )
    return scores


def embedding_components(
    cosines: np.ndarray, weights: RetrievalWeights
) -> np.ndarray:
    """Weighted mean of per-feature cosines: sum_i w_i c_i / sum_i w_i."""
    w = weights.as_vector()
    return cosines @ w / w.sum()


def hybrid_score(
    index: SearchIndex,
    weights: RetrievalWeights,
    query_embedding: np.ndarray,
    query_tokens: list[str],
    device_id: str,
    bm25_query_max: float,
) -> ScoredResult:
    """Score one device given the query's corpus-max BM25 score.

    ``bm25_query_max`` must be the maximum bm25_score over the corpus for
    this query (0 when the query matches nothing anywhere).
    """
    row = index.row_of(device_id)
    qnorm = np.linalg.norm(query_embedding)
    q = query_embedding / qnorm if qnorm > 0 else query_embedding
    cosines = index.emb_matrix[row] @ q
    emb = float(embedding_components(cosines, weights))

    raw_bm25 = bm25_score(index, query_tokens, device_id)
    bm25_norm = raw_bm25 / bm25_query_max if bm25_query_max > 0 else 0.0

    return ScoredResult(
        device_id=device_id,
        score=weights.lam * emb + (1.0 - weights.lam) * bm25_norm,
        embedding_component=emb,
        bm25_component_normalized=bm25_norm,
    )


def search(
    index: SearchIndex,
    weights: RetrievalWeights,
    query: str,
    embed_provider: EmbeddingProvider,
    k: int,
) -> list[ScoredResult]:
    """Rank every device for the query and return the top k.

    Sorted by score descending, ties broken by submission_id ascending;
    k beyond the corpus size returns the full ranking.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query_embedding = np.asarray(embed_provider.embed(query), dtype=np.float64)
    if query_embedding.shape != (EMBEDDING_DIM,):
        raise ValidationError(
            f"query embedding has shape {query_embedding.shape}, "
            f"expected ({EMBEDDING_DIM},)"
        )
    qnorm = np.linalg.norm(query_embedding)
    q = query_embedding / qnorm if qnorm > 0 else query_embedding

    n = len(index)
    cosines = (index.emb_matrix.reshape(n * len(FEATURE_NAMES), EMBEDDING_DIM) @ q)
    cosines = cosines.reshape(n, len(FEATURE_NAMES))
    emb = embedding_components(cosines, weights)

    query_tokens = tokenize(query)
    raw_bm25 = bm25_scores_all(index, query_tokens)
    bm25_max = float(raw_bm25.max()) if n else 0.0
    bm25_norm = raw_bm25 / bm25_max if bm25_max > 0 else np.zeros(n)

    scores = weights.lam * emb + (1.0 - weights.lam) * bm25_norm
    # Rows are pre-sorted by submission_id, so a stable sort on descending
    # score breaks ties by ascending id.
    order = np.argsort(-scores, kind="stable")[: min(k, n)]
    return [
        ScoredResult(
            device_id=index.device_ids[row],
            score=float(scores[row]),
            embedding_component=float(emb[row]),
            bm25_component_normalized=float(bm25_norm[row]),
            rank=rank,
        )
        for rank, row in enumerate(order, start=1)
    ]


def keyword_search(
    index: SearchIndex, query: str, whole_word: bool = False
) -> list[str]:
    """Devices whose snippet contains every query word.

    Substring containment by default (the most literal all-words rule);
    ``whole_word`` switches to word-boundary matches. Case-insensitive;
    results in corpus order. An empty query matches nothing.
    """
    words = [w.lower() for w in query.split()]
    if not words:
        return []
    if whole_word:
        patterns = [
            re.compile(rf"\b{re.escape(word)}\b") for word in words
        ]
        return [
            index.device_ids[row]
            for row, snippet in enumerate(index.snippets)
            if all(p.search(snippet) for p in patterns)
        ]
    return [
        index.device_ids[row]
        for row, snippet in enumerate(index.snippets)
        if all(word in snippet for word in words)
    ]


# --- persistence ---

BM25_FILE = "bm25.json"
SNIPPETS_FILE = "snippets.jsonl"
MANIFEST_FILE = "manifest.json"


def save_index_stats(
    index: SearchIndex, directory: str | Path, weights: RetrievalWeights
) -> None:
    """Persist BM25 stats, snippets, and the reproducibility manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    bm25_doc = {
        "k1": index.bm25.k1,
        "b": index.bm25.b,
        "devices": [
            {"device_id": device_id, "term_freqs": index.bm25.term_freqs[row]}
            for row, device_id in enumerate(index.device_ids)
        ],
    }
    (directory / BM25_FILE).write_text(
        json.dumps(bm25_doc, ensure_ascii=False), encoding="utf-8"
    )

    with (directory / SNIPPETS_FILE).open("w", encoding="utf-8") as fh:
        for row, device_id in enumerate(index.device_ids):
            fh.write(
                json.dumps(
                    {"device_id": device_id, "snippet": index.snippets[row]},
                    ensure_ascii=False,
                )
            )
            fh.write("\n")

    manifest = {
        "format_version": 1,
        "tokenizer_version": TOKENIZER_VERSION,
        "k1": index.bm25.k1,
        "b": index.bm25.b,
        "bm25_normalization": BM25_NORMALIZATION,
        "corpus_size": len(index),
        "corpus_version_tag": index.corpus.version_tag,
        "default_weights": weights_to_json(weights),
    }
    (directory / MANIFEST_FILE).write_text(
        json.dumps(manifest, ensure_ascii=False, indent=1), encoding="utf-8"
    )


def manifest_hash(directory: str | Path) -> str:
    payload = (Path(directory) / MANIFEST_FILE).read_bytes()
    return hashlib.sha256(payload).hexdigest()


def load_index_stats(
    directory: str | Path,
    corpus: Corpus,
    embeddings: Mapping[str, DeviceEmbeddings],
) -> tuple[SearchIndex, dict]:
    """Rebuild a SearchIndex from persisted stats; returns (index, manifest)."""
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
    bm25_doc = json.loads((directory / BM25_FILE).read_text(encoding="utf-8"))

    by_id = {entry["device_id"]: entry["term_freqs"] for entry in bm25_doc["devices"]}
    snippets_by_id: dict[str, str] = {}
    for line in (directory / SNIPPETS_FILE).read_text(encoding="utf-8").splitlines():
        if line.strip():
            entry = json.loads(line)
            snippets_by_id[entry["device_id"]] = entry["snippet"]

    device_ids = corpus.ids()
    missing = [
        device_id
        for device_id in device_ids
        if device_id not in by_id
        or device_id not in snippets_by_id
        or device_id not in embeddings
    ]
    if missing:
        raise IndexBuildError(
            f"persisted index missing devices: {', '.join(missing)}"
        )

    matrix = np.zeros((len(device_ids), len(FEATURE_NAMES), EMBEDDING_DIM))
    term_freqs = []
    doc_lens = np.zeros(len(device_ids), dtype=np.int64)
    doc_freq: dict[str, int] = {}
    for row, device_id in enumerate(device_ids):
        for col, name in enumerate(FEATURE_NAMES):
            matrix[row, col] = embeddings[device_id].vectors[name]
        freqs = {token: int(freq) for token, freq in by_id[device_id].items()}
        term_freqs.append(freqs)
        doc_lens[row] = sum(freqs.values())
        for token in freqs:
            doc_freq[token] = doc_freq.get(token, 0) + 1

    avg_doc_len = float(doc_lens.mean()) if len(device_ids) else 0.0
    index = SearchIndex(
        corpus=corpus,
        device_ids=device_ids,
        emb_matrix=matrix,
        bm25=Bm25Stats(
            term_freqs=tuple(term_freqs),
            doc_lens=doc_lens,
            avg_doc_len=avg_doc_len,
            doc_freq=doc_freq,
            n_docs=len(device_ids),
            k1=float(bm25_doc["k1"]),
            b=float(bm25_doc["b"]),
        ),
        snippets=tuple(snippets_by_id[device_id] for device_id in device_ids),
    )
    return index, manifest
