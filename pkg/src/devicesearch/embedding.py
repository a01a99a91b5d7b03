"""Embedding provider contract, deterministic hashing embedder, vector math.

Every provider maps text to a 384-dimensional vector. The bundled hashing
embedder exists so the whole pipeline runs deterministically offline: it is
a stand-in signal source for tests and fixtures, not a semantic model.
Vectors are L2-normalized when device embeddings are assembled, so
query-time cosine reduces to a dot product.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import ProviderError, ValidationError
from .extraction import FeatureSet

EMBEDDING_DIM = 384

# The seven features chosen for embedding generation, in canonical order.
FEATURE_NAMES = (
    "keywords",
    "questions",
    "thesis",
    "search_boost",
    "query_match_1",
    "query_match_2",
    "query_match_3",
)

_LIST_JOIN = "; "


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray:
        ...


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; no stemming, no stopwords."""
    tokens = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return tokens


def _bucket(term: str) -> int:
    digest = hashlib.blake2b(
        term.encode("utf-8"), digest_size=8, person=b"bucket"
    ).digest()
    return int.from_bytes(digest, "little") % EMBEDDING_DIM


def _sign(term: str) -> float:
    digest = hashlib.blake2b(
        term.encode("utf-8"), digest_size=1, person=b"sign"
    ).digest()
    return 1.0 if digest[0] & 1 else -1.0


def hash_embed(text: str) -> np.ndarray:
    """Signed feature hashing of tokens and adjacent-token bigrams.

    Deterministic across runs and processes. Texts with no tokens map to
    the zero vector.
    """
    vector = np.zeros(EMBEDDING_DIM)
    tokens = tokenize(text)
    terms = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    for term in terms:
        vector[_bucket(term)] += _sign(term)
    norm = np.linalg.norm(vector)
    if norm > 0:
        vector /= norm
    return vector


class HashingEmbedder:
    """EmbeddingProvider backed by hash_embed; stateless and thread-safe."""

    def embed(self, text: str) -> np.ndarray:
        return hash_embed(text)


class CachedEmbedder:
    """Memoizes an inner provider; tuning re-embeds the same queries often."""

    def __init__(self, inner: EmbeddingProvider):
        self._inner = inner
        self._cache: dict[str, np.ndarray] = {}

    def embed(self, text: str) -> np.ndarray:
        vector = self._cache.get(text)
        if vector is None:
            vector = self._cache[text] = self._inner.embed(text)
        return vector


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|); 0.0 when either vector has zero norm."""
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return float(np.dot(a, b) / (norm_a * norm_b))


@dataclass(frozen=True)
class DeviceEmbeddings:
    """The seven named feature vectors for one device.

    ``degenerate`` lists features whose text embedded to the zero vector;
    those vectors are stored unnormalized (all zeros) and score 0 under
    cosine similarity.
    """

    device_id: str
    vectors: dict[str, np.ndarray]
    degenerate: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        if set(self.vectors) != set(FEATURE_NAMES):
            raise ValidationError(
                f"device {self.device_id!r} embeddings must have exactly "
                f"the features {FEATURE_NAMES}, got {sorted(self.vectors)}"
            )
        for name, vec in self.vectors.items():
            if vec.shape != (EMBEDDING_DIM,):
                raise ValidationError(
                    f"feature {name!r} of {self.device_id!r} has shape "
                    f"{vec.shape}, expected ({EMBEDDING_DIM},)"
                )
            if not np.all(np.isfinite(vec)):
                raise ValidationError(
                    f"feature {name!r} of {self.device_id!r} has non-finite entries"
                )


def feature_texts(features: FeatureSet) -> dict[str, str]:
    """The text embedded for each feature; list features join with '; '."""
    return {
        "keywords": _LIST_JOIN.join(features.keywords),
        "questions": _LIST_JOIN.join(features.questions),
        "thesis": features.thesis,
        "search_boost": features.search_boost,
        "query_match_1": features.query_match_1,
        "query_match_2": features.query_match_2,
        "query_match_3": features.query_match_3,
    }


def embed_device(
    features: FeatureSet, provider: EmbeddingProvider
) -> DeviceEmbeddings:
    """Embed the seven feature texts; vectors are L2-normalized on storage."""
    vectors: dict[str, np.ndarray] = {}
    degenerate: list[str] = []
    for name, text in feature_texts(features).items():
        try:
            raw = np.asarray(provider.embed(text), dtype=np.float64)
        except ProviderError as exc:
            raise ProviderError(
                f"embedding failed for feature {name!r} of device "
                f"{features.device_id!r}: {exc}"
            ) from exc
        if raw.shape != (EMBEDDING_DIM,):
            raise ValidationError(
                f"provider returned dimension {raw.shape} for feature "
                f"{name!r}, expected ({EMBEDDING_DIM},)"
            )
        norm = np.linalg.norm(raw)
        if norm == 0.0:
            degenerate.append(name)
            vectors[name] = raw
        else:
            vectors[name] = raw / norm
    return DeviceEmbeddings(
        device_id=features.device_id,
        vectors=vectors,
        degenerate=tuple(degenerate),
    )


def save_embeddings(
    embeddings: Iterable[DeviceEmbeddings],
    data_path: str | Path,
    sidecar_path: str | Path,
) -> None:
    """Write vectors as little-endian float32, row-major [device x 7 x 384].

    The JSON sidecar maps each row to (device_id, feature_name) in file
    order. Round-tripping an already-saved store is bit-exact.
    """
    rows = []
    arrays = []
    for dev in embeddings:
        for name in FEATURE_NAMES:
            rows.append(
                {
                    "device_id": dev.device_id,
                    "feature": name,
                    "degenerate": name in dev.degenerate,
                }
            )
            arrays.append(dev.vectors[name])
    matrix = np.asarray(arrays, dtype="<f4").reshape(len(rows), EMBEDDING_DIM)
    Path(data_path).write_bytes(matrix.tobytes(order="C"))
    sidecar = {"dim": EMBEDDING_DIM, "rows": rows}
    Path(sidecar_path).write_text(
        json.dumps(sidecar, ensure_ascii=False, indent=1), encoding="utf-8"
    )


def load_embeddings(
    data_path: str | Path, sidecar_path: str | Path
) -> dict[str, DeviceEmbeddings]:
    """Load an embedding store; returns DeviceEmbeddings keyed by device id."""
    sidecar = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
    dim = sidecar["dim"]
    if dim != EMBEDDING_DIM:
        raise ValidationError(f"embedding store has dim {dim}, expected {EMBEDDING_DIM}")
    rows = sidecar["rows"]
    raw = np.frombuffer(Path(data_path).read_bytes(), dtype="<f4")
    if raw.size != len(rows) * dim:
        raise ValidationError(
            f"embedding store holds {raw.size} floats, sidecar describes "
            f"{len(rows) * dim}"
        )
    matrix = raw.reshape(len(rows), dim).astype(np.float64)

    by_device: dict[str, dict[str, np.ndarray]] = {}
    degenerate: dict[str, list[str]] = {}
    for row, vector in zip(rows, matrix):
        entry = by_device.setdefault(row["device_id"], {})
        entry[row["feature"]] = vector
        if row.get("degenerate"):
            degenerate.setdefault(row["device_id"], []).append(row["feature"])
    return {
        device_id: DeviceEmbeddings(
            device_id=device_id,
            vectors=vectors,
            degenerate=tuple(degenerate.get(device_id, ())),
        )
        for device_id, vectors in by_device.items()
    }
