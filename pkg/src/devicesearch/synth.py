"""Deterministic synthetic corpora for fixtures, benchmarks, and load tests.

Nothing here pretends to be clinical content; devices get plausible-shaped
metadata and summary text with enough distinct vocabulary that retrieval
over them is a meaningful exercise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, DeviceRecord, Pathway
from .embedding import EMBEDDING_DIM, FEATURE_NAMES, DeviceEmbeddings
from .errors import ProviderError
from .extraction import FeatureSet

_MODALITIES = (
    "radiograph", "tomography", "ultrasound", "mammography", "endoscopy",
    "electrocardiogram", "photoplethysmography", "fundoscopy", "dermoscopy",
    "spirometry", "capnography", "angiography",
)
_ANATOMY = (
    "pulmonary", "cardiac", "hepatic", "renal", "cerebral", "retinal",
    "vertebral", "prostate", "thyroid", "pancreatic", "colonic", "femoral",
    "carotid", "bronchial",
)
_CONDITIONS = (
    "nodule", "stenosis", "hemorrhage", "fracture", "lesion", "fibrosis",
    "arrhythmia", "embolism", "aneurysm", "calcification", "edema",
    "atrophy", "neoplasm", "occlusion", "effusion", "dysplasia",
)
_TASKS = (
    "triage", "segmentation", "quantification", "detection", "monitoring",
    "prioritization", "measurement", "screening", "classification", "scoring",
)
_COMPANIES = (
    "Meridian Imaging", "Cortica Labs", "Halcyon Medical", "VantagePoint AI",
    "Lumenworks", "Silverbrook Health", "Axiom Diagnostics", "NorthCape Systems",
)
_PANELS = ("Radiology", "Cardiovascular", "Neurology", "Ophthalmic", "Pathology")


def synth_corpus(
    n_devices: int, seed: int = 0, version_tag: str = "synthetic"
) -> Corpus:
    """Build n_devices synthetic devices with distinct vocabulary mixes."""
    rng = np.random.default_rng(seed)
    pathways = tuple(Pathway)
    devices = []
    for i in range(n_devices):
        modality = _MODALITIES[rng.integers(len(_MODALITIES))]
        anatomy = _ANATOMY[rng.integers(len(_ANATOMY))]
        condition = _CONDITIONS[rng.integers(len(_CONDITIONS))]
        task = _TASKS[rng.integers(len(_TASKS))]
        company = _COMPANIES[rng.integers(len(_COMPANIES))]
        marker = f"unit{i:04d}"
        name = f"{anatomy.capitalize()}{condition.capitalize()} {marker}"

        summary = (
            f"The {name} system from {company} performs automated {task} of "
            f"{anatomy} {condition} findings on {modality} studies. "
            f"The software analyzes {modality} data and flags suspected "
            f"{anatomy} {condition} cases for clinician review. "
            f"In a reader study, {task} performance for {condition} "
            f"identification improved when clinicians used the {marker} device. "
            f"The {marker} algorithm was validated on multi-site {modality} "
            f"datasets enriched for {anatomy} {condition}. "
            f"Intended use covers adult patients undergoing {modality} "
            f"examination of the {anatomy} region. "
            f"Outputs include a {condition} likelihood score and a {task} "
            f"worklist annotation."
        )
        devices.append(
            DeviceRecord(
                submission_id=f"K{250000 + i}",
                device_name=name,
                company=company,
                pathway=pathways[int(rng.integers(len(pathways)))],
                panel=_PANELS[int(rng.integers(len(_PANELS)))],
                decision_date=None,
                summary_text=summary,
            )
        )
    return Corpus(devices=tuple(devices), version_tag=version_tag)


class MappingEmbedder:
    """Embeds only pre-registered texts; unknown text is a test bug."""

    def __init__(self, vectors: dict[str, np.ndarray]):
        self._vectors = vectors

    def embed(self, text: str) -> np.ndarray:
        try:
            return self._vectors[text]
        except KeyError:
            raise ProviderError(f"no registered embedding for {text!r}") from None


def _basis(axis: int) -> np.ndarray:
    vector = np.zeros(EMBEDDING_DIM)
    vector[axis] = 1.0
    return vector


@dataclass(frozen=True)
class InformativeFeatureBenchmark:
    """Synthetic setup where exactly one feature carries the ranking signal.

    Per device, the informative feature's vector aligns with the device's
    own query axis (cosine ``informative_cosine`` for the true device, 0
    elsewhere). Every other feature points exactly at the query axis of a
    whole group of *other* devices, so any weight placed on it promotes
    ``group_size`` wrong devices at once, each with cosine 1. A case is
    satisfied only when every feature relevant to it weighs less than
    ``informative_cosine`` times the informative weight, so perfect Hit@5
    requires the informative feature to dominate by a margin.
    """

    corpus: Corpus
    features: dict[str, FeatureSet]
    embeddings: dict[str, DeviceEmbeddings]
    embedder: MappingEmbedder
    informative_feature: str
    query_by_device: dict[str, str]


def single_informative_benchmark(
    n_devices: int = 40,
    seed: int = 0,
    group_size: int = 5,
    informative_feature: str = "thesis",
    informative_cosine: float = 0.8,
    competitor_strength: tuple[float, float] = (0.7, 0.95),
) -> InformativeFeatureBenchmark:
    if n_devices > EMBEDDING_DIM // 2:
        raise ValueError(
            f"benchmark supports at most {EMBEDDING_DIM // 2} devices"
        )
    if not 0.0 < informative_cosine <= 1.0:
        raise ValueError(f"informative_cosine={informative_cosine} outside (0, 1]")
    rng = np.random.default_rng(seed)

    devices = []
    features: dict[str, FeatureSet] = {}
    queries: dict[str, str] = {}
    query_vectors: dict[str, np.ndarray] = {}
    for i in range(n_devices):
        device_id = f"B{i:03d}"
        keywords = tuple(
            [f"q{i:03d}", f"dev{i:03d}"] + [f"pad{i:03d}x{j}" for j in range(8)]
        )
        devices.append(
            DeviceRecord(
                submission_id=device_id,
                device_name=f"Benchmark Device {i}",
                company="Benchmark Co",
                pathway=Pathway.FIVE_TEN_K,
                summary_text=f"benchmark document {i}",
            )
        )
        features[device_id] = FeatureSet(
            device_id=device_id,
            summary=f"benchmark summary {i}",
            keywords=keywords,
            questions=(f"question about q{i:03d}?",),
            key_concepts=(f"concept {i:03d}",),
            thesis=f"benchmark thesis {i:03d}",
            search_boost=f"Benchmark Co Benchmark Device {i} " + " ".join(keywords),
            query_match_1=f"match one {i:03d}",
            query_match_2=f"match two {i:03d}",
            query_match_3=f"match three {i:03d}",
        )
        # Matches the deterministic fallback query: first two keywords.
        query = f"q{i:03d} dev{i:03d}"
        queries[device_id] = query
        query_vectors[query] = _basis(2 * i)

    corpus = Corpus(devices=tuple(devices), version_tag="benchmark")

    noise_features = [f for f in FEATURE_NAMES if f != informative_feature]
    group_count = (n_devices + group_size - 1) // group_size
    targets: dict[str, list[tuple[int, float]]] = {}
    for feature in noise_features:
        group_of = rng.permutation(n_devices)
        assignment = []
        for g in range(group_count):
            members = group_of[g * group_size : (g + 1) * group_size]
            axis = int(rng.integers(n_devices))
            while axis in members:  # a device must not boost itself
                axis = int(rng.integers(n_devices))
            # Graded competitor strength: the weight ratio at which this
            # group starts outranking true devices varies per group.
            assignment.append(
                (axis, float(rng.uniform(*competitor_strength)))
            )
        per_device: list[tuple[int, float]] = [(0, 0.0)] * n_devices
        for g in range(group_count):
            for member in group_of[g * group_size : (g + 1) * group_size]:
                per_device[int(member)] = assignment[g]
        targets[feature] = per_device

    def _aligned(axis: int, cosine: float) -> np.ndarray:
        return cosine * _basis(2 * axis) + float(
            np.sqrt(1.0 - cosine**2)
        ) * _basis(2 * axis + 1)

    embeddings: dict[str, DeviceEmbeddings] = {}
    for i, device in enumerate(corpus):
        vectors = {informative_feature: _aligned(i, informative_cosine)}
        for feature in noise_features:
            axis, cosine = targets[feature][i]
            vectors[feature] = _aligned(axis, cosine)
        embeddings[device.submission_id] = DeviceEmbeddings(
            device_id=device.submission_id, vectors=vectors
        )

    return InformativeFeatureBenchmark(
        corpus=corpus,
        features=features,
        embeddings=embeddings,
        embedder=MappingEmbedder(query_vectors),
        informative_feature=informative_feature,
        query_by_device=queries,
    )
