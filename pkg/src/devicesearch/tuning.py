"""Feature-weight optimization and blend-coefficient grid search.

The seven feature weights are tuned with a Tree-structured Parzen Estimator
against mean Hit@5 over simulated device-query pairs, 20% of which are
replaced after every trial. The TPE here is self-contained and fully
pinned by TpeConfig: after a uniform startup phase, trials are split into
good/bad sets by objective, two per-dimension Parzen densities (Gaussian
kernels, Scott-rule bandwidth, truncated to the weight box) are built, and
the candidate maximizing the good/bad likelihood ratio is suggested.

With the weights frozen, the embedding/BM25 blend coefficient is chosen by
an exhaustive grid search over [0, 1] against a fixed case set.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .corpus import Corpus
from .embedding import CachedEmbedder, EmbeddingProvider, FEATURE_NAMES
from .errors import ConfigurationError, UnknownDeviceError
from .extraction import CompletionProvider, FeatureSet, generate_simulated_query
from .retrieval import (
    RetrievalWeights,
    SearchIndex,
    WEIGHT_MAX,
    WEIGHT_MIN,
    search,
    weights_from_json,
    weights_to_json,
)

REPLACEMENT_FRACTION = 0.2
DEFAULT_N_CASES = 50
DENSITY_FLOOR = 1e-12


@dataclass(frozen=True)
class QueryCase:
    """One simulated query with the device that generated it."""

    query: str
    ground_truth_device: str


@dataclass(frozen=True)
class TrialRecord:
    trial_index: int
    weights: RetrievalWeights
    objective: float
    validation_snapshot_id: int


@dataclass(frozen=True)
class TpeConfig:
    """Pinned sampler internals; change = new tuning configuration version."""

    n_startup_trials: int = 10
    gamma: float = 0.25
    n_candidates: int = 24
    bandwidth_floor: float = 1e-3
    bounds: tuple[float, float] = (WEIGHT_MIN, WEIGHT_MAX)
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma={self.gamma} outside (0, 1)")
        if self.n_startup_trials < 1:
            raise ConfigurationError("n_startup_trials must be >= 1")
        if self.n_candidates < 1:
            raise ConfigurationError("n_candidates must be >= 1")
        if self.bounds[0] >= self.bounds[1]:
            raise ConfigurationError(f"empty bounds {self.bounds}")

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]


@dataclass(frozen=True)
class TuningPool:
    """Devices (with features) eligible as tuning ground truth."""

    corpus: Corpus
    features: Mapping[str, FeatureSet]

    def __post_init__(self) -> None:
        missing = [d.submission_id for d in self.corpus
                   if d.submission_id not in self.features]
        if missing:
            raise ConfigurationError(
                f"pool features missing for devices: {', '.join(missing)}"
            )

    @property
    def device_ids(self) -> tuple[str, ...]:
        return self.corpus.ids()


def objective_hit5(
    index: SearchIndex,
    weights: RetrievalWeights,
    cases: Sequence[QueryCase],
    embed_provider: EmbeddingProvider,
) -> float:
    """Fraction of cases whose ground-truth device lands in the top 5."""
    if not cases:
        raise ConfigurationError("objective requires at least one case")
    for case in cases:
        try:
            index.row_of(case.ground_truth_device)
        except UnknownDeviceError as exc:
            raise ConfigurationError(str(exc)) from exc

    hits = 0
    for case in cases:
        results = search(index, weights, case.query, embed_provider, k=5)
        if any(r.device_id == case.ground_truth_device for r in results):
            hits += 1
    return hits / len(cases)


class _ParzenDensity:
    """1-D Gaussian-kernel mixture truncated to [lo, hi].

    One kernel per observed point; bandwidth by Scott's rule on the
    observations, floored. Uniform over the box when there are no points.
    """

    def __init__(
        self,
        points: Sequence[float],
        bounds: tuple[float, float],
        bandwidth_floor: float,
    ):
        self.lo, self.hi = bounds
        self.mus = np.asarray(points, dtype=np.float64)
        if self.mus.size:
            sigma = float(np.std(self.mus))
            self.h = max(sigma * self.mus.size ** (-0.2), bandwidth_floor)
            # Truncation mass per kernel.
            self._cdf_lo = ndtr((self.lo - self.mus) / self.h)
            self._cdf_hi = ndtr((self.hi - self.mus) / self.h)
            self._mass = self._cdf_hi - self._cdf_lo
        else:
            self.h = bandwidth_floor

    def pdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not self.mus.size:
            return np.full(x.shape, 1.0 / (self.hi - self.lo))
        z = (x[..., None] - self.mus) / self.h
        kernel = np.exp(-0.5 * z * z) / (self.h * math.sqrt(2.0 * math.pi))
        return (kernel / self._mass).mean(axis=-1)

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if not self.mus.size:
            return rng.uniform(self.lo, self.hi, size=size)
        which = rng.integers(0, self.mus.size, size=size)
        u = rng.random(size)
        p = self._cdf_lo[which] + u * self._mass[which]
        draws = self.mus[which] + self.h * ndtri(p)
        return np.clip(draws, self.lo, self.hi)


def split_history(
    history: Sequence[TrialRecord], gamma: float
) -> tuple[list[TrialRecord], list[TrialRecord]]:
    """Split trials into (good, bad): top ceil(gamma * n) by objective.

    Ties resolve toward the earlier trial.
    """
    order = sorted(
        range(len(history)),
        key=lambda i: (-history[i].objective, history[i].trial_index),
    )
    n_good = math.ceil(gamma * len(history))
    good = [history[i] for i in order[:n_good]]
    bad = [history[i] for i in order[n_good:]]
    return good, bad


def tpe_suggest(
    history: Sequence[TrialRecord],
    config: TpeConfig,
    rng: np.random.Generator,
) -> dict[str, float]:
    """Propose the next weight vector.

    Uniform in the weight box during startup; afterwards the candidate
    (of n_candidates drawn from the good density) maximizing the
    good/bad density ratio, computed independently per dimension.
    """
    lo, hi = config.bounds
    if len(history) < config.n_startup_trials:
        return {name: float(rng.uniform(lo, hi)) for name in FEATURE_NAMES}

    good, bad = split_history(history, config.gamma)

    candidates = np.empty((config.n_candidates, len(FEATURE_NAMES)))
    ratio = np.ones(config.n_candidates)
    for dim, name in enumerate(FEATURE_NAMES):
        good_density = _ParzenDensity(
            [t.weights.w[name] for t in good], config.bounds, config.bandwidth_floor
        )
        bad_density = _ParzenDensity(
            [t.weights.w[name] for t in bad], config.bounds, config.bandwidth_floor
        )
        draws = good_density.sample(rng, config.n_candidates)
        candidates[:, dim] = draws
        ratio *= np.maximum(good_density.pdf(draws), DENSITY_FLOOR) / np.maximum(
            bad_density.pdf(draws), DENSITY_FLOOR
        )

    best = int(np.argmax(ratio))
    return {
        name: float(candidates[best, dim])
        for dim, name in enumerate(FEATURE_NAMES)
    }


def replace_pairs(
    cases: Sequence[QueryCase],
    pool: TuningPool,
    fraction: float,
    provider: CompletionProvider | None,
    rng: np.random.Generator,
) -> list[QueryCase]:
    """Replace floor(fraction * n) uniformly chosen cases with fresh pairs.

    Replacement devices come from pool devices outside the current case
    list when enough exist; retained cases are returned unchanged.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction={fraction} outside [0, 1]")
    n_replace = math.floor(fraction * len(cases))
    if n_replace == 0:
        return list(cases)

    positions = rng.choice(len(cases), size=n_replace, replace=False)
    current = {case.ground_truth_device for case in cases}
    outside = [d for d in pool.device_ids if d not in current]
    candidates = outside if len(outside) >= n_replace else list(pool.device_ids)
    chosen = rng.choice(
        len(candidates), size=n_replace, replace=len(candidates) < n_replace
    )

    new_cases = list(cases)
    for position, device_index in zip(positions, chosen):
        device_id = candidates[int(device_index)]
        new_cases[int(position)] = QueryCase(
            query=generate_simulated_query(pool.features[device_id], provider),
            ground_truth_device=device_id,
        )
    return new_cases


def sample_cases(
    pool: TuningPool,
    n_cases: int,
    provider: CompletionProvider | None,
    rng: np.random.Generator,
) -> list[QueryCase]:
    """Draw devices without replacement and generate one query each."""
    n_cases = min(n_cases, len(pool.device_ids))
    if n_cases < 1:
        raise ConfigurationError("pool has no devices to sample cases from")
    picks = rng.choice(len(pool.device_ids), size=n_cases, replace=False)
    return [
        QueryCase(
            query=generate_simulated_query(
                pool.features[pool.device_ids[i]], provider
            ),
            ground_truth_device=pool.device_ids[i],
        )
        for i in map(int, picks)
    ]


def optimize_weights(
    index: SearchIndex,
    pool: TuningPool,
    n_trials: int,
    config: TpeConfig,
    embed_provider: EmbeddingProvider,
    query_provider: CompletionProvider | None = None,
    n_cases: int = DEFAULT_N_CASES,
) -> tuple[TrialRecord, list[TrialRecord]]:
    """Run the TPE loop and return (best trial, full history).

    The weight phase scores with lambda held at 1.0 (embedding-only
    objective); ties on the best objective go to the earliest trial.
    Fully deterministic given config.seed and deterministic providers.
    """
    if n_trials < 1:
        raise ConfigurationError("n_trials must be >= 1")
    rng = np.random.default_rng(config.seed)
    embed_provider = CachedEmbedder(embed_provider)
    cases = sample_cases(pool, n_cases, query_provider, rng)

    history: list[TrialRecord] = []
    snapshot_id = 0
    for trial_index in range(n_trials):
        weights = RetrievalWeights(w=tpe_suggest(history, config, rng), lam=1.0)
        objective = objective_hit5(index, weights, cases, embed_provider)
        history.append(
            TrialRecord(
                trial_index=trial_index,
                weights=weights,
                objective=objective,
                validation_snapshot_id=snapshot_id,
            )
        )
        cases = replace_pairs(
            cases, pool, REPLACEMENT_FRACTION, query_provider, rng
        )
        snapshot_id += 1

    best = max(history, key=lambda t: (t.objective, -t.trial_index))
    return best, history


def grid_search_lambda(
    index: SearchIndex,
    frozen_weights: RetrievalWeights,
    pool: TuningPool,
    n_points: int = 21,
    embed_provider: EmbeddingProvider | None = None,
    query_provider: CompletionProvider | None = None,
    n_cases: int = DEFAULT_N_CASES,
    seed: int = 0,
) -> tuple[float, list[tuple[float, float]]]:
    """Evaluate lambda over an even [0, 1] grid against one fixed case set.

    No per-point replacement, so the n_points evaluations are comparable.
    Returns (argmax lambda, full curve); ties go to the larger lambda.
    """
    if n_points < 2:
        raise ConfigurationError("n_points must be >= 2")
    if embed_provider is None:
        raise ConfigurationError("grid_search_lambda requires an embed provider")
    rng = np.random.default_rng(seed)
    embed_provider = CachedEmbedder(embed_provider)
    cases = sample_cases(pool, n_cases, query_provider, rng)

    curve: list[tuple[float, float]] = []
    best_lambda = 0.0
    best_objective = -1.0
    for i in range(n_points):
        lam = i / (n_points - 1)
        objective = objective_hit5(
            index, frozen_weights.with_lambda(lam), cases, embed_provider
        )
        curve.append((lam, objective))
        if objective >= best_objective:
            best_objective = objective
            best_lambda = lam
    return best_lambda, curve


# --- history persistence ---


def save_history(
    history: Sequence[TrialRecord], path: str | Path, config: TpeConfig
) -> None:
    """One JSONL line per trial, stamped with the seed and config hash."""
    digest = config.digest()
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in history:
            fh.write(
                json.dumps(
                    {
                        "trial_index": record.trial_index,
                        "weights": weights_to_json(record.weights),
                        "objective": record.objective,
                        "validation_snapshot_id": record.validation_snapshot_id,
                        "seed": config.seed,
                        "config_hash": digest,
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def load_history(path: str | Path) -> list[TrialRecord]:
    history = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        history.append(
            TrialRecord(
                trial_index=raw["trial_index"],
                weights=weights_from_json(raw["weights"]),
                objective=raw["objective"],
                validation_snapshot_id=raw["validation_snapshot_id"],
            )
        )
    return history
