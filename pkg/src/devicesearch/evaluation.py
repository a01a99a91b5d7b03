"""Ranked-position evaluation and latency measurement.

Each case queries the full ranking; the 1-based position of the first
matching device feeds the summary statistics and Hit@K rates. Variants
select the blend: embedding-only, BM25-only, or the configured hybrid.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .embedding import EmbeddingProvider
from .errors import EvaluationError
from .retrieval import RetrievalWeights, SearchIndex, search

HIT_KS = (1, 3, 5, 10)


class Variant(Enum):
    EMBEDDING = "embedding"
    BM25 = "bm25"
    HYBRID = "hybrid"


@dataclass(frozen=True)
class EvalCase:
    """A query with every device it should match (first match counts)."""

    query: str
    matching_devices: frozenset[str]

    def __post_init__(self) -> None:
        if not self.matching_devices:
            raise EvaluationError(f"case {self.query!r} has no matching devices")


@dataclass(frozen=True)
class EvalReport:
    variant: Variant
    n_cases: int
    avg_position: float
    median_position: float
    min_position: float
    max_position: float
    stdev_position: float
    hit_at: dict[int, float]
    mean_latency_s: float
    stdev_latency_s: float


def rank_position(ranked_ids: Sequence[str], matches: frozenset[str]) -> int:
    """1-based position of the first matching id in the ranking."""
    if not matches:
        raise EvaluationError("matches must be non-empty")
    absent = matches.difference(ranked_ids)
    if absent:
        raise EvaluationError(
            f"matching devices absent from ranking: {', '.join(sorted(absent))}"
        )
    for position, device_id in enumerate(ranked_ids, start=1):
        if device_id in matches:
            return position
    raise EvaluationError("no match found in ranking")  # unreachable


def _variant_lambda(variant: Variant, weights: RetrievalWeights) -> float:
    if variant is Variant.EMBEDDING:
        return 1.0
    if variant is Variant.BM25:
        return 0.0
    return weights.lam


def _stdev(values: Sequence[float], population: bool) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.pstdev(values) if population else statistics.stdev(values)


def evaluate(
    index: SearchIndex,
    weights: RetrievalWeights,
    cases: Sequence[EvalCase],
    variant: Variant,
    embed_provider: EmbeddingProvider,
    population_stdev: bool = True,
) -> EvalReport:
    """Full-ranking evaluation of every case under one variant.

    Position statistics use the population standard deviation unless
    ``population_stdev`` is False. Latency fields reflect this run's
    wall-clock search times and are excluded from determinism claims.
    """
    if not cases:
        raise EvaluationError("evaluate requires at least one case")
    scoring = weights.with_lambda(_variant_lambda(variant, weights))

    positions: list[int] = []
    latencies: list[float] = []
    for case in cases:
        started = time.perf_counter()
        results = search(index, scoring, case.query, embed_provider, k=len(index))
        latencies.append(time.perf_counter() - started)
        positions.append(
            rank_position([r.device_id for r in results], case.matching_devices)
        )

    return EvalReport(
        variant=variant,
        n_cases=len(cases),
        avg_position=statistics.fmean(positions),
        median_position=float(statistics.median(positions)),
        min_position=float(min(positions)),
        max_position=float(max(positions)),
        stdev_position=_stdev(positions, population_stdev),
        hit_at={
            k: sum(1 for p in positions if p <= k) / len(positions)
            for k in HIT_KS
        },
        mean_latency_s=statistics.fmean(latencies),
        stdev_latency_s=_stdev(latencies, population_stdev),
    )


def measure_latency(
    index: SearchIndex,
    weights: RetrievalWeights,
    queries: Sequence[str],
    embed_provider: EmbeddingProvider,
) -> tuple[float, float]:
    """Mean and population SD of wall-clock hybrid search time, in seconds.

    Timing covers query embedding, scoring, and sorting on a warm index;
    runs single-threaded.
    """
    if len(queries) < 10:
        raise EvaluationError(f"need at least 10 queries, got {len(queries)}")
    search(index, weights, queries[0], embed_provider, k=len(index))  # warmup

    latencies = []
    for query in queries:
        started = time.perf_counter()
        search(index, weights, query, embed_provider, k=len(index))
        latencies.append(time.perf_counter() - started)
    return statistics.fmean(latencies), _stdev(latencies, population=True)


def load_eval_cases(path: str | Path) -> list[EvalCase]:
    """Read cases from JSONL: {"query": ..., "matching_devices": [...]}."""
    cases = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        cases.append(
            EvalCase(
                query=raw["query"],
                matching_devices=frozenset(raw["matching_devices"]),
            )
        )
    return cases


def save_eval_cases(cases: Iterable[EvalCase], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(
                json.dumps(
                    {
                        "query": case.query,
                        "matching_devices": sorted(case.matching_devices),
                    },
                    ensure_ascii=False,
                )
            )
            fh.write("\n")


def report_to_json(report: EvalReport) -> dict:
    return {
        "variant": report.variant.value,
        "n_cases": report.n_cases,
        "avg_position": report.avg_position,
        "median_position": report.median_position,
        "min_position": report.min_position,
        "max_position": report.max_position,
        "stdev_position": report.stdev_position,
        "hit_at": {str(k): v for k, v in report.hit_at.items()},
        "mean_latency_s": report.mean_latency_s,
        "stdev_latency_s": report.stdev_latency_s,
    }


def render_report_table(reports: Sequence[EvalReport]) -> str:
    """Aligned-column text table; one column per variant."""
    headers = ["Metric"] + [r.variant.value.capitalize() for r in reports]
    rows = [
        ("Average position", [f"{r.avg_position:.2f}" for r in reports]),
        ("Median position", [f"{r.median_position:.2f}" for r in reports]),
        ("Min position", [f"{r.min_position:.2f}" for r in reports]),
        ("Max position", [f"{r.max_position:.2f}" for r in reports]),
        ("Stdev position", [f"{r.stdev_position:.2f}" for r in reports]),
    ] + [
        (f"Hit@K = {k}", [f"{r.hit_at[k]:.3f}" for r in reports]) for k in HIT_KS
    ]

    table = [headers] + [[label, *values] for label, values in rows]
    widths = [max(len(row[col]) for row in table) for col in range(len(headers))]
    lines = []
    for row in table:
        lines.append(
            "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip()
        )
    return "\n".join(lines)
