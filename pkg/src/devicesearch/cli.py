"""Operator CLI: ingest -> extract -> embed -> index -> tune / eval / serve.

Each stage reads the previous stage's artifacts from --workdir and writes
its own. Missing upstream artifacts exit with code 2 and the expected
path; validation failures exit with code 1.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import service as service_mod
from .corpus import DEFAULT_CHUNK_LIMIT, Corpus, load_corpus, save_corpus
from .embedding import (
    EmbeddingProvider,
    HashingEmbedder,
    embed_device,
    load_embeddings,
    save_embeddings,
)
from .errors import DeviceSearchError
from .evaluation import (
    Variant,
    evaluate,
    load_eval_cases,
    render_report_table,
    report_to_json,
)
from .extraction import (
    CompletionProvider,
    extract_features,
    load_feature_sets,
    save_feature_sets,
)
from .providers import (
    DeterministicFeatureProvider,
    HttpCompletionProvider,
    HttpEmbeddingProvider,
)
from .retrieval import (
    build_index,
    default_weights,
    load_index_stats,
    save_index_stats,
    weights_from_json,
    weights_to_json,
)
from .tuning import TpeConfig, TuningPool, grid_search_lambda, optimize_weights, save_history

HISTORY_FILE = "history.jsonl"
TUNED_WEIGHTS_FILE = "tuned_weights.json"
REPORT_FILE = "report.json"


def _require_artifact(path: Path) -> Path:
    if not path.exists():
        click.echo(f"missing required artifact: {path}", err=True)
        sys.exit(2)
    return path


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _completion_provider(name: str) -> CompletionProvider:
    if name == "mock":
        return DeterministicFeatureProvider()
    return HttpCompletionProvider.from_env()


def _embedding_provider(name: str) -> EmbeddingProvider:
    if name == "hash":
        return HashingEmbedder()
    return HttpEmbeddingProvider.from_env()


def _load_corpus_artifact(workdir: Path) -> Corpus:
    return load_corpus(_require_artifact(workdir / service_mod.CORPUS_FILE))


def _load_features_artifact(workdir: Path):
    return load_feature_sets(_require_artifact(workdir / service_mod.FEATURES_FILE))


def _load_embeddings_artifact(workdir: Path):
    data = _require_artifact(workdir / service_mod.EMBEDDINGS_DATA_FILE)
    sidecar = _require_artifact(workdir / service_mod.EMBEDDINGS_SIDECAR_FILE)
    return load_embeddings(data, sidecar)


def _load_index_artifact(workdir: Path):
    corpus = _load_corpus_artifact(workdir)
    embeddings = _load_embeddings_artifact(workdir)
    index_dir = workdir / service_mod.INDEX_DIR
    _require_artifact(index_dir / "manifest.json")
    return load_index_stats(index_dir, corpus, embeddings)


@click.group()
def main() -> None:
    """Hybrid semantic + keyword search over AI-device summaries."""


@main.command()
@click.option("--metadata", required=True, type=click.Path(path_type=Path))
@click.option("--texts", type=click.Path(path_type=Path), default=None,
              help="Directory for summary_path references.")
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--version-tag", default="")
def ingest(metadata: Path, texts: Path | None, workdir: Path, version_tag: str) -> None:
    """Validate raw metadata + texts and write the normalized corpus."""
    _require_artifact(metadata)
    if texts is not None:
        _require_artifact(texts)
    try:
        corpus = load_corpus(metadata, texts, version_tag=version_tag)
    except DeviceSearchError as exc:
        _fail(str(exc))
    workdir.mkdir(parents=True, exist_ok=True)
    save_corpus(corpus, workdir / service_mod.CORPUS_FILE)
    click.echo(f"ingested {len(corpus)} devices")


@main.command()
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--provider", type=click.Choice(["mock", "http"]), default="mock")
@click.option("--chunk-limit", type=int, default=DEFAULT_CHUNK_LIMIT)
@click.option("--strict", is_flag=True, default=False)
def extract(workdir: Path, provider: str, chunk_limit: int, strict: bool) -> None:
    """Run the feature-extraction prompt chain for every device."""
    corpus = _load_corpus_artifact(workdir)
    completion = _completion_provider(provider)
    feature_sets = []
    try:
        for device in corpus:
            feature_sets.append(
                extract_features(
                    device, completion, chunk_limit=chunk_limit, strict=strict
                )
            )
    except DeviceSearchError as exc:
        _fail(str(exc))
    save_feature_sets(feature_sets, workdir / service_mod.FEATURES_FILE)
    click.echo(f"extracted features for {len(feature_sets)} devices")


@main.command()
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--embedder", type=click.Choice(["hash", "http"]), default="hash")
def embed(workdir: Path, embedder: str) -> None:
    """Embed the seven feature texts per device into the vector store."""
    corpus = _load_corpus_artifact(workdir)
    features = _load_features_artifact(workdir)
    provider = _embedding_provider(embedder)
    try:
        embeddings = [
            embed_device(features[device.submission_id], provider)
            for device in corpus
        ]
    except (DeviceSearchError, KeyError) as exc:
        _fail(str(exc))
    save_embeddings(
        embeddings,
        workdir / service_mod.EMBEDDINGS_DATA_FILE,
        workdir / service_mod.EMBEDDINGS_SIDECAR_FILE,
    )
    click.echo(f"embedded {len(embeddings)} devices")


@main.command("index")
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--weights", "weights_path", type=click.Path(path_type=Path),
              default=None, help="JSON weights file; default: shipped weights.")
def build_index_cmd(workdir: Path, weights_path: Path | None) -> None:
    """Build BM25 stats and snippets; write the index manifest."""
    corpus = _load_corpus_artifact(workdir)
    features = _load_features_artifact(workdir)
    embeddings = _load_embeddings_artifact(workdir)
    if weights_path is not None:
        _require_artifact(weights_path)
        weights = weights_from_json(
            json.loads(weights_path.read_text(encoding="utf-8"))
        )
    else:
        weights = default_weights()
    try:
        index = build_index(corpus, features, embeddings)
    except DeviceSearchError as exc:
        _fail(str(exc))
    save_index_stats(index, workdir / service_mod.INDEX_DIR, weights)
    click.echo(f"indexed {len(index)} devices")


@main.command()
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--trials", type=int, default=300)
@click.option("--seed", type=int, default=0)
@click.option("--gamma", type=float, default=0.25)
@click.option("--startup", type=int, default=10)
@click.option("--cases", type=int, default=50, help="Device-query pairs per trial.")
@click.option("--pool", type=int, default=0,
              help="Cap the tuning pool to the first N devices (0 = all).")
@click.option("--embedder", type=click.Choice(["hash", "http"]), default="hash")
def tune(workdir: Path, trials: int, seed: int, gamma: float, startup: int,
         cases: int, pool: int, embedder: str) -> None:
    """Optimize feature weights (TPE), then grid-search the blend lambda."""
    index, _ = _load_index_artifact(workdir)
    features = _load_features_artifact(workdir)
    corpus = index.corpus
    if pool > 0:
        corpus = Corpus(devices=corpus.devices[:pool], version_tag=corpus.version_tag)
    config = TpeConfig(n_startup_trials=startup, gamma=gamma, seed=seed)
    embed_provider = _embedding_provider(embedder)
    try:
        tuning_pool = TuningPool(corpus=corpus, features=features)
        best, history = optimize_weights(
            index, tuning_pool, trials, config,
            embed_provider=embed_provider, n_cases=cases,
        )
        save_history(history, workdir / HISTORY_FILE, config)
        best_lambda, curve = grid_search_lambda(
            index, best.weights, tuning_pool,
            embed_provider=embed_provider, n_cases=cases, seed=seed,
        )
    except DeviceSearchError as exc:
        _fail(str(exc))

    tuned = best.weights.with_lambda(best_lambda)
    (workdir / TUNED_WEIGHTS_FILE).write_text(
        json.dumps(weights_to_json(tuned), indent=1), encoding="utf-8"
    )
    click.echo(
        f"best objective {best.objective:.3f} at trial {best.trial_index}; "
        f"lambda {best_lambda:.2f} "
        f"(curve max {max(obj for _, obj in curve):.3f})"
    )


@main.command("eval")
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--cases", "cases_path", required=True, type=click.Path(path_type=Path))
@click.option("--variant", type=click.Choice([v.value for v in Variant]),
              default=Variant.HYBRID.value)
@click.option("--weights", "weights_path", type=click.Path(path_type=Path), default=None)
@click.option("--embedder", type=click.Choice(["hash", "http"]), default="hash")
def eval_cmd(workdir: Path, cases_path: Path, variant: str,
             weights_path: Path | None, embedder: str) -> None:
    """Evaluate ranked positions and Hit@K over a JSONL case file."""
    index, manifest = _load_index_artifact(workdir)
    _require_artifact(cases_path)
    if weights_path is not None:
        _require_artifact(weights_path)
        weights = weights_from_json(json.loads(weights_path.read_text(encoding="utf-8")))
    else:
        weights = weights_from_json(manifest["default_weights"])
    try:
        cases = load_eval_cases(cases_path)
        report = evaluate(
            index, weights, cases, Variant(variant),
            embed_provider=_embedding_provider(embedder),
        )
    except DeviceSearchError as exc:
        _fail(str(exc))
    (workdir / REPORT_FILE).write_text(
        json.dumps(report_to_json(report), indent=1), encoding="utf-8"
    )
    click.echo(render_report_table([report]))


@main.command()
@click.option("--workdir", required=True, type=click.Path(path_type=Path))
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--cors-origin", default=None)
@click.option("--weights", "weights_path", type=click.Path(path_type=Path),
              default=None, help="Override the manifest's default weights.")
@click.option("--embedder", type=click.Choice(["hash", "http"]), default="hash")
def serve(workdir: Path, host: str, port: int, cors_origin: str | None,
          weights_path: Path | None, embedder: str) -> None:
    """Load the index artifacts and bind the HTTP API."""
    import uvicorn

    for name in (
        service_mod.CORPUS_FILE,
        service_mod.FEATURES_FILE,
        service_mod.EMBEDDINGS_DATA_FILE,
        service_mod.EMBEDDINGS_SIDECAR_FILE,
    ):
        _require_artifact(workdir / name)
    _require_artifact(workdir / service_mod.INDEX_DIR / "manifest.json")
    if weights_path is not None:
        _require_artifact(weights_path)
    try:
        state = service_mod.load_service_state(
            workdir, embed_provider=_embedding_provider(embedder)
        )
        if weights_path is not None:
            state.weights = weights_from_json(
                json.loads(weights_path.read_text(encoding="utf-8"))
            )
    except DeviceSearchError as exc:
        _fail(str(exc))
    app = service_mod.create_app(state, cors_origin=cors_origin)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
