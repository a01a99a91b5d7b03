import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from devicesearch.cli import main
from devicesearch.evaluation import EvalCase, save_eval_cases
from devicesearch.service import load_service_state

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "corpus20"


@pytest.fixture(scope="module")
def pipeline_workdir(tmp_path_factory):
    """Run ingest -> extract -> embed -> index once for the module."""
    workdir = tmp_path_factory.mktemp("pipeline")
    runner = CliRunner()
    steps = [
        ["ingest", "--metadata", str(FIXTURE_DIR / "metadata.jsonl"),
         "--texts", str(FIXTURE_DIR), "--workdir", str(workdir),
         "--version-tag", "fixture"],
        ["extract", "--workdir", str(workdir), "--provider", "mock"],
        ["embed", "--workdir", str(workdir), "--embedder", "hash"],
        ["index", "--workdir", str(workdir)],
    ]
    for step in steps:
        result = runner.invoke(main, step)
        assert result.exit_code == 0, f"{step[0]} failed: {result.output}"
    return workdir


class TestPipeline:
    def test_artifacts_written(self, pipeline_workdir):
        for name in (
            "corpus.jsonl", "features.jsonl", "embeddings.bin",
            "embeddings.json", "index/bm25.json", "index/snippets.jsonl",
            "index/manifest.json",
        ):
            assert (pipeline_workdir / name).exists(), name

    def test_state_loads_with_fixture_size(self, pipeline_workdir):
        state = load_service_state(pipeline_workdir)
        assert len(state.corpus) == 20
        assert len(state.features) == 20

    def test_manifest_contents(self, pipeline_workdir):
        manifest = json.loads(
            (pipeline_workdir / "index" / "manifest.json").read_text()
        )
        assert manifest["corpus_size"] == 20
        assert manifest["k1"] == 1.2
        assert manifest["b"] == 0.75
        assert manifest["bm25_normalization"] == "query_max"
        assert manifest["default_weights"]["lambda"] == 0.8


class TestMissingArtifacts:
    def test_extract_without_corpus_exits_2(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(main, ["extract", "--workdir", str(tmp_path)])
        assert result.exit_code == 2
        assert "corpus.jsonl" in result.output

    def test_embed_without_features_exits_2(self, pipeline_workdir, tmp_path):
        runner = CliRunner()
        result = runner.invoke(main, ["embed", "--workdir", str(tmp_path)])
        assert result.exit_code == 2

    def test_ingest_missing_metadata_exits_2(self, tmp_path):
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["ingest", "--metadata", str(tmp_path / "gone.jsonl"),
             "--workdir", str(tmp_path)],
        )
        assert result.exit_code == 2
        assert "gone.jsonl" in result.output


class TestValidationFailures:
    def test_ingest_duplicate_ids_exits_1(self, tmp_path):
        metadata = tmp_path / "dup.jsonl"
        record = {
            "submission_id": "K1", "device_name": "X", "company": "Y",
            "pathway": "510k", "panel": "", "decision_date": None,
            "summary_text": "text",
        }
        metadata.write_text(
            json.dumps(record) + "\n" + json.dumps(record) + "\n"
        )
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["ingest", "--metadata", str(metadata), "--workdir", str(tmp_path)],
        )
        assert result.exit_code == 1
        assert "K1" in result.output


class TestTune:
    def test_tune_is_deterministic(self, pipeline_workdir):
        runner = CliRunner()
        histories = []
        for _ in range(2):
            result = runner.invoke(
                main,
                ["tune", "--workdir", str(pipeline_workdir), "--trials", "5",
                 "--seed", "7", "--cases", "8"],
            )
            assert result.exit_code == 0, result.output
            histories.append(
                (pipeline_workdir / "history.jsonl").read_text()
            )
        assert histories[0] == histories[1]
        assert len(histories[0].splitlines()) == 5
        tuned = json.loads(
            (pipeline_workdir / "tuned_weights.json").read_text()
        )
        assert set(tuned) == {"w", "lambda"}


class TestEval:
    def test_eval_writes_report_with_table_fields(self, pipeline_workdir):
        state = load_service_state(pipeline_workdir)
        cases_path = pipeline_workdir / "cases.jsonl"
        cases = [
            EvalCase(
                query=state.features[d.submission_id].thesis,
                matching_devices=frozenset([d.submission_id]),
            )
            for d in list(state.corpus)[:5]
        ]
        save_eval_cases(cases, cases_path)
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["eval", "--workdir", str(pipeline_workdir),
             "--cases", str(cases_path), "--variant", "hybrid"],
        )
        assert result.exit_code == 0, result.output
        assert "Average position" in result.output
        report = json.loads((pipeline_workdir / "report.json").read_text())
        for key in (
            "variant", "n_cases", "avg_position", "median_position",
            "min_position", "max_position", "stdev_position", "hit_at",
            "mean_latency_s", "stdev_latency_s",
        ):
            assert key in report
        assert report["variant"] == "hybrid"
        assert report["n_cases"] == 5

    def test_eval_missing_cases_exits_2(self, pipeline_workdir):
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["eval", "--workdir", str(pipeline_workdir),
             "--cases", str(pipeline_workdir / "missing.jsonl")],
        )
        assert result.exit_code == 2
        assert "missing.jsonl" in result.output


class TestServe:
    def test_serve_missing_weights_override_exits_2(self, pipeline_workdir):
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["serve", "--workdir", str(pipeline_workdir),
             "--weights", str(pipeline_workdir / "ghost_weights.json")],
        )
        assert result.exit_code == 2
        assert "ghost_weights.json" in result.output
