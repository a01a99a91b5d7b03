import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devicesearch.corpus import (
    Corpus,
    DeviceRecord,
    Pathway,
    chunk_document,
    load_corpus,
    save_corpus,
)
from devicesearch.errors import IngestError, ValidationError


def write_metadata(path, records):
    path.write_text(
        "\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8"
    )


def record(submission_id, **overrides):
    base = {
        "submission_id": submission_id,
        "device_name": f"Device {submission_id}",
        "company": "Acme",
        "pathway": "510k",
        "panel": "Radiology",
        "decision_date": "2025-01-15",
        "summary_text": f"text for {submission_id}",
    }
    base.update(overrides)
    return base


class TestLoadCorpus:
    def test_loads_and_sorts_by_submission_id(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(meta, [record("K3"), record("K1"), record("K2")])
        corpus = load_corpus(meta)
        assert len(corpus) == 3
        assert corpus.ids() == ("K1", "K2", "K3")

    def test_duplicate_submission_id_rejected(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(meta, [record("K250001"), record("K250001")])
        with pytest.raises(ValidationError, match="K250001"):
            load_corpus(meta)

    def test_unknown_pathway_rejected(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(meta, [record("K1", pathway="HDE")])
        with pytest.raises(ValidationError, match="HDE"):
            load_corpus(meta)

    def test_missing_metadata_file_names_path(self, tmp_path):
        missing = tmp_path / "nope.jsonl"
        with pytest.raises(IngestError, match="nope.jsonl"):
            load_corpus(missing)

    def test_missing_summary_file_names_path(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        rec = record("K1")
        del rec["summary_text"]
        rec["summary_path"] = "texts/K1.txt"
        write_metadata(meta, [rec])
        with pytest.raises(IngestError, match="K1.txt"):
            load_corpus(meta)

    def test_summary_path_resolved_against_text_dir(self, tmp_path):
        (tmp_path / "texts").mkdir()
        (tmp_path / "texts" / "K1.txt").write_text("from file", encoding="utf-8")
        meta = tmp_path / "metadata.jsonl"
        rec = record("K1")
        del rec["summary_text"]
        rec["summary_path"] = "texts/K1.txt"
        write_metadata(meta, [rec])
        corpus = load_corpus(meta, tmp_path)
        assert corpus.get("K1").summary_text == "from file"

    def test_missing_decision_date_allowed(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(meta, [record("K1", decision_date=None)])
        assert load_corpus(meta).get("K1").decision_date is None

    def test_load_is_idempotent(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(
            meta,
            [record("K2", pathway="pma"), record("K1", pathway="de_novo")],
        )
        first = load_corpus(meta)
        second = load_corpus(meta)
        assert first.devices == second.devices

    def test_save_load_round_trip(self, tmp_path):
        meta = tmp_path / "metadata.jsonl"
        write_metadata(meta, [record("K1"), record("K2", pathway="de_novo")])
        corpus = load_corpus(meta)
        out = tmp_path / "normalized.jsonl"
        save_corpus(corpus, out)
        assert load_corpus(out).devices == corpus.devices


class TestCorpusModel:
    def test_empty_submission_id_rejected(self):
        with pytest.raises(ValidationError):
            DeviceRecord(
                submission_id="",
                device_name="X",
                company="Y",
                pathway=Pathway.PMA,
            )

    def test_corpus_orders_devices(self):
        devices = tuple(
            DeviceRecord(submission_id=i, device_name="", company="",
                         pathway=Pathway.FIVE_TEN_K)
            for i in ("K9", "K1", "K5")
        )
        assert Corpus(devices=devices).ids() == ("K1", "K5", "K9")


class TestChunkDocument:
    def test_under_limit_single_chunk(self):
        text = "a" * 100
        chunks = chunk_document(text, 400_000)
        assert len(chunks) == 1
        assert chunks[0].text == text
        assert chunks[0].chunk_index == 0

    def test_hard_split_arithmetic(self):
        # ceil(900001 / 400000) = 3 chunks; no paragraph boundaries.
        text = "a" * 900_001
        chunks = chunk_document(text, 400_000)
        assert [len(c.text) for c in chunks] == [400_000, 400_000, 100_001]
        assert [c.chunk_index for c in chunks] == [0, 1, 2]

    def test_empty_text_single_empty_chunk(self):
        chunks = chunk_document("", 100)
        assert len(chunks) == 1
        assert chunks[0].text == ""

    def test_prefers_paragraph_boundary(self):
        text = "first paragraph\n\nsecond paragraph is longer"
        chunks = chunk_document(text, 25)
        assert chunks[0].text == "first paragraph\n\n"
        assert "".join(c.text for c in chunks) == text

    def test_limit_below_one_rejected(self):
        with pytest.raises(ValueError):
            chunk_document("abc", 0)

    def test_device_id_propagated(self):
        chunks = chunk_document("abc", 1, device_id="K1")
        assert all(c.device_id == "K1" for c in chunks)

    @given(
        text=st.text(
            alphabet=st.sampled_from("ab \n"), min_size=0, max_size=400
        ),
        limit=st.integers(min_value=1, max_value=50),
    )
    @settings(max_examples=300, deadline=None)
    def test_round_trip_and_size_bound(self, text, limit):
        chunks = chunk_document(text, limit)
        assert "".join(c.text for c in chunks) == text
        assert all(len(c.text) <= limit for c in chunks)
        assert [c.chunk_index for c in chunks] == list(range(len(chunks)))
