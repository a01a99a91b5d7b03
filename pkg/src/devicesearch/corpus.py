"""Device data model and corpus ingestion.

A corpus is a set of authorized AI devices, each carrying identifying
metadata plus the full text of its public authorization summary. Metadata
ships as JSONL (one device per line); summary text is either inlined
(``summary_text``) or referenced by path (``summary_path``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from pathlib import Path
from typing import Iterator

from .errors import IngestError, ValidationError


class Pathway(Enum):
    """FDA marketing-authorization pathway."""

    FIVE_TEN_K = "510k"
    DE_NOVO = "de_novo"
    PMA = "pma"


@dataclass(frozen=True)
class DeviceRecord:
    """One authorized device: identifiers, metadata, and summary text."""

    submission_id: str
    device_name: str
    company: str
    pathway: Pathway
    panel: str = ""
    decision_date: date | None = None
    summary_text: str = ""

    def __post_init__(self) -> None:
        if not self.submission_id:
            raise ValidationError("submission_id must be non-empty")


@dataclass(frozen=True)
class Corpus:
    """Immutable, deterministically ordered collection of devices.

    Devices are sorted ascending by submission_id; ids are unique.
    """

    devices: tuple[DeviceRecord, ...]
    version_tag: str = ""
    _by_id: dict[str, DeviceRecord] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.devices, key=lambda d: d.submission_id))
        object.__setattr__(self, "devices", ordered)
        by_id: dict[str, DeviceRecord] = {}
        for dev in ordered:
            if dev.submission_id in by_id:
                raise ValidationError(
                    f"duplicate submission_id {dev.submission_id!r}"
                )
            by_id[dev.submission_id] = dev
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.devices)

    def __iter__(self) -> Iterator[DeviceRecord]:
        return iter(self.devices)

    def __contains__(self, submission_id: str) -> bool:
        return submission_id in self._by_id

    def get(self, submission_id: str) -> DeviceRecord:
        try:
            return self._by_id[submission_id]
        except KeyError:
            raise ValidationError(
                f"unknown submission_id {submission_id!r}"
            ) from None

    def ids(self) -> tuple[str, ...]:
        return tuple(d.submission_id for d in self.devices)


@dataclass(frozen=True)
class DocumentChunk:
    """A contiguous slice of one device's summary text."""

    device_id: str
    chunk_index: int
    text: str


# ~2,000 chars/page x 200 pages; realistic summaries fit a single chunk.
DEFAULT_CHUNK_LIMIT = 400_000

_PATHWAY_BY_WIRE = {p.value: p for p in Pathway}


def chunk_document(
    text: str, limit: int, device_id: str = ""
) -> list[DocumentChunk]:
    """Split ``text`` into chunks of at most ``limit`` characters.

    Split points prefer the last paragraph boundary (blank line) before the
    limit and fall back to a hard cut. Chunks concatenated in index order
    reproduce the input exactly. Empty text yields a single empty chunk.
    """
    if limit < 1:
        raise ValueError(f"chunk limit must be >= 1, got {limit}")
    if text == "":
        return [DocumentChunk(device_id=device_id, chunk_index=0, text="")]

    chunks: list[DocumentChunk] = []
    start = 0
    while start < len(text):
        remaining = len(text) - start
        if remaining <= limit:
            end = len(text)
        else:
            window = text[start : start + limit]
            boundary = window.rfind("\n\n")
            # Keep the blank line with the leading chunk.
            end = start + (boundary + 2 if boundary != -1 else limit)
        chunks.append(
            DocumentChunk(
                device_id=device_id,
                chunk_index=len(chunks),
                text=text[start:end],
            )
        )
        start = end
    return chunks


def parse_metadata_line(line: str, base_dir: Path) -> DeviceRecord:
    """Build a DeviceRecord from one JSONL metadata line.

    ``summary_path`` entries are resolved relative to ``base_dir``.
    """
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON metadata line: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValidationError("metadata line must be a JSON object")

    submission_id = raw.get("submission_id", "")
    if not submission_id:
        raise ValidationError("record is missing submission_id")

    pathway_raw = raw.get("pathway", "")
    pathway = _PATHWAY_BY_WIRE.get(pathway_raw)
    if pathway is None:
        raise ValidationError(
            f"unknown pathway {pathway_raw!r} for {submission_id!r} "
            f"(expected one of {sorted(_PATHWAY_BY_WIRE)})"
        )

    decision_date = None
    if raw.get("decision_date"):
        try:
            decision_date = date.fromisoformat(raw["decision_date"])
        except ValueError as exc:
            raise ValidationError(
                f"invalid decision_date for {submission_id!r}: {exc}"
            ) from exc

    if "summary_text" in raw and raw["summary_text"] is not None:
        summary_text = raw["summary_text"]
    elif raw.get("summary_path"):
        summary_file = base_dir / raw["summary_path"]
        if not summary_file.is_file():
            raise IngestError(
                f"summary file not found for {submission_id!r}: {summary_file}"
            )
        summary_text = summary_file.read_text(encoding="utf-8")
    else:
        raise ValidationError(
            f"record {submission_id!r} has neither summary_text nor summary_path"
        )

    return DeviceRecord(
        submission_id=submission_id,
        device_name=raw.get("device_name", ""),
        company=raw.get("company", ""),
        pathway=pathway,
        panel=raw.get("panel") or "",
        decision_date=decision_date,
        summary_text=summary_text,
    )


def load_corpus(
    metadata_path: str | Path,
    text_dir: str | Path | None = None,
    version_tag: str = "",
) -> Corpus:
    """Load and validate a corpus from a JSONL metadata file.

    Summary files referenced by ``summary_path`` are resolved against
    ``text_dir`` (default: the metadata file's directory).
    """
    metadata_path = Path(metadata_path)
    if not metadata_path.is_file():
        raise IngestError(f"metadata file not found: {metadata_path}")
    base_dir = Path(text_dir) if text_dir is not None else metadata_path.parent

    devices = []
    for line in metadata_path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        devices.append(parse_metadata_line(line, base_dir))
    return Corpus(devices=tuple(devices), version_tag=version_tag)


def device_to_json(device: DeviceRecord) -> dict:
    """Wire representation used by the normalized corpus file and the API."""
    return {
        "submission_id": device.submission_id,
        "device_name": device.device_name,
        "company": device.company,
        "pathway": device.pathway.value,
        "panel": device.panel,
        "decision_date": (
            device.decision_date.isoformat() if device.decision_date else None
        ),
        "summary_text": device.summary_text,
    }


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a normalized corpus (summary text inlined) as JSONL."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for device in corpus:
            fh.write(json.dumps(device_to_json(device), ensure_ascii=False))
            fh.write("\n")
