"""Regenerate the bundled 20-device demo fixture (deterministic)."""

from __future__ import annotations

import json
from pathlib import Path

from devicesearch.corpus import device_to_json
from devicesearch.synth import synth_corpus

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures" / "corpus20"


def main() -> None:
    corpus = synth_corpus(20, seed=20, version_tag="fixture-corpus20")
    texts_dir = FIXTURE_DIR / "texts"
    texts_dir.mkdir(parents=True, exist_ok=True)

    lines = []
    for i, device in enumerate(corpus):
        record = device_to_json(device)
        if i % 2 == 0:
            # Half the records exercise the summary_path route.
            text_name = f"{device.submission_id}.txt"
            (texts_dir / text_name).write_text(
                device.summary_text, encoding="utf-8"
            )
            del record["summary_text"]
            record["summary_path"] = f"texts/{text_name}"
        lines.append(json.dumps(record, ensure_ascii=False))

    (FIXTURE_DIR / "metadata.jsonl").write_text(
        "\n".join(lines) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(lines)} devices to {FIXTURE_DIR}")


if __name__ == "__main__":
    main()
