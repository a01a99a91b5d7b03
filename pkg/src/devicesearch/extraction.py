"""LLM-driven feature extraction.

Per device, a completion provider is walked through a fixed prompt chain:
each summary-text chunk is summarized, chunk summaries are merged into an
aggregate summary when there is more than one, five features (summary,
keywords, questions, key concepts, thesis) are extracted from the aggregate,
a search-boost string is derived locally, and three hypothetical clinician
queries are generated from the five features. The same provider interface
also produces short simulated queries for weight tuning.

Prompt strings are versioned constants; change PROMPT_VERSION when editing
them so downstream artifacts can record what produced their features.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Protocol

from .corpus import DEFAULT_CHUNK_LIMIT, DeviceRecord, chunk_document
from .errors import (
    ExtractionError,
    FeatureParseError,
    GenerationError,
    ProviderError,
)

PROMPT_VERSION = "1"

CHUNK_SUMMARY_PROMPT = (
    "Summarize the following chunk of a document in two paragraphs. "
    "Do NOT include anything about the document type (e.g., FDA 510(k) letter)"
)

AGGREGATE_SUMMARY_PROMPT = (
    "Combine the following chunk summaries of one document into a single "
    "two-paragraph summary covering the entire document."
)

FEATURE_PROMPT = """Analyze the following summary of a document and provide:
1. A thorough two-paragraph summary that distills all relevant content about the device's purpose, methology, science, and results from the entire document.
2. Exactly 10 salient keywords from the entire document.
3. Exactly 5 insightful questions that a clinician or scientist might ask about the entire document to yield good results for further investigation or understanding.
4. Based on the keywords and generated questions, a list of 5 concepts pertaining to the entire document.
5. Based on all of the above, a 2 sentence thesis, a clear statement of purpose, methology, science of the device for the entire document.
Summary content:"""

QUERY_MATCH_PROMPT = (
    "Based on the following data for a medical device, please generate three "
    "distinct search queries that a clinician would use to find this device. "
    "The queries should be specific and relevant to the device's "
    "characteristics and intended use."
)

SIMULATED_QUERY_PROMPT = """You are an expert medical researcher.
Based on the following thesis and key concepts from a medical device's FDA summary,
generate a concise and clinically relevant search query that a clinician or researcher might use to find information about similar devices or technologies. Do NOT include anything about AI, ML, or what those mean.
Only return the 1-3 word medical search query. Return only the query itself, without any preamble or explanation..
Thesis: "{thesis}"
Key Concepts: "{concepts}"
Clinically Relevant Search Query:"""

# Nominal item counts requested by FEATURE_PROMPT, with the lenient-parse
# tolerance band accepted from drifting providers.
LIST_SECTION_LIMITS = {
    "keywords": (10, 1, 20),
    "questions": (5, 1, 10),
    "key_concepts": (5, 1, 10),
}

SECTION_NAMES = ("summary", "keywords", "questions", "key_concepts", "thesis")

_SECTION_HEADER_RE = re.compile(r"^\s*([1-5])[.):]\s*(.*)$")
_ITEM_MARKER_RE = re.compile(r"^\s*(?:[-*•‣◦]|\d{1,2}[.)])\s*")
_LABEL_RE = re.compile(r"^\**\s*([A-Za-z][A-Za-z _-]{0,40}?)\s*\**\s*:\s*")
_KNOWN_LABELS = {
    "summary",
    "keywords",
    "salient keywords",
    "questions",
    "relevant questions",
    "insightful questions",
    "key concepts",
    "concepts",
    "thesis",
    "search queries",
    "queries",
}


class CompletionProvider(Protocol):
    """Text-completion contract shared by live adapters and test doubles.

    Deterministic providers must return identical output for identical
    input; live providers are not assumed to.
    """

    def send_prompt(self, prompt: str, attachment: str | None = None) -> str:
        ...


@dataclass(frozen=True)
class RetryPolicy:
    """Transport failures back off exponentially; parse failures retry flat."""

    attempts: int = 3
    backoff_s: float = 1.0
    sleep: Callable[[float], None] = time.sleep


@dataclass(frozen=True)
class FeatureSet:
    """The nine per-device text features plus parser conformance warnings."""

    device_id: str
    summary: str
    keywords: tuple[str, ...]
    questions: tuple[str, ...]
    key_concepts: tuple[str, ...]
    thesis: str
    search_boost: str
    query_match_1: str
    query_match_2: str
    query_match_3: str
    warnings: tuple[str, ...] = field(default=())


@dataclass(frozen=True)
class ParsedFeatures:
    summary: str
    keywords: tuple[str, ...]
    questions: tuple[str, ...]
    key_concepts: tuple[str, ...]
    thesis: str
    warnings: tuple[str, ...]


def build_search_boost(
    company: str, device_name: str, keywords: Iterable[str]
) -> str:
    """Company name, device name, and keywords joined by single spaces."""
    return " ".join([company, device_name, *keywords])


def _strip_label(text: str) -> str:
    m = _LABEL_RE.match(text)
    if m and m.group(1).strip().lower() in _KNOWN_LABELS:
        return text[m.end() :]
    return text


def _split_sections(raw: str) -> list[str]:
    """Split a response into the bodies of numbered sections 1..5.

    A line starts section k only when its leading ordinal equals the next
    expected section number; any other numbered line stays inside the
    current section (list items restart their own numbering).
    """
    bodies: list[list[str]] = []
    for line in raw.splitlines():
        m = _SECTION_HEADER_RE.match(line)
        if m and int(m.group(1)) == len(bodies) + 1 and len(bodies) < 5:
            bodies.append([_strip_label(m.group(2))])
        elif bodies:
            bodies[-1].append(line)
    return ["\n".join(body).strip() for body in bodies]


def _split_items(body: str, comma_fallback: bool) -> list[str]:
    items = []
    for line in body.splitlines():
        line = _ITEM_MARKER_RE.sub("", line).strip()
        if line:
            items.append(line)
    if comma_fallback and len(items) == 1 and "," in items[0]:
        items = [part.strip() for part in items[0].split(",") if part.strip()]
    return items


def parse_feature_response(raw: str, strict: bool = False) -> ParsedFeatures:
    """Parse the five numbered sections of a feature-extraction response.

    List sections are split on newline bullets/numbers, with a
    comma-splitting fallback for single-line keyword and concept
    enumerations. Item counts outside the nominal values are recorded as
    warnings while within tolerance (errors when ``strict``); counts
    outside the tolerance band always fail.
    """
    if not raw:
        raise FeatureParseError("empty feature response", missing_section="summary")

    bodies = _split_sections(raw)
    if len(bodies) < 5:
        missing = SECTION_NAMES[len(bodies)]
        raise FeatureParseError(
            f"feature response has {len(bodies)} of 5 sections; "
            f"missing {missing!r}",
            missing_section=missing,
        )

    warnings: list[str] = []
    parsed: dict[str, object] = {}
    for name, body in zip(SECTION_NAMES, bodies):
        if name in LIST_SECTION_LIMITS:
            nominal, lo, hi = LIST_SECTION_LIMITS[name]
            items = _split_items(body, comma_fallback=name != "questions")
            if not lo <= len(items) <= hi or (strict and len(items) != nominal):
                raise FeatureParseError(
                    f"section {name!r} has {len(items)} items, expected {nominal}",
                    missing_section=name,
                )
            if len(items) != nominal:
                warnings.append(
                    f"{name}: expected {nominal} items, got {len(items)}"
                )
            parsed[name] = tuple(items)
        else:
            if not body:
                raise FeatureParseError(
                    f"section {name!r} is empty", missing_section=name
                )
            parsed[name] = body

    return ParsedFeatures(
        summary=parsed["summary"],
        keywords=parsed["keywords"],
        questions=parsed["questions"],
        key_concepts=parsed["key_concepts"],
        thesis=parsed["thesis"],
        warnings=tuple(warnings),
    )


def parse_query_match_response(raw: str) -> tuple[str, str, str]:
    """Extract three search queries from a query-match response."""
    queries = []
    for line in raw.splitlines():
        line = _ITEM_MARKER_RE.sub("", _strip_label(line)).strip()
        line = line.strip("\"'")
        if line:
            queries.append(line)
    if len(queries) < 3:
        raise FeatureParseError(
            f"expected 3 search queries, found {len(queries)}",
            missing_section="query_match",
        )
    return queries[0], queries[1], queries[2]


def _prompt_with_retry(
    provider: CompletionProvider,
    prompt: str,
    attachment: str | None,
    parse: Callable[[str], object],
    retry: RetryPolicy,
) -> object:
    """Run one prompt until its response parses, per the retry policy."""
    last_raw = ""
    last_error: Exception | None = None
    for attempt in range(retry.attempts):
        try:
            last_raw = provider.send_prompt(prompt, attachment)
        except ProviderError as exc:
            last_error = exc
            if attempt + 1 < retry.attempts:
                retry.sleep(retry.backoff_s * 2**attempt)
            continue
        try:
            return parse(last_raw)
        except FeatureParseError as exc:
            last_error = exc
    if isinstance(last_error, ProviderError):
        raise last_error
    raise ExtractionError(
        f"unparseable provider response after {retry.attempts} attempts: "
        f"{last_error}",
        raw_response=last_raw,
    )


def extract_features(
    device: DeviceRecord,
    provider: CompletionProvider,
    chunk_limit: int = DEFAULT_CHUNK_LIMIT,
    strict: bool = False,
    retry: RetryPolicy = RetryPolicy(),
) -> FeatureSet:
    """Run the full prompt chain for one device and assemble its FeatureSet."""
    if not device.summary_text:
        raise ValueError(f"device {device.submission_id!r} has empty summary_text")

    chunks = chunk_document(device.summary_text, chunk_limit, device.submission_id)
    summaries = [
        _prompt_with_retry(
            provider, CHUNK_SUMMARY_PROMPT, chunk.text, _require_text, retry
        )
        for chunk in chunks
    ]
    if len(summaries) == 1:
        aggregate = summaries[0]
    else:
        aggregate = _prompt_with_retry(
            provider,
            AGGREGATE_SUMMARY_PROMPT,
            "\n\n".join(summaries),
            _require_text,
            retry,
        )

    parsed: ParsedFeatures = _prompt_with_retry(
        provider,
        FEATURE_PROMPT,
        aggregate,
        lambda raw: parse_feature_response(raw, strict=strict),
        retry,
    )

    search_boost = build_search_boost(
        device.company, device.device_name, parsed.keywords
    )

    feature_json = json.dumps(
        {
            "summary": parsed.summary,
            "keywords": list(parsed.keywords),
            "relevant_questions": list(parsed.questions),
            "thesis": parsed.thesis,
            "key_concepts": list(parsed.key_concepts),
        },
        ensure_ascii=False,
    )
    qm1, qm2, qm3 = _prompt_with_retry(
        provider, QUERY_MATCH_PROMPT, feature_json, parse_query_match_response, retry
    )

    return FeatureSet(
        device_id=device.submission_id,
        summary=parsed.summary,
        keywords=parsed.keywords,
        questions=parsed.questions,
        key_concepts=parsed.key_concepts,
        thesis=parsed.thesis,
        search_boost=search_boost,
        query_match_1=qm1,
        query_match_2=qm2,
        query_match_3=qm3,
        warnings=parsed.warnings,
    )


def _require_text(raw: str) -> str:
    if not raw.strip():
        raise FeatureParseError("provider returned empty text")
    return raw.strip()


def generate_simulated_query(
    features: FeatureSet,
    provider: CompletionProvider | None,
    retry: RetryPolicy = RetryPolicy(),
) -> str:
    """Generate one short search query for a device.

    With ``provider=None`` the deterministic fallback applies: the first two
    keywords joined by a space. Provider output is stripped of surrounding
    whitespace and quotes.
    """
    if not features.thesis or not features.key_concepts:
        raise GenerationError(
            f"device {features.device_id!r} lacks thesis or key concepts"
        )
    if provider is None:
        query = " ".join(features.keywords[:2])
        if not query:
            raise GenerationError(
                f"device {features.device_id!r} has no keywords for the "
                "fallback query"
            )
        return query

    prompt = SIMULATED_QUERY_PROMPT.format(
        thesis=features.thesis, concepts="; ".join(features.key_concepts)
    )
    raw = _prompt_with_retry(provider, prompt, None, _require_text, retry)
    query = raw.strip().strip("\"'").strip()
    if not query:
        raise GenerationError("provider returned an empty simulated query")
    return query


def feature_set_to_json(features: FeatureSet) -> dict:
    return {
        "device_id": features.device_id,
        "summary": features.summary,
        "keywords": list(features.keywords),
        "questions": list(features.questions),
        "key_concepts": list(features.key_concepts),
        "thesis": features.thesis,
        "search_boost": features.search_boost,
        "query_match_1": features.query_match_1,
        "query_match_2": features.query_match_2,
        "query_match_3": features.query_match_3,
        "warnings": list(features.warnings),
    }


def feature_set_from_json(raw: dict) -> FeatureSet:
    return FeatureSet(
        device_id=raw["device_id"],
        summary=raw["summary"],
        keywords=tuple(raw["keywords"]),
        questions=tuple(raw["questions"]),
        key_concepts=tuple(raw["key_concepts"]),
        thesis=raw["thesis"],
        search_boost=raw["search_boost"],
        query_match_1=raw["query_match_1"],
        query_match_2=raw["query_match_2"],
        query_match_3=raw["query_match_3"],
        warnings=tuple(raw.get("warnings", ())),
    )


def save_feature_sets(
    feature_sets: Iterable[FeatureSet], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for features in feature_sets:
            fh.write(json.dumps(feature_set_to_json(features), ensure_ascii=False))
            fh.write("\n")


def load_feature_sets(path: str | Path) -> dict[str, FeatureSet]:
    """Load FeatureSets keyed by device id."""
    result: dict[str, FeatureSet] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        features = feature_set_from_json(json.loads(line))
        result[features.device_id] = features
    return result
