"""Completion and embedding providers.

The deterministic provider synthesizes well-formed responses for the whole
extraction prompt chain from the attached document text alone, so fixtures,
tests, and offline runs exercise the real pipeline end to end. The HTTP
adapters speak the common JSON chat-completion and embedding wire formats
and are configured via environment variables.
"""

from __future__ import annotations

import json
import os
import re
from collections import Counter

import httpx
import numpy as np

from . import extraction
from .embedding import EMBEDDING_DIM
from .errors import ProviderError

_STOPWORDS = {
    "a", "an", "and", "are", "as", "at", "be", "by", "for", "from", "has",
    "in", "is", "it", "its", "of", "on", "or", "that", "the", "this", "to",
    "was", "were", "with",
}

_SENTENCE_RE = re.compile(r"[^.!?]+[.!?]?")


def _words(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def _sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_RE.findall(text) if s.strip()]


def _prose(text: str) -> str:
    """Keep synthesized prose from colliding with numbered section headers."""
    lines = []
    for line in text.splitlines():
        if extraction._SECTION_HEADER_RE.match(line):
            line = "> " + line.lstrip()
        lines.append(line)
    return "\n".join(lines)


class DeterministicFeatureProvider:
    """Offline stand-in for an LLM: same input, same output, every time.

    Responses are derived from the attachment text with simple frequency
    and sentence heuristics, formatted exactly as the response parser
    expects.
    """

    def send_prompt(self, prompt: str, attachment: str | None = None) -> str:
        if prompt == extraction.CHUNK_SUMMARY_PROMPT:
            return self._summarize(attachment or "")
        if prompt == extraction.AGGREGATE_SUMMARY_PROMPT:
            return self._summarize(attachment or "")
        if prompt == extraction.FEATURE_PROMPT:
            return self._features(attachment or "")
        if prompt == extraction.QUERY_MATCH_PROMPT:
            return self._query_matches(attachment or "")
        if prompt.startswith("You are an expert medical researcher."):
            return self._simulated_query(prompt)
        raise ProviderError(f"unrecognized prompt: {prompt[:60]!r}...")

    def _summarize(self, text: str) -> str:
        sentences = _sentences(text) or ["No content."]
        first = " ".join(sentences[: max(1, len(sentences) // 2)][:4])
        second = " ".join(sentences[len(sentences) // 2 :][:4]) or sentences[-1]
        return f"{_prose(first)}\n\n{_prose(second)}"

    def _top_terms(self, text: str, count: int) -> list[str]:
        counts = Counter(
            w for w in _words(text) if len(w) >= 4 and w not in _STOPWORDS
        )
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        terms = [term for term, _ in ranked[:count]]
        filler = 1
        while len(terms) < count:  # degenerate inputs still get 10 keywords
            terms.append(f"term{filler}")
            filler += 1
        return terms

    def _features(self, summary: str) -> str:
        summary = summary.strip() or "No content."
        keywords = self._top_terms(summary, 10)
        sentences = _sentences(summary) or ["No content."]
        thesis = " ".join(sentences[:2])
        questions = [
            f"What clinical evidence supports the use of {kw}?"
            for kw in keywords[:5]
        ]
        concepts = [f"{kw} assessment" for kw in keywords[:5]]
        lines = [f"1. Summary: {_prose(summary)}", "", "2. Keywords:"]
        lines += [f"- {kw}" for kw in keywords]
        lines.append("3. Questions:")
        lines += [f"- {q}" for q in questions]
        lines.append("4. Key concepts:")
        lines += [f"- {c}" for c in concepts]
        lines.append(f"5. Thesis: {_prose(thesis)}")
        return "\n".join(lines)

    def _query_matches(self, feature_json: str) -> str:
        try:
            features = json.loads(feature_json)
            keywords = [str(k) for k in features.get("keywords", [])]
        except json.JSONDecodeError:
            keywords = []
        keywords = (keywords + [f"term{i}" for i in range(1, 7)])[:6]
        return "\n".join(
            [
                f"1. {keywords[0]} {keywords[1]}",
                f"2. {keywords[2]} {keywords[3]} device",
                f"3. {keywords[4]} {keywords[5]} evaluation",
            ]
        )

    def _simulated_query(self, prompt: str) -> str:
        m = re.search(r'Thesis: "(.*?)"\n', prompt, flags=re.DOTALL)
        words = _words(m.group(1))[:3] if m else []
        return " ".join(words) or "medical device"


class ScriptedProvider:
    """Returns canned responses in order; raises when the script runs dry."""

    def __init__(self, responses: list[str]):
        self._responses = list(responses)
        self.calls: list[tuple[str, str | None]] = []

    def send_prompt(self, prompt: str, attachment: str | None = None) -> str:
        self.calls.append((prompt, attachment))
        if not self._responses:
            raise ProviderError("scripted provider has no responses left")
        return self._responses.pop(0)


ENV_API_BASE = "DEVICESEARCH_API_BASE"
ENV_API_KEY = "DEVICESEARCH_API_KEY"
ENV_COMPLETION_MODEL = "DEVICESEARCH_COMPLETION_MODEL"
ENV_EMBEDDING_MODEL = "DEVICESEARCH_EMBEDDING_MODEL"
ENV_EMBEDDING_PREFIX = "DEVICESEARCH_EMBEDDING_PREFIX"


def _require_env(name: str) -> str:
    value = os.environ.get(name)
    if not value:
        raise ProviderError(f"environment variable {name} is not set")
    return value


class HttpCompletionProvider:
    """Chat-completion client for OpenAI-style JSON endpoints."""

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model: str,
        timeout_s: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.model = model
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout_s,
            transport=transport,
        )

    @classmethod
    def from_env(cls) -> "HttpCompletionProvider":
        return cls(
            base_url=_require_env(ENV_API_BASE),
            api_key=_require_env(ENV_API_KEY),
            model=_require_env(ENV_COMPLETION_MODEL),
        )

    def send_prompt(self, prompt: str, attachment: str | None = None) -> str:
        content = prompt if attachment is None else f"{prompt}\n\n{attachment}"
        try:
            response = self._client.post(
                "/chat/completions",
                json={
                    "model": self.model,
                    "messages": [{"role": "user", "content": content}],
                    "temperature": 0,
                },
            )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"completion request failed: {exc}") from exc


class HttpEmbeddingProvider:
    """Embedding client: text in, 384-float array out.

    Some embedding models expect a query/passage prefix; that is adapter
    configuration here (``text_prefix``), not part of the provider
    contract.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str,
        model: str,
        timeout_s: float = 60.0,
        text_prefix: str = "",
        transport: httpx.BaseTransport | None = None,
    ):
        self.model = model
        self.text_prefix = text_prefix
        self._client = httpx.Client(
            base_url=base_url.rstrip("/"),
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout_s,
            transport=transport,
        )

    @classmethod
    def from_env(cls) -> "HttpEmbeddingProvider":
        return cls(
            base_url=_require_env(ENV_API_BASE),
            api_key=_require_env(ENV_API_KEY),
            model=_require_env(ENV_EMBEDDING_MODEL),
            text_prefix=os.environ.get(ENV_EMBEDDING_PREFIX, ""),
        )

    def embed(self, text: str) -> np.ndarray:
        try:
            response = self._client.post(
                "/embeddings",
                json={"model": self.model, "input": self.text_prefix + text},
            )
            response.raise_for_status()
            values = response.json()["data"][0]["embedding"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        vector = np.asarray(values, dtype=np.float64)
        if vector.shape != (EMBEDDING_DIM,):
            raise ProviderError(
                f"embedding endpoint returned {vector.shape}, "
                f"expected ({EMBEDDING_DIM},)"
            )
        return vector
