import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from devicesearch.errors import (
    ExtractionError,
    FeatureParseError,
    GenerationError,
    ProviderError,
)
from devicesearch.extraction import (
    RetryPolicy,
    build_search_boost,
    extract_features,
    generate_simulated_query,
    parse_feature_response,
    parse_query_match_response,
)
from devicesearch.providers import DeterministicFeatureProvider, ScriptedProvider

from .conftest import make_device, make_feature_set

CANONICAL_RESPONSE = """1. Summary: The device analyzes cardiac MRI studies.

It flags segmentation candidates for review.

2. Keywords:
- cardiac
- mri
- segmentation
- ventricle
- perfusion
- gating
- contrast
- myocardium
- stenosis
- workflow
3. Questions:
- How was the algorithm validated?
- What patient population was studied?
- How does it handle motion artifacts?
- What is the false positive rate?
- How is output integrated into PACS?
4. Key concepts:
- cardiac segmentation
- mri acquisition
- perfusion analysis
- validation cohort
- clinical workflow
5. Thesis: The device segments cardiac MRI automatically. It supports perfusion assessment.
"""

NO_RETRY = RetryPolicy(attempts=3, backoff_s=0.0, sleep=lambda _: None)


class TestParseFeatureResponse:
    def test_canonical_response_parses_fully(self):
        parsed = parse_feature_response(CANONICAL_RESPONSE)
        assert parsed.summary.startswith("The device analyzes cardiac MRI")
        assert len(parsed.keywords) == 10
        assert parsed.keywords[0] == "cardiac"
        assert len(parsed.questions) == 5
        assert len(parsed.key_concepts) == 5
        assert parsed.thesis.startswith("The device segments cardiac MRI")
        assert parsed.warnings == ()

    def test_missing_section_five_names_thesis(self):
        truncated = CANONICAL_RESPONSE.split("5. Thesis:")[0]
        with pytest.raises(FeatureParseError) as exc_info:
            parse_feature_response(truncated)
        assert exc_info.value.missing_section == "thesis"
        assert "thesis" in str(exc_info.value)

    def test_comma_style_keywords_fallback(self):
        response = (
            "1. Summary: text\n"
            "2. 1. cardiac, mri, gating\n"
            "3. - a question?\n"
            "4. - a concept\n"
            "5. Thesis: a thesis."
        )
        parsed = parse_feature_response(response)
        assert parsed.keywords == ("cardiac", "mri", "gating")

    def test_count_deviation_warns_but_parses(self):
        parsed = parse_feature_response(
            "1. Summary: text\n"
            "2. - cardiac\n- mri\n- gating\n"
            "3. - only question?\n"
            "4. - only concept\n"
            "5. Thesis: a thesis."
        )
        assert parsed.keywords == ("cardiac", "mri", "gating")
        assert any("keywords: expected 10 items, got 3" in w for w in parsed.warnings)

    def test_strict_mode_rejects_count_deviation(self):
        with pytest.raises(FeatureParseError, match="keywords"):
            parse_feature_response(
                "1. Summary: text\n"
                "2. - cardiac\n- mri\n"
                "3. - q?\n"
                "4. - c\n"
                "5. Thesis: t.",
                strict=True,
            )

    def test_count_outside_tolerance_fails(self):
        too_many = "\n".join(f"- kw{i}" for i in range(25))
        with pytest.raises(FeatureParseError, match="keywords"):
            parse_feature_response(
                f"1. Summary: text\n2. {too_many}\n3. - q?\n4. - c\n5. Thesis: t."
            )

    def test_empty_response_fails(self):
        with pytest.raises(FeatureParseError):
            parse_feature_response("")

    def test_numbered_list_items_inside_section_kept(self):
        # Item numbering restarts at 1 and must not end the section.
        response = (
            "1. Summary: text\n"
            "2. Keywords:\n1. cardiac\n2. mri\n"
            "3. Questions:\n- q?\n"
            "4. Key concepts:\n- c\n"
            "5. Thesis: t."
        )
        parsed = parse_feature_response(response)
        assert parsed.keywords == ("cardiac", "mri")

    @given(st.text(max_size=300))
    @settings(max_examples=200, deadline=None)
    def test_parser_is_total(self, raw):
        # Arbitrary text either parses or raises a structured parse error.
        try:
            parsed = parse_feature_response(raw)
        except FeatureParseError as exc:
            assert exc.missing_section in (
                "summary", "keywords", "questions", "key_concepts", "thesis",
            )
        else:
            assert parsed.summary and parsed.thesis


class TestSearchBoost:
    def test_documented_concatenation(self):
        assert (
            build_search_boost("Acme", "HeartSeg", ["cardiac", "mri"])
            == "Acme HeartSeg cardiac mri"
        )

    def test_pure_function_of_inputs(self, small_pipeline):
        for features in small_pipeline["features"].values():
            device = small_pipeline["corpus"].get(features.device_id)
            assert features.search_boost == build_search_boost(
                device.company, device.device_name, features.keywords
            )


class TestExtractFeatures:
    def test_mock_round_trip_counts(self):
        device = make_device("K1", summary_text="Cardiac MRI segmentation. " * 40)
        features = extract_features(device, DeterministicFeatureProvider())
        assert features.device_id == "K1"
        assert len(features.keywords) == 10
        assert len(features.questions) == 5
        assert len(features.key_concepts) == 5
        assert features.thesis
        assert features.query_match_1 and features.query_match_2
        assert features.warnings == ()

    def test_deterministic_provider_is_referentially_transparent(self):
        device = make_device("K1", summary_text="Renal lesion detection study. " * 30)
        first = extract_features(device, DeterministicFeatureProvider())
        second = extract_features(device, DeterministicFeatureProvider())
        assert first == second

    def test_unparseable_after_retries_preserves_raw(self):
        provider = ScriptedProvider(
            ["chunk summary", "I cannot help", "I cannot help", "I cannot help"]
        )
        device = make_device("K1", summary_text="some text")
        with pytest.raises(ExtractionError) as exc_info:
            extract_features(device, provider, retry=NO_RETRY)
        assert exc_info.value.raw_response == "I cannot help"

    def test_transport_failures_back_off_then_succeed(self):
        class FlakyProvider:
            def __init__(self):
                self.failures = 2

            def send_prompt(self, prompt, attachment=None):
                if self.failures > 0:
                    self.failures -= 1
                    raise ProviderError("connection reset")
                return DeterministicFeatureProvider().send_prompt(
                    prompt, attachment
                )

        sleeps = []
        retry = RetryPolicy(attempts=3, backoff_s=1.0, sleep=sleeps.append)
        device = make_device("K1", summary_text="Cardiac study text. " * 10)
        features = extract_features(device, FlakyProvider(), retry=retry)
        assert len(features.keywords) == 10
        assert sleeps == [1.0, 2.0]  # exponential from 1s

    def test_transport_failure_exhausts_retries(self):
        class DeadProvider:
            def send_prompt(self, prompt, attachment=None):
                raise ProviderError("unreachable")

        device = make_device("K1", summary_text="text")
        with pytest.raises(ProviderError):
            extract_features(device, DeadProvider(), retry=NO_RETRY)

    def test_empty_summary_text_rejected(self):
        device = make_device("K1", summary_text="")
        with pytest.raises(ValueError):
            extract_features(device, DeterministicFeatureProvider())

    def test_multi_chunk_document_goes_through_aggregate(self):
        provider = DeterministicFeatureProvider()
        text = ("Paragraph one sentence. " * 20 + "\n\n") * 3
        device = make_device("K1", summary_text=text)
        features = extract_features(device, provider, chunk_limit=300)
        assert len(features.keywords) == 10


class TestQueryMatchParsing:
    def test_three_numbered_queries(self):
        qm = parse_query_match_response(
            '1. "cardiac mri segmentation"\n2. heart imaging ai\n3. lv function tool'
        )
        assert qm == (
            "cardiac mri segmentation",
            "heart imaging ai",
            "lv function tool",
        )

    def test_fewer_than_three_fails(self):
        with pytest.raises(FeatureParseError):
            parse_query_match_response("1. only one query")


class TestGenerateSimulatedQuery:
    def test_provider_passthrough(self):
        features = make_feature_set("K1")
        provider = ScriptedProvider(["coronary stenosis detection"])
        assert (
            generate_simulated_query(features, provider)
            == "coronary stenosis detection"
        )

    def test_deterministic_fallback_joins_first_two_keywords(self):
        features = make_feature_set(
            "K1", keywords=("pneumothorax", "radiograph", "chest")
        )
        assert generate_simulated_query(features, None) == "pneumothorax radiograph"

    def test_quotes_and_whitespace_stripped(self):
        features = make_feature_set("K1")
        provider = ScriptedProvider(['  "lung nodule"  '])
        assert generate_simulated_query(features, provider) == "lung nodule"

    def test_empty_response_is_generation_error(self):
        features = make_feature_set("K1")
        provider = ScriptedProvider(["", "", ""])
        with pytest.raises((GenerationError, ExtractionError)):
            generate_simulated_query(features, provider, retry=NO_RETRY)

    def test_requires_thesis_and_concepts(self):
        features = make_feature_set("K1", thesis="")
        with pytest.raises(GenerationError):
            generate_simulated_query(features, None)
