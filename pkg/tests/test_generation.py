from __future__ import annotations

import json
from collections import Counter

import pytest

from ehrsynth.generation import (GrammarBackend, MissingPlaceholder, ParseError,
                                 PromptTemplate, RemoteLlmBackend,
                                 cohort_from_dict, cohort_to_dict,
                                 generate_bundle, generate_cohort,
                                 parse_structured_output, render_prompt,
                                 seed_reference_data, validate_templates)
from ehrsynth.generation.backends import GenerationFailed
from ehrsynth.generation.bundles import DEFAULT_COUNTS
from ehrsynth.load import verify_referential_integrity
from ehrsynth.schema import ColumnDef


class TestRenderPrompt:
    def test_no_placeholders_verbatim(self):
        template = PromptTemplate(table="allergies", template="Just emit a record.",
                                  output_spec=())
        assert render_prompt(template, {}) == "Just emit a record."

    def test_names_sampled_demographics(self, templates, schema):
        template = templates["patient_details"]
        context = {"age_years": 34, "gender": "female", "ethnicity": "asian",
                   "region": "west"}
        prompt = render_prompt(template, context, schema.table("patient_details"))
        for token in ("34", "female", "asian", "west"):
            assert token in prompt

    def test_missing_placeholder_named(self):
        template = PromptTemplate(table="diagnoses",
                                  template="Diagnose {diagnosis} now.", output_spec=())
        with pytest.raises(MissingPlaceholder) as err:
            render_prompt(template, {})
        assert err.value.name == "diagnosis"

    def test_output_instructions_cover_spec(self, templates, schema):
        template = templates["vital_signs"]
        prompt = render_prompt(template, {"age_years": 50, "visit_started_at": "x"},
                               schema.table("vital_signs"))
        for field in template.output_spec:
            assert f"- {field} (" in prompt

    def test_templates_cover_all_22_tables(self, templates, schema):
        validate_templates(templates, schema)
        assert set(templates) == set(schema.table_names)


class TestParseStructuredOutput:
    SPEC = (
        ColumnDef("height_cm", "decimal"),
        ColumnDef("age", "integer"),
        ColumnDef("gender", "enum", enum_values=("female", "male")),
    )

    def test_well_formed_block(self):
        completion = (
            "Sure, here is the record you asked for.\n"
            "```record\nheight_cm: 172 cm\nage: 40\ngender: female\n```\nThanks!"
        )
        record = parse_structured_output(completion, self.SPEC)
        assert record == {"height_cm": 172.0, "age": 40, "gender": "female"}

    def test_unit_stripped_from_decimal(self):
        completion = "```record\nheight_cm: 172 cm\nage: 1\ngender: male\n```"
        assert parse_structured_output(completion, self.SPEC)["height_cm"] == 172.0

    def test_missing_field_raises(self):
        completion = "```record\nheight_cm: 170\nage: 40\n```"
        with pytest.raises(ParseError, match="gender"):
            parse_structured_output(completion, self.SPEC)

    def test_no_block_raises(self):
        with pytest.raises(ParseError):
            parse_structured_output("no structure at all", self.SPEC)

    def test_bad_enum_raises(self):
        completion = "```record\nheight_cm: 170\nage: 40\ngender: robot\n```"
        with pytest.raises(ParseError):
            parse_structured_output(completion, self.SPEC)


class TestGrammarBackend:
    def test_pure_function_of_prompt_and_seed(self):
        backend = GrammarBackend()
        prompt = "Generate one realistic row for the allergies table.\n- allergen (text)"
        assert backend.complete(prompt, 5) == backend.complete(prompt, 5)
        assert backend.complete(prompt, 5) != backend.complete(prompt, 6)


class TestBundles:
    def test_same_seed_identical_bundles(self, schema, templates):
        backend = GrammarBackend()
        reference = seed_reference_data(schema, templates, backend, base_seed=3)
        one = generate_bundle(schema, templates, backend, 7, reference, patient_index=0)
        two = generate_bundle(schema, templates, backend, 7, reference, patient_index=0)
        assert json.dumps(cohort_rows(one), sort_keys=True, default=str) == \
            json.dumps(cohort_rows(two), sort_keys=True, default=str)

    def test_fk_closure(self, schema, small_cohort):
        assert verify_referential_integrity(small_cohort.dataset(), schema) == []

    def test_demographics_denormalized_consistently(self, small_cohort):
        for bundle in small_cohort.bundles:
            details = bundle.rows["patient_details"][0]
            for rows in bundle.rows.values():
                for row in rows:
                    if "patient_age" in row:
                        assert row["patient_age"] == details["age_years"]
                    if "patient_gender" in row:
                        assert row["patient_gender"] == details["gender"]

    def test_every_patient_table_has_rows(self, schema, small_cohort):
        reference = {"departments", "staff", "wards", "beds"}
        for bundle in small_cohort.bundles:
            for table in schema.table_names:
                if table in reference:
                    assert table not in bundle.rows
                else:
                    assert len(bundle.rows[table]) >= 1, table

    def test_distinct_patient_ids(self, small_cohort):
        ids = [b.patient_id for b in small_cohort.bundles]
        assert len(set(ids)) == len(ids)

    def test_n_1_singleton(self, schema, templates):
        cohort = generate_cohort(schema, templates, GrammarBackend(), n=1, base_seed=5)
        assert len(cohort.bundles) == 1

    def test_n_below_1_rejected(self, schema, templates):
        with pytest.raises(ValueError):
            generate_cohort(schema, templates, GrammarBackend(), n=0, base_seed=5)

    def test_workers_do_not_change_bytes(self, schema, templates):
        backend = GrammarBackend()
        serial = generate_cohort(schema, templates, backend, n=4, base_seed=9, workers=1)
        threaded = generate_cohort(schema, templates, backend, n=4, base_seed=9, workers=3)
        assert json.dumps(cohort_to_dict(serial)) == json.dumps(cohort_to_dict(threaded))

    def test_cohort_json_round_trip(self, schema, small_cohort):
        data = json.loads(json.dumps(cohort_to_dict(small_cohort)))
        restored = cohort_from_dict(data, schema)
        assert cohort_to_dict(restored) == cohort_to_dict(small_cohort)

    def test_provenance_per_row(self, small_cohort):
        bundle = small_cohort.bundles[0]
        for table, rows in bundle.rows.items():
            assert len(bundle.provenance[table]) == len(rows)
            for prov in bundle.provenance[table]:
                assert prov["backend"] == "grammar"
                assert isinstance(prov["seed"], int)


def cohort_rows(bundle):
    return {t: [list(map(str, r.values())) for r in rows] for t, rows in bundle.rows.items()}


class TestCohortMarginals:
    def test_gender_frequencies_near_uniform(self, schema, templates):
        cohort = generate_cohort(schema, templates, GrammarBackend(), n=200, base_seed=17)
        genders = Counter(b.rows["patient_details"][0]["gender"] for b in cohort.bundles)
        for gender in ("female", "male", "nonbinary", "unknown"):
            frequency = genders[gender] / 200
            assert abs(frequency - 0.25) <= 0.10, (gender, frequency)


class _FlakySession:
    """Always times out, to exercise the transport retry bound."""

    def __init__(self):
        self.calls = 0

    def post(self, *args, **kwargs):
        self.calls += 1
        import requests

        raise requests.ConnectionError("boom")


class TestRemoteBackend:
    def test_transport_retry_bound(self):
        from ehrsynth.wire import JsonHttpClient, ScorerError

        session = _FlakySession()
        client = JsonHttpClient("http://127.0.0.1:1", retry_limit=2, session=session)
        backend = RemoteLlmBackend(client=client)
        with pytest.raises(ScorerError):
            backend.complete("prompt", 1)
        assert session.calls == 3  # retry_limit + 1

    def test_retry_exhaustion_is_generation_failed(self, schema, templates):
        class NoParseBackend:
            id = "noparse"

            def complete(self, prompt, seed, max_len=2048):
                return "I have no structure."

        with pytest.raises(GenerationFailed) as err:
            seed_reference_data(schema, templates, NoParseBackend(), base_seed=1)
        assert err.value.table == "departments"

    def test_parse_retries_reprompt_with_offset(self, schema, templates):
        from ehrsynth.generation.bundles import RETRY_SEED_OFFSET

        seeds = []
        grammar = GrammarBackend()

        class FlakyParseBackend:
            id = "flaky"

            def complete(self, prompt, seed, max_len=2048):
                seeds.append(seed)
                if len(seeds) < 3:
                    return "garbage"
                return grammar.complete(prompt, seed, max_len)

        reference = seed_reference_data(schema, templates, FlakyParseBackend(),
                                        base_seed=1)
        assert reference["departments"]
        assert seeds[1] - seeds[0] == RETRY_SEED_OFFSET
        assert seeds[2] - seeds[1] == RETRY_SEED_OFFSET
