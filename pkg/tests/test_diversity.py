from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from ehrsynth.diversity import (ColumnSpec, EmptyCounts, EmptyExpected,
                                UnknownColumn, age_band, category_coverage,
                                diversity_report, shannon_index)


class TestShannonIndex:
    def test_uniform_equals_ln_k(self):
        assert shannon_index([5, 5, 5, 5]) == pytest.approx(math.log(4), abs=1e-12)

    def test_single_category_zero(self):
        assert shannon_index([7]) == 0.0

    def test_one_three_hand_arithmetic(self):
        assert shannon_index([1, 3]) == pytest.approx(0.562335, abs=1e-6)

    def test_zero_counts_skipped(self):
        assert shannon_index([2, 0, 2]) == pytest.approx(math.log(2))

    def test_empty_raises(self):
        with pytest.raises(EmptyCounts):
            shannon_index([])
        with pytest.raises(EmptyCounts):
            shannon_index([0, 0])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            shannon_index([3, -1])

    @given(st.lists(st.integers(1, 500), min_size=1, max_size=12))
    def test_bounded_by_ln_k_with_equality_iff_uniform(self, counts):
        h = shannon_index(counts)
        k = len(counts)
        assert -1e-12 <= h <= math.log(k) + 1e-12
        if len(set(counts)) == 1:
            assert h == pytest.approx(math.log(k), abs=1e-9)

    @given(st.lists(st.integers(1, 100), min_size=1, max_size=10),
           st.integers(2, 9))
    def test_invariant_under_scaling_and_permutation(self, counts, factor):
        h = shannon_index(counts)
        assert shannon_index([c * factor for c in counts]) == pytest.approx(h, abs=1e-12)
        assert shannon_index(list(reversed(counts))) == pytest.approx(h, abs=1e-12)


class TestCoverage:
    def test_full(self):
        assert category_coverage({"a", "b"}, {"a", "b"}) == 1.0

    def test_none(self):
        assert category_coverage({"x"}, {"a", "b"}) == 0.0

    def test_three_of_four(self):
        observed = {"female", "male", "nonbinary"}
        expected = {"female", "male", "nonbinary", "unknown"}
        assert category_coverage(observed, expected) == 0.75

    def test_empty_expected_raises(self):
        with pytest.raises(EmptyExpected):
            category_coverage({"a"}, set())

    def test_monotone_as_rows_added(self):
        expected = {"a", "b", "c", "d"}
        seen: set[str] = set()
        last = 0.0
        for value in ("a", "a", "b", "c", "b", "d"):
            seen.add(value)
            coverage = category_coverage(seen, expected)
            assert coverage >= last
            last = coverage


class TestAgeBands:
    def test_cut_points(self):
        assert age_band(5) == "pediatric"
        assert age_band(17) == "pediatric"
        assert age_band(18) == "adult"
        assert age_band(64) == "adult"
        assert age_band(65) == "geriatric"


class TestDiversityReport:
    def test_default_columns_present(self, small_cohort):
        report = diversity_report(small_cohort.dataset())
        names = {c.name for c in report.columns}
        assert {"age", "gender", "ethnicity", "diagnoses", "treatments",
                "medications"} <= names

    def test_uniform_synthetic_counts_give_ln_k(self):
        dataset = {"diagnoses": [{"diagnosis_name": f"d{i % 4}"} for i in range(40)]}
        spec = ColumnSpec("diagnoses", "diagnoses", "diagnosis_name",
                          ("d0", "d1", "d2", "d3"))
        report = diversity_report(dataset, [spec], coverage_floor=0.8)
        assert report.columns[0].shannon == pytest.approx(math.log(4))
        assert report.columns[0].coverage == 1.0
        assert report.underrepresented == ()

    def test_missing_expected_category_listed_at_floor_1(self):
        dataset = {"patient_details": [{"ethnicity": "asian"},
                                       {"ethnicity": "white"}]}
        spec = ColumnSpec("ethnicity", "patient_details", "ethnicity",
                          ("asian", "white", "multiracial"))
        report = diversity_report(dataset, [spec], coverage_floor=1.0)
        assert report.underrepresented == ("ethnicity",)
        assert report.columns[0].coverage == pytest.approx(2 / 3)

    def test_unknown_column_raises(self):
        with pytest.raises(UnknownColumn):
            diversity_report({"t": [{"x": 1}]}, [ColumnSpec("bad", "t", "nope")])
        with pytest.raises(UnknownColumn):
            diversity_report({}, [ColumnSpec("bad", "missing_table", "x")])

    def test_age_bucketing(self):
        dataset = {"patient_details": [{"age_years": a} for a in (3, 30, 70, 40)]}
        spec = ColumnSpec("age", "patient_details", "age_years",
                          ("pediatric", "adult", "geriatric"), bucket_ages=True)
        report = diversity_report(dataset, [spec])
        assert report.columns[0].counts == {"adult": 2, "geriatric": 1, "pediatric": 1}
