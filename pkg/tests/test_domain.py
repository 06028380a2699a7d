from __future__ import annotations

import random

import pytest

from abmdx.domain import (
    DIAGNOSES,
    CatalogMismatchError,
    Change,
    Diagnosis,
    DiagnosticCase,
    AdaptationCase,
    DomainError,
    InvalidSolutionError,
    Solution,
    Symptom,
    SymptomCatalog,
    SymptomVector,
    apply_delta,
    delta,
    parse_diagnosis,
    similarity,
    solution_equal,
)
from conftest import random_vector


class TestCatalog:
    def test_default_catalog_has_81_symptoms(self, catalog):
        assert catalog.size == 81
        assert catalog.id_of("csf_cloudy_aspect") == 15
        assert catalog.name_of(0) == "convulsions"

    def test_ids_must_be_dense(self):
        with pytest.raises(DomainError, match="dense"):
            SymptomCatalog((Symptom(0, "a"), Symptom(2, "b")))

    def test_names_must_be_unique(self):
        with pytest.raises(DomainError, match="duplicate"):
            SymptomCatalog((Symptom(0, "a"), Symptom(1, "a")))

    def test_unknown_lookups(self, tiny_catalog):
        with pytest.raises(DomainError):
            tiny_catalog.id_of("nope")
        with pytest.raises(DomainError):
            tiny_catalog.name_of(99)

    def test_empty_catalog_rejected(self):
        with pytest.raises(DomainError):
            SymptomCatalog(())


class TestDiagnosis:
    def test_nine_labels(self):
        assert len(DIAGNOSES) == 9

    @pytest.mark.parametrize("d", DIAGNOSES)
    def test_serialization_round_trips(self, d):
        assert parse_diagnosis(d.value) is d

    def test_unknown_label(self):
        with pytest.raises(DomainError):
            parse_diagnosis("Flu")


class TestSimilarity:
    def test_identity_is_one(self, rng):
        v = random_vector(rng, 81)
        assert similarity(v, v) == 1.0

    def test_total_disagreement_is_zero(self):
        a = SymptomVector((False,) * 81)
        b = SymptomVector((True,) * 81)
        assert similarity(a, b) == 0.0

    def test_single_mismatch_of_81(self):
        # brute-force position scan fixes the expected value at 80/81
        a = SymptomVector((False,) * 81)
        bits = [False] * 81
        bits[17] = True
        b = SymptomVector(tuple(bits))
        mismatches = sum(x != y for x, y in zip(a.bits, b.bits))
        assert mismatches == 1
        assert similarity(a, b) == 80 / 81

    def test_length_mismatch(self):
        with pytest.raises(CatalogMismatchError):
            similarity(SymptomVector((True,)), SymptomVector((True, False)))

    def test_matches_hamming_complement_on_random_pairs(self):
        rng = random.Random(1234)
        for _ in range(1000):
            n = rng.randint(1, 120)
            a, b = random_vector(rng, n), random_vector(rng, n)
            hamming = sum(x != y for x, y in zip(a.bits, b.bits))
            s = similarity(a, b)
            assert s == similarity(b, a)
            assert 0.0 <= s <= 1.0
            assert s == (n - hamming) / n
            assert abs(s - (1 - hamming / n)) < 1e-12
            assert (s == 1.0) == (a == b)


class TestDelta:
    def test_identity_all_same(self, rng):
        v = random_vector(rng, 81)
        assert delta(v, v).is_null

    def test_single_added(self, catalog):
        fever = catalog.id_of("fever")
        cur = SymptomVector.from_present([fever], catalog.size)
        ret = SymptomVector.from_present([], catalog.size)
        dv = delta(cur, ret)
        assert dv[fever] is Change.ADDED_IN_CURRENT
        assert all(dv[i] is Change.SAME for i in range(catalog.size) if i != fever)

    def test_antisymmetry(self, rng):
        for _ in range(50):
            a, b = random_vector(rng, 40), random_vector(rng, 40)
            assert delta(a, b) == delta(b, a).swapped()

    def test_reconstruction_round_trip(self):
        rng = random.Random(99)
        for _ in range(300):
            n = rng.randint(1, 90)
            cur, ret = random_vector(rng, n), random_vector(rng, n)
            assert apply_delta(ret, delta(cur, ret)) == cur

    def test_length_mismatch(self):
        with pytest.raises(CatalogMismatchError):
            delta(SymptomVector((True,)), SymptomVector((True, False)))


class TestSolution:
    def test_duplicate_diagnosis_rejected(self):
        with pytest.raises(InvalidSolutionError):
            Solution(Diagnosis.ABM, (Diagnosis.ABM,))
        with pytest.raises(InvalidSolutionError):
            Solution(Diagnosis.ABM, (Diagnosis.ENCEPHALITIS, Diagnosis.ENCEPHALITIS))

    def test_max_two_differentials(self):
        with pytest.raises(InvalidSolutionError):
            Solution(
                Diagnosis.ABM,
                (Diagnosis.ENCEPHALITIS, Diagnosis.BRAIN_TUMOR, Diagnosis.MENINGISM),
            )

    def test_empty_primary_forbids_differentials(self):
        with pytest.raises(InvalidSolutionError):
            Solution(None, (Diagnosis.ABM,))

    def test_empty_solution_is_undetermined(self):
        assert Solution().is_empty
        assert not Solution(Diagnosis.ABM).is_empty

    def test_equality_is_role_sensitive(self):
        a = Solution(Diagnosis.ABM, (Diagnosis.ENCEPHALITIS,))
        b = Solution(Diagnosis.ABM, (Diagnosis.ENCEPHALITIS,))
        c = Solution(Diagnosis.ENCEPHALITIS, (Diagnosis.ABM,))
        assert solution_equal(a, b)
        assert not solution_equal(a, c)
        assert solution_equal(Solution(), Solution())

    def test_equality_is_order_sensitive(self):
        a = Solution(Diagnosis.ABM, (Diagnosis.ENCEPHALITIS, Diagnosis.BRAIN_TUMOR))
        b = Solution(Diagnosis.ABM, (Diagnosis.BRAIN_TUMOR, Diagnosis.ENCEPHALITIS))
        assert not solution_equal(a, b)


class TestCases:
    def test_successful_case_needs_solution(self, rng):
        v = random_vector(rng, 10)
        with pytest.raises(InvalidSolutionError):
            DiagnosticCase(1, v, Solution(), success=True)
        DiagnosticCase(1, v, Solution(), success=False)  # allowed

    def test_adaptation_case_needs_nonempty_s1(self, rng):
        dv = delta(random_vector(rng, 10), random_vector(rng, 10))
        with pytest.raises(InvalidSolutionError):
            AdaptationCase(1, dv, Solution(), Solution(Diagnosis.ABM))


class TestSymptomVector:
    def test_from_present_range_check(self):
        with pytest.raises(CatalogMismatchError):
            SymptomVector.from_present([99], 10)

    def test_with_absent_masks(self):
        v = SymptomVector.from_present([1, 3], 5)
        assert v.with_absent([3, 4]).present_ids() == (1,)

    def test_coerces_to_bool(self):
        v = SymptomVector((1, 0, 1))
        assert v.bits == (True, False, True)
