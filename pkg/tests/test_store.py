from __future__ import annotations

import os
import random
import threading

import pytest

from abmdx import defaults
from abmdx.casegen import ProbabilityTable
from abmdx.domain import (
    DIAGNOSES,
    AdaptationCase,
    Change,
    DeltaVector,
    Diagnosis,
    DiagnosticCase,
    Solution,
    Symptom,
    SymptomCatalog,
)
from abmdx.store import (
    IdCollisionError,
    MissingFileError,
    Repository,
    SchemaError,
    StoreError,
    catalog_from_text,
    catalog_to_text,
    decode_bits,
    decode_delta,
    decode_solution,
    encode_bits,
    encode_delta,
    encode_solution,
    init_repository,
    load_repository,
    table_from_text,
    table_to_text,
)
from conftest import random_solution, random_vector

ABM = Diagnosis.ABM
ENC = Diagnosis.ENCEPHALITIS


@pytest.fixture
def repo(tmp_path, catalog, table):
    return init_repository(
        tmp_path / "repo",
        catalog=catalog,
        prediag_rules_text=defaults.default_prediag_rules_text(),
        adapt_rules_text=defaults.default_adapt_rules_text(),
        table=table,
    )


def random_case(rng: random.Random, case_id: int, size: int) -> DiagnosticCase:
    solution = random_solution(rng, allow_empty=True)
    return DiagnosticCase(
        case_id, random_vector(rng, size), solution, success=not solution.is_empty and rng.random() < 0.8
    )


def random_delta(rng: random.Random, size: int) -> DeltaVector:
    return DeltaVector(tuple(rng.choice(list(Change)) for _ in range(size)))


class TestScalarCodecs:
    def test_solution_text_round_trip(self, rng):
        for _ in range(200):
            s = random_solution(rng, allow_empty=True)
            assert decode_solution(encode_solution(s)) == s

    def test_bits_round_trip(self, rng):
        for _ in range(50):
            v = random_vector(rng, 81)
            assert decode_bits(encode_bits(v), 81) == v

    def test_delta_round_trip(self, rng):
        for _ in range(50):
            d = random_delta(rng, 40)
            assert decode_delta(encode_delta(d), 40) == d

    def test_bad_bits_rejected(self):
        with pytest.raises(Exception):
            decode_bits("01x", 3)
        with pytest.raises(Exception):
            decode_bits("01", 3)


class TestCatalogRoundTrip:
    def test_default_catalog(self, catalog):
        assert catalog_from_text(catalog_to_text(catalog)) == catalog

    def test_influential_flags_survive(self):
        cat = SymptomCatalog((Symptom(0, "a", True), Symptom(1, "b", False)))
        assert catalog_from_text(catalog_to_text(cat)) == cat

    def test_schema_error_carries_line(self):
        with pytest.raises(SchemaError, match="2"):
            catalog_from_text("0\ta\t0\n1\tb\tmaybe\n", path="cat")


class TestTableRoundTrip:
    def test_shipped_table(self, table, catalog):
        loaded = table_from_text(table_to_text(table), catalog.size)
        assert (loaded.priors == table.priors).all()
        assert (loaded.conditionals == table.conditionals).all()

    def test_random_tables_round_trip_exactly(self, rng):
        for _ in range(10):
            size = rng.randint(1, 12)
            weights = [rng.random() for _ in DIAGNOSES]
            total = sum(weights)
            table = ProbabilityTable.from_maps(
                size,
                {d: w / total for d, w in zip(DIAGNOSES, weights)},
                {d: [rng.random() for _ in range(size)] for d in DIAGNOSES},
            )
            loaded = table_from_text(table_to_text(table), size)
            assert (loaded.priors == table.priors).all()
            assert (loaded.conditionals == table.conditionals).all()

    def test_wrong_row_width(self):
        text = "[priors]\nABM 1.0\n[conditionals]\nABM 0.5 0.5\n"
        with pytest.raises(SchemaError, match="expected 3"):
            table_from_text(text, 3)


class TestRepository:
    def test_cases_round_trip(self, repo, catalog, rng):
        cases = [random_case(rng, i, catalog.size) for i in range(100)]
        repo.save_cases(cases)
        loaded = repo.load_cases(catalog)
        assert len(loaded) == 100
        for c in cases:
            assert loaded.get(c.case_id) == c

    def test_adaptation_cases_round_trip(self, repo, catalog, rng):
        cases = [
            AdaptationCase(i, random_delta(rng, catalog.size), random_solution(rng), random_solution(rng))
            for i in range(40)
        ]
        repo.save_adaptation_cases(cases)
        loaded = repo.load_adaptation_cases(catalog)
        assert len(loaded) == 40
        for c in cases:
            assert loaded.get(c.case_id) == c

    def test_rules_round_trip(self, repo, catalog, rulebase):
        loaded = repo.load_rules(catalog)
        assert [r.source for r in loaded.rules] == [r.source for r in rulebase.rules]

    def test_table_round_trip(self, repo, catalog, table):
        loaded = repo.load_table(catalog)
        assert (loaded.priors == table.priors).all()
        assert (loaded.conditionals == table.conditionals).all()

    def test_append_assigns_sequential_ids(self, repo, catalog, rng):
        a = repo.append_case(DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ABM), True))
        b = repo.append_case(DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ENC), True))
        assert (a.case_id, b.case_id) == (0, 1)
        repo.save_cases([DiagnosticCase(10, random_vector(rng, catalog.size), Solution(ABM), True)])
        c = repo.append_case(DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ABM), True))
        assert c.case_id == 11

    def test_append_collision_leaves_file_unchanged(self, repo, catalog, rng):
        repo.append_case(DiagnosticCase(7, random_vector(rng, catalog.size), Solution(ABM), True))
        before = repo.cases_path.read_text()
        with pytest.raises(IdCollisionError):
            repo.append_case(DiagnosticCase(7, random_vector(rng, catalog.size), Solution(ENC), True))
        assert repo.cases_path.read_text() == before

    def test_adaptation_append_and_collision(self, repo, catalog, rng):
        case = AdaptationCase(None, random_delta(rng, catalog.size), Solution(ABM), Solution(ENC))
        stored = repo.append_adaptation_case(case)
        assert stored.case_id == 0
        with pytest.raises(IdCollisionError):
            repo.append_adaptation_case(
                AdaptationCase(0, random_delta(rng, catalog.size), Solution(ABM), Solution(ENC))
            )

    def test_wrong_vector_length_names_record(self, repo, catalog):
        repo.cases_path.write_text("3|0101|ABM|1\n")
        with pytest.raises(SchemaError, match="record 3"):
            repo.load_cases(catalog)

    def test_missing_catalog_rejected(self, tmp_path):
        (tmp_path / "empty").mkdir()
        with pytest.raises(MissingFileError):
            load_repository(tmp_path / "empty")

    def test_init_refuses_overwrite(self, repo, catalog):
        with pytest.raises(StoreError, match="force"):
            init_repository(
                repo.root, catalog=catalog, prediag_rules_text="", adapt_rules_text=""
            )

    def test_interrupted_append_leaves_no_partial_record(self, repo, catalog, rng, monkeypatch):
        repo.append_case(DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ABM), True))
        before = repo.cases_path.read_text()

        real_replace = os.replace

        def exploding_replace(src, dst):
            raise OSError("injected crash before rename")

        monkeypatch.setattr(os, "replace", exploding_replace)
        with pytest.raises(OSError, match="injected"):
            repo.append_case(DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ENC), True))
        monkeypatch.setattr(os, "replace", real_replace)

        assert repo.cases_path.read_text() == before
        loaded = repo.load_cases(catalog)  # still parses cleanly
        assert len(loaded) == 1

    def test_concurrent_appends_all_land(self, repo, catalog):
        rngs = [random.Random(i) for i in range(8)]

        def worker(rng):
            for _ in range(5):
                repo.append_case(
                    DiagnosticCase(None, random_vector(rng, catalog.size), Solution(ABM), True)
                )

        threads = [threading.Thread(target=worker, args=(r,)) for r in rngs]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        loaded = repo.load_cases(catalog)
        assert len(loaded) == 40
        assert len(set(loaded.ids())) == 40


class TestReports:
    def test_save_load_report(self, repo, catalog, rulebase, table):
        from abmdx.casegen import GeneratorConfig, generate, oracle_label
        from abmdx.experiments import accuracy_experiment

        raw = generate(table, GeneratorConfig(n_cases=30, seed=1))
        pool = [
            DiagnosticCase(i, c.description, oracle_label(table, c.description), True)
            for i, c in enumerate(raw)
        ]
        report = accuracy_experiment(pool, catalog, rulebase, leave_one_out=True, sample_size=None)
        report_id = repo.save_report(report)
        assert report_id in repo.list_reports()
        loaded = repo.load_report(report_id)
        assert loaded.kind == "accuracy"
        assert loaded.metrics == report.metrics
        assert len(loaded.records) == len(report.records)

    def test_report_ids_increment(self, repo, catalog, rulebase, table):
        from abmdx.casegen import GeneratorConfig, generate, oracle_label
        from abmdx.experiments import accuracy_experiment

        raw = generate(table, GeneratorConfig(n_cases=10, seed=2))
        pool = [
            DiagnosticCase(i, c.description, oracle_label(table, c.description), True)
            for i, c in enumerate(raw)
        ]
        report = accuracy_experiment(pool, catalog, rulebase, leave_one_out=True, sample_size=None)
        first = repo.save_report(report)
        second = repo.save_report(report)
        assert first.split("-")[0] != second.split("-")[0]

    def test_missing_report(self, repo):
        with pytest.raises(MissingFileError):
            repo.load_report("9999-accuracy")
