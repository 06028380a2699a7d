from __future__ import annotations

import pytest

from abmdx.adaptation import AdaptationCaseBase, CaseReused, RuleDerived
from abmdx.domain import Diagnosis, DiagnosticCase, Solution, SymptomVector
from abmdx.retrieval import CaseBase
from abmdx.session import (
    AdaptedProv,
    DirectReuseProv,
    Engine,
    EngineConfig,
    PreDiagnosisProv,
    SelectionError,
    SessionState,
    StateError,
    UndeterminedProv,
    Verdict,
    VerdictError,
)

ABM = Diagnosis.ABM
ENC = Diagnosis.ENCEPHALITIS
TBM = Diagnosis.TUBERCULOUS_MENINGITIS
AVM = Diagnosis.ACUTE_VIRAL_MENINGITIS


@pytest.fixture
def engine(catalog, rulebase):
    """Small hand-built base: three distinctive stored cases. The reuse
    threshold is pushed to 0.999 so that any non-identical query goes down
    the adaptation path (a single differing symptom scores 80/81 here)."""
    fever = catalog.id_of("fever")
    vomits = catalog.id_of("vomits")
    nape = catalog.id_of("nape_stiffness")
    clear = catalog.id_of("csf_clear_aspect")
    cases = [
        DiagnosticCase(
            0,
            SymptomVector.from_present([fever, vomits, nape], catalog.size),
            Solution(TBM, (ABM,)),
            True,
        ),
        DiagnosticCase(
            1,
            SymptomVector.from_present([fever, clear], catalog.size),
            Solution(AVM, (ENC,)),
            True,
        ),
        DiagnosticCase(
            2,
            SymptomVector.from_present([nape], catalog.size),
            Solution(ABM, (ENC,)),
            True,
        ),
    ]
    return Engine(
        catalog,
        CaseBase(catalog.size, cases),
        AdaptationCaseBase(catalog.size),
        rulebase,
        EngineConfig(tau_reuse=0.999),
    )


def present(catalog, *names):
    return SymptomVector.from_present([catalog.id_of(n) for n in names], catalog.size)


class TestDiagnose:
    def test_prediagnosis_bypasses_retrieval(self, catalog, engine):
        session = engine.diagnose(present(catalog, "csf_cloudy_aspect", "fever"))
        assert session.state is SessionState.SOLVED
        assert isinstance(session.provenance, PreDiagnosisProv)
        assert session.proposed.primary is ABM
        assert session.retrieval_event_count() == 0

    def test_identical_query_reuses_directly(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        assert isinstance(session.provenance, DirectReuseProv)
        assert session.provenance.case_id == 0
        assert session.provenance.score == 1.0
        assert session.proposed == Solution(TBM, (ABM,))

    def test_added_koch_triggers_abm_discard(self, catalog, engine):
        # nearest case is 0 (TBM; [ABM]); koch newly present -> ABM dropped
        session = engine.diagnose(
            present(catalog, "fever", "vomits", "nape_stiffness", "koch_bacillus")
        )
        assert isinstance(session.provenance, AdaptedProv)
        assert session.provenance.source_case_id == 0
        assert isinstance(session.provenance.outcome.provenance, RuleDerived)
        assert session.proposed == Solution(TBM)

    def test_empty_base_without_prediagnosis_is_undetermined(self, catalog, rulebase):
        engine = Engine(
            catalog, CaseBase(catalog.size), AdaptationCaseBase(catalog.size), rulebase
        )
        session = engine.diagnose(present(catalog, "fever"))
        assert session.state is SessionState.SOLVED
        assert isinstance(session.provenance, UndeterminedProv)
        assert session.proposed.is_empty

    def test_query_length_checked(self, engine):
        with pytest.raises(Exception):
            engine.diagnose(SymptomVector((True, False)))


class TestSelect:
    def test_interactive_stops_at_selection(self, catalog, engine):
        session = engine.start_session(present(catalog, "fever", "vomits"), interactive=True)
        assert session.state is SessionState.AWAITING_SELECTION
        assert len(session.candidates) == 3

    def test_rank_one_matches_auto_selection(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness")
        auto = engine.diagnose(q)
        manual = engine.start_session(q, interactive=True)
        engine.select(manual, 1)
        assert manual.proposed == auto.proposed
        assert type(manual.provenance) is type(auto.provenance)

    def test_selecting_second_candidate_changes_the_delta(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness")
        session = engine.start_session(q, interactive=True)
        second_id = session.candidates.ranked[1][0]
        engine.select(session, 2)
        assert session.selected_case_id == second_id

    def test_out_of_range_choice(self, catalog, engine):
        session = engine.start_session(present(catalog, "fever"), interactive=True)
        with pytest.raises(SelectionError):
            engine.select(session, 4)

    def test_select_requires_awaiting_state(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        with pytest.raises(StateError):
            engine.select(session, 1)


class TestRevise:
    def test_success_keeps_proposed(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        engine.revise(session, Verdict(success=True))
        assert session.state is SessionState.REVISED
        assert session.final_solution == session.proposed
        assert session.recorded_success is True

    def test_repair_replaces_solution_and_forces_success(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        repair = Solution(ENC, (ABM,))
        engine.revise(session, Verdict(success=False, repaired_solution=repair))
        assert session.final_solution == repair
        assert session.recorded_success is True

    def test_failure_without_repair_is_recorded(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        engine.revise(session, Verdict(success=False))
        assert session.recorded_success is False
        assert session.final_solution == session.proposed

    def test_revise_requires_solved(self, catalog, engine):
        session = engine.start_session(present(catalog, "fever"), interactive=True)
        with pytest.raises(StateError):
            engine.revise(session, Verdict(success=True))

    def test_success_on_undetermined_needs_repair(self, catalog, rulebase):
        engine = Engine(
            catalog, CaseBase(catalog.size), AdaptationCaseBase(catalog.size), rulebase
        )
        session = engine.diagnose(present(catalog, "fever"))
        with pytest.raises(VerdictError):
            engine.revise(session, Verdict(success=True))
        engine.revise(session, Verdict(success=False, repaired_solution=Solution(AVM)))
        assert session.final_solution == Solution(AVM)

    def test_empty_repair_rejected(self):
        with pytest.raises(VerdictError):
            Verdict(success=False, repaired_solution=Solution())


class TestRetain:
    def test_retain_diag_grows_base(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness", "irritability")
        session = engine.diagnose(q)
        engine.revise(session, Verdict(success=True))
        before = len(engine.casebase)
        engine.retain(session, retain_diag=True, retain_adapt=False)
        assert len(engine.casebase) == before + 1
        new_case = session.retention.retained_case
        assert new_case.success is True
        assert new_case.description == q

    def test_retained_case_is_immediately_retrievable(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness", "irritability")
        session = engine.diagnose(q)
        engine.revise(session, Verdict(success=True))
        engine.retain(session, retain_diag=True, retain_adapt=False)
        replay = engine.diagnose(q)
        assert isinstance(replay.provenance, DirectReuseProv)
        assert replay.provenance.score == 1.0
        assert replay.provenance.case_id == session.retention.retained_case.case_id

    def test_learning_invariant_adaptation_case_reused(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness", "koch_bacillus")
        session = engine.diagnose(q)
        assert isinstance(session.provenance.outcome.provenance, RuleDerived)
        engine.revise(session, Verdict(success=True))
        engine.retain(session, retain_diag=False, retain_adapt=True)
        assert len(engine.acb) == 1

        replay = engine.diagnose(q)
        assert isinstance(replay.provenance, AdaptedProv)
        inner = replay.provenance.outcome.provenance
        assert isinstance(inner, CaseReused)
        assert inner.score == 1.0
        assert replay.proposed == session.proposed

    def test_repaired_retention_stores_success(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        engine.revise(session, Verdict(success=False, repaired_solution=Solution(ENC, (ABM,))))
        engine.retain(session, retain_diag=True, retain_adapt=False)
        assert session.retention.retained_case.success is True
        assert session.retention.retained_case.solution == Solution(ENC, (ABM,))

    def test_failed_unrepaired_case_retained_with_failure_flag(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness")
        session = engine.diagnose(q)
        engine.revise(session, Verdict(success=False))
        engine.retain(session, retain_diag=True, retain_adapt=False)
        stored = session.retention.retained_case
        assert stored.success is False
        # failed cases stay out of retrieval by default
        replay = engine.diagnose(q)
        assert replay.provenance.case_id != stored.case_id

    def test_retain_adapt_after_direct_reuse_is_noop(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        assert isinstance(session.provenance, DirectReuseProv)
        engine.revise(session, Verdict(success=True))
        engine.retain(session, retain_diag=False, retain_adapt=True)
        assert len(engine.acb) == 0
        assert session.retention.retained_adaptation is None
        assert session.retention.notes

    def test_repair_feeds_the_adaptation_case(self, catalog, engine):
        q = present(catalog, "fever", "vomits", "nape_stiffness", "koch_bacillus")
        session = engine.diagnose(q)
        repair = Solution(TBM, (ENC,))
        engine.revise(session, Verdict(success=False, repaired_solution=repair))
        engine.retain(session, retain_diag=False, retain_adapt=True)
        stored = session.retention.retained_adaptation
        assert stored.s2 == repair
        assert stored.s1 == Solution(TBM, (ABM,))

    def test_retain_requires_revised(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        with pytest.raises(StateError):
            engine.retain(session, True, True)


class TestStateMachine:
    def test_every_out_of_order_transition_rejected(self, catalog, engine):
        ops = {
            "select": lambda s: engine.select(s, 1),
            "revise": lambda s: engine.revise(s, Verdict(success=True)),
            "retain": lambda s: engine.retain(s, True, False),
        }
        allowed = {
            SessionState.AWAITING_SELECTION: {"select"},
            SessionState.SOLVED: {"revise"},
            SessionState.REVISED: {"retain"},
            SessionState.RETAINED: set(),
        }

        def fresh(state: SessionState):
            if state is SessionState.AWAITING_SELECTION:
                return engine.start_session(present(catalog, "fever", "vomits"), interactive=True)
            s = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
            if state is SessionState.SOLVED:
                return s
            engine.revise(s, Verdict(success=True))
            if state is SessionState.REVISED:
                return s
            engine.retain(s, False, False)
            return s

        for state, ok_ops in allowed.items():
            for name, op in ops.items():
                session = fresh(state)
                assert session.state is state
                if name in ok_ops:
                    op(session)
                else:
                    with pytest.raises(StateError):
                        op(session)

    def test_events_cover_every_step(self, catalog, engine):
        session = engine.diagnose(present(catalog, "fever", "vomits", "nape_stiffness"))
        engine.revise(session, Verdict(success=True))
        engine.retain(session, True, True)
        steps = [e["step"] for e in session.events]
        assert steps[0] == "prediagnosis"
        assert "retrieval" in steps
        assert "revision" in steps
        assert steps[-1] == "retention"
