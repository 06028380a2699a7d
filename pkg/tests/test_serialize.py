from __future__ import annotations

import json

import pytest

from abmdx.adaptation import AdaptationCaseBase
from abmdx.domain import Diagnosis, DiagnosticCase, Solution, SymptomVector
from abmdx.retrieval import CaseBase
from abmdx.serialize import provenance_from_dict, provenance_to_dict, session_from_dict, session_to_dict
from abmdx.session import Engine, EngineConfig, SessionState, Verdict

ABM = Diagnosis.ABM
TBM = Diagnosis.TUBERCULOUS_MENINGITIS


@pytest.fixture
def engine(catalog, rulebase):
    fever = catalog.id_of("fever")
    vomits = catalog.id_of("vomits")
    nape = catalog.id_of("nape_stiffness")
    cases = [
        DiagnosticCase(
            0,
            SymptomVector.from_present([fever, vomits, nape], catalog.size),
            Solution(TBM, (ABM,)),
            True,
        ),
    ]
    return Engine(
        catalog, CaseBase(catalog.size, cases), AdaptationCaseBase(catalog.size),
        rulebase, EngineConfig(tau_reuse=0.999),
    )


def roundtrip(session):
    data = json.loads(json.dumps(session_to_dict(session)))
    return session_from_dict(data)


def assert_equiv(a, b):
    assert a.state == b.state
    assert a.query == b.query
    assert a.proposed == b.proposed
    assert provenance_to_dict(a.provenance) == provenance_to_dict(b.provenance)
    assert a.final_solution == b.final_solution
    assert a.events == b.events


@pytest.mark.parametrize("stage", ["awaiting", "solved_prediag", "solved_adapted", "revised"])
def test_session_round_trip_each_stage(engine, catalog, stage):
    if stage == "solved_prediag":
        q = SymptomVector.from_present([catalog.id_of("csf_cloudy_aspect")], catalog.size)
    else:
        q = SymptomVector.from_present(
            [catalog.id_of("fever"), catalog.id_of("vomits"), catalog.id_of("koch_bacillus")],
            catalog.size,
        )
    session = engine.start_session(q, interactive=True)
    if stage != "awaiting" and session.state is SessionState.AWAITING_SELECTION:
        engine.select(session, 1)
    if stage == "revised":
        engine.revise(session, Verdict(success=True))
    restored = roundtrip(session)
    assert_equiv(session, restored)


def test_restored_session_continues_the_flow(engine, catalog):
    q = SymptomVector.from_present(
        [catalog.id_of("fever"), catalog.id_of("vomits")], catalog.size
    )
    session = engine.start_session(q, interactive=True)
    restored = roundtrip(session)
    engine.select(restored, 1)
    engine.revise(restored, Verdict(success=True))
    engine.retain(restored, True, False)
    assert restored.state is SessionState.RETAINED


def test_adapted_provenance_round_trip(engine, catalog):
    q = SymptomVector.from_present(
        [catalog.id_of("fever"), catalog.id_of("vomits"), catalog.id_of("nape_stiffness"),
         catalog.id_of("koch_bacillus")],
        catalog.size,
    )
    session = engine.diagnose(q)
    data = provenance_to_dict(session.provenance)
    back = provenance_from_dict(json.loads(json.dumps(data)))
    assert provenance_to_dict(back) == data
    assert back.outcome.s2 == session.provenance.outcome.s2
    assert back.outcome.delta_used == session.provenance.outcome.delta_used
