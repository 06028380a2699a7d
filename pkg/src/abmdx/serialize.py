"""JSON codecs for sessions and their provenance, shared by the CLI session
file and the HTTP service wire format."""
from __future__ import annotations

from typing import Any

from .adaptation import AdaptationOutcome, CaseReused, RuleDerived
from .domain import Solution, parse_diagnosis
from .retrieval import RetrievalResult
from .rules import Action, ActionKind, TraceEntry
from .session import (
    AdaptedProv,
    DirectReuseProv,
    PreDiagnosisProv,
    Provenance,
    RetentionRecord,
    Session,
    SessionState,
    UndeterminedProv,
    Verdict,
)
from .store import decode_bits, decode_delta, decode_solution, encode_bits, encode_delta, encode_solution


def solution_to_dict(s: Solution | None) -> dict | None:
    if s is None:
        return None
    return {
        "primary": s.primary.value if s.primary else None,
        "differentials": [d.value for d in s.differentials],
        "text": encode_solution(s),
    }


def solution_from_dict(d: dict | None) -> Solution | None:
    if d is None:
        return None
    return decode_solution(d["text"])


def trace_to_list(trace) -> list[dict]:
    return [
        {
            "rule_id": e.rule_id,
            "action": {"kind": e.action.kind.value, "diagnosis": e.action.diagnosis.value},
            "applied": e.applied,
            "note": e.note,
        }
        for e in trace
    ]


def trace_from_list(items) -> tuple[TraceEntry, ...]:
    return tuple(
        TraceEntry(
            rule_id=i["rule_id"],
            action=Action(ActionKind(i["action"]["kind"]), parse_diagnosis(i["action"]["diagnosis"])),
            applied=i["applied"],
            note=i.get("note", ""),
        )
        for i in items
    )


def provenance_to_dict(prov: Provenance | None) -> dict | None:
    if prov is None:
        return None
    if isinstance(prov, PreDiagnosisProv):
        return {"kind": prov.kind, "trace": trace_to_list(prov.trace)}
    if isinstance(prov, DirectReuseProv):
        return {"kind": prov.kind, "case_id": prov.case_id, "score": prov.score}
    if isinstance(prov, AdaptedProv):
        outcome = prov.outcome
        inner: dict[str, Any]
        if isinstance(outcome.provenance, CaseReused):
            inner = {
                "kind": outcome.provenance.kind,
                "case_id": outcome.provenance.case_id,
                "score": outcome.provenance.score,
            }
        else:
            inner = {"kind": outcome.provenance.kind, "trace": trace_to_list(outcome.provenance.trace)}
        return {
            "kind": prov.kind,
            "source_case_id": prov.source_case_id,
            "score": prov.score,
            "outcome": {
                "s2": solution_to_dict(outcome.s2),
                "s1": solution_to_dict(outcome.s1_used),
                "delta": encode_delta(outcome.delta_used),
                "undetermined": outcome.undetermined,
                "provenance": inner,
            },
        }
    return {"kind": prov.kind, "reason": prov.reason}


def provenance_from_dict(d: dict | None) -> Provenance | None:
    if d is None:
        return None
    kind = d["kind"]
    if kind == PreDiagnosisProv.kind:
        return PreDiagnosisProv(trace_from_list(d["trace"]))
    if kind == DirectReuseProv.kind:
        return DirectReuseProv(d["case_id"], d["score"])
    if kind == AdaptedProv.kind:
        o = d["outcome"]
        inner = o["provenance"]
        if inner["kind"] == CaseReused.kind:
            inner_prov = CaseReused(inner["case_id"], inner["score"])
        else:
            inner_prov = RuleDerived(trace_from_list(inner["trace"]))
        outcome = AdaptationOutcome(
            s2=solution_from_dict(o["s2"]),
            provenance=inner_prov,
            delta_used=decode_delta(o["delta"], len(o["delta"])),
            s1_used=solution_from_dict(o["s1"]),
        )
        return AdaptedProv(outcome, d["source_case_id"], d["score"])
    return UndeterminedProv(d.get("reason", ""))


def session_to_dict(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "state": session.state.value,
        "query": encode_bits(session.query),
        "candidates": (
            {"k": session.candidates.k, "ranked": [[cid, score] for cid, score in session.candidates.ranked]}
            if session.candidates is not None
            else None
        ),
        "selected_case_id": session.selected_case_id,
        "proposed": solution_to_dict(session.proposed),
        "provenance": provenance_to_dict(session.provenance),
        "verdict": (
            {
                "success": session.verdict.success,
                "repaired": solution_to_dict(session.verdict.repaired_solution),
            }
            if session.verdict is not None
            else None
        ),
        "final_solution": solution_to_dict(session.final_solution),
        "recorded_success": session.recorded_success,
        "retention": (
            {
                "case_id": session.retention.retained_case.case_id
                if session.retention.retained_case
                else None,
                "adaptation_id": session.retention.retained_adaptation.case_id
                if session.retention.retained_adaptation
                else None,
                "notes": list(session.retention.notes),
            }
            if session.retention is not None
            else None
        ),
        "events": session.events,
    }


def session_from_dict(d: dict) -> Session:
    """Rebuild a session from its JSON form; retention records come back as
    ids only (the bases own the full cases)."""
    query = decode_bits(d["query"], len(d["query"]))
    session = Session(session_id=d["session_id"], query=query)
    session.state = SessionState(d["state"])
    if d.get("candidates"):
        session.candidates = RetrievalResult(
            ranked=tuple((int(cid), float(score)) for cid, score in d["candidates"]["ranked"]),
            k=d["candidates"]["k"],
        )
    session.selected_case_id = d.get("selected_case_id")
    session.proposed = solution_from_dict(d.get("proposed"))
    session.provenance = provenance_from_dict(d.get("provenance"))
    if d.get("verdict"):
        session.verdict = Verdict(
            success=d["verdict"]["success"],
            repaired_solution=solution_from_dict(d["verdict"].get("repaired")),
        )
    session.final_solution = solution_from_dict(d.get("final_solution"))
    session.recorded_success = d.get("recorded_success")
    session.events = list(d.get("events", []))
    return session
