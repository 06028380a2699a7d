"""One diagnosis episode end to end: pre-diagnosis, retrieval, candidate
selection, reuse or adaptation, revision and retention, with an auditable
event trace.

A session is single-threaded; the engine's case bases may be shared between
sessions, with mutations serialized by the owning store.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable, Union

from .adaptation import AdaptationCaseBase, AdaptationOutcome, adapt
from .domain import (
    AdaptationCase,
    DiagnosticCase,
    DomainError,
    Solution,
    SymptomVector,
    delta,
)
from .retrieval import (
    CaseBase,
    Decision,
    EmptyCaseBaseError,
    RetrievalResult,
    retrieve,
    reuse_decision,
)
from .rules import RuleBase, TraceEntry, prediagnose


class SessionError(DomainError):
    pass


class StateError(SessionError):
    """An operation was invoked out of state-machine order."""


class SelectionError(SessionError):
    pass


class VerdictError(SessionError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    """Tunable thresholds and retrieval policy. Defaults: reuse a retrieved
    case outright at similarity >= 0.95, reuse an adaptation case at
    delta-similarity >= 0.90, surface three candidates."""

    tau_reuse: float = 0.95
    tau_adapt: float = 0.90
    k: int = 3
    include_failed_cases: bool = False
    influential: frozenset[int] | None = None

    def __post_init__(self) -> None:
        for name in ("tau_reuse", "tau_adapt"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise SessionError(f"{name} must be in [0,1], got {v}")
        if self.k < 1:
            raise SessionError(f"k must be positive, got {self.k}")
        if self.influential is not None:
            object.__setattr__(self, "influential", frozenset(self.influential))


class SessionState(enum.Enum):
    NEW = "new"
    AWAITING_SELECTION = "awaiting_selection"
    SOLVED = "solved"
    REVISED = "revised"
    RETAINED = "retained"


@dataclass(frozen=True)
class PreDiagnosisProv:
    trace: tuple[TraceEntry, ...]

    kind = "prediagnosis"


@dataclass(frozen=True)
class DirectReuseProv:
    case_id: int
    score: float

    kind = "direct_reuse"


@dataclass(frozen=True)
class AdaptedProv:
    outcome: AdaptationOutcome
    source_case_id: int
    score: float

    kind = "adapted"


@dataclass(frozen=True)
class UndeterminedProv:
    """Nothing to go on: no conclusive rule fired and the case base was
    empty. The session is flagged for manual diagnosis via revision."""

    reason: str

    kind = "undetermined"


Provenance = Union[PreDiagnosisProv, DirectReuseProv, AdaptedProv, UndeterminedProv]


@dataclass(frozen=True)
class Verdict:
    """User assessment of the proposed solution. A repair replaces the
    solution and forces the recorded outcome to success."""

    success: bool
    repaired_solution: Solution | None = None

    def __post_init__(self) -> None:
        if self.repaired_solution is not None and self.repaired_solution.is_empty:
            raise VerdictError("a repaired solution must be non-empty")


@dataclass(frozen=True)
class RetentionRecord:
    retained_case: DiagnosticCase | None
    retained_adaptation: AdaptationCase | None
    notes: tuple[str, ...] = ()


_session_counter = itertools.count(1)


@dataclass
class Session:
    session_id: int
    query: SymptomVector
    state: SessionState = SessionState.NEW
    candidates: RetrievalResult | None = None
    selected_case_id: int | None = None
    proposed: Solution | None = None
    provenance: Provenance | None = None
    verdict: Verdict | None = None
    final_solution: Solution | None = None
    recorded_success: bool | None = None
    retention: RetentionRecord | None = None
    events: list[dict] = field(default_factory=list)

    def log(self, step: str, **detail) -> None:
        self.events.append({"step": step, **detail})

    def retrieval_event_count(self) -> int:
        return sum(1 for e in self.events if e["step"] == "retrieval")


def _solution_brief(s: Solution | None) -> dict:
    if s is None:
        return {"primary": None, "differentials": []}
    return {
        "primary": s.primary.value if s.primary else None,
        "differentials": [d.value for d in s.differentials],
    }


class Engine:
    """Binds the catalog, bases, rules and configuration, and drives
    sessions through the pipeline."""

    def __init__(
        self,
        catalog,
        casebase: CaseBase,
        acb: AdaptationCaseBase,
        rulebase: RuleBase,
        config: EngineConfig = EngineConfig(),
    ):
        self.catalog = catalog
        self.casebase = casebase
        self.acb = acb
        self.rulebase = rulebase
        self.config = config

    @property
    def influential(self) -> frozenset[int]:
        """Influential-symptom resolution order: explicit config override,
        then catalog flags, then the symptoms referenced by adaptation rules."""
        if self.config.influential is not None:
            return self.config.influential
        flagged = self.catalog.influential_ids
        if flagged:
            return flagged
        return self.rulebase.referenced_symptoms

    # -- pipeline -----------------------------------------------------------

    def start_session(self, query: SymptomVector, *, interactive: bool = False) -> Session:
        """Run pre-diagnosis and retrieval. Non-interactive sessions select
        the top candidate automatically and come back Solved; interactive
        ones stop at AwaitingSelection so the caller can choose."""
        if len(query) != self.catalog.size:
            raise SessionError(
                f"query length {len(query)} != catalog size {self.catalog.size}"
            )
        session = Session(session_id=next(_session_counter), query=query)
        pre = prediagnose(self.rulebase, query)
        session.log(
            "prediagnosis",
            fired=[e.rule_id for e in pre.trace],
            conclusive=pre.solution is not None,
        )
        if pre.solution is not None:
            session.proposed = pre.solution
            session.provenance = PreDiagnosisProv(pre.trace)
            session.state = SessionState.SOLVED
            session.log("solved", provenance="prediagnosis", solution=_solution_brief(pre.solution))
            return session

        try:
            result = retrieve(
                self.casebase,
                query,
                self.config.k,
                include_failures=self.config.include_failed_cases,
            )
        except EmptyCaseBaseError:
            session.proposed = Solution()
            session.provenance = UndeterminedProv("empty case base and no conclusive rule fired")
            session.state = SessionState.SOLVED
            session.log("undetermined", reason="empty case base; manual diagnosis required")
            return session

        session.candidates = result
        session.state = SessionState.AWAITING_SELECTION
        session.log("retrieval", ranked=[[cid, score] for cid, score in result.ranked], k=result.k)
        if interactive:
            return session
        return self.select(session, 1)

    def diagnose(self, query: SymptomVector) -> Session:
        """Batch entry point: full pipeline with rank-1 auto-selection."""
        return self.start_session(query, interactive=False)

    def select(self, session: Session, choice: int) -> Session:
        """Resolve the session against the candidate at the given rank."""
        if session.state is not SessionState.AWAITING_SELECTION:
            raise StateError(f"select requires an awaiting-selection session, not {session.state.value}")
        assert session.candidates is not None
        try:
            case_id, score = session.candidates.at_rank(choice)
        except DomainError:
            raise SelectionError(
                f"choice {choice} outside 1..{len(session.candidates)}"
            ) from None
        session.selected_case_id = case_id
        session.log("selection", rank=choice, case_id=case_id, score=score)
        case = self.casebase.get(case_id)

        if case.solution.is_empty:
            # Only reachable when failed cases are let into retrieval.
            session.proposed = Solution()
            session.provenance = UndeterminedProv(f"selected case {case_id} has no solution")
            session.state = SessionState.SOLVED
            session.log("undetermined", reason=f"case {case_id} carries no solution")
            return session

        decision = reuse_decision(score, self.config.tau_reuse)
        session.log("reuse_decision", decision=decision.value, score=score, tau_reuse=self.config.tau_reuse)
        if decision is Decision.REUSE:
            session.proposed = case.solution
            session.provenance = DirectReuseProv(case_id, score)
            session.state = SessionState.SOLVED
            session.log("solved", provenance="direct_reuse", solution=_solution_brief(case.solution))
            return session

        dv = delta(session.query, case.description)
        outcome = adapt(dv, case.solution, self.acb, self.rulebase, self.config.tau_adapt, self.influential)
        session.proposed = outcome.s2
        session.provenance = AdaptedProv(outcome, case_id, score)
        session.state = SessionState.SOLVED
        session.log(
            "adaptation",
            source_case_id=case_id,
            provenance=outcome.provenance.kind,
            changed=[int(i) for i in dv.changed_ids()],
            undetermined=outcome.undetermined,
            solution=_solution_brief(outcome.s2),
        )
        return session

    def revise(self, session: Session, verdict: Verdict) -> Session:
        """Record the user's assessment; a repair replaces the solution and
        is assumed successful."""
        if session.state is not SessionState.SOLVED:
            raise StateError(f"revise requires a solved session, not {session.state.value}")
        assert session.proposed is not None
        if verdict.repaired_solution is not None:
            final, success = verdict.repaired_solution, True
        else:
            final, success = session.proposed, verdict.success
        if success and final.is_empty:
            raise VerdictError(
                "a success verdict needs a non-empty solution; repair the undetermined diagnosis"
            )
        session.verdict = verdict
        session.final_solution = final
        session.recorded_success = success
        session.state = SessionState.REVISED
        session.log(
            "revision",
            success=success,
            repaired=verdict.repaired_solution is not None,
            solution=_solution_brief(final),
        )
        return session

    def retain(
        self,
        session: Session,
        retain_diag: bool,
        retain_adapt: bool,
        *,
        case_writer: Callable[[DiagnosticCase], DiagnosticCase] | None = None,
        adaptation_writer: Callable[[AdaptationCase], AdaptationCase] | None = None,
    ) -> Session:
        """Grow the knowledge bases from this episode. The optional writers
        persist records and return them with store-assigned ids; without
        writers the in-memory bases assign ids themselves."""
        if session.state is not SessionState.REVISED:
            raise StateError(f"retain requires a revised session, not {session.state.value}")
        assert session.final_solution is not None and session.recorded_success is not None
        notes: list[str] = []
        retained_case = None
        retained_adaptation = None

        if retain_diag:
            if session.final_solution.is_empty and session.recorded_success:
                raise SessionError("cannot retain a successful case without a solution")
            case = DiagnosticCase(
                case_id=None,
                description=session.query,
                solution=session.final_solution,
                success=session.recorded_success,
            )
            if case_writer is not None:
                retained_case = case_writer(case)
            else:
                retained_case = DiagnosticCase(
                    self.casebase.next_id(), case.description, case.solution, case.success
                )
            self.casebase.add(retained_case)

        if retain_adapt:
            prov = session.provenance
            if isinstance(prov, AdaptedProv):
                acase = AdaptationCase(
                    case_id=None,
                    delta=prov.outcome.delta_used,
                    s1=prov.outcome.s1_used,
                    s2=session.final_solution,
                )
                if adaptation_writer is not None:
                    retained_adaptation = adaptation_writer(acase)
                else:
                    retained_adaptation = AdaptationCase(
                        self.acb.next_id(), acase.delta, acase.s1, acase.s2
                    )
                self.acb.add(retained_adaptation)
            else:
                notes.append(
                    f"adaptation knowledge not stored: provenance is {prov.kind}, not adapted"
                )

        session.retention = RetentionRecord(retained_case, retained_adaptation, tuple(notes))
        session.state = SessionState.RETAINED
        session.log(
            "retention",
            retained_case_id=retained_case.case_id if retained_case else None,
            retained_adaptation_id=retained_adaptation.case_id if retained_adaptation else None,
            notes=notes,
        )
        return session
