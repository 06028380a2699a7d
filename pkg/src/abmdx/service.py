"""Session-oriented HTTP API over the engine.

Sessions live in memory with idle expiry; only retained knowledge is
persisted, through the repository. Every response carries monotonically
increasing revision counters for the two mutable bases so clients can
detect staleness. Errors come back as ``{"code", "message"}`` with a
machine-readable code.
"""
from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import defaults, experiments
from .domain import DomainError, Solution, SymptomVector, parse_diagnosis
from .serialize import session_to_dict, solution_to_dict
from .session import Engine, EngineConfig, Session, StateError, Verdict
from .store import MissingFileError, Repository, StoreError, encode_bits

DEFAULT_SESSION_TTL = 3600.0


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _bad_request(code: str, message: str) -> ApiError:
    return ApiError(400, code, message)


class CreateSessionBody(BaseModel):
    present: Optional[list[int]] = None
    vector: Optional[list[bool]] = None
    interactive: bool = True


class SelectionBody(BaseModel):
    rank: int


class RepairBody(BaseModel):
    primary: str
    differentials: list[str] = []


class VerdictBody(BaseModel):
    success: bool
    repair: Optional[RepairBody] = None


class RetainBody(BaseModel):
    retain_diag: bool = True
    retain_adapt: bool = True


class ExperimentBody(BaseModel):
    kind: str
    n_cases: int = 200
    seed: int = 0
    sample_size: Optional[int] = None
    leave_one_out: bool = True
    phases: int = 2
    phase_size: int = 20


@dataclass
class SessionEntry:
    session: Session
    created: float
    updated: float


@dataclass
class ServiceState:
    repo: Repository
    engine: Engine
    ttl: float = DEFAULT_SESSION_TTL
    sessions: dict[str, SessionEntry] = field(default_factory=dict)
    revisions: dict[str, int] = field(default_factory=lambda: {"cases": 0, "adaptation_cases": 0})
    lock: threading.Lock = field(default_factory=threading.Lock)

    def put_session(self, session: Session) -> str:
        sid = uuid.uuid4().hex
        now = time.monotonic()
        with self.lock:
            self._expire(now)
            self.sessions[sid] = SessionEntry(session, now, now)
        return sid

    def get_session(self, sid: str) -> Session:
        now = time.monotonic()
        with self.lock:
            self._expire(now)
            entry = self.sessions.get(sid)
            if entry is None:
                raise ApiError(404, "not_found", f"no session {sid} (it may have expired)")
            entry.updated = now
            return entry.session

    def _expire(self, now: float) -> None:
        stale = [sid for sid, e in self.sessions.items() if now - e.updated > self.ttl]
        for sid in stale:
            del self.sessions[sid]

    def base_sizes(self) -> dict:
        return {"cases": len(self.engine.casebase), "adaptation_cases": len(self.engine.acb)}


def build_engine(repo: Repository, config: EngineConfig) -> Engine:
    catalog = repo.load_catalog()
    rulebase = repo.load_rules(catalog)
    casebase = repo.load_cases(catalog)
    acb = repo.load_adaptation_cases(catalog)
    return Engine(catalog, casebase, acb, rulebase, config)


def create_app(
    repo: Repository,
    config: EngineConfig = EngineConfig(),
    *,
    session_ttl: float = DEFAULT_SESSION_TTL,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="abmdx", docs_url=None, redoc_url=None)
    state = ServiceState(repo=repo, engine=build_engine(repo, config), ttl=session_ttl)
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(DomainError)
    async def _domain_error(_req: Request, exc: DomainError):
        status, code = 400, "validation"
        if isinstance(exc, StateError):
            status, code = 409, "state_order"
        elif isinstance(exc, (StoreError, MissingFileError)):
            status, code = 500, "storage"
        return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

    def _query_from_body(body: CreateSessionBody) -> SymptomVector:
        size = state.engine.catalog.size
        if (body.present is None) == (body.vector is None):
            raise _bad_request("validation", "provide exactly one of 'present' or 'vector'")
        if body.present is not None:
            try:
                return SymptomVector.from_present(body.present, size)
            except DomainError as e:
                raise _bad_request("validation", str(e)) from None
        if len(body.vector) != size:
            raise _bad_request("validation", f"vector length {len(body.vector)} != catalog size {size}")
        return SymptomVector(tuple(bool(b) for b in body.vector))

    def _case_view(case) -> dict:
        return {
            "case_id": case.case_id,
            "present": [int(i) for i in case.description.present_ids()],
            "bits": encode_bits(case.description),
            "solution": solution_to_dict(case.solution),
            "success": case.success,
        }

    def _session_view(sid: str, session: Session) -> dict:
        view = session_to_dict(session)
        view["session_id"] = sid
        if session.candidates is not None:
            view["candidate_cases"] = [
                {**_case_view(state.engine.casebase.get(cid)), "rank": rank, "score": score}
                for rank, (cid, score) in enumerate(session.candidates.ranked, start=1)
            ]
        view["revisions"] = dict(state.revisions)
        view["base_sizes"] = state.base_sizes()
        return view

    def _parse_repair(repair: RepairBody | None) -> Solution | None:
        if repair is None:
            return None
        try:
            return Solution(
                parse_diagnosis(repair.primary),
                tuple(parse_diagnosis(d) for d in repair.differentials),
            )
        except DomainError as e:
            raise _bad_request("validation", str(e)) from None

    # -- session flow --------------------------------------------------------

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        query = _query_from_body(body)
        session = state.engine.start_session(query, interactive=body.interactive)
        sid = state.put_session(session)
        return _session_view(sid, session)

    @app.get("/api/sessions/{sid}")
    def get_session(sid: str):
        return _session_view(sid, state.get_session(sid))

    @app.post("/api/sessions/{sid}/selection")
    def post_selection(sid: str, body: SelectionBody):
        session = state.get_session(sid)
        try:
            state.engine.select(session, body.rank)
        except StateError:
            raise
        except DomainError as e:
            raise _bad_request("out_of_range", str(e)) from None
        return _session_view(sid, session)

    @app.post("/api/sessions/{sid}/verdict")
    def post_verdict(sid: str, body: VerdictBody):
        session = state.get_session(sid)
        verdict = Verdict(success=body.success, repaired_solution=_parse_repair(body.repair))
        state.engine.revise(session, verdict)
        return _session_view(sid, session)

    @app.post("/api/sessions/{sid}/retain")
    def post_retain(sid: str, body: RetainBody):
        session = state.get_session(sid)
        with state.lock:
            before = state.base_sizes()
        state.engine.retain(
            session,
            body.retain_diag,
            body.retain_adapt,
            case_writer=state.repo.append_case,
            adaptation_writer=state.repo.append_adaptation_case,
        )
        with state.lock:
            if session.retention.retained_case is not None:
                state.revisions["cases"] += 1
            if session.retention.retained_adaptation is not None:
                state.revisions["adaptation_cases"] += 1
            after = state.base_sizes()
        view = _session_view(sid, session)
        view["before"] = before
        view["after"] = after
        return view

    # -- read-only browsing ----------------------------------------------------

    @app.get("/api/catalog")
    def get_catalog():
        from .domain import DIAGNOSES

        return {
            "size": state.engine.catalog.size,
            "symptoms": [
                {"id": s.symptom_id, "name": s.name, "influential": s.influential}
                for s in state.engine.catalog.symptoms
            ],
            "influential": sorted(state.engine.influential),
            "diagnoses": [d.value for d in DIAGNOSES],
            "revisions": dict(state.revisions),
        }

    @app.get("/api/cases")
    def list_cases():
        return {
            "cases": [_case_view(c) for c in state.engine.casebase],
            "revisions": dict(state.revisions),
        }

    @app.get("/api/cases/{case_id}")
    def get_case(case_id: int):
        if case_id not in state.engine.casebase:
            raise ApiError(404, "not_found", f"no case {case_id}")
        return _case_view(state.engine.casebase.get(case_id))

    @app.get("/api/adaptation-cases")
    def list_adaptation_cases():
        from .store import encode_delta

        return {
            "cases": [
                {
                    "case_id": c.case_id,
                    "delta": encode_delta(c.delta),
                    "s1": solution_to_dict(c.s1),
                    "s2": solution_to_dict(c.s2),
                }
                for c in state.engine.acb
            ],
            "revisions": dict(state.revisions),
        }

    @app.get("/api/rules")
    def list_rules():
        return {
            "rules": [
                {"rule_id": r.rule_id, "kind": r.kind.value, "source": r.source, "order": r.order}
                for r in state.engine.rulebase.rules
            ]
        }

    # -- experiments -------------------------------------------------------------

    def _experiment_pool(n_cases: int, seed: int):
        from .casegen import GeneratorConfig, cull, default_cull_predicates, generate, oracle_label
        from .domain import DiagnosticCase

        catalog = state.engine.catalog
        table = state.repo.load_table(catalog)
        raw = generate(table, GeneratorConfig(n_cases=n_cases, seed=seed))
        kept, _ = cull(raw, default_cull_predicates(catalog))
        return [
            DiagnosticCase(i, c.description, oracle_label(table, c.description), True)
            for i, c in enumerate(kept)
        ]

    @app.post("/api/experiments")
    def run_experiment(body: ExperimentBody):
        catalog = state.engine.catalog
        rulebase = state.engine.rulebase
        config = state.engine.config
        if body.kind == "accuracy":
            pool = _experiment_pool(body.n_cases, body.seed)
            report = experiments.accuracy_experiment(
                pool, catalog, rulebase,
                engine_config=config,
                sample_size=body.sample_size,
                leave_one_out=body.leave_one_out,
                seed=body.seed,
            )
        elif body.kind == "robustness":
            pool = _experiment_pool(body.n_cases, body.seed)
            schedule = defaults.default_removal_schedule_ids(catalog)
            report = experiments.robustness_experiment(
                pool, catalog, rulebase, schedule,
                engine_config=config,
                sample_size=body.sample_size,
                seed=body.seed,
            )
        elif body.kind == "learning":
            pool = _experiment_pool(body.phases * body.phase_size, body.seed)
            phased = [
                pool[i * body.phase_size:(i + 1) * body.phase_size] for i in range(body.phases)
            ]
            report = experiments.learning_experiment(
                phased, catalog, rulebase, engine_config=config, seed=body.seed,
            )
        else:
            raise _bad_request("validation", f"unknown experiment kind {body.kind!r}")
        report_id = state.repo.save_report(report)
        return {"report_id": report_id, "metrics": report.metrics}

    @app.get("/api/reports")
    def list_reports():
        return {"reports": state.repo.list_reports()}

    @app.get("/api/reports/{report_id}")
    def get_report(report_id: str):
        try:
            report = state.repo.load_report(report_id)
        except MissingFileError as e:
            raise ApiError(404, "not_found", str(e)) from None
        return report.to_json_dict()

    @app.get("/api/reports/{report_id}/curve")
    def get_report_curve(report_id: str):
        path = state.repo.report_curve_path(report_id)
        if not path.exists():
            raise ApiError(404, "not_found", f"report {report_id} has no curve file")
        return PlainTextResponse(path.read_text(encoding="utf-8"), media_type="text/csv")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
