"""Command-line interface mirroring the HTTP API: repository setup, case
generation, the interactive diagnose/select/revise/retain loop (session state
carried in a JSON file between invocations), the three evaluation
experiments, and the service runner.
"""
from __future__ import annotations

import json
from pathlib import Path

import click

from . import defaults, experiments
from .casegen import GenMode, GeneratorConfig, cull, default_cull_predicates, generate, oracle_label
from .domain import DiagnosticCase, DomainError, SymptomVector
from .serialize import session_from_dict, session_to_dict
from .session import Engine, EngineConfig, Verdict
from .store import Repository, decode_solution, init_repository, load_repository

DEFAULT_SESSION_FILE = "session.json"


def _fail(message: str) -> "click.exceptions.Exit":
    click.echo(f"error: {message}", err=True)
    return click.exceptions.Exit(1)


def _engine_config(repo_root: str, config_file: str | None, tau_reuse, tau_adapt, k=None) -> EngineConfig:
    values: dict = {}
    if config_file:
        try:
            values.update(json.loads(Path(config_file).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise _fail(f"cannot read config {config_file}: {e}")
    if tau_reuse is not None:
        values["tau_reuse"] = tau_reuse
    if tau_adapt is not None:
        values["tau_adapt"] = tau_adapt
    if k is not None:
        values["k"] = k
    if "influential" in values and values["influential"] is not None:
        repo = load_repository(repo_root)
        catalog = repo.load_catalog()
        values["influential"] = frozenset(
            catalog.id_of(s) if isinstance(s, str) else int(s) for s in values["influential"]
        )
    allowed = {"tau_reuse", "tau_adapt", "k", "include_failed_cases", "influential"}
    unknown = set(values) - allowed
    if unknown:
        raise _fail(f"unknown config keys: {sorted(unknown)}")
    try:
        return EngineConfig(**values)
    except DomainError as e:
        raise _fail(str(e))


def _load_engine(repo_root: str, config: EngineConfig) -> tuple[Repository, Engine]:
    try:
        repo = load_repository(repo_root)
        catalog = repo.load_catalog()
        engine = Engine(
            catalog,
            repo.load_cases(catalog),
            repo.load_adaptation_cases(catalog),
            repo.load_rules(catalog),
            config,
        )
        return repo, engine
    except DomainError as e:
        raise _fail(str(e))


def _session_path(repo_root: str, session_file: str | None) -> Path:
    return Path(session_file) if session_file else Path(repo_root) / DEFAULT_SESSION_FILE


def _write_session(path: Path, session) -> None:
    path.write_text(json.dumps(session_to_dict(session), indent=2) + "\n", encoding="utf-8")


def _read_session(path: Path):
    if not path.exists():
        raise _fail(f"no session file at {path}; run 'diagnose' first")
    return session_from_dict(json.loads(path.read_text(encoding="utf-8")))


def _print_session(session) -> None:
    click.echo(f"session {session.session_id}: {session.state.value}")
    if session.candidates is not None and session.proposed is None:
        for rank, (cid, score) in enumerate(session.candidates.ranked, start=1):
            click.echo(f"  candidate {rank}: case {cid} (similarity {score:.4f})")
    if session.proposed is not None:
        prov = session.provenance.kind if session.provenance else "?"
        click.echo(f"  proposed: {session.proposed} [{prov}]")
    if session.final_solution is not None:
        click.echo(f"  final: {session.final_solution} (success={session.recorded_success})")


repo_option = click.option("--repo", "repo_root", required=True, type=click.Path(file_okay=False))
config_options = [
    click.option("--config", "config_file", type=click.Path(dir_okay=False, exists=True), default=None),
    click.option("--tau-reuse", type=float, default=None),
    click.option("--tau-adapt", type=float, default=None),
]


def with_config(f):
    for opt in reversed(config_options):
        f = opt(f)
    return f


@click.group()
def main() -> None:
    """Hybrid rule + case-based diagnosis support engine (synthetic demo).

    Not a medical device; all shipped data is invented.
    """


@main.command()
@click.argument("directory", type=click.Path(file_okay=False))
@click.option("--force", is_flag=True, help="overwrite an existing repository")
def init(directory: str, force: bool) -> None:
    """Scaffold a repository with the default catalog, rules and table."""
    catalog = defaults.default_catalog()
    try:
        init_repository(
            directory,
            catalog=catalog,
            prediag_rules_text=defaults.default_prediag_rules_text(),
            adapt_rules_text=defaults.default_adapt_rules_text(),
            table=defaults.default_table(catalog),
            force=force,
        )
    except DomainError as e:
        raise _fail(str(e))
    click.echo(f"initialized repository at {directory} ({catalog.size} symptoms)")


@main.command()
@repo_option
@click.option("--n", "n_cases", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice([m.value for m in GenMode]), default=GenMode.UNIFORM.value)
@click.option("--jitter-sigma", type=float, default=0.0, show_default=True)
@click.option("--no-cull", is_flag=True, help="keep implausible combinations")
@click.option("--append", "append_mode", is_flag=True, help="append to stored cases instead of replacing")
def gen(repo_root, n_cases, seed, mode, jitter_sigma, no_cull, append_mode) -> None:
    """Generate an oracle-labeled synthetic case base from the repository's
    probability table."""
    repo = load_repository(repo_root)
    catalog = repo.load_catalog()
    table = repo.load_table(catalog)
    config = GeneratorConfig(n_cases=n_cases, seed=seed, jitter_sigma=jitter_sigma, mode=GenMode(mode))
    raw = generate(table, config)
    removed = []
    kept = raw
    if not no_cull:
        kept, removed = cull(raw, default_cull_predicates(catalog))
    existing = repo.load_cases(catalog) if append_mode else None
    start = existing.next_id() if existing is not None else 0
    cases = [
        DiagnosticCase(start + i, c.description, oracle_label(table, c.description), True)
        for i, c in enumerate(kept)
    ]
    if append_mode:
        all_cases = list(existing) + cases
        repo.save_cases(all_cases)
    else:
        repo.save_cases(cases)
    click.echo(
        f"generated {len(raw)} cases (seed {seed}), culled {len(removed)}, stored {len(cases)}"
    )


def _parse_query(engine: Engine, present: str | None, present_ids: str | None) -> SymptomVector:
    ids: set[int] = set()
    if present:
        for name in present.split(","):
            name = name.strip()
            if name:
                ids.add(engine.catalog.id_of(name))
    if present_ids:
        for tok in present_ids.split(","):
            tok = tok.strip()
            if tok:
                ids.add(int(tok))
    return SymptomVector.from_present(ids, engine.catalog.size)


@main.command()
@repo_option
@with_config
@click.option("--present", help="comma-separated symptom names", default=None)
@click.option("--present-ids", help="comma-separated symptom ids", default=None)
@click.option("--interactive", is_flag=True, help="stop at candidate selection")
@click.option("--session", "session_file", type=click.Path(dir_okay=False), default=None)
def diagnose(repo_root, config_file, tau_reuse, tau_adapt, present, present_ids, interactive, session_file):
    """Start a diagnosis session for the given symptoms."""
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    _, engine = _load_engine(repo_root, config)
    try:
        query = _parse_query(engine, present, present_ids)
        session = engine.start_session(query, interactive=interactive)
    except DomainError as e:
        raise _fail(str(e))
    _write_session(_session_path(repo_root, session_file), session)
    _print_session(session)


@main.command()
@repo_option
@with_config
@click.option("--rank", type=int, required=True)
@click.option("--session", "session_file", type=click.Path(dir_okay=False), default=None)
def select(repo_root, config_file, tau_reuse, tau_adapt, rank, session_file):
    """Resolve an awaiting session against the candidate at RANK."""
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    _, engine = _load_engine(repo_root, config)
    path = _session_path(repo_root, session_file)
    session = _read_session(path)
    try:
        engine.select(session, rank)
    except DomainError as e:
        raise _fail(str(e))
    _write_session(path, session)
    _print_session(session)


@main.command()
@repo_option
@with_config
@click.option("--success/--failure", "success", required=True)
@click.option("--repair", default=None, help="replacement solution, e.g. 'ABM;Encephalitis,BrainTumor'")
@click.option("--session", "session_file", type=click.Path(dir_okay=False), default=None)
def revise(repo_root, config_file, tau_reuse, tau_adapt, success, repair, session_file):
    """Record the success/failure verdict, optionally repairing the solution."""
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    _, engine = _load_engine(repo_root, config)
    path = _session_path(repo_root, session_file)
    session = _read_session(path)
    try:
        repaired = decode_solution(repair) if repair else None
        engine.revise(session, Verdict(success=success, repaired_solution=repaired))
    except DomainError as e:
        raise _fail(str(e))
    _write_session(path, session)
    _print_session(session)


@main.command()
@repo_option
@with_config
@click.option("--diag/--no-diag", "retain_diag", default=True, show_default=True)
@click.option("--adapt/--no-adapt", "retain_adapt", default=True, show_default=True)
@click.option("--session", "session_file", type=click.Path(dir_okay=False), default=None)
def retain(repo_root, config_file, tau_reuse, tau_adapt, retain_diag, retain_adapt, session_file):
    """Store the revised case and, after an adaptation, the change experience."""
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    repo, engine = _load_engine(repo_root, config)
    path = _session_path(repo_root, session_file)
    session = _read_session(path)
    try:
        engine.retain(
            session,
            retain_diag,
            retain_adapt,
            case_writer=repo.append_case,
            adaptation_writer=repo.append_adaptation_case,
        )
    except DomainError as e:
        raise _fail(str(e))
    _write_session(path, session)
    r = session.retention
    click.echo(
        "retained: "
        f"case={r.retained_case.case_id if r.retained_case else '-'} "
        f"adaptation={r.retained_adaptation.case_id if r.retained_adaptation else '-'}"
    )
    for note in r.notes:
        click.echo(f"  note: {note}")


def _experiment_pool(repo: Repository, engine: Engine, source: str, n_cases: int, seed: int):
    catalog = engine.catalog
    if source == "store":
        pool = list(engine.casebase)
        if not pool:
            raise _fail("the repository holds no cases; run 'gen' first or use --source generated")
        return pool
    table = repo.load_table(catalog)
    raw = generate(table, GeneratorConfig(n_cases=n_cases, seed=seed))
    kept, _ = cull(raw, default_cull_predicates(catalog))
    return [
        DiagnosticCase(i, c.description, oracle_label(table, c.description), True)
        for i, c in enumerate(kept)
    ]


@main.group(name="eval")
def eval_group() -> None:
    """Run an evaluation experiment and store its report."""


def _eval_common(f):
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--n", "n_cases", type=int, default=200, show_default=True,
                     help="generated pool size (ignored with --source store)")(f)
    f = click.option("--source", type=click.Choice(["generated", "store"]), default="generated",
                     show_default=True)(f)
    f = with_config(f)
    f = repo_option(f)
    return f


def _finish_report(repo: Repository, report) -> None:
    report_id = repo.save_report(report)
    click.echo(f"report {report_id}")
    for key, value in report.metrics.items():
        click.echo(f"  {key}: {value}")


@eval_group.command(name="accuracy")
@_eval_common
@click.option("--sample-size", type=int, default=None, help="held-out sample size (omit for full leave-one-out)")
@click.option("--held-out", is_flag=True, help="hold the sample out instead of leave-one-out")
def eval_accuracy(repo_root, config_file, tau_reuse, tau_adapt, source, n_cases, seed, sample_size, held_out):
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    repo, engine = _load_engine(repo_root, config)
    pool = _experiment_pool(repo, engine, source, n_cases, seed)
    if held_out and sample_size is None:
        sample_size = 30
    try:
        report = experiments.accuracy_experiment(
            pool, engine.catalog, engine.rulebase,
            engine_config=config, sample_size=sample_size,
            leave_one_out=not held_out, seed=seed,
        )
    except DomainError as e:
        raise _fail(str(e))
    _finish_report(repo, report)


@eval_group.command(name="robustness")
@_eval_common
@click.option("--sample-size", type=int, default=None, help="cap the query sample (omit for all cases)")
@click.option("--schedule", default=None, help="comma-separated symptom names to remove, in order")
def eval_robustness(repo_root, config_file, tau_reuse, tau_adapt, source, n_cases, seed, sample_size, schedule):
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    repo, engine = _load_engine(repo_root, config)
    pool = _experiment_pool(repo, engine, source, n_cases, seed)
    if schedule:
        ids = [engine.catalog.id_of(s.strip()) for s in schedule.split(",") if s.strip()]
    else:
        ids = defaults.default_removal_schedule_ids(engine.catalog)
    try:
        report = experiments.robustness_experiment(
            pool, engine.catalog, engine.rulebase, ids,
            engine_config=config, sample_size=sample_size, seed=seed,
        )
    except DomainError as e:
        raise _fail(str(e))
    _finish_report(repo, report)
    for row in report.iterations:
        click.echo(f"  iteration {row['iteration']:2d}: accuracy {row['accuracy']:.3f}")


@eval_group.command(name="learning")
@_eval_common
@click.option("--phases", type=int, default=2, show_default=True)
@click.option("--phase-size", type=int, default=20, show_default=True)
@click.option("--no-retain-diag", is_flag=True)
@click.option("--no-retain-adapt", is_flag=True)
def eval_learning(repo_root, config_file, tau_reuse, tau_adapt, source, n_cases, seed,
                  phases, phase_size, no_retain_diag, no_retain_adapt):
    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    repo, engine = _load_engine(repo_root, config)
    pool = _experiment_pool(repo, engine, source, max(n_cases, phases * phase_size), seed)
    if len(pool) < phases * phase_size:
        raise _fail(f"pool of {len(pool)} cannot fill {phases} phases of {phase_size}")
    phased = [pool[i * phase_size:(i + 1) * phase_size] for i in range(phases)]
    try:
        report = experiments.learning_experiment(
            phased, engine.catalog, engine.rulebase,
            engine_config=config, seed=seed,
            retain_diag=not no_retain_diag, retain_adapt=not no_retain_adapt,
        )
    except DomainError as e:
        raise _fail(str(e))
    _finish_report(repo, report)
    for row in report.phases:
        click.echo(
            f"  phase {row['phase']}: cases={row['case_base_size']} "
            f"adaptations={row['adaptations']} reused={row['adaptation_case_reused']} "
            f"rule-derived={row['adaptation_rule_derived']}"
        )


@main.command()
@repo_option
@with_config
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8660, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="serve a built web UI from this directory")
@click.option("--session-ttl", type=float, default=3600.0, show_default=True)
def serve(repo_root, config_file, tau_reuse, tau_adapt, host, port, ui_dir, session_ttl):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    config = _engine_config(repo_root, config_file, tau_reuse, tau_adapt)
    repo = load_repository(repo_root)
    app = create_app(repo, config, session_ttl=session_ttl, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
