"""Persistence and file formats: catalogs, case bases, adaptation cases,
rule files, probability tables and experiment reports.

All record files are line-oriented, human-diffable text. Writes go through
an atomic write-temp-then-rename so a crash never leaves a half-written
record, and every file has a single writer lock; readers need no lock.

Schemas
-------
catalog.tsv          ``<id> <name> <influential 0|1>`` per line
cases.txt            ``<id>|<presence bits 0/1>|<solution>|<success 0|1>``
adaptation_cases.txt ``<id>|<delta chars = + ->|<s1 solution>|<s2 solution>``
prediagnosis.rules / adaptation.rules   rule DSL (see rules module)
probability_table.txt  ``[priors]`` block of ``<diagnosis> <float>`` lines,
                      then ``[conditionals]`` block of ``<diagnosis> <p0> ... <pN-1>``
reports/NNNN-<kind>.json, reports/NNNN-<kind>-curve.csv

Solution text form: ``-`` when undetermined, else the primary followed by
``;`` and a comma-separated differential list, e.g. ``ABM;Encephalitis,BrainTumor``.
"""
from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from pathlib import Path
from typing import Iterable

from .adaptation import AdaptationCaseBase
from .casegen import ProbabilityTable
from .domain import (
    DIAGNOSES,
    AdaptationCase,
    Change,
    DeltaVector,
    DiagnosticCase,
    DomainError,
    Solution,
    Symptom,
    SymptomCatalog,
    SymptomVector,
    parse_diagnosis,
)
from .retrieval import CaseBase
from .rules import RuleBase, parse_rules


class StoreError(DomainError):
    pass


class MissingFileError(StoreError):
    pass


class SchemaError(StoreError):
    def __init__(self, path, lineno: int | None, message: str):
        locus = f"{path}:{lineno}" if lineno is not None else str(path)
        super().__init__(f"{locus}: {message}")
        self.path = str(path)
        self.lineno = lineno


class IdCollisionError(StoreError):
    pass


# ---------------------------------------------------------------------------
# Scalar encodings
# ---------------------------------------------------------------------------

def encode_solution(s: Solution) -> str:
    if s.is_empty:
        return "-"
    text = s.primary.value
    if s.differentials:
        text += ";" + ",".join(d.value for d in s.differentials)
    return text


def decode_solution(text: str) -> Solution:
    text = text.strip()
    if text == "-":
        return Solution()
    primary_part, _, diff_part = text.partition(";")
    primary = parse_diagnosis(primary_part.strip())
    differentials = tuple(
        parse_diagnosis(p.strip()) for p in diff_part.split(",") if p.strip()
    )
    return Solution(primary, differentials)


def encode_bits(v: SymptomVector) -> str:
    return "".join("1" if b else "0" for b in v.bits)


def decode_bits(text: str, size: int) -> SymptomVector:
    if len(text) != size or set(text) - {"0", "1"}:
        raise DomainError(f"expected {size} bits of 0/1, got {text!r}")
    return SymptomVector(tuple(c == "1" for c in text))


_DELTA_CHARS = {c.value: c for c in Change}


def encode_delta(dv: DeltaVector) -> str:
    return "".join(e.value for e in dv.entries)


def decode_delta(text: str, size: int) -> DeltaVector:
    if len(text) != size or set(text) - set(_DELTA_CHARS):
        raise DomainError(f"expected {size} delta chars of =/+/-, got {text!r}")
    return DeltaVector(tuple(_DELTA_CHARS[c] for c in text))


# ---------------------------------------------------------------------------
# Atomic file primitives
# ---------------------------------------------------------------------------

def atomic_write(path: Path, text: str) -> None:
    """Write the full file content through a temp file in the same directory
    and rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=path.name + ".", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_lines(path: Path) -> list[tuple[int, str]]:
    if not path.exists():
        raise MissingFileError(f"missing file: {path}")
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((lineno, line))
    return out


# ---------------------------------------------------------------------------
# Entity encodings
# ---------------------------------------------------------------------------

def catalog_to_text(catalog: SymptomCatalog) -> str:
    lines = ["# <id>\t<name>\t<influential 0|1>"]
    lines += [f"{s.symptom_id}\t{s.name}\t{1 if s.influential else 0}" for s in catalog.symptoms]
    return "\n".join(lines) + "\n"


def catalog_from_text(text: str, path="<catalog>") -> SymptomCatalog:
    symptoms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3 or parts[2] not in ("0", "1"):
            raise SchemaError(path, lineno, f"expected '<id> <name> <0|1>', got {raw!r}")
        try:
            sid = int(parts[0])
        except ValueError:
            raise SchemaError(path, lineno, f"bad symptom id {parts[0]!r}") from None
        symptoms.append(Symptom(sid, parts[1], parts[2] == "1"))
    try:
        return SymptomCatalog(tuple(symptoms))
    except DomainError as e:
        raise SchemaError(path, None, str(e)) from None


def case_to_line(case: DiagnosticCase) -> str:
    if case.case_id is None:
        raise StoreError("cannot persist a case without an id")
    return f"{case.case_id}|{encode_bits(case.description)}|{encode_solution(case.solution)}|{1 if case.success else 0}"


def case_from_line(line: str, size: int, path, lineno: int) -> DiagnosticCase:
    parts = line.split("|")
    if len(parts) != 4 or parts[3] not in ("0", "1"):
        raise SchemaError(path, lineno, f"expected '<id>|<bits>|<solution>|<0|1>', got {line!r}")
    try:
        return DiagnosticCase(
            case_id=int(parts[0]),
            description=decode_bits(parts[1], size),
            solution=decode_solution(parts[2]),
            success=parts[3] == "1",
        )
    except (DomainError, ValueError) as e:
        raise SchemaError(path, lineno, f"record {parts[0]}: {e}") from None


def adaptation_case_to_line(case: AdaptationCase) -> str:
    if case.case_id is None:
        raise StoreError("cannot persist an adaptation case without an id")
    return f"{case.case_id}|{encode_delta(case.delta)}|{encode_solution(case.s1)}|{encode_solution(case.s2)}"


def adaptation_case_from_line(line: str, size: int, path, lineno: int) -> AdaptationCase:
    parts = line.split("|")
    if len(parts) != 4:
        raise SchemaError(path, lineno, f"expected '<id>|<delta>|<s1>|<s2>', got {line!r}")
    try:
        return AdaptationCase(
            case_id=int(parts[0]),
            delta=decode_delta(parts[1], size),
            s1=decode_solution(parts[2]),
            s2=decode_solution(parts[3]),
        )
    except (DomainError, ValueError) as e:
        raise SchemaError(path, lineno, f"record {parts[0]}: {e}") from None


def table_to_text(table: ProbabilityTable) -> str:
    lines = ["[priors]"]
    lines += [f"{d.value} {float(table.priors[i])!r}" for i, d in enumerate(DIAGNOSES)]
    lines.append("[conditionals]")
    for i, d in enumerate(DIAGNOSES):
        row = " ".join(repr(float(p)) for p in table.conditionals[i])
        lines.append(f"{d.value} {row}")
    return "\n".join(lines) + "\n"


def table_from_text(text: str, size: int, path="<table>") -> ProbabilityTable:
    priors: dict = {}
    conditionals: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line in ("[priors]", "[conditionals]"):
            section = line
            continue
        if section is None:
            raise SchemaError(path, lineno, "content before a [priors]/[conditionals] header")
        parts = line.split()
        try:
            d = parse_diagnosis(parts[0])
        except DomainError as e:
            raise SchemaError(path, lineno, str(e)) from None
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError as e:
            raise SchemaError(path, lineno, str(e)) from None
        if section == "[priors]":
            if len(values) != 1:
                raise SchemaError(path, lineno, "a prior line carries exactly one probability")
            priors[d] = values[0]
        else:
            if len(values) != size:
                raise SchemaError(
                    path, lineno, f"conditional row for {d.value} has {len(values)} entries, expected {size}"
                )
            conditionals[d] = values
    try:
        return ProbabilityTable.from_maps(size, priors, conditionals)
    except DomainError as e:
        raise SchemaError(path, None, str(e)) from None


# ---------------------------------------------------------------------------
# Repository
# ---------------------------------------------------------------------------

class Repository:
    """File-backed knowledge store rooted at one directory."""

    CATALOG = "catalog.tsv"
    CASES = "cases.txt"
    ADAPTATION_CASES = "adaptation_cases.txt"
    PREDIAG_RULES = "prediagnosis.rules"
    ADAPT_RULES = "adaptation.rules"
    TABLE = "probability_table.txt"
    REPORTS = "reports"

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        if not self.root.is_dir():
            raise MissingFileError(f"repository root {self.root} is not a directory")
        if not self.catalog_path.exists():
            raise MissingFileError(f"repository has no catalog: {self.catalog_path}")

    def _lock(self, path: Path) -> threading.Lock:
        key = str(path)
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    # -- paths ---------------------------------------------------------------

    @property
    def catalog_path(self) -> Path:
        return self.root / self.CATALOG

    @property
    def cases_path(self) -> Path:
        return self.root / self.CASES

    @property
    def adaptation_cases_path(self) -> Path:
        return self.root / self.ADAPTATION_CASES

    @property
    def prediag_rules_path(self) -> Path:
        return self.root / self.PREDIAG_RULES

    @property
    def adapt_rules_path(self) -> Path:
        return self.root / self.ADAPT_RULES

    @property
    def table_path(self) -> Path:
        return self.root / self.TABLE

    @property
    def reports_dir(self) -> Path:
        return self.root / self.REPORTS

    # -- catalog ---------------------------------------------------------------

    def load_catalog(self) -> SymptomCatalog:
        if not self.catalog_path.exists():
            raise MissingFileError(f"missing file: {self.catalog_path}")
        return catalog_from_text(self.catalog_path.read_text(encoding="utf-8"), self.catalog_path)

    def save_catalog(self, catalog: SymptomCatalog) -> None:
        with self._lock(self.catalog_path):
            atomic_write(self.catalog_path, catalog_to_text(catalog))

    # -- diagnostic cases -------------------------------------------------------

    def load_cases(self, catalog: SymptomCatalog) -> CaseBase:
        base = CaseBase(catalog.size)
        if not self.cases_path.exists():
            return base
        for lineno, line in _read_lines(self.cases_path):
            case = case_from_line(line, catalog.size, self.cases_path, lineno)
            try:
                base.add(case)
            except DomainError as e:
                raise SchemaError(self.cases_path, lineno, str(e)) from None
        return base

    def save_cases(self, cases: Iterable[DiagnosticCase]) -> None:
        text = "".join(case_to_line(c) + "\n" for c in cases)
        with self._lock(self.cases_path):
            atomic_write(self.cases_path, text)

    def append_case(self, case: DiagnosticCase) -> DiagnosticCase:
        """Append one record; assigns max+1 when the case has no id yet.
        An explicit id that collides raises and leaves the file unchanged."""
        with self._lock(self.cases_path):
            existing = []
            if self.cases_path.exists():
                existing = [ln for _, ln in _read_lines(self.cases_path)]
            ids = {int(ln.split("|", 1)[0]) for ln in existing}
            case_id = case.case_id
            if case_id is None:
                case_id = max(ids, default=-1) + 1
            elif case_id in ids:
                raise IdCollisionError(f"case id {case_id} already stored")
            stored = DiagnosticCase(case_id, case.description, case.solution, case.success)
            text = "".join(ln + "\n" for ln in existing) + case_to_line(stored) + "\n"
            atomic_write(self.cases_path, text)
            return stored

    # -- adaptation cases --------------------------------------------------------

    def load_adaptation_cases(self, catalog: SymptomCatalog) -> AdaptationCaseBase:
        base = AdaptationCaseBase(catalog.size)
        if not self.adaptation_cases_path.exists():
            return base
        for lineno, line in _read_lines(self.adaptation_cases_path):
            case = adaptation_case_from_line(line, catalog.size, self.adaptation_cases_path, lineno)
            try:
                base.add(case)
            except DomainError as e:
                raise SchemaError(self.adaptation_cases_path, lineno, str(e)) from None
        return base

    def save_adaptation_cases(self, cases: Iterable[AdaptationCase]) -> None:
        text = "".join(adaptation_case_to_line(c) + "\n" for c in cases)
        with self._lock(self.adaptation_cases_path):
            atomic_write(self.adaptation_cases_path, text)

    def append_adaptation_case(self, case: AdaptationCase) -> AdaptationCase:
        with self._lock(self.adaptation_cases_path):
            existing = []
            if self.adaptation_cases_path.exists():
                existing = [ln for _, ln in _read_lines(self.adaptation_cases_path)]
            ids = {int(ln.split("|", 1)[0]) for ln in existing}
            case_id = case.case_id
            if case_id is None:
                case_id = max(ids, default=-1) + 1
            elif case_id in ids:
                raise IdCollisionError(f"adaptation case id {case_id} already stored")
            stored = AdaptationCase(case_id, case.delta, case.s1, case.s2)
            text = "".join(ln + "\n" for ln in existing) + adaptation_case_to_line(stored) + "\n"
            atomic_write(self.adaptation_cases_path, text)
            return stored

    # -- rules -------------------------------------------------------------------

    def load_rules(self, catalog: SymptomCatalog) -> RuleBase:
        """Parse both rule files into one base; pre-diagnosis rules keep lower
        order than adaptation rules."""
        rules = []
        prediag_count = 0
        if self.prediag_rules_path.exists():
            rb = parse_rules(self.prediag_rules_path.read_text(encoding="utf-8"), catalog)
            rules.extend(rb.rules)
            prediag_count = len(rb.rules)
        if self.adapt_rules_path.exists():
            rb = parse_rules(
                self.adapt_rules_path.read_text(encoding="utf-8"),
                catalog,
                order_base=prediag_count,
            )
            rules.extend(rb.rules)
        return RuleBase(tuple(rules))

    def save_rules(self, prediag_text: str, adapt_text: str) -> None:
        with self._lock(self.prediag_rules_path):
            atomic_write(self.prediag_rules_path, prediag_text)
        with self._lock(self.adapt_rules_path):
            atomic_write(self.adapt_rules_path, adapt_text)

    # -- probability table ---------------------------------------------------------

    def load_table(self, catalog: SymptomCatalog) -> ProbabilityTable:
        if not self.table_path.exists():
            raise MissingFileError(f"missing file: {self.table_path}")
        return table_from_text(
            self.table_path.read_text(encoding="utf-8"), catalog.size, self.table_path
        )

    def save_table(self, table: ProbabilityTable) -> None:
        with self._lock(self.table_path):
            atomic_write(self.table_path, table_to_text(table))

    # -- reports ---------------------------------------------------------------------

    _REPORT_RE = re.compile(r"^(\d{4})-([a-z_]+)\.json$")

    def list_reports(self) -> list[str]:
        if not self.reports_dir.is_dir():
            return []
        out = []
        for p in sorted(self.reports_dir.iterdir()):
            if self._REPORT_RE.match(p.name):
                out.append(p.stem)
        return out

    def save_report(self, report) -> str:
        """Persist a report as JSON (plus a flat curve CSV when it carries
        one); returns the assigned report id."""
        with self._lock(self.reports_dir / "_seq"):
            self.reports_dir.mkdir(parents=True, exist_ok=True)
            seqs = [int(self._REPORT_RE.match(p.name).group(1))
                    for p in self.reports_dir.iterdir() if self._REPORT_RE.match(p.name)]
            report_id = f"{max(seqs, default=0) + 1:04d}-{report.kind}"
            atomic_write(
                self.reports_dir / f"{report_id}.json",
                json.dumps(report.to_json_dict(), indent=2) + "\n",
            )
            curve = report.curve_rows()
            if curve is not None:
                lines = ["iteration,accuracy"] + [f"{i},{a!r}" for i, a in curve]
                atomic_write(self.reports_dir / f"{report_id}-curve.csv", "\n".join(lines) + "\n")
            return report_id

    def load_report(self, report_id: str):
        from .experiments import ExperimentReport

        path = self.reports_dir / f"{report_id}.json"
        if not path.exists():
            raise MissingFileError(f"no report {report_id}")
        data = json.loads(path.read_text(encoding="utf-8"))
        return ExperimentReport.from_json_dict(data)

    def report_curve_path(self, report_id: str) -> Path:
        return self.reports_dir / f"{report_id}-curve.csv"


def load_repository(root: str | os.PathLike) -> Repository:
    return Repository(root)


def init_repository(
    root: str | os.PathLike,
    *,
    catalog: SymptomCatalog,
    prediag_rules_text: str,
    adapt_rules_text: str,
    table: ProbabilityTable | None = None,
    force: bool = False,
) -> Repository:
    """Scaffold a repository directory; refuses to overwrite an existing
    catalog unless forced."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    if (root / Repository.CATALOG).exists() and not force:
        raise StoreError(f"{root} already holds a repository (use force to overwrite)")
    atomic_write(root / Repository.CATALOG, catalog_to_text(catalog))
    atomic_write(root / Repository.PREDIAG_RULES, prediag_rules_text)
    atomic_write(root / Repository.ADAPT_RULES, adapt_rules_text)
    if table is not None:
        atomic_write(root / Repository.TABLE, table_to_text(table))
    return Repository(root)
