"""Deterministic forward-chaining rule engine with a line-oriented rule DSL.

The same engine serves two stages: conclusive pre-diagnosis over raw symptom
facts, and solution adaptation over symptom-difference facts. Conflict
resolution is strict file order with refraction (each rule fires at most
once), which bounds the run at one firing per rule and makes every inference
reproducible.

DSL, one rule per line, ``#`` starts a comment:

    PREDIAG IF present(<symptom>) [AND present(<symptom>)]* THEN primary(<dx>) [AND differential(<dx>)]*
    ADAPT   IF added(<symptom>)|removed(<symptom>)|role(<dx>, primary|differential) [AND ...]*
            THEN discard(<dx>)|demote(<dx>)|promote(<dx>)|differential(<dx>)|primary(<dx>) [AND ...]*

Negated guards are also accepted: ``absent(x)`` in PREDIAG, ``not_added(x)``
and ``not_removed(x)`` in ADAPT. Negation is evaluated against the seed
working memory, never against facts derived during the run.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Union

from .domain import (
    MAX_DIFFERENTIALS,
    Change,
    Diagnosis,
    DomainError,
    Solution,
    SymptomCatalog,
    SymptomVector,
    parse_diagnosis,
)


class RuleError(DomainError):
    pass


class RuleParseError(RuleError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


# ---------------------------------------------------------------------------
# Facts
# ---------------------------------------------------------------------------

class Role(enum.Enum):
    PRIMARY = "primary"
    DIFFERENTIAL = "differential"


@dataclass(frozen=True)
class SymptomPresent:
    symptom_id: int


@dataclass(frozen=True)
class DeltaIs:
    symptom_id: int
    change: Change

    def __post_init__(self) -> None:
        if self.change is Change.SAME:
            raise RuleError("DeltaIs facts only describe added or removed symptoms")


@dataclass(frozen=True)
class HasRole:
    diagnosis: Diagnosis
    role: Role


@dataclass(frozen=True)
class Discarded:
    diagnosis: Diagnosis


Fact = Union[SymptomPresent, DeltaIs, HasRole, Discarded]


# ---------------------------------------------------------------------------
# Rules
# ---------------------------------------------------------------------------

class RuleKind(enum.Enum):
    PREDIAGNOSIS = "PREDIAG"
    ADAPTATION = "ADAPT"


@dataclass(frozen=True)
class Condition:
    """Ground fact pattern; when ``negated`` the fact must be missing from the
    seed memory."""

    fact: Fact
    negated: bool = False


class ActionKind(enum.Enum):
    ASSERT_PRIMARY = "primary"
    ASSERT_DIFFERENTIAL = "differential"
    DISCARD = "discard"
    DEMOTE = "demote"
    PROMOTE = "promote"


@dataclass(frozen=True)
class Action:
    kind: ActionKind
    diagnosis: Diagnosis

    def __str__(self) -> str:
        return f"{self.kind.value}({self.diagnosis.value})"


_PREDIAG_FACTS = (SymptomPresent,)
_ADAPT_FACTS = (DeltaIs, HasRole)


@dataclass(frozen=True)
class Rule:
    rule_id: str
    kind: RuleKind
    conditions: tuple[Condition, ...]
    actions: tuple[Action, ...]
    order: int
    source: str = ""

    def __post_init__(self) -> None:
        if not self.conditions:
            raise RuleError(f"rule {self.rule_id}: conditions must be non-empty")
        if not self.actions:
            raise RuleError(f"rule {self.rule_id}: actions must be non-empty")
        allowed = _PREDIAG_FACTS if self.kind is RuleKind.PREDIAGNOSIS else _ADAPT_FACTS
        for c in self.conditions:
            if not isinstance(c.fact, allowed):
                raise RuleError(
                    f"rule {self.rule_id}: {type(c.fact).__name__} conditions are not allowed "
                    f"in {self.kind.value} rules"
                )


@dataclass(frozen=True)
class RuleBase:
    rules: tuple[Rule, ...]

    def __post_init__(self) -> None:
        ids = [r.rule_id for r in self.rules]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise RuleError(f"duplicate rule ids: {dupes}")

    def __len__(self) -> int:
        return len(self.rules)

    def of_kind(self, kind: RuleKind) -> "RuleBase":
        return RuleBase(tuple(r for r in self.rules if r.kind is kind))

    @property
    def referenced_symptoms(self) -> frozenset[int]:
        """Symptom ids appearing in any adaptation-rule condition."""
        ids = set()
        for r in self.rules:
            if r.kind is not RuleKind.ADAPTATION:
                continue
            for c in r.conditions:
                if isinstance(c.fact, DeltaIs):
                    ids.add(c.fact.symptom_id)
        return frozenset(ids)


EMPTY_RULEBASE = RuleBase(())


# ---------------------------------------------------------------------------
# Working memory
# ---------------------------------------------------------------------------

class WorkingMemory:
    """Fact set with structural invariants enforced on every mutation:
    a diagnosis holds at most one role, a discarded diagnosis holds none,
    and at most one diagnosis is primary. Differential insertion order is
    tracked for solution read-back.
    """

    def __init__(self, facts: Iterable[Fact] = ()):
        self._symptoms: set[int] = set()
        self._deltas: dict[int, Change] = {}
        self._primary: Diagnosis | None = None
        self._differentials: list[Diagnosis] = []
        self._discarded: set[Diagnosis] = set()
        for f in facts:
            self._seed(f)

    def _seed(self, f: Fact) -> None:
        if isinstance(f, SymptomPresent):
            self._symptoms.add(f.symptom_id)
        elif isinstance(f, DeltaIs):
            self._deltas[f.symptom_id] = f.change
        elif isinstance(f, HasRole):
            if f.diagnosis in self._discarded:
                raise RuleError(f"seed memory: {f.diagnosis} is discarded and cannot hold a role")
            if f.role is Role.PRIMARY:
                if self._primary is not None and self._primary is not f.diagnosis:
                    raise RuleError("seed memory: more than one primary diagnosis")
                if f.diagnosis in self._differentials:
                    raise RuleError(f"seed memory: {f.diagnosis} holds two roles")
                self._primary = f.diagnosis
            else:
                if f.diagnosis is self._primary or f.diagnosis in self._differentials:
                    raise RuleError(f"seed memory: {f.diagnosis} holds two roles")
                if len(self._differentials) >= MAX_DIFFERENTIALS:
                    raise RuleError("seed memory: differential capacity exceeded")
                self._differentials.append(f.diagnosis)
        elif isinstance(f, Discarded):
            if f.diagnosis is self._primary or f.diagnosis in self._differentials:
                raise RuleError(f"seed memory: {f.diagnosis} is discarded and cannot hold a role")
            self._discarded.add(f.diagnosis)
        else:
            raise RuleError(f"unknown fact type {type(f).__name__}")

    def __contains__(self, f: Fact) -> bool:
        if isinstance(f, SymptomPresent):
            return f.symptom_id in self._symptoms
        if isinstance(f, DeltaIs):
            return self._deltas.get(f.symptom_id) is f.change
        if isinstance(f, HasRole):
            if f.role is Role.PRIMARY:
                return self._primary is f.diagnosis
            return f.diagnosis in self._differentials
        if isinstance(f, Discarded):
            return f.diagnosis in self._discarded
        return False

    def facts(self) -> frozenset[Fact]:
        out: set[Fact] = {SymptomPresent(i) for i in self._symptoms}
        out.update(DeltaIs(i, c) for i, c in self._deltas.items())
        if self._primary is not None:
            out.add(HasRole(self._primary, Role.PRIMARY))
        out.update(HasRole(d, Role.DIFFERENTIAL) for d in self._differentials)
        out.update(Discarded(d) for d in self._discarded)
        return frozenset(out)

    @property
    def primary(self) -> Diagnosis | None:
        return self._primary

    @property
    def differentials(self) -> tuple[Diagnosis, ...]:
        return tuple(self._differentials)

    @property
    def discarded(self) -> frozenset[Diagnosis]:
        return frozenset(self._discarded)

    def solution(self) -> Solution:
        """Read the solution back: the primary plus differentials in insertion
        order; with no primary left, the first surviving differential is
        promoted. Empty memory reads back as the undetermined solution."""
        primary = self._primary
        differentials = list(self._differentials)
        if primary is None and differentials:
            primary = differentials.pop(0)
        if primary is None:
            return Solution()
        return Solution(primary, tuple(differentials))

    # -- actions ------------------------------------------------------------

    def _drop_role(self, d: Diagnosis) -> None:
        if self._primary is d:
            self._primary = None
        if d in self._differentials:
            self._differentials.remove(d)

    def _demote_to_differential(self, d: Diagnosis) -> str:
        """Move a current primary down; returns a note when capacity is full
        and the role is dropped instead."""
        self._primary = None
        if len(self._differentials) >= MAX_DIFFERENTIALS:
            return f"{d.value} dropped (differential capacity full)"
        self._differentials.append(d)
        return f"{d.value} demoted to differential"

    def apply(self, action: Action) -> tuple[bool, str]:
        """Apply one action; returns (applied, note). Skipped actions leave
        the memory untouched and explain why in the note."""
        d = action.diagnosis
        kind = action.kind

        if kind is ActionKind.DISCARD:
            if d in self._discarded:
                return False, f"skipped: {d.value} already discarded"
            self._drop_role(d)
            self._discarded.add(d)
            return True, ""

        if d in self._discarded:
            return False, f"skipped: {d.value} is discarded"

        if kind is ActionKind.ASSERT_PRIMARY:
            if self._primary is d:
                return False, f"skipped: {d.value} already primary"
            if d in self._differentials:
                self._differentials.remove(d)
            note = ""
            if self._primary is not None:
                note = self._demote_to_differential(self._primary)
            self._primary = d
            return True, note

        if kind is ActionKind.ASSERT_DIFFERENTIAL:
            if d in self._differentials:
                return False, f"skipped: {d.value} already differential"
            if self._primary is d:
                note = self._demote_to_differential(d)
                return True, note
            if len(self._differentials) >= MAX_DIFFERENTIALS:
                return False, "skipped: differential capacity full"
            self._differentials.append(d)
            return True, ""

        if kind is ActionKind.DEMOTE:
            if self._primary is not d:
                return False, f"skipped: {d.value} is not primary"
            return True, self._demote_to_differential(d)

        if kind is ActionKind.PROMOTE:
            if d not in self._differentials:
                return False, f"skipped: {d.value} is not a differential"
            self._differentials.remove(d)
            note = ""
            if self._primary is not None:
                note = self._demote_to_differential(self._primary)
            self._primary = d
            return True, note

        raise RuleError(f"unknown action kind {kind}")


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TraceEntry:
    rule_id: str
    action: Action
    applied: bool
    note: str = ""


@dataclass(frozen=True)
class InferenceResult:
    memory: WorkingMemory
    trace: tuple[TraceEntry, ...]

    @property
    def fired_rule_ids(self) -> tuple[str, ...]:
        seen: list[str] = []
        for e in self.trace:
            if e.rule_id not in seen:
                seen.append(e.rule_id)
        return tuple(seen)


def _enabled(rule: Rule, memory: WorkingMemory, seed: WorkingMemory) -> bool:
    for c in rule.conditions:
        if c.negated:
            if c.fact in seed:
                return False
        elif c.fact not in memory:
            return False
    return True


def infer(rulebase: RuleBase, seed_facts: Iterable[Fact]) -> InferenceResult:
    """Run the rules to fixpoint over a working memory seeded with the given
    facts. Rules are tried in file order; a rule fires at most once; firing
    applies its actions in order and appends one trace entry per action.
    Deterministic for identical inputs.
    """
    seed_list = list(seed_facts)
    memory = WorkingMemory(seed_list)
    seed = WorkingMemory(seed_list)
    rules = sorted(rulebase.rules, key=lambda r: r.order)
    fired: set[str] = set()
    trace: list[TraceEntry] = []
    for _ in range(len(rules) + 1):
        rule = next(
            (r for r in rules if r.rule_id not in fired and _enabled(r, memory, seed)),
            None,
        )
        if rule is None:
            break
        fired.add(rule.rule_id)
        for action in rule.actions:
            applied, note = memory.apply(action)
            trace.append(TraceEntry(rule.rule_id, action, applied, note))
    else:  # pragma: no cover - refraction makes this unreachable
        raise RuleError("inference exceeded the refraction bound")
    return InferenceResult(memory, tuple(trace))


def replay(seed_facts: Iterable[Fact], trace: Iterable[TraceEntry]) -> WorkingMemory:
    """Re-apply a trace on a fresh memory seeded identically; used to check
    that every fact change is attributable to exactly one trace entry."""
    memory = WorkingMemory(seed_facts)
    for entry in trace:
        memory.apply(entry.action)
    return memory


# ---------------------------------------------------------------------------
# Pre-diagnosis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrediagnosisOutcome:
    """Result of the conclusive-rule stage; ``solution`` is None when the
    stage falls through to the case-based pipeline."""

    solution: Solution | None
    trace: tuple[TraceEntry, ...]


def prediagnose(rulebase: RuleBase, symptoms: SymptomVector) -> PrediagnosisOutcome:
    """Run the pre-diagnosis rules over the raw symptoms. A solution is
    emitted only when at least one rule fired and all fired rules assert the
    same primary diagnosis; anything else falls through (never an error)."""
    prediag = rulebase.of_kind(RuleKind.PREDIAGNOSIS)
    seed = [SymptomPresent(i) for i in symptoms.present_ids()]
    result = infer(prediag, seed)
    if not result.trace:
        return PrediagnosisOutcome(None, result.trace)
    rules_by_id = {r.rule_id: r for r in prediag.rules}
    primaries = {
        a.diagnosis
        for rid in result.fired_rule_ids
        for a in rules_by_id[rid].actions
        if a.kind is ActionKind.ASSERT_PRIMARY
    }
    if len(primaries) != 1:
        return PrediagnosisOutcome(None, result.trace)
    return PrediagnosisOutcome(result.memory.solution(), result.trace)


# ---------------------------------------------------------------------------
# DSL parser
# ---------------------------------------------------------------------------

_CALL_RE = re.compile(r"^(\w+)\(([^()]*)\)$")

_PREDIAG_CONDS = {"present": False, "absent": True}
_ADAPT_DELTA_CONDS = {
    "added": (Change.ADDED_IN_CURRENT, False),
    "removed": (Change.REMOVED_IN_CURRENT, False),
    "not_added": (Change.ADDED_IN_CURRENT, True),
    "not_removed": (Change.REMOVED_IN_CURRENT, True),
}
_ACTION_KINDS = {k.value: k for k in ActionKind}
_PREDIAG_ACTION_KINDS = {ActionKind.ASSERT_PRIMARY, ActionKind.ASSERT_DIFFERENTIAL}


def _split_and(text: str) -> list[str]:
    return [p.strip() for p in re.split(r"\s+AND\s+", text.strip()) if p.strip()]


def _parse_call(term: str, lineno: int) -> tuple[str, list[str]]:
    m = _CALL_RE.match(term)
    if not m:
        raise RuleParseError(lineno, f"malformed term {term!r}")
    name, args = m.group(1).lower(), [a.strip() for a in m.group(2).split(",")]
    return name, args


def _parse_condition(term: str, kind: RuleKind, catalog: SymptomCatalog, lineno: int) -> Condition:
    name, args = _parse_call(term, lineno)
    if kind is RuleKind.PREDIAGNOSIS:
        if name not in _PREDIAG_CONDS:
            raise RuleParseError(lineno, f"condition {name!r} is not allowed in PREDIAG rules")
        if len(args) != 1:
            raise RuleParseError(lineno, f"{name}() takes one symptom name")
        try:
            sid = catalog.id_of(args[0])
        except DomainError as e:
            raise RuleParseError(lineno, str(e)) from None
        return Condition(SymptomPresent(sid), negated=_PREDIAG_CONDS[name])
    if name in _ADAPT_DELTA_CONDS:
        if len(args) != 1:
            raise RuleParseError(lineno, f"{name}() takes one symptom name")
        try:
            sid = catalog.id_of(args[0])
        except DomainError as e:
            raise RuleParseError(lineno, str(e)) from None
        change, negated = _ADAPT_DELTA_CONDS[name]
        return Condition(DeltaIs(sid, change), negated=negated)
    if name == "role":
        if len(args) != 2 or args[1].lower() not in ("primary", "differential"):
            raise RuleParseError(lineno, "role() takes (diagnosis, primary|differential)")
        try:
            dx = parse_diagnosis(args[0])
        except DomainError as e:
            raise RuleParseError(lineno, str(e)) from None
        return Condition(HasRole(dx, Role(args[1].lower())))
    raise RuleParseError(lineno, f"condition {name!r} is not allowed in ADAPT rules")


def _parse_action(term: str, kind: RuleKind, lineno: int) -> Action:
    name, args = _parse_call(term, lineno)
    if name not in _ACTION_KINDS:
        raise RuleParseError(lineno, f"unknown action {name!r}")
    action_kind = _ACTION_KINDS[name]
    if kind is RuleKind.PREDIAGNOSIS and action_kind not in _PREDIAG_ACTION_KINDS:
        raise RuleParseError(lineno, f"action {name!r} is not allowed in PREDIAG rules")
    if len(args) != 1:
        raise RuleParseError(lineno, f"{name}() takes one diagnosis")
    try:
        dx = parse_diagnosis(args[0])
    except DomainError as e:
        raise RuleParseError(lineno, str(e)) from None
    return Action(action_kind, dx)


def parse_rules(text: str, catalog: SymptomCatalog, *, order_base: int = 0) -> RuleBase:
    """Parse DSL source into a rule base; rules keep file order. Raises
    RuleParseError with the offending line number."""
    rules: list[Rule] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = re.match(r"^(PREDIAG|ADAPT)\s+IF\s+(.+?)\s+THEN\s+(.+)$", line, re.IGNORECASE)
        if not m:
            raise RuleParseError(lineno, "expected '<PREDIAG|ADAPT> IF <conditions> THEN <actions>'")
        kind = RuleKind.PREDIAGNOSIS if m.group(1).upper() == "PREDIAG" else RuleKind.ADAPTATION
        order = order_base + len(rules)
        rule_id = f"{m.group(1).lower()}_{lineno}" if order_base == 0 else f"{m.group(1).lower()}_{order_base}_{lineno}"
        conditions = tuple(
            _parse_condition(t, kind, catalog, lineno) for t in _split_and(m.group(2))
        )
        actions = tuple(_parse_action(t, kind, lineno) for t in _split_and(m.group(3)))
        try:
            rules.append(Rule(rule_id, kind, conditions, actions, order, source=line))
        except RuleError as e:
            raise RuleParseError(lineno, str(e)) from None
    return RuleBase(tuple(rules))
