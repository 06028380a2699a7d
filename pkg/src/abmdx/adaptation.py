"""Solution adaptation: reuse a stored change experience when one matches
closely enough, otherwise derive the change by running the adaptation rules.

Adaptation-case similarity only considers the influential symptom subset;
differences outside it are not relevant enough to matter. Stored cases are
only eligible when their starting solution matches the current one exactly,
since a transformation of a different solution is meaningless.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Union

from .domain import (
    AdaptationCase,
    CatalogMismatchError,
    DeltaVector,
    DomainError,
    Solution,
    solution_equal,
)
from .rules import (
    DeltaIs,
    Fact,
    HasRole,
    Role,
    RuleBase,
    RuleKind,
    TraceEntry,
    infer,
)


class AdaptationError(DomainError):
    pass


class ConfigurationError(AdaptationError):
    pass


class AdaptationCaseBase:
    """Adaptation cases keyed by id, bound to one catalog size."""

    def __init__(self, size: int, cases: Iterable[AdaptationCase] = ()):
        self.size = size
        self._cases: dict[int, AdaptationCase] = {}
        for c in cases:
            self.add(c)

    def add(self, case: AdaptationCase) -> None:
        if case.case_id is None:
            raise AdaptationError("adaptation cases must carry an id before entering the base")
        if case.case_id in self._cases:
            raise AdaptationError(f"adaptation case id {case.case_id} already present")
        if len(case.delta) != self.size:
            raise CatalogMismatchError(
                f"adaptation case {case.case_id}: delta length {len(case.delta)} != catalog size {self.size}"
            )
        self._cases[case.case_id] = case

    def get(self, case_id: int) -> AdaptationCase:
        try:
            return self._cases[case_id]
        except KeyError:
            raise AdaptationError(f"no adaptation case with id {case_id}") from None

    def __len__(self) -> int:
        return len(self._cases)

    def __iter__(self) -> Iterator[AdaptationCase]:
        return iter(self._cases.values())

    def next_id(self) -> int:
        return max(self._cases, default=-1) + 1


def delta_similarity(d1: DeltaVector, d2: DeltaVector, influential: frozenset[int]) -> float:
    """Fraction of influential positions where both deltas carry the same
    tri-value. Positions outside the influential subset are ignored."""
    if not influential:
        raise ConfigurationError("influential symptom set is empty; configure it or load adaptation rules")
    if len(d1) != len(d2):
        raise CatalogMismatchError(f"delta lengths differ: {len(d1)} vs {len(d2)}")
    bad = [i for i in influential if not 0 <= i < len(d1)]
    if bad:
        raise CatalogMismatchError(f"influential ids {sorted(bad)} out of range for length {len(d1)}")
    agree = sum(d1[i] is d2[i] for i in influential)
    return agree / len(influential)


def retrieve_adaptation(
    acb: AdaptationCaseBase,
    delta: DeltaVector,
    s1: Solution,
    influential: frozenset[int],
) -> tuple[AdaptationCase, float] | None:
    """Most similar stored adaptation case whose starting solution equals s1;
    ties break on the lowest case id. None when no case is eligible."""
    eligible = [c for c in acb if solution_equal(c.s1, s1)]
    if not eligible:
        return None
    best: tuple[AdaptationCase, float] | None = None
    for case in eligible:
        score = delta_similarity(delta, case.delta, influential)
        if best is None or score > best[1] or (score == best[1] and case.case_id < best[0].case_id):
            best = (case, score)
    return best


@dataclass(frozen=True)
class CaseReused:
    case_id: int
    score: float

    kind = "adaptation_case_reused"


@dataclass(frozen=True)
class RuleDerived:
    trace: tuple[TraceEntry, ...]

    kind = "rule_derived"


AdaptationProvenance = Union[CaseReused, RuleDerived]


@dataclass(frozen=True)
class AdaptationOutcome:
    s2: Solution
    provenance: AdaptationProvenance
    delta_used: DeltaVector
    s1_used: Solution

    @property
    def undetermined(self) -> bool:
        """True when every diagnosis was eliminated; the revision step must
        then supply the solution."""
        return self.s2.is_empty


def _seed_facts(delta: DeltaVector, s1: Solution) -> list[Fact]:
    facts: list[Fact] = [
        DeltaIs(i, delta[i]) for i in delta.changed_ids()
    ]
    if s1.primary is not None:
        facts.append(HasRole(s1.primary, Role.PRIMARY))
    facts.extend(HasRole(d, Role.DIFFERENTIAL) for d in s1.differentials)
    return facts


def apply_adaptation_rules(
    rulebase: RuleBase, delta: DeltaVector, s1: Solution
) -> tuple[Solution, tuple[TraceEntry, ...]]:
    """Run the adaptation rules over a memory seeded with the symptom
    differences and the roles of s1, then read the adapted solution back.
    An all-eliminated read-back yields the empty (undetermined) solution."""
    if s1.is_empty:
        raise AdaptationError("adaptation requires a non-empty starting solution")
    adapt_rules = rulebase.of_kind(RuleKind.ADAPTATION)
    result = infer(adapt_rules, _seed_facts(delta, s1))
    return result.memory.solution(), result.trace


def adapt(
    delta: DeltaVector,
    s1: Solution,
    acb: AdaptationCaseBase,
    rulebase: RuleBase,
    tau_adapt: float,
    influential: frozenset[int],
) -> AdaptationOutcome:
    """Produce the adapted solution for (delta, s1): reuse the closest stored
    adaptation case at or above the threshold, otherwise fall back to the
    adaptation rules."""
    if s1.is_empty:
        raise AdaptationError("adaptation requires a non-empty starting solution")
    if len(acb):
        hit = retrieve_adaptation(acb, delta, s1, influential)
        if hit is not None and hit[1] >= tau_adapt:
            case, score = hit
            return AdaptationOutcome(
                s2=case.s2,
                provenance=CaseReused(case.case_id, score),
                delta_used=delta,
                s1_used=s1,
            )
    s2, trace = apply_adaptation_rules(rulebase, delta, s1)
    return AdaptationOutcome(
        s2=s2,
        provenance=RuleDerived(trace),
        delta_used=delta,
        s1_used=s1,
    )
