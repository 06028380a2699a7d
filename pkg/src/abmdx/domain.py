"""Core domain model: symptom catalog, diagnosis labels, symptom vectors,
solutions, diagnostic cases, symptom-difference vectors and adaptation cases.

Everything here is immutable after construction and safe to share across
threads. Symptom vectors are strictly two-valued: a symptom that was not
reported is represented as absent.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator

MAX_DIFFERENTIALS = 2


class DomainError(Exception):
    """Base class for domain-level errors."""


class CatalogMismatchError(DomainError):
    """Two catalog-indexed values of different lengths were combined."""


class UnknownSymptomError(DomainError):
    pass


class UnknownDiagnosisError(DomainError):
    pass


class InvalidSolutionError(DomainError):
    pass


class Diagnosis(enum.Enum):
    """Closed set of diagnosis labels: the target disease plus its differentials.

    Declaration order is the canonical label order used for deterministic
    tie-breaking throughout the engine.
    """

    ABM = "ABM"
    ACUTE_VIRAL_MENINGITIS = "AcuteViralMeningitis"
    TUBERCULOUS_MENINGITIS = "TuberculousMeningitis"
    ENCEPHALITIS = "Encephalitis"
    BRAIN_ABSCESS = "BrainAbscess"
    MENINGISM = "Meningism"
    MENINGEAL_REACTION_NEARBY_INFLAMMATION = "MeningealReactionNearbyInflammation"
    MENINGEAL_HAEMORRHAGE = "MeningealHaemorrhage"
    BRAIN_TUMOR = "BrainTumor"

    def __str__(self) -> str:
        return self.value


DIAGNOSES: tuple[Diagnosis, ...] = tuple(Diagnosis)

_DIAGNOSIS_BY_NAME = {d.value: d for d in Diagnosis}
_DIAGNOSIS_INDEX = {d: i for i, d in enumerate(DIAGNOSES)}


def parse_diagnosis(name: str) -> Diagnosis:
    try:
        return _DIAGNOSIS_BY_NAME[name]
    except KeyError:
        raise UnknownDiagnosisError(f"unknown diagnosis {name!r}") from None


def diagnosis_index(d: Diagnosis) -> int:
    """Position of a label in the canonical order (tie-break key)."""
    return _DIAGNOSIS_INDEX[d]


@dataclass(frozen=True)
class Symptom:
    symptom_id: int
    name: str
    influential: bool = False


@dataclass(frozen=True)
class SymptomCatalog:
    """Ordered symptom list with dense ids 0..N-1 and unique names.

    The ``influential`` flags mark symptoms that take part in adaptation-case
    similarity; when no flag is set the engine falls back to the symptoms
    referenced by the loaded adaptation rules.
    """

    symptoms: tuple[Symptom, ...]
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not self.symptoms:
            raise DomainError("catalog must contain at least one symptom")
        for i, s in enumerate(self.symptoms):
            if s.symptom_id != i:
                raise DomainError(
                    f"symptom ids must be dense 0..N-1; got {s.symptom_id} at position {i}"
                )
        names = [s.name for s in self.symptoms]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DomainError(f"duplicate symptom names: {dupes}")
        object.__setattr__(self, "_by_name", {s.name: s for s in self.symptoms})

    @property
    def size(self) -> int:
        return len(self.symptoms)

    def id_of(self, name: str) -> int:
        try:
            return self._by_name[name].symptom_id
        except KeyError:
            raise UnknownSymptomError(f"unknown symptom {name!r}") from None

    def name_of(self, symptom_id: int) -> str:
        if not 0 <= symptom_id < self.size:
            raise UnknownSymptomError(f"symptom id {symptom_id} out of range 0..{self.size - 1}")
        return self.symptoms[symptom_id].name

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def influential_ids(self) -> frozenset[int]:
        return frozenset(s.symptom_id for s in self.symptoms if s.influential)


@dataclass(frozen=True)
class SymptomVector:
    """Fixed-length presence/absence profile over the symptom catalog."""

    bits: tuple[bool, ...]

    def __post_init__(self) -> None:
        if not all(isinstance(b, bool) for b in self.bits):
            object.__setattr__(self, "bits", tuple(bool(b) for b in self.bits))

    @classmethod
    def from_present(cls, present: Iterable[int], size: int) -> "SymptomVector":
        ids = set(present)
        bad = [i for i in ids if not 0 <= i < size]
        if bad:
            raise CatalogMismatchError(f"symptom ids {sorted(bad)} out of range for catalog size {size}")
        return cls(tuple(i in ids for i in range(size)))

    def __len__(self) -> int:
        return len(self.bits)

    def __getitem__(self, i: int) -> bool:
        return self.bits[i]

    def present_ids(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    def with_absent(self, symptom_ids: Iterable[int]) -> "SymptomVector":
        """Copy with the given symptoms forced to absent (partial-information masking)."""
        off = set(symptom_ids)
        return SymptomVector(tuple(False if i in off else b for i, b in enumerate(self.bits)))


class Change(enum.Enum):
    """Per-symptom difference between the current and the retrieved problem."""

    SAME = "="
    ADDED_IN_CURRENT = "+"
    REMOVED_IN_CURRENT = "-"


@dataclass(frozen=True)
class DeltaVector:
    """Tri-valued symptom-difference profile between two symptom vectors."""

    entries: tuple[Change, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> Change:
        return self.entries[i]

    def __iter__(self) -> Iterator[Change]:
        return iter(self.entries)

    @property
    def is_null(self) -> bool:
        return all(e is Change.SAME for e in self.entries)

    def changed_ids(self) -> tuple[int, ...]:
        return tuple(i for i, e in enumerate(self.entries) if e is not Change.SAME)

    def swapped(self) -> "DeltaVector":
        """Delta with the argument roles exchanged (added and removed flip)."""
        flip = {
            Change.SAME: Change.SAME,
            Change.ADDED_IN_CURRENT: Change.REMOVED_IN_CURRENT,
            Change.REMOVED_IN_CURRENT: Change.ADDED_IN_CURRENT,
        }
        return DeltaVector(tuple(flip[e] for e in self.entries))


def _check_same_length(a, b) -> None:
    if len(a) != len(b):
        raise CatalogMismatchError(f"catalog-indexed lengths differ: {len(a)} vs {len(b)}")


def similarity(a: SymptomVector, b: SymptomVector) -> float:
    """Fraction of symptom positions where both vectors agree, in [0, 1]."""
    _check_same_length(a, b)
    agree = sum(x == y for x, y in zip(a.bits, b.bits))
    return agree / len(a)


def delta(current: SymptomVector, retrieved: SymptomVector) -> DeltaVector:
    """Per-symptom difference of the current problem against the retrieved one."""
    _check_same_length(current, retrieved)
    entries = []
    for c, r in zip(current.bits, retrieved.bits):
        if c == r:
            entries.append(Change.SAME)
        elif c:
            entries.append(Change.ADDED_IN_CURRENT)
        else:
            entries.append(Change.REMOVED_IN_CURRENT)
    return DeltaVector(tuple(entries))


def apply_delta(retrieved: SymptomVector, dv: DeltaVector) -> SymptomVector:
    """Reconstruct the current vector from the retrieved one plus a delta."""
    _check_same_length(retrieved, dv)
    bits = []
    for r, e in zip(retrieved.bits, dv.entries):
        if e is Change.SAME:
            bits.append(r)
        else:
            bits.append(e is Change.ADDED_IN_CURRENT)
    return SymptomVector(tuple(bits))


@dataclass(frozen=True)
class Solution:
    """Ordered diagnosis triple: one primary plus up to two differentials.

    An empty solution (no primary, no differentials) means "undetermined".
    """

    primary: Diagnosis | None = None
    differentials: tuple[Diagnosis, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "differentials", tuple(self.differentials))
        if self.primary is None and self.differentials:
            raise InvalidSolutionError("differentials require a primary diagnosis")
        if len(self.differentials) > MAX_DIFFERENTIALS:
            raise InvalidSolutionError(
                f"at most {MAX_DIFFERENTIALS} differentials allowed, got {len(self.differentials)}"
            )
        seen = [self.primary] if self.primary else []
        for d in self.differentials:
            if d in seen:
                raise InvalidSolutionError(f"diagnosis {d} appears twice in the solution")
            seen.append(d)

    @property
    def is_empty(self) -> bool:
        return self.primary is None

    def diagnoses(self) -> tuple[Diagnosis, ...]:
        return ((self.primary,) if self.primary else ()) + self.differentials

    def __str__(self) -> str:
        if self.is_empty:
            return "(undetermined)"
        if not self.differentials:
            return self.primary.value
        return f"{self.primary.value}; {', '.join(d.value for d in self.differentials)}"


EMPTY_SOLUTION = Solution()


def solution_equal(a: Solution, b: Solution) -> bool:
    """Role- and order-sensitive equality of two solutions."""
    return a.primary == b.primary and a.differentials == b.differentials


@dataclass(frozen=True)
class DiagnosticCase:
    """Unit of the main case base: problem description, solution, success flag.

    ``case_id`` is None until the store assigns one.
    """

    case_id: int | None
    description: SymptomVector
    solution: Solution
    success: bool

    def __post_init__(self) -> None:
        if self.success and self.solution.is_empty:
            raise InvalidSolutionError("a successful case must carry a non-empty solution")


@dataclass(frozen=True)
class AdaptationCase:
    """Stored change experience: a symptom difference applied to solution s1
    produced solution s2."""

    case_id: int | None
    delta: DeltaVector
    s1: Solution
    s2: Solution

    def __post_init__(self) -> None:
        if self.s1.is_empty:
            raise InvalidSolutionError("an adaptation transforms an existing solution; s1 must be non-empty")
