"""Nearest-neighbor retrieval over the diagnostic case base.

Scoring is plain equality-based agreement over the full symptom vector
(no per-symptom weights). The scan is linear; scores are computed as a
vectorised integer agreement count so ranking ties break exactly on
ascending case id.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .domain import CatalogMismatchError, DiagnosticCase, DomainError, SymptomVector


class CaseBaseError(DomainError):
    pass


class EmptyCaseBaseError(CaseBaseError):
    """Raised when retrieval is attempted against an empty (or fully
    filtered-out) case base; callers fall back to rules-only operation."""


class DuplicateCaseIdError(CaseBaseError):
    pass


class CaseBase:
    """Diagnostic cases keyed by id, bound to one catalog size."""

    def __init__(self, size: int, cases: Iterable[DiagnosticCase] = ()):
        self.size = size
        self._cases: dict[int, DiagnosticCase] = {}
        self._matrix: np.ndarray | None = None
        self._ids: np.ndarray | None = None
        self._success: np.ndarray | None = None
        for c in cases:
            self.add(c)

    def add(self, case: DiagnosticCase) -> None:
        if case.case_id is None:
            raise CaseBaseError("cases must carry an id before entering the base")
        if case.case_id in self._cases:
            raise DuplicateCaseIdError(f"case id {case.case_id} already present")
        if len(case.description) != self.size:
            raise CatalogMismatchError(
                f"case {case.case_id}: vector length {len(case.description)} != catalog size {self.size}"
            )
        self._cases[case.case_id] = case
        self._matrix = None

    def get(self, case_id: int) -> DiagnosticCase:
        try:
            return self._cases[case_id]
        except KeyError:
            raise CaseBaseError(f"no case with id {case_id}") from None

    def __len__(self) -> int:
        return len(self._cases)

    def __iter__(self) -> Iterator[DiagnosticCase]:
        return iter(self._cases.values())

    def __contains__(self, case_id: int) -> bool:
        return case_id in self._cases

    def ids(self) -> tuple[int, ...]:
        return tuple(self._cases.keys())

    def next_id(self) -> int:
        return max(self._cases, default=-1) + 1

    def _arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._matrix is None:
            cases = list(self._cases.values())
            self._ids = np.array([c.case_id for c in cases], dtype=np.int64)
            self._success = np.array([c.success for c in cases], dtype=bool)
            self._matrix = np.array([c.description.bits for c in cases], dtype=bool)
        return self._matrix, self._ids, self._success


@dataclass(frozen=True)
class RetrievalResult:
    """Cases ranked by score descending, ties broken by ascending case id."""

    ranked: tuple[tuple[int, float], ...]
    k: int

    def __len__(self) -> int:
        return len(self.ranked)

    @property
    def top(self) -> tuple[int, float]:
        return self.ranked[0]

    def at_rank(self, rank: int) -> tuple[int, float]:
        """1-based access into the ranked list."""
        if not 1 <= rank <= len(self.ranked):
            raise CaseBaseError(f"rank {rank} outside 1..{len(self.ranked)}")
        return self.ranked[rank - 1]


def retrieve(
    casebase: CaseBase,
    query: SymptomVector,
    k: int = 3,
    *,
    include_failures: bool = False,
) -> RetrievalResult:
    """Top-k nearest neighbours of the query, exactly as a brute-force scan
    sorted by (score desc, case id asc) would rank them. Failed cases are
    skipped unless ``include_failures`` is set."""
    if k < 1:
        raise CaseBaseError(f"k must be positive, got {k}")
    if len(query) != casebase.size:
        raise CatalogMismatchError(
            f"query length {len(query)} != catalog size {casebase.size}"
        )
    matrix, ids, success = casebase._arrays()
    if not include_failures and len(ids):
        keep = success
        matrix, ids = matrix[keep], ids[keep]
    if len(ids) == 0:
        raise EmptyCaseBaseError("case base is empty; fall back to rules-only operation")
    q = np.array(query.bits, dtype=bool)
    agree = (matrix == q).sum(axis=1)
    order = np.lexsort((ids, -agree))[: min(k, len(ids))]
    n = casebase.size
    ranked = tuple((int(ids[i]), int(agree[i]) / n) for i in order)
    return RetrievalResult(ranked=ranked, k=k)


class Decision(enum.Enum):
    REUSE = "reuse"
    ADAPT = "adapt"


def reuse_decision(top_score: float, tau_reuse: float) -> Decision:
    """Reuse the retrieved solution directly when the similarity reaches the
    threshold (inclusive boundary), otherwise adapt."""
    return Decision.REUSE if top_score >= tau_reuse else Decision.ADAPT
