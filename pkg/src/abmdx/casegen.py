"""Monte Carlo generation of a synthetic, oracle-labeled diagnostic case base
from disease priors and per-disease symptom occurrence probabilities.

Sampling is driven by uniform draws throughout; the optional normal-jitter
mode perturbs each conditional probability with a Gaussian draw (clamped to
[0,1]) to model population variability. Implausible combinations are culled
by named predicates, and a naive-Bayes posterior stands in for the expert
when labeling generated cases.

Per-case random substreams are derived from (seed, case index), so
generation is reproducible and parallelizable per case.
"""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    DIAGNOSES,
    Diagnosis,
    DomainError,
    Solution,
    SymptomCatalog,
    SymptomVector,
)

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-6
PRIOR_SUM_TOL = 1e-9

DEFAULT_EXCLUSIVE_PAIRS: tuple[tuple[str, str], ...] = (
    ("csf_cloudy_aspect", "csf_clear_aspect"),
    ("csf_cloudy_aspect", "csf_crystalline_aspect"),
    ("csf_clear_aspect", "csf_crystalline_aspect"),
)


class TableError(DomainError):
    """Probability-table validation failure; carries the offending entries."""

    def __init__(self, problems: Sequence[str]):
        super().__init__("invalid probability table: " + "; ".join(problems))
        self.problems = tuple(problems)


@dataclass(frozen=True)
class ProbabilityTable:
    """Disease priors plus a (disease x symptom) matrix of occurrence
    probabilities, aligned to the canonical diagnosis order."""

    size: int
    priors: np.ndarray
    conditionals: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "priors", np.asarray(self.priors, dtype=float))
        object.__setattr__(self, "conditionals", np.asarray(self.conditionals, dtype=float))
        problems = []
        if self.priors.shape != (len(DIAGNOSES),):
            problems.append(f"priors shape {self.priors.shape} != ({len(DIAGNOSES)},)")
        if self.conditionals.shape != (len(DIAGNOSES), self.size):
            problems.append(
                f"conditionals shape {self.conditionals.shape} != ({len(DIAGNOSES)}, {self.size})"
            )
        if problems:
            raise TableError(problems)
        for i, p in enumerate(self.priors):
            if not 0.0 <= p <= 1.0:
                problems.append(f"prior[{DIAGNOSES[i].value}] = {p} outside [0,1]")
        s = float(self.priors.sum())
        if abs(s - 1.0) > PRIOR_SUM_TOL:
            problems.append(f"priors sum to {s!r}, not 1")
        bad = np.argwhere((self.conditionals < 0.0) | (self.conditionals > 1.0))
        for d, sym in bad[:20]:
            problems.append(
                f"conditional[{DIAGNOSES[d].value}, symptom {sym}] = "
                f"{self.conditionals[d, sym]} outside [0,1]"
            )
        if problems:
            raise TableError(problems)

    @classmethod
    def from_maps(
        cls,
        size: int,
        priors: Mapping[Diagnosis, float],
        conditionals: Mapping[tuple[Diagnosis, int], float] | Mapping[Diagnosis, Sequence[float]],
    ) -> "ProbabilityTable":
        """Build from mappings; missing conditional entries default to 0 and
        are logged."""
        pvec = np.zeros(len(DIAGNOSES))
        for d, p in priors.items():
            pvec[DIAGNOSES.index(d)] = p
        cmat = np.zeros((len(DIAGNOSES), size))
        filled = np.zeros((len(DIAGNOSES), size), dtype=bool)
        for key, value in conditionals.items():
            if isinstance(key, Diagnosis):
                row = np.asarray(value, dtype=float)
                if row.shape != (size,):
                    raise TableError([f"conditional row for {key.value} has length {len(row)}, expected {size}"])
                cmat[DIAGNOSES.index(key)] = row
                filled[DIAGNOSES.index(key)] = True
            else:
                d, sym = key
                cmat[DIAGNOSES.index(d), sym] = value
                filled[DIAGNOSES.index(d), sym] = True
        missing = int((~filled).sum())
        if missing:
            logger.info("probability table: %d conditional entries missing, defaulted to 0", missing)
        return cls(size=size, priors=pvec, conditionals=cmat)

    def prior(self, d: Diagnosis) -> float:
        return float(self.priors[DIAGNOSES.index(d)])

    def conditional(self, d: Diagnosis, symptom_id: int) -> float:
        return float(self.conditionals[DIAGNOSES.index(d), symptom_id])


class GenMode(enum.Enum):
    UNIFORM = "uniform"
    NORMAL_JITTER = "normal_jitter"


@dataclass(frozen=True)
class GeneratorConfig:
    n_cases: int
    seed: int
    jitter_sigma: float = 0.0
    mode: GenMode = GenMode.UNIFORM

    def __post_init__(self) -> None:
        if self.n_cases < 1:
            raise DomainError(f"n_cases must be positive, got {self.n_cases}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must fit in an unsigned 64-bit integer")
        if self.jitter_sigma < 0:
            raise DomainError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")


@dataclass(frozen=True)
class GeneratedCase:
    true_disease: Diagnosis
    description: SymptomVector


def _case_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, index])


def generate(table: ProbabilityTable, config: GeneratorConfig) -> list[GeneratedCase]:
    """Sample cases: the disease comes from an inverse-CDF lookup over the
    priors, then each symptom is an independent biased coin. Deterministic
    under a fixed seed."""
    cum = np.cumsum(table.priors)
    out: list[GeneratedCase] = []
    for i in range(config.n_cases):
        rng = _case_rng(config.seed, i)
        u = rng.random()
        d_idx = min(int(np.searchsorted(cum, u, side="right")), len(DIAGNOSES) - 1)
        p = table.conditionals[d_idx]
        if config.mode is GenMode.NORMAL_JITTER:
            p = np.clip(p + config.jitter_sigma * rng.standard_normal(table.size), 0.0, 1.0)
        bits = rng.random(table.size) < p
        out.append(GeneratedCase(DIAGNOSES[d_idx], SymptomVector(tuple(bool(b) for b in bits))))
    return out


@dataclass(frozen=True)
class CullPredicate:
    name: str
    matches: Callable[[GeneratedCase], bool]


def no_symptoms_predicate() -> CullPredicate:
    return CullPredicate("no_symptoms", lambda c: not any(c.description.bits))


def exclusive_pair_predicate(catalog: SymptomCatalog, a: str, b: str) -> CullPredicate:
    ia, ib = catalog.id_of(a), catalog.id_of(b)
    return CullPredicate(
        f"exclusive_pair:{a}+{b}",
        lambda c: c.description[ia] and c.description[ib],
    )


def default_cull_predicates(
    catalog: SymptomCatalog,
    pairs: Iterable[tuple[str, str]] | None = None,
) -> list[CullPredicate]:
    """Zero-symptom vectors plus co-present mutually-exclusive pairs (by
    default the three pairwise-exclusive CSF aspects, where present in the
    catalog)."""
    preds = [no_symptoms_predicate()]
    for a, b in (DEFAULT_EXCLUSIVE_PAIRS if pairs is None else pairs):
        if a in catalog and b in catalog:
            preds.append(exclusive_pair_predicate(catalog, a, b))
    return preds


def cull(
    cases: Iterable[GeneratedCase],
    predicates: Sequence[CullPredicate],
) -> tuple[list[GeneratedCase], list[tuple[GeneratedCase, tuple[str, ...]]]]:
    """Split cases into kept and removed; a case is removed iff any predicate
    matches, and carries the names of all matching predicates."""
    kept: list[GeneratedCase] = []
    removed: list[tuple[GeneratedCase, tuple[str, ...]]] = []
    for case in cases:
        reasons = tuple(p.name for p in predicates if p.matches(case))
        if reasons:
            removed.append((case, reasons))
        else:
            kept.append(case)
    return kept, removed


def log_posteriors(table: ProbabilityTable, description: SymptomVector) -> np.ndarray:
    """Naive-Bayes log posterior (up to the shared evidence term) per disease,
    with all probabilities floored at 1e-6 before taking logs."""
    bits = np.array(description.bits, dtype=bool)
    if bits.shape != (table.size,):
        raise DomainError(f"vector length {len(bits)} != table size {table.size}")
    log_prior = np.log(np.maximum(table.priors, PROB_FLOOR))
    log_p = np.log(np.maximum(table.conditionals, PROB_FLOOR))
    log_q = np.log(np.maximum(1.0 - table.conditionals, PROB_FLOOR))
    return log_prior + log_p[:, bits].sum(axis=1) + log_q[:, ~bits].sum(axis=1)


def oracle_label(table: ProbabilityTable, description: SymptomVector) -> Solution:
    """Programmatic stand-in for the expert's true diagnosis: the posterior
    argmax becomes the primary and the next two diseases the differentials,
    ties broken by the canonical label order."""
    scores = log_posteriors(table, description)
    order = np.lexsort((np.arange(len(DIAGNOSES)), -scores))
    top = [DIAGNOSES[i] for i in order[:3]]
    return Solution(primary=top[0], differentials=(top[1], top[2]))


def label_cases(
    table: ProbabilityTable, cases: Iterable[GeneratedCase]
) -> list[tuple[GeneratedCase, Solution]]:
    return [(c, oracle_label(table, c.description)) for c in cases]
