"""Hybrid rule + case-based clinical decision-support engine for acute
bacterial meningitis, with a synthetic case generator and evaluation
experiments. All shipped data is invented; this is not a medical device.
"""

from .adaptation import (
    AdaptationCaseBase,
    AdaptationOutcome,
    CaseReused,
    RuleDerived,
    adapt,
    apply_adaptation_rules,
    delta_similarity,
    retrieve_adaptation,
)
from .casegen import (
    GeneratedCase,
    GeneratorConfig,
    GenMode,
    ProbabilityTable,
    cull,
    generate,
    oracle_label,
)
from .domain import (
    AdaptationCase,
    Change,
    DeltaVector,
    Diagnosis,
    DiagnosticCase,
    Solution,
    Symptom,
    SymptomCatalog,
    SymptomVector,
    delta,
    similarity,
    solution_equal,
)
from .retrieval import CaseBase, Decision, RetrievalResult, retrieve, reuse_decision
from .rules import RuleBase, infer, parse_rules, prediagnose
from .session import Engine, EngineConfig, Session, SessionState, Verdict
from .store import Repository, init_repository, load_repository

__version__ = "0.1.0"

__all__ = [
    "AdaptationCase",
    "AdaptationCaseBase",
    "AdaptationOutcome",
    "CaseBase",
    "CaseReused",
    "Change",
    "Decision",
    "DeltaVector",
    "Diagnosis",
    "DiagnosticCase",
    "Engine",
    "EngineConfig",
    "GeneratedCase",
    "GeneratorConfig",
    "GenMode",
    "ProbabilityTable",
    "Repository",
    "RetrievalResult",
    "RuleBase",
    "RuleDerived",
    "Session",
    "SessionState",
    "Solution",
    "Symptom",
    "SymptomCatalog",
    "SymptomVector",
    "Verdict",
    "adapt",
    "apply_adaptation_rules",
    "cull",
    "delta",
    "delta_similarity",
    "generate",
    "infer",
    "init_repository",
    "load_repository",
    "oracle_label",
    "parse_rules",
    "prediagnose",
    "retrieve",
    "retrieve_adaptation",
    "reuse_decision",
    "similarity",
    "solution_equal",
]
