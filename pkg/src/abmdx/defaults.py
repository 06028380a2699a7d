"""Access to the packaged default knowledge files: the 81-symptom catalog,
the shipped rule set, the synthetic example probability table, and the
default symptom-removal schedule for the robustness experiment.
"""
from __future__ import annotations

from importlib import resources

from .casegen import ProbabilityTable
from .domain import SymptomCatalog
from .rules import RuleBase, parse_rules
from .store import catalog_from_text, table_from_text

# Order matters: findings whose detection depends most on examiner experience
# (pathogen identification, CSF aspect, imaging) drop out first, overt
# bedside signs last.
DEFAULT_REMOVAL_SCHEDULE: tuple[str, ...] = (
    "koch_bacillus",
    "csf_crystalline_aspect",
    "bacteria_in_csf",
    "haemocultivation_with_bacteria",
    "hydrocephaly_in_ecography",
    "tumors_in_tomography",
    "csf_cloudy_aspect",
    "csf_clear_aspect",
    "muscular_hypotonicity",
    "cervical_adenopathies",
)


def _data_text(name: str) -> str:
    return resources.files("abmdx.data").joinpath(name).read_text(encoding="utf-8")


def default_catalog() -> SymptomCatalog:
    return catalog_from_text(_data_text("catalog.tsv"), "<packaged catalog.tsv>")


def default_prediag_rules_text() -> str:
    return _data_text("prediagnosis.rules")


def default_adapt_rules_text() -> str:
    return _data_text("adaptation.rules")


def default_rulebase(catalog: SymptomCatalog | None = None) -> RuleBase:
    catalog = catalog or default_catalog()
    prediag = parse_rules(default_prediag_rules_text(), catalog)
    adapt = parse_rules(default_adapt_rules_text(), catalog, order_base=len(prediag))
    return RuleBase(prediag.rules + adapt.rules)


def default_table(catalog: SymptomCatalog | None = None) -> ProbabilityTable:
    catalog = catalog or default_catalog()
    return table_from_text(
        _data_text("probability_table.txt"), catalog.size, "<packaged probability_table.txt>"
    )


def default_removal_schedule_ids(catalog: SymptomCatalog) -> list[int]:
    return [catalog.id_of(name) for name in DEFAULT_REMOVAL_SCHEDULE if name in catalog]
