#!/usr/bin/env python3
"""Regenerate the packaged default knowledge files under src/abmdx/data/.

The symptom catalog carries the named clinical findings the engine's default
rules refer to, padded with documented placeholder findings up to 81 entries.
The probability table is a synthetic, NON-CLINICAL example: priors and
per-disease symptom probabilities are invented to give each disease a
recognizable profile so the shipped experiments are meaningful at desk scale.
Do not use any of this for actual medical decisions.
"""
from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from abmdx.casegen import ProbabilityTable  # noqa: E402
from abmdx.domain import DIAGNOSES, Symptom, SymptomCatalog  # noqa: E402
from abmdx.store import catalog_to_text, table_to_text  # noqa: E402

DATA = ROOT / "src" / "abmdx" / "data"

NAMED_SYMPTOMS = [
    "convulsions",
    "depression",
    "fever",
    "hypertense_fontanelle",
    "nape_stiffness",
    "trunk_stiffness",
    "skin_purpuric_syndrome",
    "vomits",
    "somnolence",
    "irritability",
    "facial_paralysis",
    "cervical_adenopathies",
    "haemocultivation_with_bacteria",
    "bacteria_in_csf",
    "muscular_hypotonicity",
    "csf_cloudy_aspect",
    "csf_clear_aspect",
    "hydrocephaly_in_ecography",
    "tumors_in_tomography",
    "koch_bacillus",
    "csf_crystalline_aspect",
]

CATALOG_SIZE = 81

# Invented, non-clinical example values. Column order follows DIAGNOSES:
# ABM, AcuteViralMeningitis, TuberculousMeningitis, Encephalitis, BrainAbscess,
# Meningism, MeningealReactionNearbyInflammation, MeningealHaemorrhage, BrainTumor.
PRIORS = [0.22, 0.20, 0.08, 0.12, 0.07, 0.10, 0.08, 0.06, 0.07]

NAMED_CONDITIONALS = {
    "convulsions":                    [0.30, 0.15, 0.20, 0.45, 0.25, 0.05, 0.10, 0.30, 0.35],
    "depression":                     [0.25, 0.20, 0.30, 0.50, 0.20, 0.10, 0.10, 0.25, 0.20],
    "fever":                          [0.85, 0.75, 0.60, 0.55, 0.50, 0.60, 0.55, 0.10, 0.05],
    "hypertense_fontanelle":          [0.35, 0.15, 0.20, 0.10, 0.10, 0.10, 0.10, 0.15, 0.10],
    "nape_stiffness":                 [0.70, 0.55, 0.50, 0.30, 0.15, 0.50, 0.35, 0.50, 0.10],
    "trunk_stiffness":                [0.40, 0.25, 0.30, 0.15, 0.05, 0.20, 0.15, 0.25, 0.05],
    "skin_purpuric_syndrome":         [0.30, 0.05, 0.02, 0.02, 0.02, 0.02, 0.02, 0.05, 0.01],
    "vomits":                         [0.60, 0.50, 0.45, 0.40, 0.35, 0.40, 0.35, 0.55, 0.45],
    "somnolence":                     [0.45, 0.35, 0.50, 0.60, 0.30, 0.15, 0.20, 0.40, 0.30],
    "irritability":                   [0.50, 0.40, 0.35, 0.45, 0.20, 0.25, 0.25, 0.30, 0.15],
    "facial_paralysis":               [0.10, 0.05, 0.15, 0.20, 0.15, 0.02, 0.05, 0.10, 0.20],
    "cervical_adenopathies":          [0.15, 0.10, 0.20, 0.05, 0.10, 0.05, 0.40, 0.02, 0.05],
    "haemocultivation_with_bacteria": [0.40, 0.02, 0.05, 0.02, 0.15, 0.02, 0.05, 0.01, 0.01],
    "bacteria_in_csf":                [0.50, 0.01, 0.02, 0.01, 0.05, 0.01, 0.02, 0.01, 0.01],
    "muscular_hypotonicity":          [0.25, 0.15, 0.20, 0.30, 0.10, 0.05, 0.10, 0.15, 0.10],
    # The cloudy-CSF finding is treated as conclusive for ABM by the default
    # pre-diagnosis rule, so it must never occur under another disease here.
    "csf_cloudy_aspect":              [0.55, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00],
    "csf_clear_aspect":               [0.05, 0.60, 0.30, 0.50, 0.30, 0.55, 0.45, 0.15, 0.30],
    "hydrocephaly_in_ecography":      [0.10, 0.02, 0.25, 0.05, 0.10, 0.02, 0.02, 0.05, 0.30],
    "tumors_in_tomography":           [0.01, 0.01, 0.02, 0.02, 0.35, 0.01, 0.02, 0.02, 0.60],
    # Pathogen detection specific to tuberculous meningitis; the default
    # adaptation rule discards ABM when it newly appears.
    "koch_bacillus":                  [0.00, 0.00, 0.45, 0.00, 0.00, 0.00, 0.00, 0.00, 0.00],
    "csf_crystalline_aspect":         [0.02, 0.20, 0.35, 0.10, 0.05, 0.20, 0.15, 0.05, 0.05],
}

SIGNATURE_P = 0.55
SIGNATURE_BACKGROUND = 0.03
SIGNATURE_BLOCK = 4  # placeholder findings per disease, assigned in label order


def build_catalog() -> SymptomCatalog:
    names = list(NAMED_SYMPTOMS)
    names += [f"finding_{i}" for i in range(len(names), CATALOG_SIZE)]
    return SymptomCatalog(tuple(Symptom(i, n) for i, n in enumerate(names)))


def build_table(catalog: SymptomCatalog) -> ProbabilityTable:
    n_dx = len(DIAGNOSES)
    cond = [[0.0] * catalog.size for _ in range(n_dx)]
    for name, row in NAMED_CONDITIONALS.items():
        sid = catalog.id_of(name)
        for d in range(n_dx):
            cond[d][sid] = row[d]
    block_start = len(NAMED_SYMPTOMS)
    for d in range(n_dx):
        for sid in range(block_start, block_start + SIGNATURE_BLOCK * n_dx):
            owner = (sid - block_start) // SIGNATURE_BLOCK
            cond[d][sid] = SIGNATURE_P if owner == d else SIGNATURE_BACKGROUND
    for sid in range(block_start + SIGNATURE_BLOCK * n_dx, catalog.size):
        for d in range(n_dx):
            cond[d][sid] = 0.08 + 0.02 * ((sid + d) % 8)
    priors = {dx: PRIORS[i] for i, dx in enumerate(DIAGNOSES)}
    conditionals = {dx: cond[i] for i, dx in enumerate(DIAGNOSES)}
    return ProbabilityTable.from_maps(catalog.size, priors, conditionals)


PREDIAG_RULES = """\
# Conclusive pre-diagnosis rules. A finding listed here settles the diagnosis
# on its own and bypasses case retrieval entirely.
PREDIAG IF present(csf_cloudy_aspect) THEN primary(ABM)
"""

ADAPT_RULES = """\
# Solution-adaptation rules, keyed on symptom differences between the current
# case and the retrieved one.
ADAPT IF added(koch_bacillus) THEN discard(ABM)
ADAPT IF role(ABM, primary) AND added(csf_crystalline_aspect) THEN demote(ABM)
"""


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    catalog = build_catalog()
    table = build_table(catalog)
    (DATA / "catalog.tsv").write_text(
        "# Default symptom catalog. Entries named finding_NN are placeholder\n"
        "# findings padding the catalog to its default size of 81; replace the\n"
        "# file to use a different catalog.\n" + catalog_to_text(catalog)
    )
    (DATA / "probability_table.txt").write_text(
        "# Synthetic EXAMPLE probability table: invented, non-clinical values\n"
        "# used to exercise the generator and the experiments at desk scale.\n"
        + table_to_text(table)
    )
    (DATA / "prediagnosis.rules").write_text(PREDIAG_RULES)
    (DATA / "adaptation.rules").write_text(ADAPT_RULES)
    print(f"wrote catalog ({catalog.size} symptoms), table, and rule files to {DATA}")


if __name__ == "__main__":
    main()
