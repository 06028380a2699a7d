// Display-only grouping of catalog symptoms for the checklist. The engine
// knows nothing about groups; anything unmatched lands in "Other findings".

import type { SymptomView } from "./types.js";

export interface GroupSpec {
  title: string;
  matches: (name: string) => boolean;
}

export const GROUP_SPECS: GroupSpec[] = [
  { title: "CSF findings", matches: (n) => n.startsWith("csf_") || n === "koch_bacillus" || n === "bacteria_in_csf" },
  {
    title: "Neurological signs",
    matches: (n) =>
      [
        "convulsions",
        "nape_stiffness",
        "trunk_stiffness",
        "facial_paralysis",
        "muscular_hypotonicity",
        "somnolence",
        "depression",
        "irritability",
        "hypertense_fontanelle",
      ].includes(n),
  },
  { title: "Imaging", matches: (n) => n.includes("ecography") || n.includes("tomography") },
  {
    title: "General",
    matches: (n) =>
      ["fever", "vomits", "skin_purpuric_syndrome", "cervical_adenopathies", "haemocultivation_with_bacteria"].includes(
        n,
      ),
  },
];

export interface SymptomGroup {
  title: string;
  symptoms: SymptomView[];
}

export function groupSymptoms(symptoms: SymptomView[]): SymptomGroup[] {
  const groups: SymptomGroup[] = GROUP_SPECS.map((g) => ({ title: g.title, symptoms: [] }));
  const other: SymptomGroup = { title: "Other findings", symptoms: [] };
  for (const s of symptoms) {
    const spec = GROUP_SPECS.find((g) => g.matches(s.name));
    if (spec) {
      groups[GROUP_SPECS.indexOf(spec)].symptoms.push(s);
    } else {
      other.symptoms.push(s);
    }
  }
  return [...groups.filter((g) => g.symptoms.length > 0), other];
}

export function prettyName(name: string): string {
  return name.replace(/_/g, " ");
}
