// Client-side mirror of the solution invariants, used to reject a repair
// before it is submitted. The server re-validates everything.

export interface RepairDraft {
  primary: string | null;
  differentials: (string | null)[];
}

export const MAX_DIFFERENTIALS = 2;

export function validateRepair(draft: RepairDraft, knownDiagnoses: string[]): string[] {
  const errors: string[] = [];
  const chosen = draft.differentials.filter((d): d is string => !!d);
  if (!draft.primary) {
    errors.push("a repair needs a primary diagnosis");
    if (chosen.length > 0) {
      errors.push("differentials require a primary diagnosis");
    }
    return errors;
  }
  if (!knownDiagnoses.includes(draft.primary)) {
    errors.push(`unknown diagnosis: ${draft.primary}`);
  }
  if (chosen.length > MAX_DIFFERENTIALS) {
    errors.push(`at most ${MAX_DIFFERENTIALS} differentials allowed`);
  }
  const all = [draft.primary, ...chosen];
  const seen = new Set<string>();
  for (const d of all) {
    if (seen.has(d)) {
      errors.push(`${d} appears twice in the solution`);
    }
    seen.add(d);
  }
  for (const d of chosen) {
    if (!knownDiagnoses.includes(d)) {
      errors.push(`unknown diagnosis: ${d}`);
    }
  }
  return errors;
}

export function solutionLabel(s: { primary: string | null; differentials: string[] } | null): string {
  if (!s || !s.primary) {
    return "undetermined";
  }
  return s.differentials.length ? `${s.primary}; ${s.differentials.join(", ")}` : s.primary;
}
