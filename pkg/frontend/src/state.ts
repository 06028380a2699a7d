// Single app store. UI state derives solely from API responses; the store
// only remembers the latest of each and derives staleness from the revision
// counters the server echoes on every response.

import type { CaseView, CatalogView, ReportView, Revisions, SessionView } from "./types.js";

export interface AppState {
  catalog: CatalogView | null;
  checked: Set<number>;
  session: SessionView | null;
  cases: CaseView[];
  casesRevision: Revisions | null;
  lastSeenRevisions: Revisions | null;
  report: ReportView | null;
  reportCurve: [number, number][] | null;
  error: string | null;
}

export function initialState(): AppState {
  return {
    catalog: null,
    checked: new Set(),
    session: null,
    cases: [],
    casesRevision: null,
    lastSeenRevisions: null,
    report: null,
    reportCurve: null,
    error: null,
  };
}

export function revisionsDiffer(a: Revisions | null, b: Revisions | null): boolean {
  if (!a || !b) {
    return false;
  }
  return a.cases !== b.cases || a.adaptation_cases !== b.adaptation_cases;
}

/** The base browser is stale when a newer response carried higher counters
 * than the browser data was loaded with. */
export function baseBrowserStale(state: AppState): boolean {
  return revisionsDiffer(state.casesRevision, state.lastSeenRevisions);
}

export function noteRevisions(state: AppState, revisions: Revisions | undefined): void {
  if (revisions) {
    state.lastSeenRevisions = revisions;
  }
}

export function provenanceBadge(session: SessionView | null): { label: string; firedRules: string[] } {
  if (!session?.provenance) {
    return { label: "", firedRules: [] };
  }
  const prov = session.provenance;
  switch (prov.kind) {
    case "prediagnosis":
      return {
        label: "pre-diagnosis",
        firedRules: [...new Set((prov.trace ?? []).map((t) => t.rule_id))],
      };
    case "direct_reuse":
      return { label: "reuse", firedRules: [] };
    case "adapted": {
      const inner = prov.outcome?.provenance;
      if (inner?.kind === "adaptation_case_reused") {
        return { label: "adaptation case", firedRules: [] };
      }
      return {
        label: "rule-derived",
        firedRules: [...new Set((inner?.trace ?? []).filter((t) => t.applied).map((t) => t.rule_id))],
      };
    }
    case "undetermined":
      return { label: "undetermined", firedRules: [] };
  }
}
