// Wire types for the decision-support service API. The UI never computes a
// diagnosis itself; everything below mirrors server responses.

export interface SolutionView {
  primary: string | null;
  differentials: string[];
  text: string;
}

export interface SymptomView {
  id: number;
  name: string;
  influential: boolean;
}

export interface CatalogView {
  size: number;
  symptoms: SymptomView[];
  influential: number[];
  diagnoses: string[];
  revisions: Revisions;
}

export interface Revisions {
  cases: number;
  adaptation_cases: number;
}

export interface BaseSizes {
  cases: number;
  adaptation_cases: number;
}

export interface CandidateView {
  case_id: number;
  rank: number;
  score: number;
  present: number[];
  bits: string;
  solution: SolutionView;
  success: boolean;
}

export interface TraceEntryView {
  rule_id: string;
  action: { kind: string; diagnosis: string };
  applied: boolean;
  note: string;
}

export interface AdaptationInnerProvenance {
  kind: "adaptation_case_reused" | "rule_derived";
  case_id?: number;
  score?: number;
  trace?: TraceEntryView[];
}

export interface ProvenanceView {
  kind: "prediagnosis" | "direct_reuse" | "adapted" | "undetermined";
  trace?: TraceEntryView[];
  case_id?: number;
  score?: number;
  source_case_id?: number;
  reason?: string;
  outcome?: {
    s2: SolutionView;
    s1: SolutionView;
    delta: string;
    undetermined: boolean;
    provenance: AdaptationInnerProvenance;
  };
}

export interface SessionEvent {
  step: string;
  [key: string]: unknown;
}

export interface SessionView {
  session_id: string;
  state: "new" | "awaiting_selection" | "solved" | "revised" | "retained";
  query: string;
  candidates: { k: number; ranked: [number, number][] } | null;
  candidate_cases?: CandidateView[];
  selected_case_id: number | null;
  proposed: SolutionView | null;
  provenance: ProvenanceView | null;
  verdict: { success: boolean; repaired: SolutionView | null } | null;
  final_solution: SolutionView | null;
  recorded_success: boolean | null;
  retention: { case_id: number | null; adaptation_id: number | null; notes: string[] } | null;
  events: SessionEvent[];
  revisions: Revisions;
  base_sizes: BaseSizes;
  before?: BaseSizes;
  after?: BaseSizes;
}

export interface CaseView {
  case_id: number;
  present: number[];
  bits: string;
  solution: SolutionView;
  success: boolean;
}

export interface ReportIteration {
  iteration: number;
  accuracy: number;
  removed: string[];
}

export interface ReportView {
  kind: string;
  config: Record<string, unknown>;
  metrics: Record<string, number>;
  iterations: ReportIteration[];
  phases: Record<string, unknown>[];
  reference: Record<string, unknown>;
  records: unknown[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
