import { describe, expect, it } from "vitest";

import { baseBrowserHtml, candidatesHtml, checklistHtml, solutionPanelHtml } from "../src/render.js";
import { initialState, provenanceBadge, revisionsDiffer } from "../src/state.js";
import type { CatalogView, SessionView } from "../src/types.js";

const catalog: CatalogView = {
  size: 4,
  symptoms: [
    { id: 0, name: "fever", influential: false },
    { id: 1, name: "csf_cloudy_aspect", influential: false },
    { id: 2, name: "vomits", influential: false },
    { id: 3, name: "finding_3", influential: false },
  ],
  influential: [],
  diagnoses: ["ABM", "Encephalitis"],
  revisions: { cases: 0, adaptation_cases: 0 },
};

function sessionStub(overrides: Partial<SessionView>): SessionView {
  return {
    session_id: "s1",
    state: "solved",
    query: "1100",
    candidates: null,
    selected_case_id: null,
    proposed: { primary: "ABM", differentials: [], text: "ABM" },
    provenance: null,
    verdict: null,
    final_solution: null,
    recorded_success: null,
    retention: null,
    events: [],
    revisions: { cases: 0, adaptation_cases: 0 },
    base_sizes: { cases: 0, adaptation_cases: 0 },
    ...overrides,
  };
}

describe("checklistHtml", () => {
  it("renders grouped checkboxes and keeps checked state", () => {
    const html = checklistHtml(catalog, new Set([1]));
    expect(html).toContain("CSF findings");
    expect(html).toContain('data-symptom="1" checked');
    expect(html).toContain("Other findings");
  });
});

describe("solutionPanelHtml provenance badges", () => {
  it("shows the pre-diagnosis badge with fired rules", () => {
    const session = sessionStub({
      provenance: {
        kind: "prediagnosis",
        trace: [
          { rule_id: "prediag_3", action: { kind: "primary", diagnosis: "ABM" }, applied: true, note: "" },
        ],
      },
    });
    const html = solutionPanelHtml(session);
    expect(html).toContain("pre-diagnosis");
    expect(html).toContain("prediag_3");
    expect(provenanceBadge(session).label).toBe("pre-diagnosis");
  });

  it("distinguishes reuse, adaptation-case and rule-derived provenance", () => {
    expect(
      provenanceBadge(sessionStub({ provenance: { kind: "direct_reuse", case_id: 1, score: 1 } })).label,
    ).toBe("reuse");
    const adaptedReuse = sessionStub({
      provenance: {
        kind: "adapted",
        source_case_id: 1,
        score: 0.9,
        outcome: {
          s2: { primary: "ABM", differentials: [], text: "ABM" },
          s1: { primary: "ABM", differentials: [], text: "ABM" },
          delta: "====",
          undetermined: false,
          provenance: { kind: "adaptation_case_reused", case_id: 4, score: 1 },
        },
      },
    });
    expect(provenanceBadge(adaptedReuse).label).toBe("adaptation case");
    const ruleDerived = sessionStub({
      provenance: {
        kind: "adapted",
        source_case_id: 1,
        score: 0.9,
        outcome: {
          s2: { primary: "ABM", differentials: [], text: "ABM" },
          s1: { primary: "ABM", differentials: [], text: "ABM" },
          delta: "+===",
          undetermined: false,
          provenance: {
            kind: "rule_derived",
            trace: [
              { rule_id: "adapt_3", action: { kind: "discard", diagnosis: "ABM" }, applied: true, note: "" },
              { rule_id: "adapt_3", action: { kind: "demote", diagnosis: "ABM" }, applied: false, note: "skipped" },
            ],
          },
        },
      },
    });
    const badge = provenanceBadge(ruleDerived);
    expect(badge.label).toBe("rule-derived");
    expect(badge.firedRules).toEqual(["adapt_3"]);
  });
});

describe("candidatesHtml", () => {
  it("renders scores and symptom diffs per candidate", () => {
    const session = sessionStub({
      state: "awaiting_selection",
      proposed: null,
      candidate_cases: [
        {
          case_id: 9,
          rank: 1,
          score: 0.75,
          present: [0, 2],
          bits: "1010",
          solution: { primary: "Encephalitis", differentials: [], text: "Encephalitis" },
          success: true,
        },
      ],
    });
    const html = candidatesHtml(session, catalog);
    expect(html).toContain("case 9");
    expect(html).toContain("0.7500");
    expect(html).toContain("+ csf cloudy aspect"); // in query, not in candidate
    expect(html).toContain("vomits"); // candidate-only finding
    expect(html).toContain('data-select-rank="1"');
  });
});

describe("base browser and staleness", () => {
  it("shows the case count and flags stale revisions", () => {
    const state = initialState();
    state.cases = [
      { case_id: 0, present: [0], bits: "1000", solution: { primary: "ABM", differentials: [], text: "ABM" }, success: true },
    ];
    state.casesRevision = { cases: 0, adaptation_cases: 0 };
    state.lastSeenRevisions = { cases: 0, adaptation_cases: 0 };
    let html = baseBrowserHtml(state);
    expect(html).toContain('id="case-count">1<');
    expect(html).not.toContain("stale");

    state.lastSeenRevisions = { cases: 2, adaptation_cases: 0 };
    html = baseBrowserHtml(state);
    expect(html).toContain("stale");
    expect(revisionsDiffer(state.casesRevision, state.lastSeenRevisions)).toBe(true);
  });
});
