// HTML string builders for every panel. Pure functions of the state so the
// test suite can assert on the markup without a DOM.

import { chartModel, chartSvg } from "./chart.js";
import { diffAgainstCandidate } from "./diff.js";
import { groupSymptoms, prettyName } from "./groups.js";
import { solutionLabel } from "./solution.js";
import { baseBrowserStale, provenanceBadge, type AppState } from "./state.js";
import type { CatalogView, SessionView, SolutionView } from "./types.js";

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

export function checklistHtml(catalog: CatalogView, checked: Set<number>): string {
  const groups = groupSymptoms(catalog.symptoms);
  const blocks = groups.map((g) => {
    const items = g.symptoms
      .map(
        (s) =>
          `<label class="symptom"><input type="checkbox" data-symptom="${s.id}"` +
          `${checked.has(s.id) ? " checked" : ""}/> ${esc(prettyName(s.name))}</label>`,
      )
      .join("");
    return `<details class="group" open><summary>${esc(g.title)} (${g.symptoms.length})</summary>${items}</details>`;
  });
  return blocks.join("");
}

function solutionHtml(s: SolutionView | null): string {
  return `<span class="solution">${esc(solutionLabel(s))}</span>`;
}

export function candidatesHtml(session: SessionView, catalog: CatalogView): string {
  if (!session.candidate_cases?.length) {
    return "";
  }
  const rows = session.candidate_cases
    .map((c) => {
      const diff = diffAgainstCandidate(session.query, c.bits);
      const added = diff.added.map((i) => esc(prettyName(catalog.symptoms[i].name)));
      const removed = diff.removed.map((i) => esc(prettyName(catalog.symptoms[i].name)));
      const shared = diff.shared.map((i) => esc(prettyName(catalog.symptoms[i].name)));
      return (
        `<article class="candidate" data-rank="${c.rank}">` +
        `<header>#${c.rank} case ${c.case_id} <span class="score">${c.score.toFixed(4)}</span></header>` +
        `<div>${solutionHtml(c.solution)}</div>` +
        `<div class="diff">` +
        (shared.length ? `<span class="shared">${shared.join(", ")}</span>` : "") +
        (added.length ? `<span class="added">+ ${added.join(", + ")}</span>` : "") +
        (removed.length ? `<span class="removed">&minus; ${removed.join(", &minus; ")}</span>` : "") +
        `</div>` +
        `<button data-select-rank="${c.rank}">Use this case</button>` +
        `</article>`
      );
    })
    .join("");
  return `<div class="candidates">${rows}</div>`;
}

export function solutionPanelHtml(session: SessionView | null): string {
  if (!session || !session.proposed) {
    return `<p class="muted">No proposal yet.</p>`;
  }
  const badge = provenanceBadge(session);
  const fired = badge.firedRules.length
    ? `<div class="fired">fired: ${badge.firedRules.map(esc).join(", ")}</div>`
    : "";
  const finalPart = session.final_solution
    ? `<div class="final">final: ${solutionHtml(session.final_solution)} ` +
      `<span class="muted">(success=${session.recorded_success})</span></div>`
    : "";
  return (
    `<div class="proposal">` +
    `<span class="badge badge-${badge.label.replace(/[^a-z]+/g, "-")}">${esc(badge.label)}</span>` +
    `${solutionHtml(session.proposed)}${fired}${finalPart}</div>`
  );
}

export function reviseDialogHtml(catalog: CatalogView): string {
  const options = (selected: string) =>
    [`<option value=""></option>`]
      .concat(catalog.diagnoses.map((d) => `<option value="${esc(d)}">${esc(d)}</option>`))
      .join("")
      .replace(`value="${selected}"`, `value="${selected}" selected`);
  return (
    `<div class="revise">` +
    `<label><input type="radio" name="verdict" value="success" checked/> success</label>` +
    `<label><input type="radio" name="verdict" value="failure"/> failure</label>` +
    `<fieldset class="repair"><legend>repair (optional)</legend>` +
    `<label>primary <select id="repair-primary">${options("")}</select></label>` +
    `<label>differential 1 <select id="repair-diff1">${options("")}</select></label>` +
    `<label>differential 2 <select id="repair-diff2">${options("")}</select></label>` +
    `<div id="repair-errors" class="errors"></div>` +
    `</fieldset>` +
    `<button id="send-verdict">Submit verdict</button>` +
    `</div>`
  );
}

export function retainHtml(session: SessionView): string {
  const adapted = session.provenance?.kind === "adapted";
  return (
    `<div class="retain">` +
    `<label><input type="checkbox" id="retain-diag" checked/> retain case</label>` +
    `<label><input type="checkbox" id="retain-adapt" ${adapted ? "checked" : "disabled"}/> retain adaptation knowledge</label>` +
    `<button id="send-retain">Retain</button>` +
    `</div>`
  );
}

export function baseBrowserHtml(state: AppState): string {
  const stale = baseBrowserStale(state)
    ? `<div class="stale">Base changed on the server &mdash; refresh.</div>`
    : "";
  const rows = state.cases
    .slice(-12)
    .reverse()
    .map(
      (c) =>
        `<tr><td>${c.case_id}</td><td>${solutionHtml(c.solution)}</td>` +
        `<td>${c.present.length} findings</td><td>${c.success ? "ok" : "failed"}</td></tr>`,
    )
    .join("");
  return (
    `${stale}<p>cases: <strong id="case-count">${state.cases.length}</strong></p>` +
    `<table class="cases"><thead><tr><th>id</th><th>solution</th><th>profile</th><th>outcome</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>`
  );
}

export function reportHtml(state: AppState): string {
  if (!state.report) {
    return `<p class="muted">No report loaded.</p>`;
  }
  const metrics = Object.entries(state.report.metrics)
    .map(([k, v]) => `<tr><td>${esc(k)}</td><td>${typeof v === "number" ? v.toFixed(4) : v}</td></tr>`)
    .join("");
  let chart = "";
  if (state.reportCurve?.length) {
    chart = chartSvg(chartModel(state.reportCurve));
  }
  return (
    `<h3>${esc(state.report.kind)} report</h3>` +
    `<table class="metrics"><tbody>${metrics}</tbody></table>${chart}`
  );
}
