// Browser entry point: wires the store, the API client and the renderers.
// All diagnosis logic lives server-side; this file only reacts to responses.

import { ApiClient, ApiError } from "./api.js";
import { parseCurveCsv } from "./chart.js";
import {
  baseBrowserHtml,
  candidatesHtml,
  checklistHtml,
  reportHtml,
  retainHtml,
  reviseDialogHtml,
  solutionPanelHtml,
} from "./render.js";
import { validateRepair } from "./solution.js";
import { initialState, noteRevisions } from "./state.js";

const api = new ApiClient("");
const state = initialState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function showError(err: unknown): void {
  state.error = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
  el("error-bar").textContent = state.error;
  el("error-bar").classList.remove("hidden");
}

function clearError(): void {
  state.error = null;
  el("error-bar").classList.add("hidden");
}

function renderChecklist(): void {
  if (!state.catalog) {
    return;
  }
  el("checklist").innerHTML = checklistHtml(state.catalog, state.checked);
  for (const input of el("checklist").querySelectorAll<HTMLInputElement>("input[data-symptom]")) {
    input.addEventListener("change", () => {
      const id = Number(input.dataset.symptom);
      if (input.checked) {
        state.checked.add(id);
      } else {
        state.checked.delete(id);
      }
    });
  }
}

function renderSession(): void {
  const session = state.session;
  el("candidates").innerHTML =
    session && state.catalog && session.state === "awaiting_selection"
      ? candidatesHtml(session, state.catalog)
      : "";
  for (const button of el("candidates").querySelectorAll<HTMLButtonElement>("button[data-select-rank]")) {
    button.addEventListener("click", () => void doSelect(Number(button.dataset.selectRank)));
  }
  el("solution-panel").innerHTML = solutionPanelHtml(session);
  const showRevise = session?.state === "solved";
  el("revise-panel").innerHTML = showRevise && state.catalog ? reviseDialogHtml(state.catalog) : "";
  if (showRevise) {
    el("send-verdict").addEventListener("click", () => void doVerdict());
  }
  const showRetain = session?.state === "revised";
  el("retain-panel").innerHTML = showRetain && session ? retainHtml(session) : "";
  if (showRetain) {
    el("send-retain").addEventListener("click", () => void doRetain());
  }
}

function renderBases(): void {
  el("base-browser").innerHTML = baseBrowserHtml(state);
}

function renderReport(): void {
  el("experiments-output").innerHTML = reportHtml(state);
}

async function refreshCases(): Promise<void> {
  const body = await api.listCases();
  state.cases = body.cases;
  state.casesRevision = body.revisions;
  noteRevisions(state, body.revisions);
  renderBases();
}

async function doDiagnose(): Promise<void> {
  clearError();
  try {
    const session = await api.createSession([...state.checked].sort((a, b) => a - b));
    state.session = session;
    noteRevisions(state, session.revisions);
    renderSession();
  } catch (err) {
    showError(err);
  }
}

async function doSelect(rank: number): Promise<void> {
  if (!state.session) {
    return;
  }
  clearError();
  try {
    state.session = await api.select(state.session.session_id, rank);
    noteRevisions(state, state.session.revisions);
    renderSession();
  } catch (err) {
    showError(err);
  }
}

function readRepair(): { primary: string; differentials: string[] } | undefined {
  const primary = el<HTMLSelectElement>("repair-primary").value || null;
  const diffs = [
    el<HTMLSelectElement>("repair-diff1").value || null,
    el<HTMLSelectElement>("repair-diff2").value || null,
  ];
  if (!primary && diffs.every((d) => !d)) {
    return undefined;
  }
  const errors = validateRepair({ primary, differentials: diffs }, state.catalog?.diagnoses ?? []);
  if (errors.length) {
    el("repair-errors").textContent = errors.join("; ");
    throw new Error(errors.join("; "));
  }
  return { primary: primary as string, differentials: diffs.filter((d): d is string => !!d) };
}

async function doVerdict(): Promise<void> {
  if (!state.session) {
    return;
  }
  clearError();
  try {
    const success =
      el<HTMLInputElement>("revise-panel").querySelector<HTMLInputElement>('input[value="success"]')!.checked;
    const repair = readRepair();
    state.session = await api.sendVerdict(state.session.session_id, success, repair);
    noteRevisions(state, state.session.revisions);
    renderSession();
  } catch (err) {
    showError(err);
  }
}

async function doRetain(): Promise<void> {
  if (!state.session) {
    return;
  }
  clearError();
  try {
    const retainDiag = el<HTMLInputElement>("retain-diag").checked;
    const retainAdaptBox = el<HTMLInputElement>("retain-adapt");
    const retainAdapt = !retainAdaptBox.disabled && retainAdaptBox.checked;
    state.session = await api.retain(state.session.session_id, retainDiag, retainAdapt);
    noteRevisions(state, state.session.revisions);
    renderSession();
    await refreshCases();
  } catch (err) {
    showError(err);
  }
}

async function doRunRobustness(): Promise<void> {
  clearError();
  try {
    const { report_id } = await api.runExperiment({
      kind: "robustness",
      n_cases: 80,
      seed: 7,
      sample_size: 25,
    });
    state.report = await api.getReport(report_id);
    state.reportCurve = parseCurveCsv(await api.getReportCurve(report_id));
    renderReport();
  } catch (err) {
    showError(err);
  }
}

async function doRunAccuracy(): Promise<void> {
  clearError();
  try {
    const { report_id } = await api.runExperiment({
      kind: "accuracy",
      n_cases: 80,
      seed: 7,
      leave_one_out: true,
    });
    state.report = await api.getReport(report_id);
    state.reportCurve = null;
    renderReport();
  } catch (err) {
    showError(err);
  }
}

async function boot(): Promise<void> {
  try {
    state.catalog = await api.getCatalog();
    renderChecklist();
    await refreshCases();
  } catch (err) {
    showError(err);
  }
  el("diagnose-button").addEventListener("click", () => void doDiagnose());
  el("clear-button").addEventListener("click", () => {
    state.checked.clear();
    renderChecklist();
  });
  el("refresh-cases").addEventListener("click", () => void refreshCases());
  el("run-robustness").addEventListener("click", () => void doRunRobustness());
  el("run-accuracy").addEventListener("click", () => void doRunAccuracy());
}

void boot();
