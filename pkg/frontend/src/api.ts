import type {
  ApiErrorBody,
  CaseView,
  CatalogView,
  ReportView,
  SessionView,
  SolutionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody | null = null;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  return new ApiError(
    response.status,
    body?.code ?? "unknown",
    body?.message ?? `HTTP ${response.status}`,
  );
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  getCatalog(): Promise<CatalogView> {
    return this.request("/api/catalog");
  }

  createSession(presentIds: number[]): Promise<SessionView> {
    return this.request("/api/sessions", {
      method: "POST",
      body: JSON.stringify({ present: presentIds, interactive: true }),
    });
  }

  getSession(sessionId: string): Promise<SessionView> {
    return this.request(`/api/sessions/${sessionId}`);
  }

  select(sessionId: string, rank: number): Promise<SessionView> {
    return this.request(`/api/sessions/${sessionId}/selection`, {
      method: "POST",
      body: JSON.stringify({ rank }),
    });
  }

  sendVerdict(
    sessionId: string,
    success: boolean,
    repair?: { primary: string; differentials: string[] },
  ): Promise<SessionView> {
    return this.request(`/api/sessions/${sessionId}/verdict`, {
      method: "POST",
      body: JSON.stringify({ success, repair: repair ?? null }),
    });
  }

  retain(sessionId: string, retainDiag: boolean, retainAdapt: boolean): Promise<SessionView> {
    return this.request(`/api/sessions/${sessionId}/retain`, {
      method: "POST",
      body: JSON.stringify({ retain_diag: retainDiag, retain_adapt: retainAdapt }),
    });
  }

  listCases(): Promise<{ cases: CaseView[]; revisions: { cases: number; adaptation_cases: number } }> {
    return this.request("/api/cases");
  }

  listAdaptationCases(): Promise<{
    cases: { case_id: number; delta: string; s1: SolutionView; s2: SolutionView }[];
  }> {
    return this.request("/api/adaptation-cases");
  }

  listRules(): Promise<{ rules: { rule_id: string; kind: string; source: string }[] }> {
    return this.request("/api/rules");
  }

  runExperiment(body: Record<string, unknown>): Promise<{ report_id: string; metrics: Record<string, number> }> {
    return this.request("/api/experiments", { method: "POST", body: JSON.stringify(body) });
  }

  listReports(): Promise<{ reports: string[] }> {
    return this.request("/api/reports");
  }

  getReport(reportId: string): Promise<ReportView> {
    return this.request(`/api/reports/${reportId}`);
  }

  async getReportCurve(reportId: string): Promise<string> {
    const response = await fetch(`${this.baseUrl}/api/reports/${reportId}/curve`);
    if (!response.ok) {
      throw await parseError(response);
    }
    return response.text();
  }
}
