/** Typed client for the orchestrator HTTP API; the UI's only data source. */

import type {
  CreateRunRequest,
  DraftSnapshot,
  PlanSnapshot,
  RunStatus,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`API ${status}: ${detail}`);
    this.name = "ApiError";
  }

  /** Server rejected our plan version because a newer revision exists. */
  get isStaleVersion(): boolean {
    return this.status === 409 && /stale/i.test(this.detail);
  }

  /** Stage-machine conflicts other than staleness (wrong stage, not ready). */
  get isConflict(): boolean {
    return this.status === 409;
  }

  get isNotFound(): boolean {
    return this.status === 404;
  }
}

async function toApiError(resp: Response): Promise<ApiError> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      detail = body.detail;
    } else if (body.detail !== undefined) {
      detail = JSON.stringify(body.detail);
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, detail);
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ReviewApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchImpl(`${this.base}${path}`, init);
    if (!resp.ok) {
      throw await toApiError(resp);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  async listRuns(): Promise<RunStatus[]> {
    const data = await this.request<{ runs: RunStatus[] }>("GET", "/runs");
    return data.runs;
  }

  createRun(body: CreateRunRequest): Promise<RunStatus> {
    return this.request("POST", "/runs", body);
  }

  status(runId: string): Promise<RunStatus> {
    return this.request("GET", `/runs/${runId}`);
  }

  advance(runId: string): Promise<RunStatus> {
    return this.request("POST", `/runs/${runId}/advance`);
  }

  runToCheckpoint(runId: string): Promise<RunStatus> {
    return this.request("POST", `/runs/${runId}/checkpoint`);
  }

  plan(runId: string): Promise<PlanSnapshot> {
    return this.request("GET", `/runs/${runId}/plan`);
  }

  submitFeedback(runId: string, feedback: string): Promise<PlanSnapshot> {
    return this.request("POST", `/runs/${runId}/feedback`, { feedback });
  }

  approve(runId: string, version: number): Promise<RunStatus> {
    return this.request("POST", `/runs/${runId}/approve`, { version });
  }

  draft(runId: string): Promise<DraftSnapshot> {
    return this.request("GET", `/runs/${runId}/draft`);
  }

  fillPlaceholder(
    runId: string,
    location: number,
    value: string,
    note: string,
  ): Promise<DraftSnapshot> {
    return this.request("POST", `/runs/${runId}/draft/fill`, { location, value, note });
  }
}
