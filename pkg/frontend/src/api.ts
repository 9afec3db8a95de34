/**
 * Typed client over the orchestrator HTTP API.
 *
 * Every request passes through a single allowlist gate: the studio can
 * only reach the documented endpoints, and a coding mistake that would
 * call anything else throws before any network traffic happens.
 */

import type {
  FeedbackRequest,
  FeedbackResponse,
  IterateResponse,
  ParamsOverrides,
  QuestionPayload,
  SessionPayload,
  ServiceErrorBody,
} from "./types.js";

// ------------------------------------------------------------------ allowlist

interface EndpointRule {
  method: string;
  pattern: RegExp;
}

const REF = "[A-Za-z0-9_-]+";

/** The documented service surface; nothing else may be contacted. */
export const ALLOWED_ENDPOINTS: readonly EndpointRule[] = [
  { method: "GET", pattern: /^\/health$/ },
  { method: "POST", pattern: /^\/sessions$/ },
  { method: "GET", pattern: new RegExp(`^/sessions/${REF}$`) },
  { method: "POST", pattern: new RegExp(`^/sessions/${REF}/iterate$`) },
  { method: "POST", pattern: new RegExp(`^/sessions/${REF}/feedback$`) },
  { method: "GET", pattern: new RegExp(`^/sessions/${REF}/questions$`) },
  { method: "GET", pattern: new RegExp(`^/sessions/${REF}/artifacts/${REF}$`) },
  { method: "GET", pattern: new RegExp(`^/sessions/${REF}/artifacts/${REF}/metadata$`) },
];

export function isAllowedEndpoint(method: string, path: string): boolean {
  return ALLOWED_ENDPOINTS.some(
    (rule) => rule.method === method && rule.pattern.test(path),
  );
}

// ------------------------------------------------------------------ errors

/** A service-reported failure, carrying the HTTP status and error kind. */
export class ServiceError extends Error {
  readonly status: number;
  readonly kind: string;

  constructor(status: number, kind: string, detail: string) {
    super(detail);
    this.name = "ServiceError";
    this.status = status;
    this.kind = kind;
  }
}

// ------------------------------------------------------------------ client

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    if (!isAllowedEndpoint(method, path)) {
      throw new Error(`blocked request to undocumented endpoint: ${method} ${path}`);
    }
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ServiceError(0, "Unreachable", `service unreachable: ${String(err)}`);
    }
    if (!response.ok) {
      let kind = `HTTP ${response.status}`;
      let detail = response.statusText || kind;
      try {
        const parsed = (await response.json()) as Partial<ServiceErrorBody>;
        if (parsed.error) kind = parsed.error;
        if (parsed.detail) detail = parsed.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, kind, detail);
    }
    return (await response.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  createSession(
    prompt: string,
    language: string,
    interactive: boolean,
    overrides?: ParamsOverrides,
  ): Promise<SessionPayload> {
    return this.request("POST", "/sessions", {
      prompt,
      language,
      interactive,
      ...(overrides ? { params_overrides: overrides } : {}),
    });
  }

  getSession(id: string): Promise<SessionPayload> {
    return this.request("GET", `/sessions/${id}`);
  }

  iterate(id: string): Promise<IterateResponse> {
    return this.request("POST", `/sessions/${id}/iterate`, {});
  }

  preview(id: string, overrides: ParamsOverrides): Promise<IterateResponse> {
    return this.request("POST", `/sessions/${id}/iterate`, {
      preview: true,
      params_overrides: overrides,
    });
  }

  submitFeedback(id: string, answers: FeedbackRequest): Promise<FeedbackResponse> {
    return this.request("POST", `/sessions/${id}/feedback`, answers);
  }

  questions(id: string): Promise<{ questions: QuestionPayload[] }> {
    return this.request("GET", `/sessions/${id}/questions`);
  }

  /** URL for an artifact image; used as an <img> src, never fetched here. */
  artifactUrl(id: string, ref: string): string {
    return `${this.base}/sessions/${id}/artifacts/${ref}`;
  }

  artifactMetadata(id: string, ref: string): Promise<Record<string, unknown>> {
    return this.request("GET", `/sessions/${id}/artifacts/${ref}/metadata`);
  }
}
