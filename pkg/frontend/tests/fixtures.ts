/** Shared test payload builders and a canned fake service transport. */

import type { FetchLike } from "../src/api.js";
import type {
  HyperParamsPayload,
  IterationRecordPayload,
  QuestionPayload,
  SessionPayload,
} from "../src/types.js";

export function makeParams(overrides: Partial<HyperParamsPayload> = {}): HyperParamsPayload {
  return {
    pipeline: { scalars: {}, augment_keywords: {}, fallback_enabled: true },
    glyph: {
      style_kind: null,
      font_id: "forge-sans",
      deform_strength: 0.5,
      max_iterations: 60,
      legibility_weight: 0.5,
    },
    texture: {
      forced_path: null,
      fusion_alphas: [],
      control_weights: { Edge: 1.0, Depth: 0.5 },
      guidance: 7.5,
      seed: 0,
    },
    qa: { tau: 3, theta: 0.9, metric_weights: { cos: 0.5, qua: 0.3, gly: 0.2 } },
    ...overrides,
  };
}

export function makeRecord(
  index: number,
  overrides: Partial<IterationRecordPayload> = {},
): IterationRecordPayload {
  return {
    index,
    extended_prompt: {
      glyph_prompt: "word",
      texture_prompt: "texture",
      semantic_concept: null,
    },
    params_snapshot: makeParams(),
    artifact_ref: `ref${index}`,
    feedback: {
      g_cos: 1.0,
      g_qua: 0.7777777,
      g_gly: null,
      g_pref: null,
      loss: 0.074,
      missing_targets: [],
      source: "Model",
      user_overrides: [],
    },
    error: null,
    ...overrides,
  };
}

export function makeSession(overrides: Partial<SessionPayload> = {}): SessionPayload {
  const history = overrides.history ?? [makeRecord(0)];
  return {
    id: "abc123",
    user_prompt: { text: "Sunrise, mountain, bird", language: "en" },
    params: makeParams(),
    history,
    status: "AwaitingFeedback",
    interactive: true,
    last_ranking: [],
    iteration_count: history.length,
    ...overrides,
  };
}

export function makeQuestions(iteration = 0): { questions: QuestionPayload[] } {
  return {
    questions: [
      { id: "header", kind: "info", text: `Review iteration ${iteration}.` },
      {
        id: "consistency",
        kind: "scale",
        text: "Are the intended elements present? Rate coverage from 0 to 1.",
      },
      {
        id: "quality",
        kind: "scale",
        text: "How is the overall image quality? Rate from 0 to 1.",
      },
      {
        id: "glyph",
        kind: "scale",
        text: "Is the lettering legible and well shaped? Rate from 0 to 1, or skip.",
      },
      {
        id: "preference",
        kind: "text",
        text: "Any preference notes (style, color, layout)? Free text, or skip.",
      },
    ],
  };
}

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

/** FetchLike returning canned JSON per "METHOD /path" with a request log. */
export function cannedTransport(
  routes: Record<string, unknown | ((body: unknown) => unknown)>,
): { fetch: FetchLike; requests: RecordedRequest[] } {
  const requests: RecordedRequest[] = [];
  const fetchImpl: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = new URL(url).pathname;
    const body = init?.body ? JSON.parse(String(init.body)) : undefined;
    requests.push({ method, path, body });
    const handler = routes[`${method} ${path}`];
    if (handler === undefined) {
      return new Response(
        JSON.stringify({ error: "StorageUnavailable", detail: `no route ${path}` }),
        { status: 404, headers: { "Content-Type": "application/json" } },
      );
    }
    const payload = typeof handler === "function" ? handler(body) : handler;
    if (payload instanceof Response) {
      return payload;
    }
    return new Response(JSON.stringify(payload), {
      status: 200,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetch: fetchImpl, requests };
}
