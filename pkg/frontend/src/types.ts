/**
 * Service payload shapes, mirrored from the orchestrator HTTP API.
 *
 * These are transport types: every field is exactly what the service
 * sends. View-layer types derived from them live in view.ts.
 */

// ------------------------------------------------------------------ params

export interface PipelineParamsPayload {
  scalars: Record<string, number>;
  augment_keywords: Record<string, number>;
  fallback_enabled: boolean;
}

export interface GlyphParamsPayload {
  style_kind: string | null;
  font_id: string;
  deform_strength: number;
  max_iterations: number;
  legibility_weight: number;
}

export interface TextureParamsPayload {
  forced_path: string[] | null;
  fusion_alphas: number[];
  control_weights: Record<string, number>;
  guidance: number;
  seed: number;
  [extra: string]: unknown;
}

export interface QaParamsPayload {
  tau: number;
  theta: number;
  metric_weights: Record<string, number>;
}

export interface HyperParamsPayload {
  pipeline: PipelineParamsPayload;
  glyph: GlyphParamsPayload;
  texture: TextureParamsPayload;
  qa: QaParamsPayload;
}

/** Partial overrides accepted by create/iterate/preview calls. */
export interface ParamsOverrides {
  pipeline?: Partial<PipelineParamsPayload>;
  glyph?: Partial<GlyphParamsPayload>;
  texture?: Partial<TextureParamsPayload>;
  qa?: Partial<QaParamsPayload>;
}

// ------------------------------------------------------------------ session

export interface FeedbackPayload {
  g_cos: number;
  g_qua: number;
  g_gly: number | null;
  g_pref: Record<string, string> | null;
  loss: number;
  missing_targets: string[];
  source: string;
  user_overrides: string[];
}

export interface ExtendedPromptPayload {
  glyph_prompt: string;
  texture_prompt: string;
  semantic_concept: string | null;
}

export interface IterationRecordPayload {
  index: number;
  extended_prompt: ExtendedPromptPayload | null;
  params_snapshot: HyperParamsPayload;
  artifact_ref: string | null;
  feedback: FeedbackPayload | null;
  error: string | null;
}

export type SessionStatus =
  | "Created"
  | "Running"
  | "AwaitingFeedback"
  | "Done"
  | "Failed";

export interface SessionPayload {
  id: string;
  user_prompt: { text: string; language: string };
  params: HyperParamsPayload;
  history: IterationRecordPayload[];
  status: SessionStatus;
  interactive: boolean;
  last_ranking: [string, number][];
  iteration_count: number;
}

// ------------------------------------------------------------------ calls

export interface IterateResponse {
  record?: IterationRecordPayload;
  preview?: PreviewPayload;
  session: SessionPayload;
}

export interface PreviewPayload {
  artifact_ref: string;
  prompt: string;
  fusion: { models: string[]; weights: number[] };
  params: HyperParamsPayload;
}

export interface FeedbackResponse {
  merged: FeedbackPayload;
  session: SessionPayload;
}

export interface QuestionPayload {
  id: string;
  kind: "info" | "scale" | "text";
  text: string;
}

/** Review answers as the feedback endpoint accepts them. */
export interface FeedbackRequest {
  g_cos?: number;
  g_qua?: number;
  g_gly?: number;
  g_pref?: Record<string, string>;
  free_text?: string;
}

export interface ServiceErrorBody {
  error: string;
  detail: string;
}
