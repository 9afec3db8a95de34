/**
 * View model: what the gallery renders, derived from service payloads
 * with no recomputation — every displayed score is the service value,
 * formatted to two decimals on the [0, 1] scale.
 */

import { diffParams, type ParamChange } from "./params.js";
import type { SessionPayload, SessionStatus } from "./types.js";

export interface ScoreBadge {
  key: "cos" | "qua" | "gly" | "loss";
  label: string;
  /** Two-decimal rendering of the exact service value. */
  display: string;
  value: number;
}

export interface IterationCard {
  index: number;
  artifactRef: string | null;
  scores: ScoreBadge[];
  missingTargets: string[];
  /** Changes relative to the previous card's snapshot; empty on card 0. */
  paramsDiff: ParamChange[];
  error: string | null;
}

export interface SessionView {
  id: string;
  status: SessionStatus;
  iterationCount: number;
  prompt: string;
  cards: IterationCard[];
}

export function formatScore(value: number): string {
  return value.toFixed(2);
}

const SCORE_LABELS: Record<ScoreBadge["key"], string> = {
  cos: "consistency",
  qua: "quality",
  gly: "legibility",
  loss: "loss",
};

function badge(key: ScoreBadge["key"], value: number): ScoreBadge {
  return { key, label: SCORE_LABELS[key], display: formatScore(value), value };
}

/** Build the render-ready view; cards come out ordered by iteration index. */
export function buildSessionView(payload: SessionPayload): SessionView {
  const records = [...payload.history].sort((a, b) => a.index - b.index);
  const cards: IterationCard[] = records.map((record, position) => {
    const scores: ScoreBadge[] = [];
    if (record.feedback) {
      scores.push(badge("cos", record.feedback.g_cos));
      scores.push(badge("qua", record.feedback.g_qua));
      if (record.feedback.g_gly !== null) {
        scores.push(badge("gly", record.feedback.g_gly));
      }
      scores.push(badge("loss", record.feedback.loss));
    }
    return {
      index: record.index,
      artifactRef: record.artifact_ref,
      scores,
      missingTargets: record.feedback ? [...record.feedback.missing_targets] : [],
      paramsDiff:
        position === 0
          ? []
          : diffParams(records[position - 1].params_snapshot, record.params_snapshot),
      error: record.error,
    };
  });
  return {
    id: payload.id,
    status: payload.status,
    iterationCount: payload.iteration_count,
    prompt: payload.user_prompt.text,
    cards,
  };
}
