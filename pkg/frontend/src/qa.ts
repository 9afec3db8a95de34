/**
 * Review form state: four answers matching the service's question
 * schema. Scale answers are optional [0, 1] numbers; the preference
 * answer accepts free text, with `key=value` pairs (separated by ; or ,)
 * lifted into structured preferences.
 */

import type { FeedbackRequest } from "./types.js";

export interface QaFormState {
  consistency: string;
  quality: string;
  glyph: string;
  preference: string;
}

export const EMPTY_QA_FORM: QaFormState = {
  consistency: "",
  quality: "",
  glyph: "",
  preference: "",
};

const SCALE_FIELDS = [
  ["consistency", "g_cos"],
  ["quality", "g_qua"],
  ["glyph", "g_gly"],
] as const;

/** Field-level problems; an empty map means the form can be submitted. */
export function validateQaForm(form: QaFormState): Map<string, string> {
  const problems = new Map<string, string>();
  for (const [field] of SCALE_FIELDS) {
    const raw = form[field].trim();
    if (raw === "") continue;
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      problems.set(field, "must be a number");
    } else if (value < 0 || value > 1) {
      problems.set(field, "must be between 0 and 1");
    }
  }
  return problems;
}

/** Split "style=cartoon; color=warm" into pairs; leftovers stay free text. */
function splitPreference(raw: string): {
  pairs: Record<string, string>;
  freeText: string;
} {
  const pairs: Record<string, string> = {};
  const leftovers: string[] = [];
  for (const piece of raw.split(/[;,]/)) {
    const text = piece.trim();
    if (!text) continue;
    const eq = text.indexOf("=");
    if (eq > 0 && eq < text.length - 1) {
      pairs[text.slice(0, eq).trim()] = text.slice(eq + 1).trim();
    } else {
      leftovers.push(text);
    }
  }
  return { pairs, freeText: leftovers.join(", ") };
}

/**
 * Build the feedback payload; only answered fields appear, so an
 * all-blank form submits an empty object (a pure model-side merge).
 */
export function toFeedbackRequest(form: QaFormState): FeedbackRequest {
  const problems = validateQaForm(form);
  if (problems.size > 0) {
    const first = [...problems.entries()][0];
    throw new Error(`${first[0]}: ${first[1]}`);
  }
  const payload: FeedbackRequest = {};
  for (const [field, key] of SCALE_FIELDS) {
    const raw = form[field].trim();
    if (raw !== "") {
      payload[key] = Number(raw);
    }
  }
  const preference = form.preference.trim();
  if (preference) {
    const { pairs, freeText } = splitPreference(preference);
    if (Object.keys(pairs).length > 0) {
      payload.g_pref = pairs;
    }
    if (freeText) {
      payload.free_text = freeText;
    }
  }
  return payload;
}
