/**
 * What-if controls: fusion alpha sliders and a style-kind switch whose
 * effect renders as a preview next to the baseline card. Range checks
 * happen here, client-side, before any request is built.
 */

import type { ParamsOverrides } from "./types.js";

export const STYLE_KINDS = ["Normal", "Traditional", "Semantic"] as const;
export type StyleKind = (typeof STYLE_KINDS)[number];

export interface WhatIfState {
  /** Blend strengths for the top-ranked models, each on [0, 1]. */
  alphas: number[];
  styleKind: StyleKind | "";
}

/** Problems that block a preview request; empty array means go. */
export function validateWhatIf(state: WhatIfState): string[] {
  const problems: string[] = [];
  for (const [i, alpha] of state.alphas.entries()) {
    if (!Number.isFinite(alpha) || alpha < 0 || alpha > 1) {
      problems.push(`alpha ${i + 1} must be between 0 and 1`);
    }
  }
  if (state.alphas.length > 0 && state.alphas.every((a) => a === 0)) {
    problems.push("at least one alpha must be above 0");
  }
  if (state.styleKind && !STYLE_KINDS.includes(state.styleKind)) {
    problems.push(`unknown style kind ${state.styleKind}`);
  }
  return problems;
}

/** Overrides for a preview iterate call; only touched sections appear. */
export function buildPreviewOverrides(state: WhatIfState): ParamsOverrides {
  const problems = validateWhatIf(state);
  if (problems.length > 0) {
    throw new Error(problems[0]);
  }
  const overrides: ParamsOverrides = {};
  if (state.alphas.length > 0) {
    overrides.texture = { fusion_alphas: [...state.alphas] };
  }
  if (state.styleKind) {
    overrides.glyph = { style_kind: state.styleKind };
  }
  return overrides;
}
