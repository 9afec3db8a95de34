/**
 * Hyperparameter flattening and diffing for the per-card "what changed"
 * panel. Values compare by canonical JSON, so nested maps and arrays
 * diff correctly without any client-side interpretation.
 */

import type { HyperParamsPayload } from "./types.js";

export interface ParamChange {
  path: string;
  before: unknown;
  after: unknown;
}

function isPlainObject(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

/** Flatten nested params into dot-path leaves; arrays stay whole values. */
export function flattenParams(
  value: unknown,
  prefix = "",
  out: Map<string, unknown> = new Map(),
): Map<string, unknown> {
  if (isPlainObject(value)) {
    const keys = Object.keys(value).sort();
    if (keys.length === 0 && prefix) {
      out.set(prefix, {});
      return out;
    }
    for (const key of keys) {
      flattenParams(value[key], prefix ? `${prefix}.${key}` : key, out);
    }
    return out;
  }
  if (prefix) {
    out.set(prefix, value);
  }
  return out;
}

function canonical(value: unknown): string {
  if (isPlainObject(value)) {
    const keys = Object.keys(value).sort();
    return `{${keys.map((k) => `${JSON.stringify(k)}:${canonical(value[k])}`).join(",")}}`;
  }
  if (Array.isArray(value)) {
    return `[${value.map(canonical).join(",")}]`;
  }
  return JSON.stringify(value);
}

/** Dot-path changes from prev to next, sorted by path. */
export function diffParams(
  prev: HyperParamsPayload,
  next: HyperParamsPayload,
): ParamChange[] {
  const before = flattenParams(prev);
  const after = flattenParams(next);
  const paths = new Set([...before.keys(), ...after.keys()]);
  const changes: ParamChange[] = [];
  for (const path of [...paths].sort()) {
    const a = before.get(path);
    const b = after.get(path);
    if (canonical(a) !== canonical(b)) {
      changes.push({ path, before: a, after: b });
    }
  }
  return changes;
}

/** Human-readable rendering of one side of a change. */
export function formatParamValue(value: unknown): string {
  if (value === undefined) return "unset";
  if (value === null) return "null";
  if (Array.isArray(value)) return `[${value.map(formatParamValue).join(", ")}]`;
  if (isPlainObject(value)) return canonical(value);
  return String(value);
}
