import { describe, expect, it } from "vitest";

import { buildPreviewOverrides, validateWhatIf } from "../src/whatif.js";

describe("validateWhatIf", () => {
  it("accepts in-range alphas and a known style", () => {
    expect(validateWhatIf({ alphas: [0.7, 0.3], styleKind: "Traditional" })).toEqual([]);
  });

  it("accepts an untouched form", () => {
    expect(validateWhatIf({ alphas: [], styleKind: "" })).toEqual([]);
  });

  it("flags each alpha outside [0, 1] by position", () => {
    const problems = validateWhatIf({ alphas: [1.2, 0.3, -0.1], styleKind: "" });
    expect(problems).toEqual([
      "alpha 1 must be between 0 and 1",
      "alpha 3 must be between 0 and 1",
    ]);
  });

  it("flags non-finite alphas", () => {
    expect(validateWhatIf({ alphas: [Number.NaN], styleKind: "" })).toEqual([
      "alpha 1 must be between 0 and 1",
    ]);
  });

  it("rejects an all-zero mixture", () => {
    expect(validateWhatIf({ alphas: [0, 0], styleKind: "" })).toEqual([
      "at least one alpha must be above 0",
    ]);
  });

  it("rejects an unknown style kind", () => {
    expect(validateWhatIf({ alphas: [], styleKind: "Baroque" as never })).toEqual([
      "unknown style kind Baroque",
    ]);
  });
});

describe("buildPreviewOverrides", () => {
  it("touches only the sections the user changed", () => {
    expect(buildPreviewOverrides({ alphas: [0.7, 0.3], styleKind: "" })).toEqual({
      texture: { fusion_alphas: [0.7, 0.3] },
    });
    expect(buildPreviewOverrides({ alphas: [], styleKind: "Semantic" })).toEqual({
      glyph: { style_kind: "Semantic" },
    });
  });

  it("returns an empty object for an untouched form", () => {
    expect(buildPreviewOverrides({ alphas: [], styleKind: "" })).toEqual({});
  });

  it("refuses to build overrides from an invalid form", () => {
    expect(() => buildPreviewOverrides({ alphas: [2], styleKind: "" })).toThrow(
      /alpha 1/,
    );
  });
});
