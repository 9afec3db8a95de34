/**
 * Studio application -- single-session design-loop UI over the
 * orchestrator HTTP API.
 *
 * Layout: prompt bar on top, error banner with a retry control, then
 * the iteration gallery (one card per completed pass: thumbnail,
 * scores, missing targets, params diff vs the previous card), the
 * review form shown while the session awaits feedback, and a what-if
 * panel whose previews render side by side without consuming the
 * session's iteration budget.
 */

import { ApiClient, ServiceError } from "./api.js";
import { pollUntil, type PollOptions } from "./poll.js";
import { formatParamValue } from "./params.js";
import { EMPTY_QA_FORM, toFeedbackRequest, validateQaForm, type QaFormState } from "./qa.js";
import { buildSessionView, type IterationCard, type SessionView } from "./view.js";
import { buildPreviewOverrides, STYLE_KINDS, validateWhatIf, type WhatIfState } from "./whatif.js";
import type { PreviewPayload, QuestionPayload, SessionPayload } from "./types.js";

const LANGUAGES = ["en", "zh", "ja", "ko", "other"] as const;

// ------------------------------------------------------------------ DOM helpers

type Attrs = Record<string, string>;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Attrs = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

function roleQuery<T extends HTMLElement>(root: ParentNode, role: string): T {
  const node = root.querySelector(`[data-role="${role}"]`);
  if (!node) {
    throw new Error(`missing element with role ${role}`);
  }
  return node as T;
}

// ------------------------------------------------------------------ app

export interface StudioOptions {
  poll?: PollOptions;
}

export class StudioApp {
  readonly api: ApiClient;

  private readonly pollOptions: PollOptions;
  private root: HTMLElement | null = null;
  private sessionId: string | null = null;
  private view: SessionView | null = null;
  private questions: QuestionPayload[] = [];
  private lastPreview: PreviewPayload | null = null;
  private retryAction: (() => Promise<void>) | null = null;
  private pending: Promise<void> = Promise.resolve();

  constructor(api: ApiClient, options: StudioOptions = {}) {
    this.api = api;
    this.pollOptions = options.poll ?? {};
  }

  /** Resolves once every queued user action has settled. */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  get currentSessionId(): string | null {
    return this.sessionId;
  }

  // ---------------------------------------------------------------- mounting

  mount(root: HTMLElement): void {
    this.root = root;
    root.innerHTML = "";
    root.append(
      el("header", { class: "masthead" }, [el("h1", {}, ["wordart studio"])]),
      this.buildBanner(),
      this.buildStartBar(),
      this.buildSessionSection(),
    );
  }

  private buildBanner(): HTMLElement {
    const banner = el("div", { class: "banner hidden", "data-role": "error" }, [
      el("span", { "data-role": "error-text" }),
      el("button", { type: "button", "data-role": "retry" }, ["Retry"]),
    ]);
    roleQuery<HTMLButtonElement>(banner, "retry").addEventListener("click", () => {
      const action = this.retryAction;
      if (action) {
        this.queue(action);
      }
    });
    return banner;
  }

  private buildStartBar(): HTMLElement {
    const languageOptions = LANGUAGES.map((code) =>
      el("option", { value: code }, [code]),
    );
    const bar = el("section", { class: "start-bar" }, [
      el("input", {
        type: "text",
        "data-role": "prompt",
        placeholder: "Describe the word art to design...",
      }),
      el("select", { "data-role": "language" }, languageOptions),
      el("button", { type: "button", "data-role": "start" }, ["Start session"]),
      el("span", { class: "problem", "data-role": "prompt-problem" }),
    ]);
    roleQuery<HTMLButtonElement>(bar, "start").addEventListener("click", () => {
      this.onStartClicked();
    });
    return bar;
  }

  private buildSessionSection(): HTMLElement {
    const qaFields: HTMLElement[] = [
      this.qaField("consistency", "Are the intended elements present? (0-1)"),
      this.qaField("quality", "How is the overall image quality? (0-1)"),
      this.qaField("glyph", "Is the lettering legible? (0-1, optional)"),
      this.qaField("preference", "Preference notes (free text or key=value)"),
    ];
    const section = el("section", { class: "session hidden", "data-role": "session" }, [
      el("div", { class: "status-line", "data-role": "status-line" }),
      el("div", { class: "gallery", "data-role": "gallery" }),
      el("div", { class: "qa-panel hidden", "data-role": "qa-panel" }, [
        el("h2", {}, ["Review this iteration"]),
        el("div", { "data-role": "qa-header" }),
        ...qaFields,
        el("button", { type: "button", "data-role": "qa-submit" }, ["Submit answers"]),
        el("span", { class: "problem", "data-role": "qa-problem" }),
      ]),
      el("div", { class: "whatif-panel", "data-role": "whatif-panel" }, [
        el("h2", {}, ["What-if preview"]),
        el("label", {}, [
          "alpha 1 ",
          el("input", { type: "number", step: "0.1", min: "0", max: "1", value: "1", "data-role": "alpha-0" }),
        ]),
        el("label", {}, [
          "alpha 2 ",
          el("input", { type: "number", step: "0.1", min: "0", max: "1", value: "0", "data-role": "alpha-1" }),
        ]),
        el("label", {}, [
          "style ",
          el("select", { "data-role": "style-kind" }, [
            el("option", { value: "" }, ["(keep)"]),
            ...STYLE_KINDS.map((kind) => el("option", { value: kind }, [kind])),
          ]),
        ]),
        el("button", { type: "button", "data-role": "preview" }, ["Render preview"]),
        el("span", { class: "problem", "data-role": "whatif-problem" }),
        el("div", { class: "preview-pane hidden", "data-role": "preview-pane" }),
      ]),
      el("button", { type: "button", "data-role": "next-iteration" }, ["Run iteration"]),
    ]);
    roleQuery<HTMLButtonElement>(section, "qa-submit").addEventListener("click", () => {
      this.onQaSubmitClicked();
    });
    roleQuery<HTMLButtonElement>(section, "preview").addEventListener("click", () => {
      this.onPreviewClicked();
    });
    roleQuery<HTMLButtonElement>(section, "next-iteration").addEventListener("click", () => {
      this.queue(() => this.runIteration());
    });
    return section;
  }

  private qaField(id: string, fallbackLabel: string): HTMLElement {
    const input =
      id === "preference"
        ? el("input", { type: "text", "data-role": `qa-${id}` })
        : el("input", { type: "text", inputmode: "decimal", "data-role": `qa-${id}` });
    return el("label", { class: "qa-field" }, [
      el("span", { "data-role": `qa-${id}-label` }, [fallbackLabel]),
      input,
    ]);
  }

  // ---------------------------------------------------------------- actions

  private queue(action: () => Promise<void>): void {
    this.pending = this.pending.then(() => this.guarded(action));
  }

  private async guarded(action: () => Promise<void>): Promise<void> {
    this.clearError();
    try {
      await action();
    } catch (err) {
      this.retryAction = action;
      this.showError(err);
    }
  }

  private onStartClicked(): void {
    const promptInput = this.role<HTMLInputElement>("prompt");
    const problem = this.role<HTMLSpanElement>("prompt-problem");
    const text = promptInput.value.trim();
    if (!text) {
      problem.textContent = "enter a prompt first";
      return; // client-side block: no request leaves the studio
    }
    problem.textContent = "";
    const language = this.role<HTMLSelectElement>("language").value;
    this.queue(() => this.startSession(text, language));
  }

  private async startSession(prompt: string, language: string): Promise<void> {
    const session = await this.api.createSession(prompt, language, true);
    this.sessionId = session.id;
    this.lastPreview = null;
    this.applySession(session);
    await this.runIteration();
  }

  private async runIteration(): Promise<void> {
    const id = this.requireSession();
    const before = this.view?.iterationCount ?? 0;
    await this.api.iterate(id);
    const session = await pollUntil(
      () => this.api.getSession(id),
      (s) => s.iteration_count > before || s.status === "Done" || s.status === "Failed",
      this.pollOptions,
    );
    this.applySession(session);
    if (session.status === "AwaitingFeedback") {
      const { questions } = await this.api.questions(id);
      this.questions = questions;
      this.renderQuestions();
    }
  }

  private onQaSubmitClicked(): void {
    const problem = this.role<HTMLSpanElement>("qa-problem");
    const form = this.readQaForm();
    const issues = validateQaForm(form);
    if (issues.size > 0) {
      const [field, message] = [...issues.entries()][0];
      problem.textContent = `${field}: ${message}`;
      return; // invalid answers never reach the service
    }
    problem.textContent = "";
    this.queue(() => this.submitQa(form));
  }

  private async submitQa(form: QaFormState): Promise<void> {
    const id = this.requireSession();
    const { session } = await this.api.submitFeedback(id, toFeedbackRequest(form));
    this.applySession(session);
    this.resetQaForm();
    if (session.status === "Running") {
      // The review asked for changes; run the next pass so its card
      // (and params diff) lands in the gallery right away.
      await this.runIteration();
    }
  }

  private onPreviewClicked(): void {
    const problem = this.role<HTMLSpanElement>("whatif-problem");
    const state = this.readWhatIf();
    const issues = validateWhatIf(state);
    if (issues.length > 0) {
      problem.textContent = issues[0];
      return; // range violations are blocked client-side
    }
    problem.textContent = "";
    this.queue(() => this.runPreview(state));
  }

  private async runPreview(state: WhatIfState): Promise<void> {
    const id = this.requireSession();
    const response = await this.api.preview(id, buildPreviewOverrides(state));
    if (!response.preview) {
      throw new Error("service returned no preview block");
    }
    this.lastPreview = response.preview;
    this.applySession(response.session);
  }

  // ---------------------------------------------------------------- state

  private requireSession(): string {
    if (!this.sessionId) {
      throw new Error("no active session");
    }
    return this.sessionId;
  }

  private applySession(payload: SessionPayload): void {
    this.view = buildSessionView(payload);
    this.render();
  }

  private readQaForm(): QaFormState {
    return {
      consistency: this.role<HTMLInputElement>("qa-consistency").value,
      quality: this.role<HTMLInputElement>("qa-quality").value,
      glyph: this.role<HTMLInputElement>("qa-glyph").value,
      preference: this.role<HTMLInputElement>("qa-preference").value,
    };
  }

  private resetQaForm(): void {
    for (const field of Object.keys(EMPTY_QA_FORM) as (keyof QaFormState)[]) {
      this.role<HTMLInputElement>(`qa-${field}`).value = EMPTY_QA_FORM[field];
    }
  }

  private readWhatIf(): WhatIfState {
    const alphas = [
      Number(this.role<HTMLInputElement>("alpha-0").value),
      Number(this.role<HTMLInputElement>("alpha-1").value),
    ];
    const styleKind = this.role<HTMLSelectElement>("style-kind").value as WhatIfState["styleKind"];
    return { alphas, styleKind };
  }

  // ---------------------------------------------------------------- rendering

  private role<T extends HTMLElement>(name: string): T {
    if (!this.root) {
      throw new Error("app is not mounted");
    }
    return roleQuery<T>(this.root, name);
  }

  private showError(err: unknown): void {
    const banner = this.role<HTMLDivElement>("error");
    const text = this.role<HTMLSpanElement>("error-text");
    if (err instanceof ServiceError) {
      text.textContent = `${err.kind}: ${err.message}`;
    } else {
      text.textContent = String(err instanceof Error ? err.message : err);
    }
    banner.classList.remove("hidden");
  }

  private clearError(): void {
    this.role<HTMLDivElement>("error").classList.add("hidden");
    this.role<HTMLSpanElement>("error-text").textContent = "";
  }

  private render(): void {
    const view = this.view;
    if (!view) return;
    this.role<HTMLElement>("session").classList.remove("hidden");
    this.role<HTMLDivElement>("status-line").textContent =
      `session ${view.id} - ${view.status} - ${view.iterationCount} iteration(s)`;
    this.renderGallery(view);
    this.renderQaVisibility(view);
    this.renderPreviewPane();
    this.role<HTMLButtonElement>("next-iteration").disabled =
      view.status === "Done" || view.status === "Failed";
  }

  private renderGallery(view: SessionView): void {
    const gallery = this.role<HTMLDivElement>("gallery");
    gallery.innerHTML = "";
    for (const card of view.cards) {
      gallery.append(this.renderCard(view, card));
    }
  }

  private renderCard(view: SessionView, card: IterationCard): HTMLElement {
    const children: (Node | string)[] = [
      el("h3", {}, [`iteration ${card.index}`]),
    ];
    if (card.artifactRef) {
      children.push(
        el("img", {
          src: this.api.artifactUrl(view.id, card.artifactRef),
          alt: `iteration ${card.index} render`,
          "data-role": "card-image",
        }),
      );
    }
    if (card.error) {
      children.push(el("p", { class: "card-error" }, [card.error]));
    }
    const scores = el("ul", { class: "scores" });
    for (const score of card.scores) {
      scores.append(
        el("li", { "data-score": score.key }, [`${score.label} ${score.display}`]),
      );
    }
    children.push(scores);
    if (card.missingTargets.length > 0) {
      children.push(
        el("p", { class: "missing", "data-role": "missing-targets" }, [
          `missing: ${card.missingTargets.join(", ")}`,
        ]),
      );
    }
    const diff = el("ul", { class: "params-diff", "data-role": "params-diff" });
    for (const change of card.paramsDiff) {
      diff.append(
        el("li", { "data-path": change.path }, [
          `${change.path}: ${formatParamValue(change.before)} -> ${formatParamValue(change.after)}`,
        ]),
      );
    }
    children.push(diff);
    return el("article", { class: "card", "data-index": String(card.index) }, children);
  }

  private renderQaVisibility(view: SessionView): void {
    const panel = this.role<HTMLDivElement>("qa-panel");
    if (view.status === "AwaitingFeedback") {
      panel.classList.remove("hidden");
    } else {
      panel.classList.add("hidden");
    }
  }

  private renderQuestions(): void {
    const header = this.role<HTMLDivElement>("qa-header");
    header.textContent = "";
    for (const question of this.questions) {
      if (question.kind === "info") {
        header.textContent = question.text;
      } else {
        const label = this.root?.querySelector(`[data-role="qa-${question.id}-label"]`);
        if (label) {
          label.textContent = question.text;
        }
      }
    }
  }

  private renderPreviewPane(): void {
    const pane = this.role<HTMLDivElement>("preview-pane");
    const preview = this.lastPreview;
    if (!preview || !this.view) {
      pane.classList.add("hidden");
      pane.innerHTML = "";
      return;
    }
    pane.classList.remove("hidden");
    pane.innerHTML = "";
    const fusion = preview.fusion.models
      .map((model, i) => `${model} @ ${preview.fusion.weights[i].toFixed(2)}`)
      .join(" + ");
    const baseline = this.view.cards.at(-1);
    if (baseline?.artifactRef) {
      pane.append(
        el("img", {
          src: this.api.artifactUrl(this.view.id, baseline.artifactRef),
          alt: "baseline render",
          "data-role": "baseline-image",
        }),
      );
    }
    pane.append(
      el("img", {
        src: this.api.artifactUrl(this.view.id, preview.artifact_ref),
        alt: "what-if render",
        "data-role": "preview-image",
      }),
      el("p", { "data-role": "preview-fusion" }, [fusion]),
      el("p", { "data-role": "preview-style" }, [
        `style: ${preview.params.glyph.style_kind ?? "auto"}`,
      ]),
    );
  }
}
