"""Quality assessment: metrics, feedback merging, rule table, tune loop.

Model feedback comes from a judge handle (chat client or the offline
metadata judge); user feedback arrives as partial answers that always win
over model values.  The loss is a weighted deficit over whichever metrics
are present, and one satisfaction score S = 1 - L drives the stop rule.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .core import (
    DEFAULT_METRIC_WEIGHTS,
    BackendUnavailable,
    ExtendedPrompt,
    FeedbackBundle,
    FeedbackSource,
    FixtureMiss,
    ForgeError,
    GlyphParams,
    HyperParams,
    IterationRecord,
    NoMetricsPresent,
    TuneFailed,
    ParseFailure,
    PipelineParams,
    StyleKind,
    TextureParams,
    Timeout,
    UnparseableVerdict,
    replace_params,
)
from .gateway import parse_judge_triplet, render_template
from .texture import ModelTree, load_artifact_metadata

#: Augmentation counts from the consistency rule saturate here.
MAX_AUGMENT_COUNT = 3

QUALITY_RULE_THRESHOLD = 0.5
GLYPH_RULE_THRESHOLD = 0.5
GLYPH_STYLE_RESET_THRESHOLD = 0.25
GUIDANCE_RAISE_FACTOR = 1.1


def normalize_targets(raw: Sequence[str]) -> tuple[str, ...]:
    """Clean a target list: trim, drop empties, dedup case-insensitively."""
    out: list[str] = []
    seen: set[str] = set()
    for item in raw:
        target = item.strip()
        if not target or target.lower() in seen:
            continue
        seen.add(target.lower())
        out.append(target)
    return tuple(out)


_TARGETS_RE = re.compile(r"Targets\s*:\s*\{(.*?)\}", re.IGNORECASE | re.DOTALL)


def extract_targets(sentence: str, client=None) -> tuple[str, ...]:
    """Visual elements the sentence asks for.

    With a chat client the extraction template runs and the Targets line is
    parsed; an answered-but-unparseable response raises ParseFailure.
    Without a client, or when the backend is down, the sentence's comma
    segments stand in.
    """
    if client is not None:
        rendered = render_template("TargetExtract", {"input": sentence})
        try:
            response = client.ask(rendered)
        except (FixtureMiss, BackendUnavailable, Timeout):
            response = None
        if response is not None:
            match = _TARGETS_RE.search(response)
            if match is None:
                raise ParseFailure(f"no Targets line in extraction response: {response!r}")
            return normalize_targets(match.group(1).split(","))
    return normalize_targets(sentence.split(","))


def presence_question(target: str, artifact_ref: str) -> str:
    """The per-target presence check sent to the judge."""
    return f"Image: {artifact_ref}\nIs {target} present in the photo? Please answer Yes or No."


_YES_RE = re.compile(r"\byes\b", re.IGNORECASE)
_NO_RE = re.compile(r"\bno\b", re.IGNORECASE)


def assess_consistency(
    targets: Sequence[str], artifact_ref: str, judge
) -> tuple[float, tuple[str, ...]]:
    """Fraction of targets the judge sees, plus the missing ones.

    An empty target list counts as fully consistent.  A reply with neither
    a yes nor a no raises UnparseableVerdict.
    """
    targets = normalize_targets(targets)
    if not targets:
        return 1.0, ()
    missing: list[str] = []
    for target in targets:
        answer = judge.ask(presence_question(target, artifact_ref))
        yes = _YES_RE.search(answer)
        no = _NO_RE.search(answer)
        if yes and (not no or yes.start() < no.start()):
            continue
        if no:
            missing.append(target)
            continue
        raise UnparseableVerdict(f"presence reply for {target!r} was {answer!r}")
    g_cos = (len(targets) - len(missing)) / len(targets)
    return g_cos, tuple(missing)


def assess_quality(prompt_text: str, artifact_ref: str, judge) -> float:
    """Image-quality component of the judge triplet for one artifact."""
    rendered = render_template(
        "JudgeScore", {"prompt": prompt_text, "candidate": f"artifact {artifact_ref}"}
    )
    triplet = parse_judge_triplet(judge.ask(rendered))
    return triplet[1]


class MetadataJudge:
    """Offline judge backed by artifact metadata instead of a vision model.

    Presence questions check the recorded render prompt for the target
    text; scoring questions return a fixed mid-high triplet.  Suitable for
    deterministic end-to-end runs.
    """

    FIXED_TRIPLET = "8 8 8"
    _PRESENCE_RE = re.compile(
        r"Image:\s*(?P<ref>\S+)\s*\nIs (?P<target>.*?) present in the photo\?", re.DOTALL
    )

    def __init__(self, artifact_dir: str):
        self.artifact_dir = artifact_dir

    def ask(self, prompt: str) -> str:
        match = self._PRESENCE_RE.search(prompt)
        if match:
            meta = load_artifact_metadata(self.artifact_dir, match.group("ref"))
            present = match.group("target").lower() in meta["prompt"].lower()
            return "Yes" if present else "No"
        if "1. Prompt Relevance" in prompt:
            return self.FIXED_TRIPLET
        raise ValueError("metadata judge only answers presence and scoring questions")


@dataclass(frozen=True)
class UserAnswers:
    """Partial human feedback for one iteration; absent fields defer to the model."""

    g_cos: Optional[float] = None
    g_qua: Optional[float] = None
    g_gly: Optional[float] = None
    g_pref: Optional[Mapping[str, str]] = None
    free_text: str = ""

    def __post_init__(self) -> None:
        for name in ("g_cos", "g_qua", "g_gly"):
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.g_pref is not None:
            object.__setattr__(self, "g_pref", dict(self.g_pref))

    def to_dict(self) -> dict:
        return {
            "g_cos": self.g_cos,
            "g_qua": self.g_qua,
            "g_gly": self.g_gly,
            "g_pref": dict(self.g_pref) if self.g_pref is not None else None,
            "free_text": self.free_text,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "UserAnswers":
        return cls(
            g_cos=d.get("g_cos"),
            g_qua=d.get("g_qua"),
            g_gly=d.get("g_gly"),
            g_pref=d.get("g_pref"),
            free_text=d.get("free_text", "") or "",
        )


def compute_loss(
    bundle: FeedbackBundle, weights: Optional[Mapping[str, float]] = None
) -> float:
    """Weighted deficit over present metrics, weights renormalized.

    A metric participates when its value is set and its weight is positive;
    NoMetricsPresent fires when nothing participates.
    """
    if weights is None:
        weights = DEFAULT_METRIC_WEIGHTS
    present = {
        key: bundle.metric(key)
        for key, w in weights.items()
        if bundle.metric(key) is not None and w > 0
    }
    if not present:
        raise NoMetricsPresent("no weighted metric carries a value")
    total_w = sum(weights[key] for key in present)
    loss = sum(weights[key] / total_w * (1.0 - value) for key, value in present.items())
    # Renormalized weights sum to one only up to float error; keep the
    # boundary cases (all metrics 0 or all 1) inside the unit interval.
    return min(1.0, max(0.0, loss))


def merge(
    model_fb: FeedbackBundle,
    user: Optional[UserAnswers],
    weights: Optional[Mapping[str, float]] = None,
) -> FeedbackBundle:
    """Field-wise merge with user precedence; the loss is recomputed.

    ``user_overrides`` records which metrics the user supplied.  Preference
    notes pass through verbatim.
    """
    if user is None:
        user = UserAnswers()
        source = model_fb.source
    else:
        source = FeedbackSource.MERGED
    overrides = tuple(
        key for key in ("cos", "qua", "gly") if getattr(user, f"g_{key}") is not None
    )
    merged = FeedbackBundle(
        g_cos=user.g_cos if user.g_cos is not None else model_fb.g_cos,
        g_qua=user.g_qua if user.g_qua is not None else model_fb.g_qua,
        g_gly=user.g_gly if user.g_gly is not None else model_fb.g_gly,
        g_pref=user.g_pref if user.g_pref is not None else model_fb.g_pref,
        missing_targets=model_fb.missing_targets,
        source=source,
        user_overrides=overrides,
    )
    return FeedbackBundle(
        g_cos=merged.g_cos,
        g_qua=merged.g_qua,
        g_gly=merged.g_gly,
        g_pref=merged.g_pref,
        loss=compute_loss(merged, weights),
        missing_targets=merged.missing_targets,
        source=merged.source,
        user_overrides=merged.user_overrides,
    )


# -- update rules ---------------------------------------------------------------

def update_params(
    feedback: FeedbackBundle,
    params: HyperParams,
    ranking: tuple[tuple[str, float], ...] = (),
    tree: Optional[ModelTree] = None,
) -> HyperParams:
    """Apply the rule table to produce the next iteration's hyperparameters.

    Pure function; rules fire independently and later rules win conflicts.

    1. Missing targets bump their augmentation counts (saturating).
    2. Low quality switches to the runner-up model and raises guidance
       toward its cap.
    3. Low glyph score halves the deformation, and a very low score under
       the semantic style falls back to the plain letterform; a 'glyph'
       preference note also halves the deformation.
    4. A preference note naming a top-level category forces that branch.
    """
    pipeline = params.pipeline
    glyph = params.glyph
    texture = params.texture

    if feedback.missing_targets:
        keywords = dict(pipeline.augment_keywords)
        for target in feedback.missing_targets:
            keywords[target] = min(keywords.get(target, 0) + 1, MAX_AUGMENT_COUNT)
        pipeline = PipelineParams(pipeline.scalars, keywords, pipeline.fallback_enabled)

    if feedback.g_qua is not None and feedback.g_qua < QUALITY_RULE_THRESHOLD:
        forced = texture.forced_path
        if len(ranking) > 1:
            forced = tuple(ranking[1][0].split("/"))
        guidance = min(texture.guidance * GUIDANCE_RAISE_FACTOR, texture.guidance_cap)
        texture = TextureParams(
            forced_path=forced,
            fusion_alphas=texture.fusion_alphas,
            control_weights=texture.control_weights,
            guidance=guidance,
            seed=texture.seed,
            guidance_cap=texture.guidance_cap,
        )

    glyph_complaint = feedback.g_pref is not None and "glyph" in {
        k.lower() for k in feedback.g_pref
    }
    if (feedback.g_gly is not None and feedback.g_gly < GLYPH_RULE_THRESHOLD) or glyph_complaint:
        style = glyph.style_kind
        if (
            style is StyleKind.SEMANTIC
            and feedback.g_gly is not None
            and feedback.g_gly < GLYPH_STYLE_RESET_THRESHOLD
        ):
            style = StyleKind.NORMAL
        glyph = GlyphParams(
            style_kind=style,
            font_id=glyph.font_id,
            deform_strength=glyph.deform_strength / 2.0,
            max_iterations=glyph.max_iterations,
            legibility_weight=glyph.legibility_weight,
        )

    if feedback.g_pref and tree is not None:
        categories = {name.lower(): name for name in tree.root.child_names()}
        for value in feedback.g_pref.values():
            canonical = categories.get(value.strip().lower())
            if canonical is not None:
                texture = TextureParams(
                    forced_path=(canonical,),
                    fusion_alphas=texture.fusion_alphas,
                    control_weights=texture.control_weights,
                    guidance=texture.guidance,
                    seed=texture.seed,
                    guidance_cap=texture.guidance_cap,
                )
                break

    return replace_params(params, pipeline=pipeline, glyph=glyph, texture=texture)


# -- tune loop --------------------------------------------------------------------

@dataclass(frozen=True)
class SynthesisOutput:
    """What one full pipeline pass hands back to the tune loop."""

    artifact_ref: str
    extended: ExtendedPrompt
    targets: tuple[str, ...]
    texture_prompt: str = ""
    glyph_score: Optional[float] = None
    ranking: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class TuneResult:
    best_ref: str
    best_score: float
    params: HyperParams
    records: tuple[IterationRecord, ...]
    syntheses: int
    stopped_early: bool


def tune(
    params: HyperParams,
    synthesize: Callable[[HyperParams, int], SynthesisOutput],
    judge,
    tree: Optional[ModelTree] = None,
    answers: Optional[Callable[[int, str], Optional[UserAnswers]]] = None,
) -> TuneResult:
    """Iterate synthesize-assess-update until satisfied or out of budget.

    Runs at most ``params.qa.tau`` syntheses (tau must be at least one) and
    stops as soon as S = 1 - loss reaches ``params.qa.theta``.  A failed
    iteration is recorded and the loop moves on; only a run with zero
    successful iterations raises.  Returns the best-scoring artifact, the
    final hyperparameters, and the per-iteration records.
    """
    tau = params.qa.tau
    theta = params.qa.theta
    if tau < 1:
        raise ValueError("tau must be at least 1 to synthesize anything")
    records: list[IterationRecord] = []
    best_ref: Optional[str] = None
    best_score = -1.0
    current = params
    syntheses = 0
    stopped_early = False
    last_error: Optional[ForgeError] = None
    for i in range(tau):
        snapshot = current
        try:
            out = synthesize(current, i)
            syntheses += 1
            g_cos, missing = assess_consistency(out.targets, out.artifact_ref, judge)
            quality_prompt = out.texture_prompt or out.extended.texture_prompt
            g_qua = assess_quality(quality_prompt, out.artifact_ref, judge)
            model_fb = FeedbackBundle(
                g_cos=g_cos,
                g_qua=g_qua,
                g_gly=out.glyph_score,
                missing_targets=missing,
                source=FeedbackSource.MODEL,
            )
            user = answers(i, out.artifact_ref) if answers is not None else None
            fb = merge(model_fb, user, weights=current.qa.metric_weights)
        except ForgeError as exc:
            last_error = exc
            records.append(
                IterationRecord(
                    index=i,
                    extended_prompt=None,
                    params_snapshot=snapshot,
                    artifact_ref=None,
                    error=str(exc),
                )
            )
            continue
        records.append(
            IterationRecord(
                index=i,
                extended_prompt=out.extended,
                params_snapshot=snapshot,
                artifact_ref=out.artifact_ref,
                feedback=fb,
            )
        )
        score = 1.0 - fb.loss
        if score > best_score:
            best_score = score
            best_ref = out.artifact_ref
        if score >= theta:
            stopped_early = True
            break
        if i + 1 < tau:
            current = update_params(fb, current, ranking=out.ranking, tree=tree)
    if best_ref is None:
        raise TuneFailed(
            f"every iteration failed; last error: {last_error}", records=tuple(records)
        )
    return TuneResult(
        best_ref=best_ref,
        best_score=best_score,
        params=current,
        records=tuple(records),
        syntheses=syntheses,
        stopped_early=stopped_early,
    )


def feedback_questions(iteration: int, artifact_ref: str) -> tuple[dict, ...]:
    """The fixed review form for one iteration: a header plus four questions."""
    header = render_template(
        "QASession", {"iteration": str(iteration), "artifact_ref": artifact_ref}
    )
    return (
        {"id": "header", "kind": "info", "text": header},
        {
            "id": "consistency",
            "kind": "scale",
            "text": "Are the intended elements present? Rate coverage from 0 to 1.",
        },
        {
            "id": "quality",
            "kind": "scale",
            "text": "How is the overall image quality? Rate from 0 to 1.",
        },
        {
            "id": "glyph",
            "kind": "scale",
            "text": "Is the lettering legible and well shaped? Rate from 0 to 1, or skip.",
        },
        {
            "id": "preference",
            "kind": "text",
            "text": "Any preference notes (style, color, layout)? Free text, or skip.",
        },
    )
