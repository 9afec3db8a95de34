"""Shared domain types for the WordArt design loop.

Every value object here is immutable (frozen dataclasses); agents exchange
them freely across threads and sessions.  All scores live on a single [0,1]
scale internally -- the 1-10 judge scale exists only at the chat boundary
and is converted on entry via :func:`normalize_judge_score`.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping, Optional

LANGUAGES = ("en", "zh", "ja", "ko", "other")

CONTROL_CONDITIONS = ("Edge", "Depth", "Scribble")

#: Metric keys recognised by the loss and the update rules.
METRIC_KEYS = ("cos", "qua", "gly")

DEFAULT_METRIC_WEIGHTS: Mapping[str, float] = {"cos": 1.0, "qua": 1.0, "gly": 1.0}


class ForgeError(Exception):
    """Base class for all domain errors raised by this package."""


class OutOfRange(ForgeError):
    """A numeric input fell outside its documented domain."""


# -- chat gateway --------------------------------------------------------

class UnknownTemplate(ForgeError):
    """Requested prompt template id is not registered."""


class MissingBinding(ForgeError):
    """A template placeholder was left without a value."""


class BackendUnavailable(ForgeError):
    """A live backend kept failing after the configured retries."""


class Timeout(ForgeError):
    """A live backend did not answer within the configured window."""


class FixtureMiss(ForgeError):
    """Replay fixture has no entry for the rendered prompt and no default."""


class MarkerNotFound(ForgeError):
    """Expected marker line is absent from a chat response."""


class MalformedScores(ForgeError):
    """Judge response did not contain three usable 1-10 scores."""


# -- dataflow programs ---------------------------------------------------

class ProgramSyntaxError(ForgeError):
    """Dataflow program text failed to tokenize or parse."""


class InvalidProgram(ForgeError):
    """A structurally parsed program failed validation."""


class UnknownDirective(ForgeError):
    """Feedback directive not understood by the receiving agent."""


# -- glyph work ----------------------------------------------------------

class UnknownFont(ForgeError):
    """Font id absent from the font registry."""


class MissingGlyph(ForgeError):
    """Chosen font cannot draw one of the requested characters."""


class ResolutionMismatch(ForgeError):
    """Two rasters that must share a grid have different shapes."""


class CharacterCountMismatch(ForgeError):
    """Glyph documents being compared hold different character counts."""


# -- texture model selection ---------------------------------------------

class ParseError(ForgeError):
    """Model tree file line could not be parsed (carries the line number)."""


class DuplicateLeafId(ForgeError):
    """Two model tree leaves resolved to the same id."""


class EmptyTree(ForgeError):
    """Model tree file declared no leaves."""


class EmptyCandidatePool(ForgeError):
    """A selection step received no candidates to choose from."""


class SelectionNotInCandidates(ForgeError):
    """Chat selection repeatedly named something outside the candidate list."""


class LengthMismatch(ForgeError):
    """Parallel sequences (models vs weights) differ in length."""


class AllZeroAlphas(ForgeError):
    """Fusion weights summed to zero and cannot be normalized."""


class RenderBackendUnavailable(ForgeError):
    """Live render backend kept failing after the configured retries."""


class InvalidResponse(ForgeError):
    """Render backend answered with something other than the agreed schema."""


# -- quality assessment ----------------------------------------------------

class ParseFailure(ForgeError):
    """Target list could not be recovered from the extraction response."""


class UnparseableVerdict(ForgeError):
    """Presence check reply contained neither a yes nor a no."""


class NoMetricsPresent(ForgeError):
    """Loss was requested over a bundle with every weighted metric absent."""


class TuneFailed(ForgeError):
    """Every tune iteration failed; carries the per-iteration records."""

    def __init__(self, message: str, records: tuple = ()):
        super().__init__(message)
        self.records = records


# -- session service -------------------------------------------------------

class StorageUnavailable(ForgeError):
    """Session store directory cannot be read or written."""


class WrongState(ForgeError):
    """Session operation not legal in the session's current status."""


def stable_hash64(data: "str | bytes") -> str:
    """Stable 64-bit content hash, returned as 16 lowercase hex chars.

    Used to key replay fixtures and to derive render request ids; must never
    depend on process state (unlike builtin ``hash``).
    """
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def canonical_json(obj: Any) -> str:
    """Canonical JSON encoding: sorted keys, compact separators, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def normalize_judge_score(raw: float) -> float:
    """Map a judge score on the 1-10 scale onto [0,1].

    Raises OutOfRange outside [1, 10].
    """
    if not (1.0 <= raw <= 10.0):
        raise OutOfRange(f"judge score {raw!r} outside [1, 10]")
    return (raw - 1.0) / 9.0


class StyleKind(str, Enum):
    NORMAL = "Normal"
    TRADITIONAL = "Traditional"
    SEMANTIC = "Semantic"


class FeedbackSource(str, Enum):
    MODEL = "Model"
    USER = "User"
    MERGED = "Merged"


@dataclass(frozen=True)
class UserPrompt:
    """The raw design request as typed by the user."""

    text: str
    language: str = "en"
    word_count_hint: Optional[int] = None
    style_hints: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("prompt text must be non-empty after trimming")
        if self.language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}, got {self.language!r}")
        if self.word_count_hint is not None and self.word_count_hint < 0:
            raise ValueError("word_count_hint must be non-negative")
        object.__setattr__(self, "style_hints", tuple(self.style_hints))

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "language": self.language,
            "word_count_hint": self.word_count_hint,
            "style_hints": list(self.style_hints),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "UserPrompt":
        return cls(
            text=d["text"],
            language=d.get("language", "en"),
            word_count_hint=d.get("word_count_hint"),
            style_hints=tuple(d.get("style_hints", ())),
        )


@dataclass(frozen=True)
class ExtendedPrompt:
    """Split output of prompt extension: one instruction per downstream agent."""

    glyph_prompt: str
    texture_prompt: str
    semantic_concept: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.glyph_prompt:
            raise ValueError("glyph_prompt must be non-empty")
        if not self.texture_prompt:
            raise ValueError("texture_prompt must be non-empty")
        if self.semantic_concept is not None and not self.semantic_concept:
            raise ValueError("semantic_concept, when present, must be non-empty")

    def to_dict(self) -> dict:
        return {
            "glyph_prompt": self.glyph_prompt,
            "texture_prompt": self.texture_prompt,
            "semantic_concept": self.semantic_concept,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ExtendedPrompt":
        return cls(
            glyph_prompt=d["glyph_prompt"],
            texture_prompt=d["texture_prompt"],
            semantic_concept=d.get("semantic_concept"),
        )


@dataclass(frozen=True)
class PipelineParams:
    """Pipeline-scope hyperparameters.

    ``scalars`` is the open name->scalar knob mapping; ``augment_keywords``
    maps a keyword to its prompt repetition count (the consistency update
    rule caps counts at 3); ``fallback_enabled`` controls whether prompt
    extension may degrade to the deterministic splitter.
    """

    scalars: Mapping[str, float] = field(default_factory=dict)
    augment_keywords: Mapping[str, int] = field(default_factory=dict)
    fallback_enabled: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "scalars", dict(self.scalars))
        object.__setattr__(self, "augment_keywords", dict(self.augment_keywords))
        for kw, count in self.augment_keywords.items():
            if not kw or count < 1:
                raise ValueError(f"augment keyword {kw!r} needs a count >= 1")


@dataclass(frozen=True)
class GlyphParams:
    """Glyph-scope hyperparameters; ``style_kind=None`` means classify from the prompt."""

    style_kind: Optional[StyleKind] = None
    font_id: str = "forge-sans"
    deform_strength: float = 0.5
    max_iterations: int = 60
    legibility_weight: float = 0.5

    def __post_init__(self) -> None:
        if self.style_kind is not None:
            object.__setattr__(self, "style_kind", StyleKind(self.style_kind))
        if not (0.0 <= self.deform_strength <= 1.0):
            raise ValueError("deform_strength must lie in [0, 1]")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.legibility_weight < 0.0:
            raise ValueError("legibility_weight must be non-negative")


@dataclass(frozen=True)
class TextureParams:
    """Texture-scope hyperparameters.

    ``fusion_alphas`` is stored normalized (sums to 1 when non-empty); raw
    inputs are normalized on construction.  ``guidance_cap`` defaults to
    twice the initially configured guidance and bounds feedback-driven
    guidance raises.
    """

    forced_path: Optional[tuple[str, ...]] = None
    fusion_alphas: tuple[float, ...] = ()
    control_weights: Mapping[str, float] = field(
        default_factory=lambda: {"Edge": 1.0, "Depth": 0.5}
    )
    guidance: float = 7.5
    seed: int = 0
    guidance_cap: Optional[float] = None

    def __post_init__(self) -> None:
        if self.forced_path is not None:
            path = tuple(self.forced_path)
            if not path or any(not seg for seg in path):
                raise ValueError("forced_path segments must be non-empty")
            object.__setattr__(self, "forced_path", path)
        alphas = tuple(float(a) for a in self.fusion_alphas)
        if alphas:
            if any(a < 0.0 for a in alphas):
                raise ValueError("fusion_alphas must be non-negative")
            total = sum(alphas)
            if total <= 0.0:
                raise ValueError("fusion_alphas must not all be zero")
            # Skip the divide when already normalized so reconstruction from a
            # serialized snapshot reproduces the exact stored floats.
            if abs(total - 1.0) > 1e-12:
                alphas = tuple(a / total for a in alphas)
        object.__setattr__(self, "fusion_alphas", alphas)
        weights = dict(self.control_weights)
        for cond, w in weights.items():
            if cond not in CONTROL_CONDITIONS:
                raise ValueError(f"unknown control condition {cond!r}")
            if not (0.0 <= w <= 1.0):
                raise ValueError(f"control weight for {cond} must lie in [0, 1]")
        object.__setattr__(self, "control_weights", weights)
        if self.guidance <= 0.0:
            raise ValueError("guidance must be positive")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.guidance_cap is None:
            object.__setattr__(self, "guidance_cap", 2.0 * self.guidance)


@dataclass(frozen=True)
class QaParams:
    """Evaluation-scope hyperparameters: iteration budget, stop threshold, metric weights."""

    tau: int = 3
    theta: float = 0.9
    metric_weights: Mapping[str, float] = field(
        default_factory=lambda: dict(DEFAULT_METRIC_WEIGHTS)
    )

    def __post_init__(self) -> None:
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not (0.0 <= self.theta <= 1.0):
            raise ValueError("theta must lie in [0, 1]")
        weights = dict(self.metric_weights)
        for key, w in weights.items():
            if key not in METRIC_KEYS:
                raise ValueError(f"unknown metric {key!r}")
            if w < 0.0:
                raise ValueError("metric weights must be non-negative")
        object.__setattr__(self, "metric_weights", weights)


@dataclass(frozen=True)
class HyperParams:
    """The full tunable set mutated by the feedback loop."""

    pipeline: PipelineParams = field(default_factory=PipelineParams)
    glyph: GlyphParams = field(default_factory=GlyphParams)
    texture: TextureParams = field(default_factory=TextureParams)
    qa: QaParams = field(default_factory=QaParams)

    def to_dict(self) -> dict:
        return {
            "pipeline": {
                "scalars": dict(self.pipeline.scalars),
                "augment_keywords": dict(self.pipeline.augment_keywords),
                "fallback_enabled": self.pipeline.fallback_enabled,
            },
            "glyph": {
                "style_kind": self.glyph.style_kind.value if self.glyph.style_kind else None,
                "font_id": self.glyph.font_id,
                "deform_strength": self.glyph.deform_strength,
                "max_iterations": self.glyph.max_iterations,
                "legibility_weight": self.glyph.legibility_weight,
            },
            "texture": {
                "forced_path": list(self.texture.forced_path) if self.texture.forced_path else None,
                "fusion_alphas": list(self.texture.fusion_alphas),
                "control_weights": dict(self.texture.control_weights),
                "guidance": self.texture.guidance,
                "seed": self.texture.seed,
                "guidance_cap": self.texture.guidance_cap,
            },
            "qa": {
                "tau": self.qa.tau,
                "theta": self.qa.theta,
                "metric_weights": dict(self.qa.metric_weights),
            },
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "HyperParams":
        pip = d.get("pipeline", {})
        gly = d.get("glyph", {})
        tex = d.get("texture", {})
        qa = d.get("qa", {})
        forced = tex.get("forced_path")
        return cls(
            pipeline=PipelineParams(
                scalars=pip.get("scalars", {}),
                augment_keywords=pip.get("augment_keywords", {}),
                fallback_enabled=pip.get("fallback_enabled", True),
            ),
            glyph=GlyphParams(
                style_kind=StyleKind(gly["style_kind"]) if gly.get("style_kind") else None,
                font_id=gly.get("font_id", "forge-sans"),
                deform_strength=gly.get("deform_strength", 0.5),
                max_iterations=gly.get("max_iterations", 60),
                legibility_weight=gly.get("legibility_weight", 0.5),
            ),
            texture=TextureParams(
                forced_path=tuple(forced) if forced else None,
                fusion_alphas=tuple(tex.get("fusion_alphas", ())),
                control_weights=tex.get("control_weights", {"Edge": 1.0, "Depth": 0.5}),
                guidance=tex.get("guidance", 7.5),
                seed=tex.get("seed", 0),
                guidance_cap=tex.get("guidance_cap"),
            ),
            qa=QaParams(
                tau=qa.get("tau", 3),
                theta=qa.get("theta", 0.9),
                metric_weights=qa.get("metric_weights", dict(DEFAULT_METRIC_WEIGHTS)),
            ),
        )


@dataclass(frozen=True)
class FeedbackBundle:
    """Metric set produced by evaluation and merged with user answers.

    ``user_overrides`` records which metric fields came from the user during
    a merge (the merge provenance); it is empty on model-sourced bundles.
    """

    g_cos: float
    g_qua: float
    g_gly: Optional[float] = None
    g_pref: Optional[Mapping[str, str]] = None
    loss: float = 0.0
    missing_targets: tuple[str, ...] = ()
    source: FeedbackSource = FeedbackSource.MODEL
    user_overrides: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        for name in ("g_cos", "g_qua", "g_gly"):
            value = getattr(self, name)
            if value is not None and not (0.0 <= value <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.loss < 0.0:
            raise ValueError("loss must be non-negative")
        if self.g_pref is not None:
            object.__setattr__(self, "g_pref", dict(self.g_pref))
        object.__setattr__(self, "missing_targets", tuple(self.missing_targets))
        object.__setattr__(self, "user_overrides", tuple(self.user_overrides))
        object.__setattr__(self, "source", FeedbackSource(self.source))

    def metric(self, key: str) -> Optional[float]:
        """Metric value by short key ('cos', 'qua', 'gly'); None when unset."""
        return {"cos": self.g_cos, "qua": self.g_qua, "gly": self.g_gly}[key]

    def to_dict(self) -> dict:
        return {
            "g_cos": self.g_cos,
            "g_qua": self.g_qua,
            "g_gly": self.g_gly,
            "g_pref": dict(self.g_pref) if self.g_pref is not None else None,
            "loss": self.loss,
            "missing_targets": list(self.missing_targets),
            "source": self.source.value,
            "user_overrides": list(self.user_overrides),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "FeedbackBundle":
        return cls(
            g_cos=d["g_cos"],
            g_qua=d["g_qua"],
            g_gly=d.get("g_gly"),
            g_pref=d.get("g_pref"),
            loss=d.get("loss", 0.0),
            missing_targets=tuple(d.get("missing_targets", ())),
            source=FeedbackSource(d.get("source", "Model")),
            user_overrides=tuple(d.get("user_overrides", ())),
        )


@dataclass(frozen=True)
class IterationRecord:
    """One completed (or failed) pass of the design loop.

    ``artifact_ref`` is None only when the iteration failed before a render
    completed; ``error`` then carries the reason.
    """

    index: int
    extended_prompt: Optional[ExtendedPrompt]
    params_snapshot: HyperParams
    artifact_ref: Optional[str]
    feedback: Optional[FeedbackBundle] = None
    error: Optional[str] = None

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError("iteration index must be non-negative")

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "extended_prompt": self.extended_prompt.to_dict() if self.extended_prompt else None,
            "params_snapshot": self.params_snapshot.to_dict(),
            "artifact_ref": self.artifact_ref,
            "feedback": self.feedback.to_dict() if self.feedback else None,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "IterationRecord":
        ext = d.get("extended_prompt")
        fb = d.get("feedback")
        return cls(
            index=d["index"],
            extended_prompt=ExtendedPrompt.from_dict(ext) if ext else None,
            params_snapshot=HyperParams.from_dict(d["params_snapshot"]),
            artifact_ref=d.get("artifact_ref"),
            feedback=FeedbackBundle.from_dict(fb) if fb else None,
            error=d.get("error"),
        )


def replace_params(params: HyperParams, **section_updates: Any) -> HyperParams:
    """Return a copy of ``params`` with whole sections swapped out."""
    return replace(params, **section_updates)
