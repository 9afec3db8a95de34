"""WordArt forge: a deterministic, human-in-the-loop WordArt design engine.

The package wires four cooperating agents (prompt extension, glyph design,
texture model selection, quality assessment) into an iterative loop whose
hyperparameters evolve from structured feedback.  Every generative backend
sits behind a pluggable client with a record/replay mode, so the whole loop
runs offline and bit-for-bit reproducibly.
"""

from .core import (
    FeedbackBundle,
    FeedbackSource,
    ForgeError,
    ExtendedPrompt,
    GlyphParams,
    HyperParams,
    IterationRecord,
    OutOfRange,
    PipelineParams,
    QaParams,
    StyleKind,
    TextureParams,
    UserPrompt,
    canonical_json,
    normalize_judge_score,
    stable_hash64,
)

__all__ = [
    "FeedbackBundle",
    "FeedbackSource",
    "ForgeError",
    "ExtendedPrompt",
    "GlyphParams",
    "HyperParams",
    "IterationRecord",
    "OutOfRange",
    "PipelineParams",
    "QaParams",
    "StyleKind",
    "TextureParams",
    "UserPrompt",
    "canonical_json",
    "normalize_judge_score",
    "stable_hash64",
]

__version__ = "0.1.0"
