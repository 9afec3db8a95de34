"""Session lifecycle: program interpretation, persistence, feedback routing.

A session owns one design request and its iteration history.  Interactive
sessions pause after each iteration for user answers; autonomous sessions
run the full tune loop in one call.  Everything a session does lands in a
JSON file per session plus an append-only event log, so two runs against
deterministic backends produce byte-identical logs once timestamps are
stripped.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
import uuid
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np

from .config import ForgeConfig, apply_overrides
from .core import (
    ExtendedPrompt,
    FeedbackBundle,
    FeedbackSource,
    ForgeError,
    HyperParams,
    IterationRecord,
    StorageUnavailable,
    StyleKind,
    TuneFailed,
    UserPrompt,
    WrongState,
    canonical_json,
)
from .gateway import ChatClient
from .glyphs import (
    GlyphDocument,
    legibility_score,
    load_glyph_document,
    load_silhouette,
    rasterize,
)
from .deform import semantic_transform
from .pipeline import Program, extend_prompt, plan, validate_or_raise
from .qa import (
    MetadataJudge,
    SynthesisOutput,
    UserAnswers,
    assess_consistency,
    assess_quality,
    extract_targets,
    feedback_questions,
    merge,
    tune,
    update_params,
)
from .texture import (
    ModelTree,
    SelectionResult,
    SelectionTrace,
    build_render_request,
    decompose,
    fusion_from_selection,
    load_artifact_metadata,
    load_tree,
    offline_trace,
    render,
    select_model,
)


class SessionStatus(str, Enum):
    CREATED = "Created"
    RUNNING = "Running"
    AWAITING_FEEDBACK = "AwaitingFeedback"
    DONE = "Done"
    FAILED = "Failed"


_TRANSITIONS: dict[SessionStatus, tuple[SessionStatus, ...]] = {
    SessionStatus.CREATED: (SessionStatus.RUNNING,),
    SessionStatus.RUNNING: (
        SessionStatus.RUNNING,
        SessionStatus.AWAITING_FEEDBACK,
        SessionStatus.DONE,
        SessionStatus.FAILED,
    ),
    SessionStatus.AWAITING_FEEDBACK: (SessionStatus.RUNNING, SessionStatus.DONE),
    SessionStatus.DONE: (),
    SessionStatus.FAILED: (),
}

ITERABLE_STATUSES = (
    SessionStatus.CREATED,
    SessionStatus.RUNNING,
    SessionStatus.AWAITING_FEEDBACK,
)


@dataclass
class Session:
    """One design request and everything that has happened to it."""

    id: str
    user_prompt: UserPrompt
    params: HyperParams
    history: list[IterationRecord] = field(default_factory=list)
    status: SessionStatus = SessionStatus.CREATED
    interactive: bool = False
    last_ranking: tuple[tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "user_prompt": self.user_prompt.to_dict(),
            "params": self.params.to_dict(),
            "history": [record.to_dict() for record in self.history],
            "status": self.status.value,
            "interactive": self.interactive,
            "last_ranking": [[leaf_id, score] for leaf_id, score in self.last_ranking],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Session":
        return cls(
            id=d["id"],
            user_prompt=UserPrompt.from_dict(d["user_prompt"]),
            params=HyperParams.from_dict(d["params"]),
            history=[IterationRecord.from_dict(r) for r in d.get("history", ())],
            status=SessionStatus(d.get("status", "Created")),
            interactive=d.get("interactive", False),
            last_ranking=tuple(
                (leaf_id, float(score)) for leaf_id, score in d.get("last_ranking", ())
            ),
        )


# -- persistence ------------------------------------------------------------------

class SessionStore:
    """Sessions as JSON files plus one append-only event log."""

    def __init__(self, root: str):
        self.root = root
        self.sessions_dir = os.path.join(root, "sessions")
        self.artifacts_root = os.path.join(root, "artifacts")
        self.log_path = os.path.join(root, "log.jsonl")
        try:
            os.makedirs(self.sessions_dir, exist_ok=True)
            os.makedirs(self.artifacts_root, exist_ok=True)
        except OSError as exc:
            raise StorageUnavailable(f"cannot create store under {root}: {exc}") from exc

    def _session_path(self, session_id: str) -> str:
        return os.path.join(self.sessions_dir, f"{session_id}.json")

    def exists(self, session_id: str) -> bool:
        return os.path.exists(self._session_path(session_id))

    def count(self) -> int:
        return len([n for n in os.listdir(self.sessions_dir) if n.endswith(".json")])

    def save(self, session: Session) -> None:
        path = self._session_path(session.id)
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(canonical_json(session.to_dict()))
        except OSError as exc:
            raise StorageUnavailable(f"cannot write {path}: {exc}") from exc

    def load(self, session_id: str) -> Session:
        path = self._session_path(session_id)
        if not os.path.exists(path):
            raise StorageUnavailable(f"no session {session_id!r} in {self.sessions_dir}")
        with open(path, "r", encoding="utf-8") as fh:
            return Session.from_dict(json.load(fh))

    def artifact_dir(self, session_id: str) -> str:
        path = os.path.join(self.artifacts_root, session_id)
        os.makedirs(path, exist_ok=True)
        return path

    def log(self, session_id: str, kind: str, payload: Mapping[str, Any]) -> None:
        entry = {
            "ts": datetime.now(timezone.utc).isoformat(),
            "session": session_id,
            "kind": kind,
            "payload": dict(payload),
        }
        try:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(canonical_json(entry) + "\n")
        except OSError as exc:
            raise StorageUnavailable(f"cannot append to {self.log_path}: {exc}") from exc

    def log_lines(self, session_id: Optional[str] = None) -> list[dict]:
        if not os.path.exists(self.log_path):
            return []
        out = []
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                entry = json.loads(line)
                if session_id is None or entry["session"] == session_id:
                    out.append(entry)
        return out


def canonical_log_lines(store: SessionStore, session_id: Optional[str] = None) -> list[str]:
    """Event log lines with timestamps stripped, in canonical form.

    Session ids stay in: deterministic configs assign them reproducibly, so
    two identical runs must agree on them too.
    """
    out = []
    for entry in store.log_lines(session_id):
        entry = dict(entry)
        entry.pop("ts", None)
        out.append(canonical_json(entry))
    return out


# -- program execution --------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GlyphResult:
    """Evaluated glyph statement: outlines, raster, and legibility."""

    document: GlyphDocument
    raster: np.ndarray
    score: float
    style: StyleKind


@dataclass(frozen=True)
class SelectionOutcome:
    """Evaluated selection statement, keeping the prompt it served."""

    trace: SelectionTrace
    selection: SelectionResult
    ext: ExtendedPrompt


@dataclass(frozen=True)
class RenderOutcome:
    """Evaluated render statement: the artifact plus everything QA needs."""

    ref: str
    prompt: str
    glyph_score: float
    ranking: tuple[tuple[str, float], ...]
    fusion: dict
    ext: ExtendedPrompt


_SILHOUETTE_KEYWORDS = (
    ("heart", ("heart", "love", "peace", "dove")),
    ("star", ("star", "spark", "shine")),
    ("ring", ("ring", "circle", "halo", "moon", "wreath")),
)


def silhouette_for_concept(concept: str) -> str:
    """Deterministic silhouette choice for a semantic concept."""
    lowered = concept.lower()
    for name, keywords in _SILHOUETTE_KEYWORDS:
        if any(word in lowered for word in keywords):
            return name
    return "disk"


@dataclass(frozen=True)
class ExecutionContext:
    """Everything statement handlers may touch while a program runs."""

    user_prompt: UserPrompt
    params: HyperParams
    tree: ModelTree
    artifact_dir: str
    render_config: Any
    chat: Optional[ChatClient] = None
    judge: Any = None
    selection_mode: str = "Greedy"


def _as_text(value: Any, attr: str) -> str:
    return getattr(value, attr) if isinstance(value, ExtendedPrompt) else str(value)


def _glyph_document(word: str, style: StyleKind, params: HyperParams) -> GlyphDocument:
    return load_glyph_document(word, font_id=params.glyph.font_id, style=style)


def _run_extend(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> ExtendedPrompt:
    prompt = UserPrompt(text=str(kwargs["text"]), language=ctx.user_prompt.language)
    return extend_prompt(prompt, ctx.params, ctx.chat)


def _run_glyph_gen(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> GlyphResult:
    word = _as_text(kwargs["text"], "glyph_prompt")
    style = StyleKind(kwargs["style"])
    doc = _glyph_document(word, style, ctx.params)
    return GlyphResult(document=doc, raster=rasterize(doc, 64), score=1.0, style=style)


def _run_semantic_deform(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> GlyphResult:
    word = _as_text(kwargs["text"], "glyph_prompt")
    concept = str(kwargs["concept"])
    doc = _glyph_document(word, StyleKind.SEMANTIC, ctx.params)
    target = load_silhouette(silhouette_for_concept(concept))
    result = semantic_transform(
        doc,
        target,
        ctx.params.glyph.deform_strength,
        max_iterations=ctx.params.glyph.max_iterations,
    )
    deformed = result.document
    return GlyphResult(
        document=deformed,
        raster=rasterize(deformed, 64),
        score=legibility_score(doc, deformed),
        style=StyleKind.SEMANTIC,
    )


def _forced_selection(ctx: ExecutionContext, ext: ExtendedPrompt) -> SelectionOutcome:
    forced = ctx.params.texture.forced_path
    leaf_id = "/".join(forced).lower()
    try:
        leaf = ctx.tree.leaf_by_id(leaf_id)
    except KeyError:
        leaf = None
    if leaf is not None:
        trace = SelectionTrace(steps=(), path=leaf.path, leaf_id=leaf.leaf_id)
        selection = SelectionResult(leaf=leaf, score=1.0, ranking=((leaf.leaf_id, 1.0),))
        return SelectionOutcome(trace=trace, selection=selection, ext=ext)
    try:
        trace = _trace(ctx, ext.texture_prompt, start=forced)
    except KeyError as exc:
        raise ForgeError(f"forced_path {forced} is not in the catalog") from exc
    selection = select_model(trace, ctx.tree, ctx.judge, ctx.selection_mode)
    return SelectionOutcome(trace=trace, selection=selection, ext=ext)


def _trace(ctx: ExecutionContext, prompt_text: str, start: Sequence[str] = ()) -> SelectionTrace:
    if ctx.chat is None:
        return offline_trace(prompt_text, ctx.tree, start=start)
    return decompose(prompt_text, ctx.tree, ctx.chat, start=start)


def _run_tot_select(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> SelectionOutcome:
    value = kwargs["prompt"]
    ext = (
        value
        if isinstance(value, ExtendedPrompt)
        else ExtendedPrompt(glyph_prompt=str(value), texture_prompt=str(value))
    )
    if ctx.params.texture.forced_path:
        return _forced_selection(ctx, ext)
    trace = _trace(ctx, ext.texture_prompt)
    selection = select_model(trace, ctx.tree, ctx.judge, ctx.selection_mode)
    return SelectionOutcome(trace=trace, selection=selection, ext=ext)


def _run_tex_render(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> RenderOutcome:
    glyph: GlyphResult = kwargs["glyph"]
    choice: SelectionOutcome = kwargs["selection"]
    fusion = fusion_from_selection(choice.selection, ctx.tree, ctx.params.texture)
    request = build_render_request(
        choice.ext, glyph.raster, fusion, ctx.tree, ctx.params.texture, ctx.params.pipeline
    )
    ref = render(request, ctx.render_config, ctx.artifact_dir)
    return RenderOutcome(
        ref=ref,
        prompt=request.prompt,
        glyph_score=glyph.score,
        ranking=choice.selection.ranking,
        fusion=fusion.to_dict(),
        ext=choice.ext,
    )


def _run_evaluate(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> FeedbackBundle:
    artifact: RenderOutcome = kwargs["artifact"]
    ext = kwargs["prompt"]
    texture_prompt = _as_text(ext, "texture_prompt")
    targets = extract_targets(ctx.user_prompt.text, ctx.chat)
    g_cos, missing = assess_consistency(targets, artifact.ref, ctx.judge)
    g_qua = assess_quality(texture_prompt, artifact.ref, ctx.judge)
    model_fb = FeedbackBundle(
        g_cos=g_cos,
        g_qua=g_qua,
        g_gly=artifact.glyph_score,
        missing_targets=missing,
        source=FeedbackSource.MODEL,
    )
    return merge(model_fb, None, weights=ctx.params.qa.metric_weights)


def _run_update_params(ctx: ExecutionContext, kwargs: Mapping[str, Any]) -> HyperParams:
    feedback: FeedbackBundle = kwargs["feedback"]
    return update_params(feedback, ctx.params, ranking=(), tree=ctx.tree)


_HANDLERS: dict[str, Callable[[ExecutionContext, Mapping[str, Any]], Any]] = {
    "ExtendPrompt": _run_extend,
    "GlyphGen": _run_glyph_gen,
    "SemanticDeform": _run_semantic_deform,
    "ToTSelect": _run_tot_select,
    "TexRender": _run_tex_render,
    "Evaluate": _run_evaluate,
    "UpdateParams": _run_update_params,
}


def execute_program(
    program: Program,
    ctx: ExecutionContext,
    env: Optional[Mapping[str, Any]] = None,
) -> tuple[dict[str, Any], list[tuple[str, str]]]:
    """Run a validated program top to bottom, wiring refs through ``env``.

    Outputs already bound in the seed ``env`` are kept as-is (the caller
    may have evaluated them while planning).  Returns the final environment
    and the (output, module) execution order.
    """
    validate_or_raise(program)
    bound: dict[str, Any] = dict(env or {})
    executed: list[tuple[str, str]] = []
    for stmt in program:
        if stmt.output in bound:
            continue
        kwargs = {
            arg.name: (bound[arg.value] if arg.kind == "ref" else arg.value)
            for arg in stmt.args
        }
        bound[stmt.output] = _HANDLERS[stmt.module](ctx, kwargs)
        executed.append((stmt.output, stmt.module))
    return bound, executed


def _without_evaluate(program: Program) -> Program:
    return tuple(stmt for stmt in program if stmt.module != "Evaluate")


# -- the orchestrator ----------------------------------------------------------------

class Orchestrator:
    """Front door: session CRUD, iteration driving, feedback routing."""

    def __init__(self, config: Optional[ForgeConfig] = None):
        self.config = config or ForgeConfig()
        self.store = SessionStore(self.config.storage_dir)
        self.tree = load_tree(self.config.tree_path)
        self.chat = ChatClient(self.config.chat) if self.config.chat else None

    # -- plumbing ------------------------------------------------------------

    def _judge_for(self, session_id: str):
        if self.config.judge is not None:
            return ChatClient(self.config.judge)
        return MetadataJudge(self.store.artifact_dir(session_id))

    def _context(self, session: Session, params: HyperParams) -> ExecutionContext:
        return ExecutionContext(
            user_prompt=session.user_prompt,
            params=params,
            tree=self.tree,
            artifact_dir=self.store.artifact_dir(session.id),
            render_config=self.config.render,
            chat=self.chat,
            judge=self._judge_for(session.id),
            selection_mode=self.config.selection_mode,
        )

    def _new_session_id(self, prompt: UserPrompt) -> str:
        if self.config.deterministic:
            seed = canonical_json({"prompt": prompt.to_dict(), "seq": self.store.count()})
            return hashlib.blake2b(seed.encode("utf-8"), digest_size=16).hexdigest()
        return uuid.uuid4().hex

    def _set_status(self, session: Session, status: SessionStatus) -> None:
        if status is session.status:
            return
        if status not in _TRANSITIONS[session.status]:
            raise WrongState(f"cannot move {session.status.value} -> {status.value}")
        self.store.log(
            session.id,
            "status-changed",
            {"from": session.status.value, "to": status.value},
        )
        session.status = status

    # -- lifecycle -----------------------------------------------------------

    def create_session(
        self,
        prompt: UserPrompt,
        params_overrides: Optional[Mapping[str, Any]] = None,
        interactive: Optional[bool] = None,
    ) -> Session:
        params = apply_overrides(self.config.params, params_overrides)
        session = Session(
            id=self._new_session_id(prompt),
            user_prompt=prompt,
            params=params,
            interactive=self.config.interactive if interactive is None else interactive,
        )
        self.store.save(session)
        self.store.log(
            session.id,
            "session-created",
            {
                "prompt": prompt.to_dict(),
                "params": params.to_dict(),
                "interactive": session.interactive,
            },
        )
        return session

    def get_session(self, session_id: str) -> Session:
        return self.store.load(session_id)

    def questions(self, session_id: str) -> tuple[dict, ...]:
        session = self.store.load(session_id)
        if not session.history:
            raise WrongState("no iteration to review yet")
        last = session.history[-1]
        return feedback_questions(last.index, last.artifact_ref or "none")

    # -- iterating -----------------------------------------------------------

    def run_iteration(self, session_id: str) -> IterationRecord:
        session = self.store.load(session_id)
        if session.status not in ITERABLE_STATUSES:
            raise WrongState(f"cannot iterate a session in status {session.status.value}")
        if len(session.history) >= session.params.qa.tau:
            raise WrongState(
                f"iteration budget tau={session.params.qa.tau} is already spent"
            )
        if session.interactive:
            record = self._iterate_interactive(session)
        else:
            record = self._iterate_autonomous(session)
        self.store.save(session)
        return record

    def _execute_plan(
        self, session: Session, params: HyperParams, with_evaluate: bool
    ) -> tuple[ExtendedPrompt, dict[str, Any]]:
        ext = extend_prompt(session.user_prompt, params, self.chat)
        program = plan(ext, params)
        if not with_evaluate:
            program = _without_evaluate(program)
        ctx = self._context(session, params)
        env, _ = execute_program(program, ctx, env={"ext": ext})
        return ext, env

    def _record_completed(self, session: Session, record: IterationRecord) -> None:
        session.history.append(record)
        kind = "iteration-failed" if record.error else "iteration-completed"
        self.store.log(session.id, kind, {"record": record.to_dict()})

    def _iterate_interactive(self, session: Session) -> IterationRecord:
        params = session.params
        if session.status is SessionStatus.AWAITING_FEEDBACK:
            # The user moved on without answering: the model bundle alone
            # drives the parameter update.
            last = session.history[-1]
            merged = merge(last.feedback, None, weights=params.qa.metric_weights)
            params = update_params(
                merged, params, ranking=session.last_ranking, tree=self.tree
            )
            session.params = params
            self.store.log(
                session.id,
                "feedback-merged",
                {"iteration": last.index, "feedback": merged.to_dict()},
            )
        self._set_status(session, SessionStatus.RUNNING)
        index = len(session.history)
        self.store.log(session.id, "iteration-started", {"index": index})
        try:
            ext, env = self._execute_plan(session, params, with_evaluate=True)
        except ForgeError as exc:
            record = IterationRecord(
                index=index,
                extended_prompt=None,
                params_snapshot=params,
                artifact_ref=None,
                error=str(exc),
            )
            self._record_completed(session, record)
            if len(session.history) >= params.qa.tau:
                succeeded = any(r.error is None for r in session.history)
                self._set_status(
                    session, SessionStatus.DONE if succeeded else SessionStatus.FAILED
                )
            return record
        art: RenderOutcome = env["art"]
        record = IterationRecord(
            index=index,
            extended_prompt=ext,
            params_snapshot=params,
            artifact_ref=art.ref,
            feedback=env["score"],
        )
        session.last_ranking = art.ranking
        self._record_completed(session, record)
        if len(session.history) >= params.qa.tau:
            self._set_status(session, SessionStatus.DONE)
        else:
            self._set_status(session, SessionStatus.AWAITING_FEEDBACK)
        return record

    def _iterate_autonomous(self, session: Session) -> IterationRecord:
        self._set_status(session, SessionStatus.RUNNING)
        base = len(session.history)
        judge = self._judge_for(session.id)

        def synthesize(params: HyperParams, i: int) -> SynthesisOutput:
            self.store.log(session.id, "iteration-started", {"index": base + i})
            targets = extract_targets(session.user_prompt.text, self.chat)
            ext, env = self._execute_plan(session, params, with_evaluate=False)
            art: RenderOutcome = env["art"]
            session.last_ranking = art.ranking
            return SynthesisOutput(
                artifact_ref=art.ref,
                extended=ext,
                targets=targets,
                texture_prompt=ext.texture_prompt,
                glyph_score=art.glyph_score,
                ranking=art.ranking,
            )

        try:
            result = tune(session.params, synthesize, judge, tree=self.tree)
        except TuneFailed as exc:
            for rec in exc.records:
                self._record_completed(session, replace(rec, index=base + rec.index))
            self._set_status(session, SessionStatus.FAILED)
            self.store.save(session)
            raise
        for rec in result.records:
            self._record_completed(session, replace(rec, index=base + rec.index))
        session.params = result.params
        self.store.log(
            session.id,
            "tune-finished",
            {
                "best_ref": result.best_ref,
                "best_score": result.best_score,
                "syntheses": result.syntheses,
                "stopped_early": result.stopped_early,
            },
        )
        self._set_status(session, SessionStatus.DONE)
        return session.history[-1]

    def preview(
        self, session_id: str, params_overrides: Optional[Mapping[str, Any]] = None
    ) -> dict:
        """Render a what-if artifact without touching the session history."""
        session = self.store.load(session_id)
        params = apply_overrides(session.params, params_overrides)
        ext, env = self._execute_plan(session, params, with_evaluate=False)
        art: RenderOutcome = env["art"]
        payload = {
            "artifact_ref": art.ref,
            "prompt": art.prompt,
            "fusion": art.fusion,
            "params": params.to_dict(),
        }
        self.store.log(session_id, "preview-completed", payload)
        return payload

    # -- feedback ------------------------------------------------------------

    def submit_feedback(self, session_id: str, answers: UserAnswers) -> FeedbackBundle:
        session = self.store.load(session_id)
        if session.status is not SessionStatus.AWAITING_FEEDBACK:
            raise WrongState(
                f"feedback requires AwaitingFeedback, session is {session.status.value}"
            )
        last = session.history[-1]
        merged = merge(last.feedback, answers, weights=session.params.qa.metric_weights)
        self.store.log(
            session.id,
            "feedback-submitted",
            {
                "iteration": last.index,
                "answers": answers.to_dict(),
                "merged": merged.to_dict(),
            },
        )
        score = 1.0 - merged.loss
        if score >= session.params.qa.theta:
            self._set_status(session, SessionStatus.DONE)
        else:
            session.params = update_params(
                merged, session.params, ranking=session.last_ranking, tree=self.tree
            )
            self.store.log(session.id, "params-updated", {"params": session.params.to_dict()})
            self._set_status(session, SessionStatus.RUNNING)
        self.store.save(session)
        return merged

    # -- artifacts and portability ---------------------------------------------

    def artifact_paths(self, session_id: str, ref: str) -> tuple[str, str]:
        """Absolute (png, json) paths for one artifact; both must exist."""
        base = self.store.artifact_dir(session_id)
        png = os.path.join(base, f"{ref}.png")
        meta = os.path.join(base, f"{ref}.json")
        if not (os.path.exists(png) and os.path.exists(meta)):
            raise StorageUnavailable(f"artifact {ref!r} not found for session {session_id}")
        return png, meta

    def artifact_metadata(self, session_id: str, ref: str) -> dict:
        _, meta = self.artifact_paths(session_id, ref)
        return load_artifact_metadata(self.store.artifact_dir(session_id), ref)

    def export_session(self, session_id: str, destination: str) -> str:
        session = self.store.load(session_id)
        os.makedirs(destination, exist_ok=True)
        with open(os.path.join(destination, "session.json"), "w", encoding="utf-8") as fh:
            fh.write(canonical_json(session.to_dict()))
        art_out = os.path.join(destination, "artifacts")
        os.makedirs(art_out, exist_ok=True)
        refs = sorted({r.artifact_ref for r in session.history if r.artifact_ref})
        for ref in refs:
            png, meta = self.artifact_paths(session_id, ref)
            shutil.copy(png, art_out)
            shutil.copy(meta, art_out)
        events = self.store.log_lines(session_id)
        with open(os.path.join(destination, "log.jsonl"), "w", encoding="utf-8") as fh:
            for entry in events:
                fh.write(canonical_json(entry) + "\n")
        manifest = {
            "session": session_id,
            "artifacts": refs,
            "config": self.config.to_dict(),
            "version": 1,
        }
        with open(os.path.join(destination, "manifest.json"), "w", encoding="utf-8") as fh:
            fh.write(canonical_json(manifest))
        self.store.log(session_id, "session-exported", {"artifacts": refs})
        return destination

    def import_session(self, source: str) -> Session:
        path = os.path.join(source, "session.json")
        if not os.path.exists(path):
            raise StorageUnavailable(f"no session.json under {source}")
        with open(path, "r", encoding="utf-8") as fh:
            session = Session.from_dict(json.load(fh))
        if self.store.exists(session.id):
            raise StorageUnavailable(f"session {session.id} already exists in this store")
        self.store.save(session)
        art_in = os.path.join(source, "artifacts")
        if os.path.isdir(art_in):
            target = self.store.artifact_dir(session.id)
            for name in sorted(os.listdir(art_in)):
                shutil.copy(os.path.join(art_in, name), target)
        self.store.log(session.id, "session-imported", {"source": os.path.basename(source)})
        return session
