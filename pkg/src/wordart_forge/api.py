"""HTTP face of the orchestrator: JSON in, JSON (or PNG) out.

Thin by design: every route validates its payload, calls one orchestrator
method, and serializes the result.  Domain errors map onto status codes
(WrongState 409, missing things 404, bad values 422, other domain errors
500) with a ``{"error", "detail"}`` body.
"""

from __future__ import annotations

from typing import Any, Mapping, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse

from .config import ForgeConfig
from .core import ForgeError, StorageUnavailable, UserPrompt, WrongState
from .qa import UserAnswers
from .service import Orchestrator, Session


def session_view(session: Session) -> dict:
    """The session as the API presents it."""
    view = session.to_dict()
    view["iteration_count"] = len(session.history)
    return view


def _user_prompt_from(payload: Mapping[str, Any]) -> UserPrompt:
    prompt = payload.get("prompt")
    if isinstance(prompt, str):
        return UserPrompt(text=prompt, language=payload.get("language", "en"))
    if isinstance(prompt, Mapping):
        return UserPrompt.from_dict(prompt)
    raise ValueError("body needs a 'prompt' string or object")


def create_app(orchestrator: Optional[Orchestrator] = None) -> FastAPI:
    orch = orchestrator or Orchestrator(ForgeConfig())
    app = FastAPI(title="wordart-forge", version="0.1.0")
    # The browser studio is a static bundle served from its own origin.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(ForgeError)
    async def forge_error_handler(request: Request, exc: ForgeError):
        if isinstance(exc, WrongState):
            status = 409
        elif isinstance(exc, StorageUnavailable):
            status = 404
        else:
            status = 500
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.exception_handler(ValueError)
    async def value_error_handler(request: Request, exc: ValueError):
        return JSONResponse(
            status_code=422, content={"error": "ValueError", "detail": str(exc)}
        )

    @app.get("/health")
    async def health() -> dict:
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    async def create_session(payload: dict) -> dict:
        prompt = _user_prompt_from(payload)
        session = orch.create_session(
            prompt,
            params_overrides=payload.get("params_overrides"),
            interactive=payload.get("interactive"),
        )
        return session_view(session)

    @app.get("/sessions/{session_id}")
    async def get_session(session_id: str) -> dict:
        return session_view(orch.get_session(session_id))

    @app.post("/sessions/{session_id}/iterate")
    async def iterate(session_id: str, payload: Optional[dict] = None) -> dict:
        payload = payload or {}
        if payload.get("preview"):
            preview = orch.preview(session_id, payload.get("params_overrides"))
            return {
                "preview": preview,
                "session": session_view(orch.get_session(session_id)),
            }
        record = orch.run_iteration(session_id)
        return {
            "record": record.to_dict(),
            "session": session_view(orch.get_session(session_id)),
        }

    @app.post("/sessions/{session_id}/feedback")
    async def feedback(session_id: str, payload: dict) -> dict:
        answers = UserAnswers.from_dict(payload)
        merged = orch.submit_feedback(session_id, answers)
        return {
            "merged": merged.to_dict(),
            "session": session_view(orch.get_session(session_id)),
        }

    @app.get("/sessions/{session_id}/questions")
    async def questions(session_id: str) -> dict:
        return {"questions": list(orch.questions(session_id))}

    @app.get("/sessions/{session_id}/artifacts/{ref}")
    async def artifact(session_id: str, ref: str) -> FileResponse:
        png, _ = orch.artifact_paths(session_id, ref)
        return FileResponse(png, media_type="image/png")

    @app.get("/sessions/{session_id}/artifacts/{ref}/metadata")
    async def artifact_metadata(session_id: str, ref: str) -> dict:
        return orch.artifact_metadata(session_id, ref)

    return app
