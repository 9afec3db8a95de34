"""Runtime configuration: backends, storage, and default hyperparameters.

The default configuration is fully offline: no chat backend (the prompt
pipeline uses its deterministic fallbacks), the metadata judge, and the
mock renderer.  A JSON file supplied via ``load_config`` or the
``FORGE_CONFIG`` environment variable overrides any subset of it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from .core import HyperParams
from .gateway import BackendConfig
from .texture import RenderConfig

CONFIG_ENV_VAR = "FORGE_CONFIG"
SELECTION_MODES = ("Greedy", "Exhaustive")


def merge_dicts(base: Mapping[str, Any], overrides: Mapping[str, Any]) -> dict:
    """Recursively overlay ``overrides`` onto ``base`` (mappings only)."""
    out = dict(base)
    for key, value in overrides.items():
        if key in out and isinstance(out[key], Mapping) and isinstance(value, Mapping):
            out[key] = merge_dicts(out[key], value)
        else:
            out[key] = value
    return out


def apply_overrides(params: HyperParams, overrides: Optional[Mapping[str, Any]]) -> HyperParams:
    """A copy of ``params`` with a partial nested dict folded in."""
    if not overrides:
        return params
    return HyperParams.from_dict(merge_dicts(params.to_dict(), overrides))


@dataclass(frozen=True)
class ForgeConfig:
    """Everything the orchestrator needs to run sessions.

    ``chat`` is the completion backend for the pipeline and selection
    agents (None runs their offline fallbacks); ``judge`` is the scoring
    backend (None uses the artifact-metadata judge).
    """

    storage_dir: str = "forge_sessions"
    params: HyperParams = field(default_factory=HyperParams)
    chat: Optional[BackendConfig] = None
    judge: Optional[BackendConfig] = None
    render: RenderConfig = field(default_factory=lambda: RenderConfig(mode="Mock"))
    selection_mode: str = "Greedy"
    interactive: bool = False
    tree_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.selection_mode not in SELECTION_MODES:
            raise ValueError(f"selection_mode must be one of {SELECTION_MODES}")

    @property
    def deterministic(self) -> bool:
        """True when no backend can introduce run-to-run variation."""
        chat_ok = self.chat is None or self.chat.mode == "Replay"
        judge_ok = self.judge is None or self.judge.mode == "Replay"
        return chat_ok and judge_ok and self.render.mode == "Mock"

    def to_dict(self) -> dict:
        return {
            "storage_dir": self.storage_dir,
            "params": self.params.to_dict(),
            "chat": self.chat.to_dict() if self.chat else None,
            "judge": self.judge.to_dict() if self.judge else None,
            "render": self.render.to_dict(),
            "selection_mode": self.selection_mode,
            "interactive": self.interactive,
            "tree_path": self.tree_path,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ForgeConfig":
        chat = d.get("chat")
        judge = d.get("judge")
        render = d.get("render")
        return cls(
            storage_dir=d.get("storage_dir", "forge_sessions"),
            params=HyperParams.from_dict(d.get("params", {})),
            chat=BackendConfig.from_dict(chat) if chat else None,
            judge=BackendConfig.from_dict(judge) if judge else None,
            render=RenderConfig.from_dict(render) if render else RenderConfig(mode="Mock"),
            selection_mode=d.get("selection_mode", "Greedy"),
            interactive=d.get("interactive", False),
            tree_path=d.get("tree_path"),
        )


def load_config(path: Optional[str] = None) -> ForgeConfig:
    """Config from an explicit path, the environment, or the defaults."""
    effective = path or os.environ.get(CONFIG_ENV_VAR)
    if effective is None:
        return ForgeConfig()
    with open(effective, "r", encoding="utf-8") as fh:
        return ForgeConfig.from_dict(json.load(fh))
