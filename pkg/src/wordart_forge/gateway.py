"""Chat backend gateway: versioned prompt templates, live and replay clients.

Every chat interaction in the loop flows through :func:`complete`, keyed by
a stable hash of the fully rendered prompt.  Replay fixtures therefore go
stale loudly whenever a template changes, instead of silently answering a
different question.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass
from importlib import resources
from typing import Mapping, Optional

import requests

from .core import (
    BackendUnavailable,
    FixtureMiss,
    MalformedScores,
    MarkerNotFound,
    MissingBinding,
    OutOfRange,
    Timeout,
    UnknownTemplate,
    normalize_judge_score,
    stable_hash64,
)

TEMPLATE_FILES: Mapping[str, str] = {
    "ToTSelect": "tot_select.txt",
    "JudgeScore": "judge_score.txt",
    "TargetExtract": "target_extract.txt",
    "PromptExtend": "prompt_extend.txt",
    "QASession": "qa_session.txt",
}

# Placeholders are bare identifiers in braces; literal brace text that
# contains spaces or punctuation (sample output shapes) is left alone.
_PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")

_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?")

_template_cache: dict[str, str] = {}
_fixture_cache: dict[str, tuple[dict[str, str], Optional[str]]] = {}
_cache_lock = threading.Lock()


def template_body(template_id: str) -> str:
    """Raw template text by registered id; UnknownTemplate otherwise."""
    if template_id not in TEMPLATE_FILES:
        raise UnknownTemplate(f"no template registered under {template_id!r}")
    with _cache_lock:
        body = _template_cache.get(template_id)
        if body is None:
            ref = resources.files("wordart_forge") / "resources" / "templates" / TEMPLATE_FILES[template_id]
            body = ref.read_text(encoding="utf-8")
            _template_cache[template_id] = body
    return body


def template_placeholders(template_id: str) -> tuple[str, ...]:
    """Placeholder names a template requires, in order of first appearance."""
    seen: list[str] = []
    for name in _PLACEHOLDER_RE.findall(template_body(template_id)):
        if name not in seen:
            seen.append(name)
    return tuple(seen)


def render_template(template_id: str, bindings: Mapping[str, str]) -> str:
    """Substitute placeholder values into a template.

    Raises MissingBinding naming every unbound placeholder.  Values are
    inserted verbatim and never rescanned, so braces inside a value cannot
    masquerade as placeholders.
    """
    body = template_body(template_id)
    required = template_placeholders(template_id)
    missing = [name for name in required if name not in bindings]
    if missing:
        raise MissingBinding(f"template {template_id}: unbound {', '.join(missing)}")

    def sub(match: re.Match) -> str:
        return str(bindings[match.group(1)])

    return _PLACEHOLDER_RE.sub(sub, body)


@dataclass(frozen=True)
class BackendConfig:
    """Where chat completions come from.

    Live mode talks to an OpenAI-style endpoint; Replay mode answers from a
    line-delimited fixture file.  Exactly the active mode's locator must be
    set.
    """

    mode: str = "Replay"
    endpoint: Optional[str] = None
    fixture_path: Optional[str] = None
    timeout_ms: int = 30_000
    max_retries: int = 2
    model: str = "default"
    api_key_env: str = "FORGE_API_KEY"

    def __post_init__(self) -> None:
        if self.mode not in ("Live", "Replay"):
            raise ValueError(f"mode must be Live or Replay, got {self.mode!r}")
        if self.mode == "Live":
            if not self.endpoint:
                raise ValueError("Live mode requires an endpoint")
            if self.fixture_path:
                raise ValueError("Live mode must not set fixture_path")
        else:
            if not self.fixture_path:
                raise ValueError("Replay mode requires a fixture_path")
            if self.endpoint:
                raise ValueError("Replay mode must not set an endpoint")
        if self.timeout_ms < 1:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "endpoint": self.endpoint,
            "fixture_path": self.fixture_path,
            "timeout_ms": self.timeout_ms,
            "max_retries": self.max_retries,
            "model": self.model,
            "api_key_env": self.api_key_env,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "BackendConfig":
        return cls(
            mode=d.get("mode", "Replay"),
            endpoint=d.get("endpoint"),
            fixture_path=d.get("fixture_path"),
            timeout_ms=d.get("timeout_ms", 30_000),
            max_retries=d.get("max_retries", 2),
            model=d.get("model", "default"),
            api_key_env=d.get("api_key_env", "FORGE_API_KEY"),
        )


@dataclass(frozen=True)
class ChatExchange:
    """One completed prompt -> response pair, with the replay key used."""

    prompt: str
    response: str
    prompt_hash: str
    mode: str


def _load_fixture(path: str) -> tuple[dict[str, str], Optional[str]]:
    """Parse a replay fixture once and cache it: hash->response plus default."""
    with _cache_lock:
        cached = _fixture_cache.get(path)
    if cached is not None:
        return cached
    table: dict[str, str] = {}
    default: Optional[str] = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FixtureMiss(f"{path}:{lineno}: not valid JSON ({exc})") from exc
            if "default" in entry:
                default = entry["default"]
            elif "hash" in entry and "response" in entry:
                table[entry["hash"]] = entry["response"]
            else:
                raise FixtureMiss(f"{path}:{lineno}: entry needs hash+response or default")
    with _cache_lock:
        _fixture_cache[path] = (table, default)
    return table, default


def clear_caches() -> None:
    """Drop cached templates and fixtures (test hook for regenerated files)."""
    with _cache_lock:
        _template_cache.clear()
        _fixture_cache.clear()


def complete(prompt: str, config: BackendConfig) -> ChatExchange:
    """Run one chat completion under the configured backend."""
    prompt_hash = stable_hash64(prompt)
    if config.mode == "Replay":
        table, default = _load_fixture(config.fixture_path)
        response = table.get(prompt_hash, default)
        if response is None:
            raise FixtureMiss(
                f"no fixture entry for prompt hash {prompt_hash} in {config.fixture_path}"
            )
        return ChatExchange(prompt=prompt, response=response, prompt_hash=prompt_hash, mode="Replay")
    return _complete_live(prompt, prompt_hash, config)


def _complete_live(prompt: str, prompt_hash: str, config: BackendConfig) -> ChatExchange:
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(config.api_key_env)
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
    }
    last_error: Optional[Exception] = None
    timed_out = False
    for _ in range(config.max_retries + 1):
        try:
            resp = requests.post(
                config.endpoint,
                json=payload,
                headers=headers,
                timeout=config.timeout_ms / 1000.0,
            )
            if resp.status_code != 200:
                last_error = BackendUnavailable(f"HTTP {resp.status_code} from {config.endpoint}")
                continue
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
            return ChatExchange(prompt=prompt, response=text, prompt_hash=prompt_hash, mode="Live")
        except requests.Timeout as exc:
            last_error, timed_out = exc, True
        except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
            last_error, timed_out = exc, False
    if timed_out:
        raise Timeout(f"backend {config.endpoint} timed out after {config.max_retries + 1} attempts")
    raise BackendUnavailable(
        f"backend {config.endpoint} failed after {config.max_retries + 1} attempts: {last_error}"
    )


class ChatClient:
    """Template-aware convenience wrapper over one backend config.

    Also serves as the judge handle: anything exposing ``ask(prompt)`` can
    stand in for it (the offline metadata judge does).
    """

    def __init__(self, config: BackendConfig):
        self.config = config

    def ask(self, prompt: str) -> str:
        return complete(prompt, self.config).response

    def ask_template(self, template_id: str, bindings: Mapping[str, str]) -> str:
        return self.ask(render_template(template_id, bindings))


def parse_selected(response: str) -> str:
    """Extract the choice from a selection response.

    Takes the first line carrying a case-insensitive ``Selected:`` marker,
    then strips whitespace and one layer of surrounding brackets.  Raises
    MarkerNotFound when no usable marker line exists.
    """
    lower = response.lower()
    idx = lower.find("selected:")
    if idx < 0:
        raise MarkerNotFound("response has no 'Selected:' line")
    start = idx + len("selected:")
    end = response.find("\n", start)
    raw = response[start:] if end < 0 else response[start:end]
    value = raw.strip()
    if value.startswith("[") and value.endswith("]") and len(value) >= 2:
        value = value[1:-1].strip()
    if not value:
        raise MarkerNotFound("'Selected:' line carries no value")
    return value


def parse_judge_triplet(response: str) -> tuple[float, float, float]:
    """Pull three 1-10 scores out of a judge response, normalized to [0,1].

    The first three numbers found anywhere in the text are taken in order;
    fewer than three, or any outside [1,10], raises MalformedScores.
    """
    numbers = _NUMBER_RE.findall(response)
    if len(numbers) < 3:
        raise MalformedScores(f"expected three scores, found {len(numbers)}: {response!r}")
    scores = []
    for token in numbers[:3]:
        try:
            scores.append(normalize_judge_score(float(token)))
        except OutOfRange as exc:
            raise MalformedScores(str(exc)) from exc
    return (scores[0], scores[1], scores[2])
