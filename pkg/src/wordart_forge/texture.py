"""Texture agent: model catalog tree, guided selection, fusion, rendering.

The texture models live in a shallow tree (at most four path segments).
Selection walks the tree one level at a time with a chat call per level,
collecting a trace; a judge then scores candidate leaves against that
trace, either over the reached pool (Greedy) or over every leaf in the
catalog (Exhaustive).
"""

from __future__ import annotations

import base64
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
import requests
from PIL import Image
from scipy import ndimage

from .core import (
    AllZeroAlphas,
    DuplicateLeafId,
    EmptyCandidatePool,
    EmptyTree,
    ExtendedPrompt,
    InvalidResponse,
    LengthMismatch,
    ParseError,
    PipelineParams,
    RenderBackendUnavailable,
    SelectionNotInCandidates,
    TextureParams,
    canonical_json,
    stable_hash64,
)
from .gateway import parse_judge_triplet, parse_selected, render_template

MAX_TREE_DEPTH = 4


@dataclass(frozen=True)
class ModelLeaf:
    """One texture model: its tree path, trigger words, fusion defaults."""

    leaf_id: str
    path: tuple[str, ...]
    triggers: tuple[str, ...]
    default_alpha: float
    base_model: str

    @property
    def name(self) -> str:
        return self.path[-1]

    def descriptor(self) -> str:
        return f"{self.leaf_id} ({', '.join(self.triggers)})"


@dataclass(frozen=True)
class TreeNode:
    """Category node: subcategories plus any terminal models it holds."""

    name: str
    children: tuple["TreeNode", ...] = ()
    leaves: tuple[ModelLeaf, ...] = ()

    def child_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.children)

    def leaf_names(self) -> tuple[str, ...]:
        return tuple(leaf.name for leaf in self.leaves)


@dataclass(frozen=True)
class ModelTree:
    root: TreeNode
    leaves: tuple[ModelLeaf, ...]

    def leaf_by_id(self, leaf_id: str) -> ModelLeaf:
        for leaf in self.leaves:
            if leaf.leaf_id == leaf_id:
                return leaf
        raise KeyError(leaf_id)

    def node_at(self, path: Sequence[str]) -> TreeNode:
        node = self.root
        for segment in path:
            for child in node.children:
                if child.name.lower() == segment.lower():
                    node = child
                    break
            else:
                raise KeyError("/".join(path))
        return node


class _MutableNode:
    def __init__(self, name: str):
        self.name = name
        self.children: dict[str, _MutableNode] = {}
        self.leaves: list[ModelLeaf] = []

    def freeze(self) -> TreeNode:
        return TreeNode(
            name=self.name,
            children=tuple(c.freeze() for c in self.children.values()),
            leaves=tuple(self.leaves),
        )


def parse_tree(text: str) -> ModelTree:
    """Parse the pipe-separated catalog format; see the bundled file."""
    root = _MutableNode("")
    leaves: list[ModelLeaf] = []
    seen_ids: set[str] = set()
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        if len(fields) != 4:
            raise ParseError(f"line {lineno}: expected 4 pipe-separated fields, got {len(fields)}")
        path_text, trigger_text, alpha_text, base_model = (f.strip() for f in fields)
        segments = tuple(s.strip() for s in path_text.split("/"))
        if len(segments) < 2:
            raise ParseError(f"line {lineno}: path needs a category and a leaf name")
        if len(segments) > MAX_TREE_DEPTH:
            raise ParseError(f"line {lineno}: path deeper than {MAX_TREE_DEPTH} segments")
        if any(not s for s in segments):
            raise ParseError(f"line {lineno}: empty path segment")
        triggers = tuple(t.strip() for t in trigger_text.split(",") if t.strip())
        if not triggers:
            raise ParseError(f"line {lineno}: leaf needs at least one trigger word")
        try:
            alpha = float(alpha_text)
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad alpha {alpha_text!r}") from exc
        if not (0.0 < alpha <= 1.0):
            raise ParseError(f"line {lineno}: alpha must lie in (0, 1]")
        if not base_model:
            raise ParseError(f"line {lineno}: missing base model id")
        leaf_id = "/".join(segments).lower()
        if leaf_id in seen_ids:
            raise DuplicateLeafId(f"line {lineno}: leaf {leaf_id!r} defined twice")
        seen_ids.add(leaf_id)
        node = root
        for segment in segments[:-1]:
            key = segment.lower()
            if key in (l.name.lower() for l in node.leaves):
                raise ParseError(f"line {lineno}: {segment!r} is already a leaf here")
            if key not in node.children:
                node.children[key] = _MutableNode(segment)
            node = node.children[key]
        leaf_name = segments[-1]
        if leaf_name.lower() in node.children:
            raise ParseError(f"line {lineno}: {leaf_name!r} is already a category here")
        if leaf_name.lower() in (l.name.lower() for l in node.leaves):
            raise ParseError(f"line {lineno}: {leaf_name!r} repeats a sibling name")
        leaf = ModelLeaf(
            leaf_id=leaf_id,
            path=segments,
            triggers=triggers,
            default_alpha=alpha,
            base_model=base_model,
        )
        node.leaves.append(leaf)
        leaves.append(leaf)
    if not leaves:
        raise EmptyTree("catalog declares no leaves")
    return ModelTree(root=root.freeze(), leaves=tuple(leaves))


def load_tree(path: Optional[str] = None) -> ModelTree:
    """Load the bundled catalog, or one from an explicit path."""
    if path is None:
        text = (resources.files("wordart_forge") / "resources" / "model_tree.txt").read_text(
            encoding="utf-8"
        )
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_tree(text)


# -- guided selection -------------------------------------------------------

@dataclass(frozen=True)
class SelectionStep:
    """One level of the descent: the pool shown and the pick made."""

    candidates: tuple[str, ...]
    selected: str
    rationale: str


@dataclass(frozen=True)
class SelectionTrace:
    steps: tuple[SelectionStep, ...]
    path: tuple[str, ...]
    leaf_id: str


def _match_candidate(selected: str, candidates: Sequence[str]) -> Optional[str]:
    lowered = selected.lower().strip()
    for cand in candidates:
        if cand.lower() == lowered:
            return cand
    return None


def _select_one(prompt_text: str, candidates: Sequence[str], client) -> tuple[str, str]:
    """One chat-backed choice from ``candidates``; one retry on a bad answer."""
    if not candidates:
        raise EmptyCandidatePool("selection step has no candidates")
    search_list = ", ".join(candidates)
    rendered = render_template("ToTSelect", {"search_list": search_list, "input": prompt_text})
    last_selected = ""
    for _ in range(2):
        response = client.ask(rendered)
        selected = parse_selected(response)
        match = _match_candidate(selected, candidates)
        if match is not None:
            return match, response
        last_selected = selected
    raise SelectionNotInCandidates(
        f"backend chose {last_selected!r}, not one of: {search_list}"
    )


def canonical_path(tree: ModelTree, path: Sequence[str]) -> tuple[str, ...]:
    """Resolve ``path`` case-insensitively to the catalog's own spelling."""
    node = tree.root
    out: list[str] = []
    for segment in path:
        for child in node.children:
            if child.name.lower() == segment.lower():
                node = child
                out.append(child.name)
                break
        else:
            raise KeyError("/".join(path))
    return tuple(out)


def decompose(prompt_text: str, tree: ModelTree, client, start: Sequence[str] = ()) -> SelectionTrace:
    """Walk the catalog level by level until a leaf is chosen.

    At mixed nodes the pool contains subcategory and leaf names together;
    naming a leaf ends the walk.  A ``start`` path pins the first segments
    and begins the walk at that category.
    """
    prefix = canonical_path(tree, start)
    node = tree.node_at(prefix)
    path: list[str] = list(prefix)
    steps: list[SelectionStep] = []
    while True:
        candidates = node.child_names() + node.leaf_names()
        chosen, response = _select_one(prompt_text, candidates, client)
        steps.append(SelectionStep(candidates=tuple(candidates), selected=chosen, rationale=response))
        path.append(chosen)
        if chosen in node.leaf_names():
            leaf_id = "/".join(path).lower()
            return SelectionTrace(steps=tuple(steps), path=tuple(path), leaf_id=leaf_id)
        node = next(c for c in node.children if c.name == chosen)


_TOKEN_RE = re.compile(r"[a-z0-9]+")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(_TOKEN_RE.findall(text.lower()))


def _subtree_tokens(node: TreeNode) -> frozenset[str]:
    bag = set(_tokens(node.name))
    for leaf in node.leaves:
        bag |= _tokens(leaf.name)
        for trigger in leaf.triggers:
            bag |= _tokens(trigger)
    for child in node.children:
        bag |= _subtree_tokens(child)
    return frozenset(bag)


def offline_trace(prompt_text: str, tree: ModelTree, start: Sequence[str] = ()) -> SelectionTrace:
    """Chat-free descent: token overlap with names and trigger words.

    At each level the candidate whose subtree vocabulary shares the most
    tokens with the prompt wins; ties break lexicographically.  A stand-in
    for ``decompose`` when no completion backend is configured.
    """
    prompt_tokens = _tokens(prompt_text)
    prefix = canonical_path(tree, start)
    node = tree.node_at(prefix)
    path: list[str] = list(prefix)
    steps: list[SelectionStep] = []
    while True:
        scored: list[tuple[int, str]] = []
        for child in node.children:
            scored.append((len(prompt_tokens & _subtree_tokens(child)), child.name))
        for leaf in node.leaves:
            bag = set(_tokens(leaf.name))
            for trigger in leaf.triggers:
                bag |= _tokens(trigger)
            scored.append((len(prompt_tokens & bag), leaf.name))
        if not scored:
            raise EmptyCandidatePool("selection step has no candidates")
        overlap, chosen = min(scored, key=lambda it: (-it[0], it[1].lower()))
        candidates = node.child_names() + node.leaf_names()
        steps.append(
            SelectionStep(
                candidates=tuple(candidates),
                selected=chosen,
                rationale=f"offline keyword overlap {overlap} for {chosen!r}",
            )
        )
        path.append(chosen)
        if chosen in node.leaf_names():
            leaf_id = "/".join(path).lower()
            return SelectionTrace(steps=tuple(steps), path=tuple(path), leaf_id=leaf_id)
        node = next(c for c in node.children if c.name == chosen)


def score_pathway(trace: SelectionTrace, leaf: ModelLeaf, judge) -> float:
    """Judge one leaf against every step of the trace; higher is better.

    Per step: the judge template gets the step's rationale as the request
    and the leaf descriptor as the candidate; the three normalized scores
    average into one value.  The pathway score is the sum over steps.
    """
    total = 0.0
    for step in trace.steps:
        rendered = render_template(
            "JudgeScore", {"prompt": step.rationale, "candidate": leaf.descriptor()}
        )
        triplet = parse_judge_triplet(judge.ask(rendered))
        total += sum(triplet) / 3.0
    return total


@dataclass(frozen=True)
class SelectionResult:
    leaf: ModelLeaf
    score: float
    ranking: tuple[tuple[str, float], ...]

    def runner_up(self) -> Optional[str]:
        return self.ranking[1][0] if len(self.ranking) > 1 else None


def select_model(
    trace: SelectionTrace,
    tree: ModelTree,
    judge,
    mode: str = "Greedy",
    scorer: Optional[Callable[[ModelLeaf], float]] = None,
) -> SelectionResult:
    """Score candidate leaves against the trace and take the argmax.

    Greedy scores the pool at the node the trace reached; Exhaustive scores
    every leaf in the catalog.  Ties break toward the smaller leaf id.  A
    ``scorer`` replaces the judge-backed pathway score when supplied.
    """
    if mode not in ("Greedy", "Exhaustive"):
        raise ValueError(f"mode must be Greedy or Exhaustive, got {mode!r}")
    if mode == "Exhaustive":
        pool = tree.leaves
    else:
        node = tree.node_at(trace.path[:-1])
        pool = node.leaves
    if not pool:
        raise EmptyCandidatePool("no leaves to score")
    score_of = scorer if scorer is not None else (lambda leaf: score_pathway(trace, leaf, judge))
    scored = [(leaf, float(score_of(leaf))) for leaf in pool]
    ranking = tuple(
        (leaf.leaf_id, s) for leaf, s in sorted(scored, key=lambda it: (-it[1], it[0].leaf_id))
    )
    best_id = ranking[0][0]
    best = next(leaf for leaf, _ in scored if leaf.leaf_id == best_id)
    return SelectionResult(leaf=best, score=ranking[0][1], ranking=ranking)


# -- fusion ---------------------------------------------------------------------

@dataclass(frozen=True)
class FusionSpec:
    """Models blended into the render, with weights summing to one."""

    models: tuple[str, ...]
    weights: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"models": list(self.models), "weights": list(self.weights)}


def fuse_weights(models: Sequence[str], alphas: Sequence[float]) -> tuple[float, ...]:
    """Normalize fusion strengths over the fused models.

    A single model always gets weight exactly 1.0.  Raises LengthMismatch
    when the sequences disagree and AllZeroAlphas when nothing carries
    weight.
    """
    if len(models) != len(alphas):
        raise LengthMismatch(f"{len(models)} models vs {len(alphas)} alphas")
    if not models:
        raise LengthMismatch("at least one model is required")
    if any(a < 0 for a in alphas):
        raise ValueError("alphas must be non-negative")
    if len(models) == 1:
        return (1.0,)
    total = float(sum(alphas))
    if total <= 0.0:
        raise AllZeroAlphas("fusion weights sum to zero")
    return tuple(float(a) / total for a in alphas)


def fusion_from_selection(
    selection: SelectionResult, tree: ModelTree, params: TextureParams
) -> FusionSpec:
    """Fusion spec for the selected leaf, honoring forced extra alphas.

    With no configured alphas this is the single selected model at weight
    one.  With n alphas the top n ranked leaves blend.
    """
    if not params.fusion_alphas or len(params.fusion_alphas) == 1:
        return FusionSpec(models=(selection.leaf.leaf_id,), weights=(1.0,))
    count = min(len(params.fusion_alphas), len(selection.ranking))
    models = tuple(leaf_id for leaf_id, _ in selection.ranking[:count])
    weights = fuse_weights(models, params.fusion_alphas[:count])
    return FusionSpec(models=models, weights=weights)


# -- render requests ---------------------------------------------------------------

def control_maps(glyph_raster: np.ndarray, weights: Mapping[str, float]) -> dict[str, np.ndarray]:
    """Derive the configured conditioning maps from a glyph occupancy raster.

    Edge marks occupied cells with an empty 4-neighbor, Depth is the
    normalized interior distance, Scribble is the occupancy itself.
    """
    occ = np.asarray(glyph_raster, dtype=np.float64)
    maps: dict[str, np.ndarray] = {}
    for cond in weights:
        if cond == "Scribble":
            maps[cond] = occ.copy()
        elif cond == "Edge":
            filled = occ > 0
            interior = (
                np.roll(filled, 1, 0)
                & np.roll(filled, -1, 0)
                & np.roll(filled, 1, 1)
                & np.roll(filled, -1, 1)
            )
            edge = filled & ~interior
            maps[cond] = edge.astype(np.float64)
        elif cond == "Depth":
            dist = ndimage.distance_transform_edt(occ > 0)
            peak = dist.max()
            maps[cond] = dist / peak if peak > 0 else dist
        else:
            raise ValueError(f"unknown control condition {cond!r}")
    return maps


@dataclass(frozen=True)
class RenderRequest:
    """Everything a texture backend needs; content-addressed by request_id."""

    prompt: str
    fusion: FusionSpec
    control_weights: Mapping[str, float]
    control: Mapping[str, np.ndarray] = field(repr=False, default_factory=dict)
    guidance: float = 7.5
    seed: int = 0
    size: int = 256

    def to_dict(self) -> dict:
        control_hashes = {
            cond: stable_hash64(np.ascontiguousarray(arr, dtype=np.float64).tobytes() + str(arr.shape).encode())
            for cond, arr in sorted(self.control.items())
        }
        return {
            "prompt": self.prompt,
            "fusion": self.fusion.to_dict(),
            "control": {
                cond: {"weight": self.control_weights[cond], "map_hash": control_hashes[cond]}
                for cond in sorted(self.control)
            },
            "guidance": self.guidance,
            "seed": self.seed,
            "size": self.size,
        }

    @property
    def request_id(self) -> str:
        return stable_hash64(canonical_json(self.to_dict()))


def build_render_request(
    ext: ExtendedPrompt,
    glyph_raster: np.ndarray,
    fusion: FusionSpec,
    tree: ModelTree,
    texture_params: TextureParams,
    pipeline_params: Optional[PipelineParams] = None,
) -> RenderRequest:
    """Assemble the prompt and conditioning for one render.

    Prompt = texture prompt, then each fused model's trigger words, then
    the augmentation keywords repeated by their counts.
    """
    parts = [ext.texture_prompt]
    for model_id in fusion.models:
        leaf = tree.leaf_by_id(model_id)
        parts.extend(leaf.triggers)
    if pipeline_params is not None:
        for keyword in sorted(pipeline_params.augment_keywords):
            parts.extend([keyword] * pipeline_params.augment_keywords[keyword])
    prompt = ", ".join(parts)
    maps = control_maps(glyph_raster, texture_params.control_weights)
    return RenderRequest(
        prompt=prompt,
        fusion=fusion,
        control_weights=dict(texture_params.control_weights),
        control=maps,
        guidance=texture_params.guidance,
        seed=texture_params.seed,
    )


# -- rendering ------------------------------------------------------------------

@dataclass(frozen=True)
class RenderConfig:
    """Mock renders draw locally; Live posts the request to an endpoint."""

    mode: str = "Mock"
    endpoint: Optional[str] = None
    timeout_ms: int = 120_000
    max_retries: int = 1

    def __post_init__(self) -> None:
        if self.mode not in ("Mock", "Live"):
            raise ValueError(f"mode must be Mock or Live, got {self.mode!r}")
        if self.mode == "Live" and not self.endpoint:
            raise ValueError("Live render mode requires an endpoint")
        if self.mode == "Mock" and self.endpoint:
            raise ValueError("Mock render mode must not set an endpoint")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "endpoint": self.endpoint,
            "timeout_ms": self.timeout_ms,
            "max_retries": self.max_retries,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, object]) -> "RenderConfig":
        return cls(
            mode=d.get("mode", "Mock"),
            endpoint=d.get("endpoint"),
            timeout_ms=d.get("timeout_ms", 120_000),
            max_retries=d.get("max_retries", 1),
        )


def _mock_image(request: RenderRequest) -> Image.Image:
    """Deterministic stand-in picture: the scribble map tinted by request id."""
    rgb = tuple(int(request.request_id[i : i + 2], 16) for i in (0, 2, 4))
    base = request.control.get("Scribble")
    if base is None:
        base = next(iter(request.control.values())) if request.control else np.zeros((64, 64))
    grid = (np.asarray(base) > 0).astype(np.uint8)
    scale = max(1, request.size // grid.shape[0])
    big = np.kron(grid, np.ones((scale, scale), dtype=np.uint8))
    img = np.full((*big.shape, 3), 255, dtype=np.uint8)
    for c in range(3):
        img[:, :, c] = np.where(big > 0, rgb[c], 255)
    return Image.fromarray(img, mode="RGB")


def render(request: RenderRequest, config: RenderConfig, out_dir: str) -> str:
    """Produce the artifact files for a request; returns the artifact ref.

    Writes ``<ref>.png`` and ``<ref>.json`` (prompt recorded verbatim plus
    the full request snapshot) into ``out_dir``.
    """
    import os

    os.makedirs(out_dir, exist_ok=True)
    ref = request.request_id
    png_path = os.path.join(out_dir, f"{ref}.png")
    meta_path = os.path.join(out_dir, f"{ref}.json")
    if config.mode == "Mock":
        image = _mock_image(request)
        image.save(png_path, format="PNG")
    else:
        image_bytes = _render_live(request, config)
        with open(png_path, "wb") as fh:
            fh.write(image_bytes)
    metadata = {
        "prompt": request.prompt,
        "fusion": request.fusion.to_dict(),
        "request": request.to_dict(),
    }
    with open(meta_path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(metadata))
    return ref


def _render_live(request: RenderRequest, config: RenderConfig) -> bytes:
    last_error: Optional[Exception] = None
    for _ in range(config.max_retries + 1):
        try:
            resp = requests.post(
                config.endpoint,
                json=request.to_dict(),
                timeout=config.timeout_ms / 1000.0,
            )
            if resp.status_code != 200:
                last_error = RenderBackendUnavailable(f"HTTP {resp.status_code}")
                continue
            body = resp.json()
            if "image_b64" not in body:
                raise InvalidResponse("render response lacks image_b64")
            return base64.b64decode(body["image_b64"])
        except InvalidResponse:
            raise
        except (requests.RequestException, ValueError) as exc:
            last_error = exc
    raise RenderBackendUnavailable(
        f"render endpoint {config.endpoint} failed after {config.max_retries + 1} attempts: {last_error}"
    )


def load_artifact_metadata(out_dir: str, ref: str) -> dict:
    """Read back the metadata sidecar written by :func:`render`."""
    import os

    with open(os.path.join(out_dir, f"{ref}.json"), "r", encoding="utf-8") as fh:
        return json.load(fh)
