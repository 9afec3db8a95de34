"""Shared test scaffolding: scripted chat clients and random catalogs."""

from __future__ import annotations

import numpy as np

from wordart_forge.texture import ModelTree, parse_tree


class ScriptedClient:
    """Judge-handle fake that plays back queued responses in order."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.prompts = []

    def ask(self, prompt: str) -> str:
        self.prompts.append(prompt)
        if not self.responses:
            raise AssertionError("scripted client ran out of responses")
        return self.responses.pop(0)


class ConstantClient:
    """Judge-handle fake that always answers the same thing."""

    def __init__(self, response: str):
        self.response = response
        self.prompts = []

    def ask(self, prompt: str) -> str:
        self.prompts.append(prompt)
        return self.response


def random_catalog(rng: np.random.Generator, max_levels: int = 3, max_leaves: int = 12) -> ModelTree:
    """Random small catalog: up to ``max_levels`` path segments per leaf."""
    n_leaves = int(rng.integers(1, max_leaves + 1))
    lines = []
    used = set()
    for i in range(n_leaves):
        depth = int(rng.integers(2, max_levels + 1))
        segments = [f"cat{int(rng.integers(0, 3))}"]
        for d in range(depth - 2):
            segments.append(f"sub{d}{int(rng.integers(0, 2))}")
        segments.append(f"leaf{i}")
        path = "/".join(segments)
        if path.lower() in used:
            continue
        used.add(path.lower())
        lines.append(f"{path}|trigger {i}, extra|0.7|sd15")
    return parse_tree("\n".join(lines) + "\n")


def quantized_scorer(rng: np.random.Generator):
    """Leaf scorer with deliberate ties (scores quantized to one decimal)."""
    cache = {}

    def score(leaf):
        if leaf.leaf_id not in cache:
            cache[leaf.leaf_id] = round(float(rng.uniform(0.0, 1.0)), 1)
        return cache[leaf.leaf_id]

    return score


def brute_force_best(pool, scorer):
    """Independent argmax with the smallest-id tie-break."""
    best_score = None
    for leaf in pool:
        s = scorer(leaf)
        if best_score is None or s > best_score:
            best_score = s
    tied = [leaf.leaf_id for leaf in pool if scorer(leaf) == best_score]
    return min(tied), best_score
