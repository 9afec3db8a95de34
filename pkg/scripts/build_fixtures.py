"""Regenerate the committed replay fixtures under tests/fixtures/.

Each fixture line is {"hash": <prompt hash>, "response": ...}; the hashes
are computed from the live templates, so editing a template and rerunning
this script keeps the fixtures honest (stale fixtures fail loudly as
misses, never silently).
"""

from __future__ import annotations

import json
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from wordart_forge.core import stable_hash64
from wordart_forge.gateway import render_template
from wordart_forge.texture import load_tree

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")

APPENDIX_PROMPT = "A girl, a boy, in a church"
APPENDIX_PATH = ("Traditional Art", "European style", "Painting", "Oil Painting")
APPENDIX_RATIONALES = (
    "A church interior with two figures reads as classic heritage imagery.",
    "The scene belongs to the continental painting lineage, not East Asian media.",
    "Brushwork suits the subject better than engraving.",
    "Thick classical oils carry the solemn light of the setting.",
)

FUTURE_TECH_PROMPTS = (
    "cybernetic cityscape, holographic interface, neon circuits, quantum particles",
    "robotic augmentation, bioluminescent tech, neural networks visualization",
    "quantum computing visualization, data crystals, energy flows",
    "cyborg nature fusion, techno-organic growth, synthetic biology",
    "artificial intelligence mindscape, digital consciousness, virtual reality portals",
)

CLOSED_LOOP_PROMPT = "old man, cake, candles, little girl"


def tot_entry(tree, prompt: str, path_so_far, selected: str, rationale: str) -> dict:
    node = tree.node_at(path_so_far)
    candidates = node.child_names() + node.leaf_names()
    rendered = render_template(
        "ToTSelect", {"search_list": ", ".join(candidates), "input": prompt}
    )
    return {
        "hash": stable_hash64(rendered),
        "response": f"{rationale}\nSelected: {selected}",
    }


def judge_entry(rationale_response: str, candidate: str, scores: str) -> dict:
    rendered = render_template(
        "JudgeScore", {"prompt": rationale_response, "candidate": candidate}
    )
    return {"hash": stable_hash64(rendered), "response": scores}


def build_appendix(tree) -> list[dict]:
    entries = []
    full_responses = []
    for depth, (selected, rationale) in enumerate(zip(APPENDIX_PATH, APPENDIX_RATIONALES)):
        entry = tot_entry(tree, APPENDIX_PROMPT, APPENDIX_PATH[:depth], selected, rationale)
        entries.append(entry)
        full_responses.append(entry["response"])
    # The judge sees each step's full response as the pathway rationale;
    # the intended winner outscores the shared default at every step.
    winner = tree.leaf_by_id("/".join(APPENDIX_PATH).lower())
    for response in full_responses:
        entries.append(judge_entry(response, winner.descriptor(), "9 9 9"))
    entries.append({"default": "7 7 7"})
    return entries


def build_table4(tree) -> list[dict]:
    entries = []
    winner = tree.leaf_by_id("sci-fi/cyber")
    for prompt in FUTURE_TECH_PROMPTS:
        first = tot_entry(
            tree, prompt, (), "SCI-FI",
            "Chrome, neon, and quantum motifs put this firmly in science fiction.",
        )
        second = tot_entry(
            tree, prompt, ("SCI-FI",), "cyber",
            "Circuitry and neon glow match the cyber finish directly.",
        )
        entries.extend([first, second])
        for step_response in (first["response"], second["response"]):
            entries.append(judge_entry(step_response, winner.descriptor(), "9 9 9"))
    entries.append({"default": "7 7 7"})
    return entries


def build_closed_loop() -> list[dict]:
    extend = render_template("PromptExtend", {"input": CLOSED_LOOP_PROMPT})
    extract = render_template("TargetExtract", {"input": CLOSED_LOOP_PROMPT})
    return [
        {
            "hash": stable_hash64(extend),
            "response": "Glyph: Birthday\nTexture: birthday table with cake\nConcept: none",
        },
        {
            "hash": stable_hash64(extract),
            "response": "Targets:{old man, cake, candles, little girl}",
        },
        {"default": "Selected: General"},
    ]


def write(name: str, entries: list[dict]) -> None:
    os.makedirs(OUT_DIR, exist_ok=True)
    path = os.path.join(OUT_DIR, name)
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    print(f"wrote {len(entries):3d} entries -> {os.path.relpath(path)}")


def main() -> None:
    tree = load_tree()
    write("tot_appendix.jsonl", build_appendix(tree))
    write("tot_table4.jsonl", build_table4(tree))
    write("closed_loop.jsonl", build_closed_loop())


if __name__ == "__main__":
    main()
