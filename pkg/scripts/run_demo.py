"""Walk one interactive design session end to end, fully offline.

Builds a small replay fixture on the fly (so the prompt splitter returns a
semantic concept), then drives: create -> iterate -> review -> feedback ->
iterate, printing what changed at each step.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from wordart_forge.config import ForgeConfig
from wordart_forge.core import UserPrompt, stable_hash64
from wordart_forge.gateway import BackendConfig, clear_caches, render_template
from wordart_forge.qa import UserAnswers
from wordart_forge.service import Orchestrator

PROMPT = "Create a stylish word Peace representing its meaning"


def build_fixture(path: str) -> None:
    entries = [
        {
            "hash": stable_hash64(render_template("PromptExtend", {"input": PROMPT})),
            "response": (
                "Glyph: Peace\n"
                "Texture: sun, peace dove, olive leaves, soft cloud\n"
                "Concept: peace dove"
            ),
        },
        {
            "hash": stable_hash64(render_template("TargetExtract", {"input": PROMPT})),
            "response": "Targets:{sun, peace dove, olive leaves, cloud}",
        },
        {"default": "Selected: General"},
    ]
    with open(path, "w", encoding="utf-8") as fh:
        for entry in entries:
            fh.write(json.dumps(entry) + "\n")


def show(title: str, record) -> None:
    print(f"\n== {title} ==")
    print(f"  artifact: {record.artifact_ref}")
    fb = record.feedback
    print(f"  g_cos={fb.g_cos:.3f}  g_qua={fb.g_qua:.3f}  g_gly={fb.g_gly:.3f}  loss={fb.loss:.3f}")
    if fb.missing_targets:
        print(f"  missing: {', '.join(fb.missing_targets)}")
    tex = record.params_snapshot.texture
    print(f"  forced_path={tex.forced_path}  guidance={tex.guidance}")


def main() -> None:
    clear_caches()
    with tempfile.TemporaryDirectory() as work:
        fixture = os.path.join(work, "chat.jsonl")
        build_fixture(fixture)
        orch = Orchestrator(
            ForgeConfig(
                storage_dir=os.path.join(work, "store"),
                chat=BackendConfig(mode="Replay", fixture_path=fixture),
                interactive=True,
            )
        )
        session = orch.create_session(
            UserPrompt(text=PROMPT),
            params_overrides={"glyph": {"max_iterations": 4}},
        )
        print(f"session {session.id}")

        record = orch.run_iteration(session.id)
        show("iteration 0", record)

        print("\nreview form:")
        for q in orch.questions(session.id)[1:]:
            print(f"  [{q['id']}] {q['text']}")

        merged = orch.submit_feedback(session.id, UserAnswers(g_qua=0.3))
        print(f"\nuser says quality 0.3 -> merged loss {merged.loss:.3f}")

        record = orch.run_iteration(session.id)
        show("iteration 1 (after rule-driven switch)", record)

        final = orch.get_session(session.id)
        print(f"\nstatus: {final.status.value}, iterations: {len(final.history)}")
        art_dir = orch.store.artifact_dir(session.id)
        print(f"artifacts under {art_dir}:")
        for name in sorted(os.listdir(art_dir)):
            print(f"  {name}")


if __name__ == "__main__":
    main()
