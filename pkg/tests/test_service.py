"""Session lifecycle, program interpretation, persistence, portability."""

import json
import os

import pytest
from hypothesis import given, settings, strategies as st

from wordart_forge.config import ForgeConfig
from wordart_forge.core import (
    ForgeError,
    HyperParams,
    StorageUnavailable,
    StyleKind,
    TuneFailed,
    UserPrompt,
    WrongState,
    stable_hash64,
)
from wordart_forge.gateway import BackendConfig, clear_caches, render_template
from wordart_forge.pipeline import parse_program
from wordart_forge.qa import UserAnswers
from wordart_forge.service import (
    ExecutionContext,
    Orchestrator,
    Session,
    SessionStatus,
    SessionStore,
    canonical_log_lines,
    execute_program,
    silhouette_for_concept,
)
from wordart_forge.texture import load_tree

PROMPT = UserPrompt(text="Sunrise, mountain, bird")


def make_orch(tmp_path, name="store", **kwargs) -> Orchestrator:
    return Orchestrator(ForgeConfig(storage_dir=str(tmp_path / name), **kwargs))


class TestSessionStore:
    def test_save_load_round_trip(self, tmp_path):
        store = SessionStore(str(tmp_path))
        session = Session(id="abc", user_prompt=PROMPT, params=HyperParams())
        store.save(session)
        loaded = store.load("abc")
        assert loaded.to_dict() == session.to_dict()

    def test_missing_session(self, tmp_path):
        store = SessionStore(str(tmp_path))
        with pytest.raises(StorageUnavailable):
            store.load("nope")

    def test_log_filters_by_session(self, tmp_path):
        store = SessionStore(str(tmp_path))
        store.log("a", "kind1", {"x": 1})
        store.log("b", "kind2", {"x": 2})
        assert [e["kind"] for e in store.log_lines("a")] == ["kind1"]
        assert len(store.log_lines()) == 2

    def test_canonical_lines_drop_timestamps(self, tmp_path):
        store = SessionStore(str(tmp_path))
        store.log("a", "kind1", {"x": 1})
        line = canonical_log_lines(store)[0]
        assert "ts" not in json.loads(line)
        assert json.loads(line)["payload"] == {"x": 1}


class TestCreateSession:
    def test_created_with_empty_history(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        assert session.status is SessionStatus.CREATED
        assert session.history == []

    def test_two_creations_distinct_ids(self, tmp_path):
        orch = make_orch(tmp_path)
        a = orch.create_session(PROMPT)
        b = orch.create_session(PROMPT)
        assert a.id != b.id

    def test_deterministic_ids_across_fresh_stores(self, tmp_path):
        a = make_orch(tmp_path, "one").create_session(PROMPT)
        b = make_orch(tmp_path, "two").create_session(PROMPT)
        assert a.id == b.id
        assert len(a.id) == 32

    def test_live_config_uses_random_ids(self, tmp_path):
        from wordart_forge.texture import RenderConfig

        cfg = ForgeConfig(
            storage_dir=str(tmp_path / "live"),
            render=RenderConfig(mode="Live", endpoint="http://localhost:1/render"),
        )
        assert not cfg.deterministic
        orch = Orchestrator(cfg)
        a = orch.create_session(PROMPT)
        b = orch.create_session(PROMPT)
        assert a.id != b.id

    def test_overrides_fold_into_params(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT, params_overrides={"qa": {"tau": 7}})
        assert session.params.qa.tau == 7
        assert session.params.qa.theta == 0.9

    def test_persistence_round_trip(self, tmp_path):
        orch = make_orch(tmp_path)
        created = orch.create_session(PROMPT)
        reloaded = Orchestrator(orch.config).get_session(created.id)
        assert reloaded.to_dict() == created.to_dict()


class TestAutonomousIteration:
    def test_runs_to_done(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        record = orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert after.status is SessionStatus.DONE
        assert record.artifact_ref
        assert after.history[-1].to_dict() == record.to_dict()

    def test_artifact_files_written(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        record = orch.run_iteration(session.id)
        png, meta = orch.artifact_paths(session.id, record.artifact_ref)
        assert os.path.getsize(png) > 0
        prompt = orch.artifact_metadata(session.id, record.artifact_ref)["prompt"]
        assert "sunrise" in prompt.lower()

    def test_deterministic_artifact_and_logs(self, tmp_path):
        runs = []
        for name in ("r1", "r2"):
            orch = make_orch(tmp_path, name)
            session = orch.create_session(PROMPT)
            record = orch.run_iteration(session.id)
            runs.append((record.artifact_ref, canonical_log_lines(orch.store)))
        assert runs[0] == runs[1]

    def test_iterate_done_session_rejected(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        with pytest.raises(WrongState):
            orch.run_iteration(session.id)

    def test_tau_zero_cannot_iterate(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT, params_overrides={"qa": {"tau": 0}})
        with pytest.raises(WrongState):
            orch.run_iteration(session.id)

    def test_all_failures_mark_failed_with_records(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(
            PROMPT,
            params_overrides={"texture": {"forced_path": ["no", "such", "leaf"]}},
        )
        with pytest.raises(TuneFailed):
            orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert after.status is SessionStatus.FAILED
        assert len(after.history) == after.params.qa.tau
        assert all(r.error for r in after.history)
        assert [r.index for r in after.history] == list(range(len(after.history)))


class TestInteractiveLoop:
    def test_first_iteration_awaits(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        record = orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert after.status is SessionStatus.AWAITING_FEEDBACK
        assert record.index == 0
        assert record.feedback is not None

    def test_user_answer_takes_precedence(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        merged = orch.submit_feedback(session.id, UserAnswers(g_qua=0.3))
        assert merged.g_qua == 0.3
        assert merged.user_overrides == ("qua",)

    def test_low_quality_feedback_switches_fusion(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        first = orch.run_iteration(session.id)
        assert first.params_snapshot.texture.forced_path is None
        orch.submit_feedback(session.id, UserAnswers(g_qua=0.3))
        mid = orch.get_session(session.id)
        assert mid.status is SessionStatus.RUNNING
        assert mid.params.texture.forced_path is not None
        assert mid.params.texture.guidance == pytest.approx(7.5 * 1.1)
        second = orch.run_iteration(session.id)
        assert second.params_snapshot.texture.forced_path is not None
        assert second.artifact_ref != first.artifact_ref

    def test_satisfied_feedback_finishes(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        orch.submit_feedback(session.id, UserAnswers(g_cos=1.0, g_qua=1.0, g_gly=1.0))
        assert orch.get_session(session.id).status is SessionStatus.DONE

    def test_feedback_requires_awaiting(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        with pytest.raises(WrongState):
            orch.submit_feedback(session.id, UserAnswers(g_qua=0.5))

    def test_feedback_after_done_rejected(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        orch.submit_feedback(session.id, UserAnswers(g_cos=1.0, g_qua=1.0, g_gly=1.0))
        with pytest.raises(WrongState):
            orch.submit_feedback(session.id, UserAnswers(g_qua=0.2))

    def test_skipping_feedback_still_iterates(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        record = orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert record.index == 1
        assert [r.index for r in after.history] == [0, 1]

    def test_budget_exhaustion_finishes(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT, params_overrides={"qa": {"tau": 2}})
        orch.run_iteration(session.id)
        orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert after.status is SessionStatus.DONE
        with pytest.raises(WrongState):
            orch.run_iteration(session.id)

    def test_questions_reference_last_artifact(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        with pytest.raises(WrongState):
            orch.questions(session.id)
        record = orch.run_iteration(session.id)
        questions = orch.questions(session.id)
        assert len(questions) == 5
        assert record.artifact_ref in questions[0]["text"]


class TestStateMachineProperty:
    @given(st.lists(st.sampled_from(["iterate", "feedback"]), min_size=1, max_size=7))
    @settings(max_examples=25, deadline=None)
    def test_illegal_ops_rejected_without_side_effects(self, tmp_path_factory, ops):
        tmp_path = tmp_path_factory.mktemp("fsm")
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        for op in ops:
            before = orch.get_session(session.id)
            try:
                if op == "iterate":
                    orch.run_iteration(session.id)
                else:
                    orch.submit_feedback(session.id, UserAnswers(g_qua=0.4))
            except WrongState:
                after = orch.get_session(session.id)
                assert after.status == before.status
                assert len(after.history) == len(before.history)
            else:
                after = orch.get_session(session.id)
                assert after.status in (
                    SessionStatus.RUNNING,
                    SessionStatus.AWAITING_FEEDBACK,
                    SessionStatus.DONE,
                    SessionStatus.FAILED,
                )
        final = orch.get_session(session.id)
        assert [r.index for r in final.history] == list(range(len(final.history)))


class TestProgramExecution:
    def make_ctx(self, tmp_path, params=None):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        return orch._context(session, params or session.params)

    def test_values_flow_between_statements(self, tmp_path):
        ctx = self.make_ctx(tmp_path)
        program = parse_program(
            'ext = ExtendPrompt(text="Sunrise, mountain, bird")\n'
            "glyph = GlyphGen(text=$ext, style=\"Normal\")\n"
            "choice = ToTSelect(prompt=$ext)\n"
            "art = TexRender(glyph=$glyph, selection=$choice)\n"
            "score = Evaluate(artifact=$art, prompt=$ext)\n"
        )
        env, executed = execute_program(program, ctx)
        assert [name for name, _ in executed] == ["ext", "glyph", "choice", "art", "score"]
        assert env["art"].glyph_score == env["glyph"].score
        assert env["art"].ext is env["choice"].ext
        assert env["score"].loss >= 0.0

    def test_seeded_outputs_are_not_recomputed(self, tmp_path):
        ctx = self.make_ctx(tmp_path)
        program = parse_program('ext = ExtendPrompt(text="hello")\n')
        sentinel = object()
        env, executed = execute_program(program, ctx, env={"ext": sentinel})
        assert env["ext"] is sentinel
        assert executed == []

    def test_invalid_program_rejected(self, tmp_path):
        from wordart_forge.core import InvalidProgram

        ctx = self.make_ctx(tmp_path)
        program = parse_program("art = TexRender(glyph=$missing, selection=$missing)\n")
        with pytest.raises(InvalidProgram):
            execute_program(program, ctx)

    def test_update_params_statement(self, tmp_path):
        ctx = self.make_ctx(tmp_path)
        program = parse_program(
            'ext = ExtendPrompt(text="Sunrise, mountain, bird")\n'
            "glyph = GlyphGen(text=$ext, style=\"Normal\")\n"
            "choice = ToTSelect(prompt=$ext)\n"
            "art = TexRender(glyph=$glyph, selection=$choice)\n"
            "score = Evaluate(artifact=$art, prompt=$ext)\n"
            "tuned = UpdateParams(feedback=$score)\n"
        )
        env, _ = execute_program(program, ctx)
        assert isinstance(env["tuned"], HyperParams)


class TestForcedPath:
    def test_exact_leaf_short_circuits(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(
            PROMPT, params_overrides={"texture": {"forced_path": ["SCI-FI", "cyber"]}}
        )
        record = orch.run_iteration(session.id)
        prompt = orch.artifact_metadata(session.id, record.artifact_ref)["prompt"]
        assert "cybernetic circuits" in prompt
        after = orch.get_session(session.id)
        assert after.last_ranking == (("sci-fi/cyber", 1.0),)

    def test_category_prefix_pins_descent(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(
            PROMPT, params_overrides={"texture": {"forced_path": ["Cartoon"]}}
        )
        orch.run_iteration(session.id)
        after = orch.get_session(session.id)
        assert all(leaf_id.startswith("cartoon/") for leaf_id, _ in after.last_ranking)


class TestSemanticPath:
    def build_fixture(self, tmp_path) -> str:
        entries = [
            {
                "hash": stable_hash64(
                    render_template("PromptExtend", {"input": "world peace"})
                ),
                "response": "Glyph: O\nTexture: peace dove over olive branches\nConcept: peace dove",
            },
            {
                "hash": stable_hash64(
                    render_template("TargetExtract", {"input": "world peace"})
                ),
                "response": "Targets:{dove}",
            },
            {"default": "Selected: General"},
        ]
        path = tmp_path / "chat.jsonl"
        path.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
        return str(path)

    def test_semantic_deformation_runs(self, tmp_path):
        clear_caches()
        orch = make_orch(
            tmp_path,
            chat=BackendConfig(mode="Replay", fixture_path=self.build_fixture(tmp_path)),
        )
        session = orch.create_session(
            UserPrompt(text="world peace"),
            params_overrides={
                "glyph": {"max_iterations": 3},
                "qa": {"theta": 0.5},
            },
        )
        record = orch.run_iteration(session.id)
        assert record.extended_prompt.semantic_concept == "peace dove"
        assert record.feedback.g_gly is not None
        assert 0.0 < record.feedback.g_gly <= 1.0

    def test_silhouette_concept_mapping(self):
        assert silhouette_for_concept("a peace dove") == "heart"
        assert silhouette_for_concept("shining star") == "star"
        assert silhouette_for_concept("full moon") == "ring"
        assert silhouette_for_concept("mountain") == "disk"


class TestPortability:
    def run_session(self, tmp_path, name="src"):
        orch = make_orch(tmp_path, name)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        return orch, session.id

    def test_export_import_round_trip(self, tmp_path):
        orch, sid = self.run_session(tmp_path)
        dest = str(tmp_path / "archive")
        orch.export_session(sid, dest)
        fresh = make_orch(tmp_path, "dst")
        imported = fresh.import_session(dest)
        assert imported.to_dict() == orch.get_session(sid).to_dict()
        ref = imported.history[-1].artifact_ref
        png, meta = fresh.artifact_paths(imported.id, ref)
        assert os.path.exists(png) and os.path.exists(meta)

    def test_export_empty_history_has_no_artifacts(self, tmp_path):
        orch = make_orch(tmp_path)
        session = orch.create_session(PROMPT)
        dest = str(tmp_path / "empty")
        orch.export_session(session.id, dest)
        manifest = json.loads(open(os.path.join(dest, "manifest.json")).read())
        assert manifest["artifacts"] == []
        assert os.listdir(os.path.join(dest, "artifacts")) == []

    def test_import_collision_rejected(self, tmp_path):
        orch, sid = self.run_session(tmp_path)
        dest = str(tmp_path / "archive")
        orch.export_session(sid, dest)
        with pytest.raises(StorageUnavailable):
            orch.import_session(dest)

    def test_replay_reproduces_artifact_refs(self, tmp_path):
        orch, sid = self.run_session(tmp_path)
        dest = str(tmp_path / "archive")
        orch.export_session(sid, dest)
        manifest = json.loads(open(os.path.join(dest, "manifest.json")).read())
        replay = make_orch(tmp_path, "replay")
        session = replay.create_session(PROMPT)
        replay.run_iteration(session.id)
        refs = sorted(
            {r.artifact_ref for r in replay.get_session(session.id).history if r.artifact_ref}
        )
        assert refs == manifest["artifacts"]


class TestPreview:
    def test_preview_leaves_history_alone(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        orch.run_iteration(session.id)
        before = len(orch.get_session(session.id).history)
        payload = orch.preview(session.id, {"texture": {"guidance": 9.0}})
        assert payload["params"]["texture"]["guidance"] == 9.0
        assert len(orch.get_session(session.id).history) == before
        assert orch.get_session(session.id).status is SessionStatus.AWAITING_FEEDBACK

    def test_preview_is_deterministic(self, tmp_path):
        orch = make_orch(tmp_path, interactive=True)
        session = orch.create_session(PROMPT)
        a = orch.preview(session.id, {"texture": {"seed": 5}})
        b = orch.preview(session.id, {"texture": {"seed": 5}})
        assert a["artifact_ref"] == b["artifact_ref"]
