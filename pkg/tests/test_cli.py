"""Command-line flows: new/iterate/feedback/export/tree, config loading."""

import json
import os

import pytest
from click.testing import CliRunner

from wordart_forge.cli import main
from wordart_forge.config import CONFIG_ENV_VAR, ForgeConfig, load_config
from wordart_forge.service import SessionStore, canonical_log_lines


@pytest.fixture()
def runner():
    return CliRunner()


def write_config(path, **kwargs) -> str:
    cfg = {"storage_dir": str(path / "store"), **kwargs}
    cfg_path = path / "config.json"
    cfg_path.write_text(json.dumps(cfg))
    return str(cfg_path)


def new_session_id(runner, cfg, *extra) -> str:
    result = runner.invoke(
        main, ["--config", cfg, "new", "--prompt", "Sunrise, mountain, bird", *extra]
    )
    assert result.exit_code == 0, result.output
    return result.output.strip()


class TestConfig:
    def test_defaults_when_unset(self, monkeypatch):
        monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
        cfg = load_config()
        assert cfg.deterministic
        assert cfg.render.mode == "Mock"

    def test_env_var_fallback(self, tmp_path, monkeypatch):
        cfg_path = write_config(tmp_path, selection_mode="Exhaustive")
        monkeypatch.setenv(CONFIG_ENV_VAR, cfg_path)
        assert load_config().selection_mode == "Exhaustive"

    def test_round_trip(self):
        cfg = ForgeConfig(selection_mode="Exhaustive", interactive=True)
        assert ForgeConfig.from_dict(cfg.to_dict()) == cfg

    def test_bad_selection_mode(self):
        with pytest.raises(ValueError):
            ForgeConfig(selection_mode="Random")


class TestCommands:
    def test_new_prints_id(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        session_id = new_session_id(runner, cfg)
        assert len(session_id) == 32

    def test_iterate_autonomous(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        session_id = new_session_id(runner, cfg)
        result = runner.invoke(main, ["--config", cfg, "iterate", session_id])
        assert result.exit_code == 0, result.output
        assert "iteration 0" in result.output
        assert "status: Done" in result.output

    def test_interactive_feedback_flow(self, runner, tmp_path):
        cfg = write_config(tmp_path, interactive=True)
        session_id = new_session_id(runner, cfg)
        result = runner.invoke(main, ["--config", cfg, "iterate", session_id])
        assert "status: AwaitingFeedback" in result.output
        result = runner.invoke(
            main,
            ["--config", cfg, "feedback", session_id, "--qua", "0.3", "--pref", "style=warmer"],
        )
        assert result.exit_code == 0, result.output
        assert "status: Running" in result.output

    def test_interactive_flag_overrides_config(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        session_id = new_session_id(runner, cfg, "--interactive")
        result = runner.invoke(main, ["--config", cfg, "iterate", session_id])
        assert "status: AwaitingFeedback" in result.output

    def test_bad_pref_format(self, runner, tmp_path):
        cfg = write_config(tmp_path, interactive=True)
        session_id = new_session_id(runner, cfg)
        runner.invoke(main, ["--config", cfg, "iterate", session_id])
        result = runner.invoke(
            main, ["--config", cfg, "feedback", session_id, "--pref", "no-equals"]
        )
        assert result.exit_code != 0

    def test_export_writes_archive(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        session_id = new_session_id(runner, cfg)
        runner.invoke(main, ["--config", cfg, "iterate", session_id])
        dest = str(tmp_path / "archive")
        result = runner.invoke(main, ["--config", cfg, "export", session_id, dest])
        assert result.exit_code == 0, result.output
        assert os.path.exists(os.path.join(dest, "session.json"))
        assert os.path.exists(os.path.join(dest, "manifest.json"))

    def test_unknown_session_fails(self, runner, tmp_path):
        cfg = write_config(tmp_path)
        result = runner.invoke(main, ["--config", cfg, "iterate", "deadbeef"])
        assert result.exit_code != 0

    def test_tree_validate_good_file(self, runner, tmp_path):
        tree_file = tmp_path / "tree.txt"
        tree_file.write_text("sci-fi/cyber|neon, circuit|0.8|base-v15\n")
        result = runner.invoke(main, ["tree", "validate", str(tree_file)])
        assert result.exit_code == 0
        assert "1 leaves" in result.output

    def test_tree_validate_bad_file(self, runner, tmp_path):
        tree_file = tmp_path / "tree.txt"
        tree_file.write_text("not a valid line\n")
        result = runner.invoke(main, ["tree", "validate", str(tree_file)])
        assert result.exit_code != 0

    def test_bundled_tree_validates(self, runner):
        from importlib import resources

        bundled = resources.files("wordart_forge") / "resources" / "model_tree.txt"
        result = runner.invoke(main, ["tree", "validate", str(bundled)])
        assert result.exit_code == 0
        assert "68 leaves" in result.output


class TestEndToEndDeterminism:
    def one_run(self, runner, base) -> list[str]:
        base.mkdir()
        cfg = write_config(base)
        session_id = new_session_id(runner, cfg)
        result = runner.invoke(main, ["--config", cfg, "iterate", session_id])
        assert result.exit_code == 0, result.output
        return canonical_log_lines(SessionStore(str(base / "store")))

    def test_two_runs_byte_identical_logs(self, runner, tmp_path):
        first = self.one_run(runner, tmp_path / "run1")
        second = self.one_run(runner, tmp_path / "run2")
        assert "\n".join(first) == "\n".join(second)
        assert len(first) >= 5
