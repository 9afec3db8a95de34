"""Command-line front end: new / iterate / feedback / export / tree / serve."""

from __future__ import annotations

import sys
from typing import Optional

import click

from .config import CONFIG_ENV_VAR, load_config
from .core import LANGUAGES, ForgeError, UserPrompt
from .qa import UserAnswers
from .service import Orchestrator
from .texture import load_tree


def _orchestrator(config_path: Optional[str]) -> Orchestrator:
    return Orchestrator(load_config(config_path))


def _record_lines(record) -> list[str]:
    lines = [f"iteration {record.index}"]
    if record.error:
        lines.append(f"  error: {record.error}")
        return lines
    lines.append(f"  artifact: {record.artifact_ref}")
    fb = record.feedback
    if fb is not None:
        lines.append(
            "  scores: "
            f"cos={fb.g_cos} qua={fb.g_qua} gly={fb.g_gly} loss={fb.loss:.6f}"
        )
        if fb.missing_targets:
            lines.append(f"  missing: {', '.join(fb.missing_targets)}")
    return lines


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(exists=True, dir_okay=False),
    default=None,
    help=f"Config JSON path (falls back to ${CONFIG_ENV_VAR}, then defaults).",
)
@click.pass_context
def main(ctx: click.Context, config_path: Optional[str]) -> None:
    """Deterministic human-in-the-loop WordArt design sessions."""
    ctx.obj = config_path


@main.command("new")
@click.option("--prompt", required=True, help="The design request text.")
@click.option("--lang", default="en", type=click.Choice(LANGUAGES), show_default=True)
@click.option("--interactive", is_flag=True, default=None, help="Pause for feedback each iteration.")
@click.pass_obj
def new(config_path: Optional[str], prompt: str, lang: str, interactive: Optional[bool]) -> None:
    """Create a session and print its id."""
    orch = _orchestrator(config_path)
    session = orch.create_session(
        UserPrompt(text=prompt, language=lang), interactive=interactive
    )
    click.echo(session.id)


@main.command("iterate")
@click.argument("session_id")
@click.pass_obj
def iterate(config_path: Optional[str], session_id: str) -> None:
    """Run the design loop (one step when interactive, to completion otherwise)."""
    orch = _orchestrator(config_path)
    record = orch.run_iteration(session_id)
    session = orch.get_session(session_id)
    new_records = [record] if session.interactive else session.history
    for rec in new_records:
        for line in _record_lines(rec):
            click.echo(line)
    click.echo(f"status: {session.status.value}")


@main.command("feedback")
@click.argument("session_id")
@click.option("--cos", type=float, default=None, help="Semantic consistency in [0, 1].")
@click.option("--qua", type=float, default=None, help="Visual quality in [0, 1].")
@click.option("--gly", type=float, default=None, help="Glyph legibility in [0, 1].")
@click.option("--pref", multiple=True, help="Preference as key=value; repeatable.")
@click.option("--text", "free_text", default="", help="Free-form comment.")
@click.pass_obj
def feedback(
    config_path: Optional[str],
    session_id: str,
    cos: Optional[float],
    qua: Optional[float],
    gly: Optional[float],
    pref: tuple[str, ...],
    free_text: str,
) -> None:
    """Submit review answers for the awaiting iteration."""
    prefs = {}
    for item in pref:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"--pref needs key=value, got {item!r}")
        prefs[key] = value
    answers = UserAnswers(
        g_cos=cos, g_qua=qua, g_gly=gly, g_pref=prefs or None, free_text=free_text
    )
    orch = _orchestrator(config_path)
    merged = orch.submit_feedback(session_id, answers)
    session = orch.get_session(session_id)
    click.echo(f"merged loss: {merged.loss:.6f}")
    click.echo(f"status: {session.status.value}")


@main.command("export")
@click.argument("session_id")
@click.argument("destination", type=click.Path(file_okay=False))
@click.pass_obj
def export(config_path: Optional[str], session_id: str, destination: str) -> None:
    """Write the session, its log slice, and its artifacts to a directory."""
    orch = _orchestrator(config_path)
    path = orch.export_session(session_id, destination)
    click.echo(path)


@main.group("tree")
def tree() -> None:
    """Model catalog utilities."""


@tree.command("validate")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def tree_validate(file: str) -> None:
    """Parse a catalog file and report its leaf count."""
    catalog = load_tree(file)
    click.echo(f"valid: {len(catalog.leaves)} leaves")


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.pass_obj
def serve(config_path: Optional[str], host: str, port: int) -> None:
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(_orchestrator(config_path)), host=host, port=port)


def run() -> None:
    try:
        main(standalone_mode=True)
    except ForgeError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
