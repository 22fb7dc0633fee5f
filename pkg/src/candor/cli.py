"""Operator command line: serve, validate, replay, eval-transcript."""

from __future__ import annotations

import dataclasses
import json
import sys
import tempfile
from contextlib import ExitStack
from importlib import resources
from pathlib import Path
from typing import Any

import click

from .config import AppConfig, load_config
from .domain import CaseScenario, StageCode, StageLabelSet, Turn, canonical_json
from .errors import CandorError, DomainValidationError, ProviderError, StructureInvalid
from .evaluator import (
    EvaluatorState,
    generate_overall_feedback,
    generate_turn_feedback,
    score_schema_export,
)
from .orchestrator import CaseLibrary, LogicalClock, SessionOrchestrator
from .providers import FixtureScript, ProviderFactory
from .report import render_overall_markdown, render_turn_feedback_markdown
from .stages import StageRequest, classify_stage
from .templates import load_templates

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_PROVIDER = 3
EXIT_DIFF = 4


class DiffMismatch(CandorError):
    pass


@click.group()
def cli() -> None:
    """Disclosure practice service and batch tools."""


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--data-dir", type=click.Path(), default=None)
def serve(config_path: str | None, host: str | None, port: int | None, data_dir: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    config = load_config(config_path) if config_path else AppConfig()
    if data_dir:
        config = dataclasses.replace(config, data_dir=data_dir)
    factory = ProviderFactory(config.provider)
    orchestrator = SessionOrchestrator(factory, config.data_dir, max_sessions=config.max_sessions)
    library = _default_library(config)
    app = create_app(orchestrator, library, config)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


def _default_library(config: AppConfig) -> CaseLibrary:
    if config.case_dir:
        return CaseLibrary(config.case_dir)
    with resources.as_file(resources.files("candor.data").joinpath("cases")) as case_dir:
        return CaseLibrary(case_dir)


@cli.command()
@click.option("--case", "case_paths", type=click.Path(exists=True), multiple=True)
@click.option("--fixtures", "fixture_paths", type=click.Path(exists=True), multiple=True)
def validate(case_paths: tuple[str, ...], fixture_paths: tuple[str, ...]) -> None:
    """Check case files and fixture scripts against their schemas."""
    if not case_paths and not fixture_paths:
        raise click.UsageError("nothing to validate; pass --case and/or --fixtures")
    for path in case_paths:
        try:
            CaseScenario.from_dict(json.loads(Path(path).read_text("utf-8")))
        except json.JSONDecodeError as exc:
            raise DomainValidationError(f"{path}: not valid JSON ({exc})") from None
        except CandorError as exc:
            raise DomainValidationError(f"{path}: {exc}") from None
        click.echo(f"ok: case {path}")
    for path in fixture_paths:
        try:
            FixtureScript.load(path)
        except json.JSONDecodeError as exc:
            raise DomainValidationError(f"{path}: not valid JSON ({exc})") from None
        except CandorError as exc:
            raise DomainValidationError(f"{path}: {exc}") from None
        click.echo(f"ok: fixtures {path}")


def golden_dir() -> Path:
    """Directory of the golden session shipped with the package."""
    with resources.as_file(resources.files("candor.data").joinpath("golden")) as path:
        return Path(path)


@cli.command()
@click.option("--log", "log_path", type=click.Path(exists=True), default=None,
              help="Event log to replay; defaults to the shipped golden session.")
@click.option("--fixtures", "fixture_path", type=click.Path(exists=True), default=None,
              help="Fixture script to drive the replay; defaults to the golden fixture.")
@click.option("--data-dir", type=click.Path(), default=None,
              help="Scratch directory for the replayed session.")
def replay(log_path: str | None, fixture_path: str | None, data_dir: str | None) -> None:
    """Re-execute a logged session with scripted providers and diff the records."""
    if log_path is None:
        log_path = str(golden_dir() / "session.log")
    if fixture_path is None:
        fixture_path = str(golden_dir() / "fixture.json")
    with ExitStack() as stack:
        if data_dir is None:
            data_dir = stack.enter_context(tempfile.TemporaryDirectory(prefix="candor-replay-"))
        factory = ProviderFactory.scripted(FixtureScript.load(fixture_path))
        orchestrator = SessionOrchestrator(factory, data_dir)
        fresh = orchestrator.replay_execute(log_path)
        original = [
            json.loads(line)
            for line in Path(log_path).read_text("utf-8").splitlines()
            if line.strip()
        ]
        diffs = _diff_records(original, fresh)
        if diffs:
            for line in diffs[:10]:
                click.echo(line, err=True)
            raise DiffMismatch(f"{len(diffs)} record(s) differ")
    click.echo(f"replay clean: {len(fresh)} records match")


def _diff_records(original: list[dict[str, Any]], fresh: list[dict[str, Any]]) -> list[str]:
    diffs = []
    if len(original) != len(fresh):
        diffs.append(f"record count differs: original {len(original)}, replay {len(fresh)}")
    for i, (a, b) in enumerate(zip(original, fresh)):
        left, right = canonical_json(a), canonical_json(b)
        if left != right:
            diffs.append(f"record {i} ({a.get('kind')}) differs")
    return diffs


@cli.command("eval-transcript")
@click.option("--dialog", "dialog_path", type=click.Path(exists=True), required=True)
@click.option("--case", "case_path", type=click.Path(exists=True), required=True)
@click.option("--fixtures", "fixture_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.option("--format", "out_format", type=click.Choice(["json", "markdown"]), default="json")
def eval_transcript(
    dialog_path: str,
    case_path: str,
    fixture_path: str,
    out_path: str | None,
    out_format: str,
) -> None:
    """Score a recorded dialog: turn-level feedback plus the overall report."""
    case = CaseScenario.from_dict(json.loads(Path(case_path).read_text("utf-8")))
    dialog = json.loads(Path(dialog_path).read_text("utf-8"))
    if not isinstance(dialog, dict) or not isinstance(dialog.get("turns"), list):
        raise DomainValidationError("dialog file must be an object with a turns list")
    gateway = ProviderFactory.scripted(FixtureScript.load(fixture_path)).session_gateway()
    templates = load_templates()
    clock = LogicalClock()

    turns: list[Turn] = []
    for i, raw in enumerate(dialog["turns"]):
        if not isinstance(raw, dict) or "speaker" not in raw or "text" not in raw:
            raise DomainValidationError(f"dialog turn {i} must have speaker and text")
        turns.append(Turn(index=i, speaker=str(raw["speaker"]),
                          transcript=str(raw["text"]), created_at=clock.now()))

    state = EvaluatorState()
    feedback_reports = []
    event_index = 0
    for turn in turns:
        if turn.speaker != "clinician":
            continue
        if event_index == 0:
            labels = StageLabelSet(codes=(StageCode.START,), turn_index=0)
        else:
            labels = classify_stage(
                StageRequest(turns[turn.index - 1].transcript, event_index, False),
                gateway, templates,
            )
        try:
            fb, state = generate_turn_feedback(
                state, case, turns[:turn.index], turn, labels, gateway, templates
            )
            feedback_reports.append(fb)
        except StructureInvalid:
            state = state.with_stages(labels)
        event_index += 1
    overall = generate_overall_feedback(state, case, turns, gateway, templates)

    if out_format == "json":
        rendered = canonical_json(
            {
                "turn_feedback": [fb.to_dict() for fb in feedback_reports],
                "overall": overall.to_dict(),
                "score_export": score_schema_export(state),
            }
        ) + "\n"
    else:
        parts = [render_turn_feedback_markdown(fb) for fb in feedback_reports]
        parts.append(render_overall_markdown(overall))
        rendered = "\n".join(parts)
    if out_path:
        Path(out_path).write_text(rendered, encoding="utf-8")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(rendered, nl=False)


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except DiffMismatch as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DIFF
    except ProviderError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_PROVIDER
    except (DomainValidationError, StructureInvalid) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    except CandorError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
