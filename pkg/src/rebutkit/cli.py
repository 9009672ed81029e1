"""Command-line entry points: run lifecycle, benchmark tooling, API server.

The default gateway is the deterministic scripted provider, so every command
works offline.  `--record DIR` persists each completion while running;
`--replay DIR` serves completions from such a directory and never calls a
provider.  Hosted providers plug in through the Transport callable on
LlmGateway; keys for those come from the environment, not from flags.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .bench import (
    BaselineRound,
    BenchCorpus,
    build_corpus,
    corpus_stats,
    load_instances,
    run_baseline,
    score_rounds,
)
from .errors import NotReady, RebutkitError
from .gateway.client import LlmGateway
from .gateway.scripted import scripted_gateway
from .orchestrator import RunConfig, RunEngine, RunStore
from .storage import read_json, write_json

CHECKPOINT_HINT = (
    "run is awaiting approval; inspect it with `run plan`, then `run feedback` or `run approve`"
)


def _emit(payload) -> None:
    click.echo(json.dumps(payload, indent=2, ensure_ascii=False))


def _gateway(replay_dir: str | None, record_dir: str | None) -> LlmGateway:
    if replay_dir and record_dir:
        raise click.UsageError("--replay and --record are mutually exclusive")
    if replay_dir:
        return scripted_gateway("replay", Path(replay_dir))
    if record_dir:
        return scripted_gateway("record", Path(record_dir))
    return scripted_gateway()


def gateway_options(f):
    f = click.option(
        "--replay",
        "replay_dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Serve LLM completions from recordings in DIR; never contacts a provider.",
    )(f)
    f = click.option(
        "--record",
        "record_dir",
        type=click.Path(file_okay=False),
        default=None,
        help="Persist every LLM completion into DIR while running.",
    )(f)
    return f


def runs_dir_option(f):
    return click.option(
        "--runs-dir",
        envvar="REBUTKIT_RUNS",
        default="runs",
        show_default=True,
        type=click.Path(file_okay=False),
        help="Artifact root holding run state (env: REBUTKIT_RUNS).",
    )(f)


def _engine(runs_dir: str, replay_dir: str | None, record_dir: str | None) -> RunEngine:
    return RunEngine(RunStore(Path(runs_dir)), _gateway(replay_dir, record_dir))


@click.group()
def main() -> None:
    """Evidence-linked rebuttal planning with a human approval checkpoint."""


# --- run lifecycle ----------------------------------------------------------


@main.group()
def run() -> None:
    """Create and drive runs through the stage machine."""


@run.command("start")
@click.argument("manuscript", type=click.Path(exists=True, dir_okay=False))
@click.argument("reviews", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--style", default="tbd", show_default=True, type=click.Choice(["tbd", "asterisk"]))
@click.option("--auto-approve", is_flag=True, help="Skip the human checkpoint (batch mode).")
@click.option("--token-budget", default=None, type=int, help="Hybrid-context token budget.")
@runs_dir_option
@gateway_options
def run_start(manuscript, reviews, style, auto_approve, token_budget, runs_dir, replay_dir, record_dir):
    """Start a run from a manuscript file and one review file per reviewer."""
    engine = _engine(runs_dir, replay_dir, record_dir)
    kwargs = {"style": style, "auto_approve": auto_approve}
    if token_budget is not None:
        kwargs["token_budget"] = token_budget
    try:
        state = engine.create_run(
            Path(manuscript).read_text(encoding="utf-8"),
            [Path(r).read_text(encoding="utf-8") for r in reviews],
            RunConfig(**kwargs),
        )
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _emit({"run_id": state.run_id, "stage": state.stage})


def _advance_commands(engine: RunEngine, run_id: str, to_completion: bool) -> None:
    try:
        if to_completion:
            state = engine.run_to_completion(run_id)
        else:
            state = engine.advance(run_id)
    except NotReady:
        # the checkpoint is a designed stop, not a failure
        _emit({"run_id": run_id, "stage": engine.store.load(run_id).stage, "note": CHECKPOINT_HINT})
        return
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _emit({"run_id": run_id, "stage": state.stage})


@run.command("advance")
@click.argument("run_id")
@runs_dir_option
@gateway_options
def run_advance(run_id, runs_dir, replay_dir, record_dir):
    """Execute the next stage; stops with a hint at the approval checkpoint."""
    _advance_commands(_engine(runs_dir, replay_dir, record_dir), run_id, to_completion=False)


@run.command("resume")
@click.argument("run_id")
@runs_dir_option
@gateway_options
def run_resume(run_id, runs_dir, replay_dir, record_dir):
    """Reload a persisted run and continue from its last completed stage."""
    engine = _engine(runs_dir, replay_dir, record_dir)
    try:
        if engine.store.load(run_id).stage == "drafted":
            _emit({"run_id": run_id, "stage": "drafted", "note": "already complete"})
            return
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _advance_commands(engine, run_id, to_completion=True)


@run.command("status")
@click.argument("run_id")
@runs_dir_option
def run_status(run_id, runs_dir):
    """Show stage, plan version, failure cause, and event count."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    try:
        _emit(engine.status(run_id))
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)


@run.command("plan")
@click.argument("run_id")
@runs_dir_option
def run_plan(run_id, runs_dir):
    """Print the latest plan revision with concerns, evidence, and findings."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    try:
        _emit(engine.plan_view(run_id))
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)


@run.command("feedback")
@click.argument("run_id")
@click.argument("text")
@runs_dir_option
@gateway_options
def run_feedback(run_id, text, runs_dir, replay_dir, record_dir):
    """Revise the plan from free-text feedback; bumps the plan version."""
    engine = _engine(runs_dir, replay_dir, record_dir)
    try:
        state = engine.submit_feedback(run_id, text)
    except (RebutkitError, ValueError) as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _emit({"run_id": run_id, "stage": state.stage, "version": state.plan_version})


@run.command("approve")
@click.argument("run_id")
@click.option("--version", required=True, type=int, help="Plan version being approved.")
@runs_dir_option
def run_approve(run_id, version, runs_dir):
    """Approve the stated plan version, unlocking the drafting stage."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    try:
        state = engine.approve(run_id, version)
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _emit({"run_id": run_id, "stage": state.stage, "version": version})


@run.command("draft")
@click.argument("run_id")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the letter here.")
@click.option("--json", "as_json", is_flag=True, help="Print the full draft record instead of text.")
@runs_dir_option
def run_draft(run_id, out, as_json, runs_dir):
    """Print the drafted letter (placeholders and fills included with --json)."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    try:
        view = engine.draft_view(run_id)
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    if out:
        Path(out).write_text(view["text"], encoding="utf-8")
        _emit({"run_id": run_id, "written": out, "pending": len(view["pending"])})
    elif as_json:
        _emit(view)
    else:
        click.echo(view["text"])


@run.command("fill")
@click.argument("run_id")
@click.argument("location", type=int)
@click.argument("value")
@click.option("--note", required=True, help="Where the number comes from.")
@runs_dir_option
def run_fill(run_id, location, value, note, runs_dir):
    """Replace one placeholder with a verified value."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    try:
        draft = engine.fill(run_id, location, value, note)
    except (RebutkitError, ValueError) as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    _emit({"run_id": run_id, "pending": len(draft.pending())})


@run.command("list")
@runs_dir_option
def run_list(runs_dir):
    """List known runs with their stages."""
    engine = RunEngine(RunStore(Path(runs_dir)), scripted_gateway())
    _emit([engine.status(run_id) for run_id in engine.store.list_runs()])


# --- benchmark toolkit ------------------------------------------------------


@main.group()
def bench() -> None:
    """Benchmark corpus construction, stats, and the multi-round baseline."""


@bench.command("build")
@click.argument("instances", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Corpus manifest path.")
@click.option("--challenge-size", default=20, show_default=True, type=int)
@click.option("--min-instances", default=0, show_default=True, type=int)
def bench_build(instances, out, challenge_size, min_instances):
    """Label thread instances and build the challenge corpus manifest."""
    try:
        loaded = load_instances(Path(instances))
        corpus = build_corpus(loaded, challenge_size=challenge_size, min_instances=min_instances)
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    write_json(Path(out), corpus.to_dict())
    _emit(
        {
            "out": out,
            "papers": len(corpus.papers),
            "instances": len(corpus.instances()),
            "skipped": len(corpus.skipped),
        }
    )


@bench.command("stats")
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False))
@click.option("--top-terms", default=10, show_default=True, type=int)
def bench_stats(corpus, top_terms):
    """Print the stats table for a corpus manifest."""
    loaded = BenchCorpus.from_dict(read_json(Path(corpus)))
    stats = corpus_stats(loaded, top_terms=top_terms)
    stats["top_terms"] = [list(pair) for pair in stats["top_terms"]]
    _emit(stats)


@bench.command("baseline")
@click.argument("paper", type=click.Path(exists=True, dir_okay=False))
@click.argument("review", type=click.Path(exists=True, dir_okay=False))
@click.option("--rounds", default=2, show_default=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False), help="Rounds file path.")
@gateway_options
def bench_baseline(paper, review, rounds, out, replay_dir, record_dir):
    """Run the multi-round single-pass baseline and persist each round."""
    gateway = _gateway(replay_dir, record_dir)
    try:
        result = run_baseline(
            Path(paper).read_text(encoding="utf-8"),
            Path(review).read_text(encoding="utf-8"),
            gateway,
            rounds=rounds,
        )
    except RebutkitError as exc:
        raise click.ClickException(str(exc) or type(exc).__name__)
    write_json(Path(out), {"rounds": [r.to_dict() for r in result]})
    _emit(
        {
            "out": out,
            "rounds": len(result),
            "abstract_words": [len(r.abstract.split()) for r in result],
        }
    )


@bench.command("score")
@click.argument("rounds", type=click.Path(exists=True, dir_okay=False))
@click.argument("review", type=click.Path(exists=True, dir_okay=False))
@click.option("--repeats", default=1, show_default=True, type=int)
@gateway_options
def bench_score(rounds, review, repeats, replay_dir, record_dir):
    """Judge each persisted round and print per-round score statistics."""
    gateway = _gateway(replay_dir, record_dir)
    loaded = [BaselineRound.from_dict(r) for r in read_json(Path(rounds))["rounds"]]
    stats = score_rounds(
        Path(review).read_text(encoding="utf-8"), loaded, gateway, repeats=repeats
    )
    _emit([{"round": r.round_index, **s.to_dict()} for r, s in zip(loaded, stats)])


# --- server -----------------------------------------------------------------


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@runs_dir_option
@gateway_options
def serve(host, port, runs_dir, replay_dir, record_dir):
    """Serve the HTTP API for the review UI."""
    import uvicorn

    from .orchestrator.api import create_app

    app = create_app(_engine(runs_dir, replay_dir, record_dir))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
