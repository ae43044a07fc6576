"""Command line entry points.

    threatlight serve  --config service.json
    threatlight replay access.log --rate 500
    threatlight train  --data labeled.jsonl --out model.ssnn
    threatlight bench  --events 100000 --mode batch
    threatlight score  --line '<apache log line>'

Each subcommand imports only what it needs, so `bench` and `score`
stay lean enough for memory-sensitive measurement runs.
"""

from __future__ import annotations

import json
from pathlib import Path

import click


@click.group(invoke_without_command=True)
@click.version_option(package_name="threatlight", prog_name="threatlight")
@click.pass_context
def main(ctx: click.Context) -> None:
    """Real-time security event analytics: detect, score, visualize."""
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help(), err=True)
        ctx.exit(2)


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2, sort_keys=False))


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Service config JSON.")
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None, help="Directory of built dashboard assets to serve at /.")
def serve(config_path, static_dir) -> None:
    """Run the analytics service and dashboard API."""
    from .config import BadConfig, load_app_config
    from .service import PortInUse, serve as run_service

    try:
        cfg = load_app_config(config_path)
        run_service(cfg, static_dir=Path(static_dir) if static_dir else None)
    except (BadConfig, PortInUse) as e:
        raise click.ClickException(str(e))


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--rate", type=float, default=None, help="Pace events at RATE per second.")
@click.option("--batch", "as_batch", is_flag=True, help="Replay as fast as the pipeline accepts.")
@click.option("--loop", type=int, default=1, show_default=True, help="Times to repeat the file.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Model file (defaults to the packaged model).")
def replay(path, rate, as_batch, loop, model_path) -> None:
    """Replay a log file through the full pipeline and summarize."""
    if (rate is None) == (not as_batch):
        raise click.UsageError("choose exactly one of --rate N or --batch")
    from .bus import Closed, EventBus
    from .config import default_model_path
    from .httpfeat import load_default_ruleset
    from .ingest import ReplayMode, ReplayPlan, replay as run_replay
    from .nn import load_model
    from .pipeline import TOPIC_THREATS, Pipeline

    model = load_model(Path(model_path) if model_path else default_model_path())
    bus = EventBus()
    pipeline = Pipeline(bus, model, load_default_ruleset())
    threat_sub = bus.subscribe(TOPIC_THREATS)
    mode = ReplayMode.STEADY if rate is not None else ReplayMode.BATCH
    plan = ReplayPlan(Path(path), mode=mode, rate=rate or 0.0, loop_count=loop)

    pipeline.start()
    report = run_replay(plan, pipeline.sink())
    pipeline.stop()
    bus.close()
    last_assessment = None
    try:
        while True:
            msg = threat_sub.get(timeout=0)
            if msg is None:
                break
            last_assessment = msg
    except Closed:
        pass
    _echo_json(
        {
            "lines": report.lines,
            "parsed": report.parsed,
            "skipped": report.skipped,
            "wall_time_s": round(report.wall_time, 3),
            "verdicts": pipeline.verdicts_out,
            "assessments": pipeline.assessments_out,
            "last_assessment": json.loads(last_assessment) if last_assessment else None,
        }
    )


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False), required=True, help='JSONL of {"features": [...], "label": 0|1}.')
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True, help="Where to write the trained model.")
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def train(data_path, out_path, epochs, seed) -> None:
    """Train a detector on labeled feature vectors."""
    import numpy as np

    from .nn import DegenerateDataset, TrainingConfig, init_model, save_model, train as run_train
    from .schema import INPUT_WIDTH, schema_hash

    features, labels = [], []
    with open(data_path, encoding="utf-8") as fh:
        for pos, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            vec = row["features"]
            if len(vec) != INPUT_WIDTH:
                raise click.ClickException(f"line {pos}: expected {INPUT_WIDTH} features, got {len(vec)}")
            features.append(vec)
            labels.append(int(row["label"]))
    if not features:
        raise click.ClickException("no training rows found")

    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    model = init_model(schema_hash(), seed=seed)
    cfg = TrainingConfig(max_epochs=epochs, seed=seed)
    try:
        trained, history = run_train(model, x, y, cfg)
    except DegenerateDataset as e:
        raise click.ClickException(str(e))
    save_model(trained, out_path)
    _echo_json(
        {
            "model": str(out_path),
            "samples": len(features),
            "epochs_run": history.epochs_run,
            "best_epoch": history.best_epoch,
            "best_val_loss": round(history.best_val_loss, 6),
            "stopped_early": history.stopped_early,
        }
    )


@main.command()
@click.option("--events", type=int, default=1000, show_default=True)
@click.option("--mode", type=click.Choice(["batch", "steady"]), default="batch", show_default=True)
@click.option("--rate", type=float, default=500.0, show_default=True, help="Events per second (steady mode).")
@click.option("--engine", type=click.Choice(["pipeline", "primary", "reference"]), default="pipeline", show_default=True, help="pipeline = bus-wired workers; primary/reference = single-thread analytic path.")
@click.option("--compare", "do_compare", is_flag=True, help="Run primary and reference analytic engines on the same stream and report speedup.")
@click.option("--seed", type=int, default=1337, show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Also write the report JSON here.")
def bench(events, mode, rate, engine, do_compare, seed, out_path) -> None:
    """Measure throughput, latency, and memory on synthetic traffic."""
    import tempfile

    from .bench import (
        EngineUnavailable,
        PrimaryEngine,
        Workload,
        compare,
        comparison_table,
        generate_lines,
        make_reference_engine,
        run_bench,
        run_pipeline_bench,
        verify_equivalence,
        write_corpus,
    )

    try:
        if do_compare:
            workload = Workload(mode=mode, events=events, rate=rate if mode == "steady" else 0.0, seed=seed)
            lines = generate_lines(events, seed=seed)
            rep_a, out_a = run_bench(PrimaryEngine(), workload, lines=lines, capture=True)
            rep_b, out_b = run_bench(make_reference_engine(), workload, lines=lines, capture=True)
            compared = verify_equivalence(out_a, out_b)
            result = compare(rep_a, rep_b)
            result["equivalent_outputs"] = compared
            _echo_json(result)
            click.echo(comparison_table([result]), err=True)
        elif engine == "pipeline":
            with tempfile.TemporaryDirectory(prefix="tl-bench-") as tmp:
                corpus = write_corpus(Path(tmp) / "corpus.log", events, seed=seed)
                report = run_pipeline_bench(corpus, mode=mode, rate=rate if mode == "steady" else 0.0)
            result = report.to_dict()
            _echo_json(result)
        else:
            workload = Workload(mode=mode, events=events, rate=rate if mode == "steady" else 0.0, seed=seed)
            eng = PrimaryEngine() if engine == "primary" else make_reference_engine()
            report = run_bench(eng, workload)
            result = report.to_dict()
            _echo_json(result)
    except EngineUnavailable as e:
        raise click.ClickException(str(e))
    if out_path:
        Path(out_path).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")


@main.command()
@click.option("--line", required=True, help="One Apache access log line.")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), default=None, help="Model file (defaults to the packaged model).")
@click.option("--threshold", type=float, default=0.5, show_default=True)
def score(line, model_path, threshold) -> None:
    """Parse, classify, and score one log line against fresh state."""
    from . import wire
    from .config import default_model_path
    from .ingest import MalformedLine, parse_apache_line
    from .nn import load_model
    from .pipeline import one_shot_score

    try:
        rec = parse_apache_line(line)
    except MalformedLine as e:
        raise click.ClickException(f"unparseable line: {e}")
    model = load_model(Path(model_path) if model_path else default_model_path())
    results = one_shot_score(model, rec, threshold=threshold)
    verdict, assessment = results[0]
    if assessment is not None:
        assessment_dict = wire.to_dict(assessment)
    else:
        # benign events never reach the calculator: empty-state score
        assessment_dict = {
            "final_score": 0.0,
            "band": "GREEN",
            "factors": None,
            "window_event_count": 0,
        }
    _echo_json({"verdict": wire.to_dict(verdict), "assessment": assessment_dict})


if __name__ == "__main__":
    main()
