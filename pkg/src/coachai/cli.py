"""Operator command line.

Exit codes: 0 ok, 1 validation failure (bad input/content), 2 runtime
error.
"""

from __future__ import annotations

import csv as csv_mod
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import click

from .classifier import (
    Hyperparams,
    N_FEATURES,
    evaluate,
    generate_dataset,
    load_csv,
    load_model,
    save_csv,
    save_model,
    split,
    train,
)
from .dialog import DialogSyntaxError, parse_dialog, validate
from .errors import CoachAIError, ValidationError
from .instruments import load_template, score_response, QuestionnaireResponse

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Health-coaching platform operations."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="State directory; omit for in-memory.")
@click.option("--clock", "clock_mode", type=click.Choice(["real", "simulated"]),
              default="real", show_default=True)
def serve(host: str, port: int, data_dir: str | None, clock_mode: str) -> None:
    """Run the HTTP service."""
    import threading
    import time as _time

    import uvicorn

    from .api import create_app
    from .scheduler import Clock
    from .service import CoachingService

    clock = Clock(mode=clock_mode)
    if clock_mode == "real":
        clock.set(datetime.now(timezone.utc))
    service = CoachingService(data_dir=data_dir, clock=clock)
    app = create_app(service)

    if clock_mode == "real":
        def pump() -> None:  # drive the scheduler off wall time
            while True:
                _time.sleep(1.0)
                try:
                    service.tick(datetime.now(timezone.utc))
                except Exception:  # noqa: BLE001 - keep the pump alive
                    import logging

                    logging.getLogger(__name__).exception("tick failed")

        threading.Thread(target=pump, daemon=True).start()

    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command("validate-dialog")
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
def validate_dialog(file: str) -> None:
    """Parse and statically check a .dialog file."""
    try:
        definition = parse_dialog(Path(file).read_text())
    except DialogSyntaxError as exc:
        _fail(f"{file}:{exc.line}: {exc}", EXIT_VALIDATION)
    defects = validate(definition)
    for defect in defects:
        click.echo(f"{defect.rule}: {defect.state_id}: {defect.detail}")
    click.echo(f"{len(defects)} defects")
    sys.exit(EXIT_OK if not defects else EXIT_VALIDATION)


@main.command("gen-dataset")
@click.option("--rows", default=375, show_default=True, type=int)
@click.option("--features", default=N_FEATURES, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
def gen_dataset(rows: int, features: int, seed: int, out: str) -> None:
    """Write a synthetic clinic-shaped intake dataset as CSV."""
    if features != N_FEATURES:
        _fail(f"the canonical feature set has exactly {N_FEATURES} features", EXIT_VALIDATION)
    if rows < 3:
        _fail("need at least one row per class", EXIT_VALIDATION)
    dataset = generate_dataset(rows, seed=seed)
    save_csv(dataset, out)
    click.echo(f"wrote {rows} rows x {features} features to {out}")


@main.command("train-classifier")
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--test-fraction", default=0.2, show_default=True, type=float)
def train_classifier(data: str, seed: int, out: str, test_fraction: float) -> None:
    """Train the activity-class model and report held-out accuracy."""
    try:
        dataset = load_csv(data)
        train_set, test_set = split(dataset, test_fraction=test_fraction, seed=seed)
        model = train(train_set, Hyperparams(seed=seed))
    except (CoachAIError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    train_acc = evaluate(model, train_set)
    test_acc = evaluate(model, test_set)
    save_model(model, out)
    click.echo(f"train accuracy: {train_acc:.4f}")
    click.echo(f"test accuracy: {test_acc:.4f}")
    click.echo(f"model written to {out}")


@main.command("eval-classifier")
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True)
def eval_classifier(model_path: str, data: str) -> None:
    """Evaluate a saved model on a labelled CSV."""
    try:
        model = load_model(model_path)
        dataset = load_csv(data)
    except (CoachAIError, ValueError) as exc:
        _fail(str(exc), EXIT_VALIDATION)
    click.echo(f"accuracy: {evaluate(model, dataset):.4f}")


@main.command()
@click.option("--participants", default=19, show_default=True, type=int)
@click.option("--weeks", default=4, show_default=True, type=int)
@click.option("--seed", default=7, show_default=True, type=int)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--run-id", default=None, help="Defaults to a name derived from the config.")
def simulate(participants: int, weeks: int, seed: int, out: str, run_id: str | None) -> None:
    """Drive a full simulated study and write the report bundle."""
    from .sim import StudyRun, simulate_study

    run_id = run_id or f"sim-n{participants}-w{weeks}-s{seed}"
    try:
        run = StudyRun(
            run_id=run_id,
            n_participants=participants,
            weeks=weeks,
            seed=seed,
            output_dir=Path(out),
        )
        manifest = simulate_study(run)
    except ValidationError as exc:
        _fail(str(exc), EXIT_VALIDATION)
    except CoachAIError as exc:
        _fail(str(exc), EXIT_RUNTIME)
    click.echo(json.dumps(manifest, indent=2, sort_keys=True))


@main.command()
@click.option("--run", "run_dir", type=click.Path(exists=True, file_okay=False), required=True)
def report(run_dir: str) -> None:
    """Re-emit the stats tables from a finished run bundle."""
    base = Path(run_dir)
    manifest_path = base / "manifest.json"
    if not manifest_path.exists():
        _fail(f"{run_dir} has no manifest.json", EXIT_VALIDATION)
    manifest = json.loads(manifest_path.read_text())
    click.echo(f"run {manifest['run_id']}: {manifest['participants']} participants, "
               f"{manifest['weeks']} weeks, seed {manifest['seed']}")
    desc = json.loads((base / "descriptives.json").read_text())
    age = desc["age"]
    click.echo(
        f"age: n={age['n']} mean={age['mean']:.3f} se={age['std_error']:.3f} "
        f"sd={age['std_deviation']:.3f} range={age['range']:g} "
        f"[{age['min']:g}, {age['max']:g}]"
    )
    for name in ("TAM", "HAPA", "AttrakDiff"):
        path = base / f"instrument_{name}.json"
        if not path.exists():
            continue
        table = json.loads(path.read_text())
        click.echo(f"\n{name} (weeks {table['weeks']})")
        for dim, entry in sorted(table["dimensions"].items()):
            means = "  ".join(
                f"w{w}={m:.3f}" for w, m in sorted(entry["weekly_means"].items())
            )
            line = f"  {dim:<22} {means}"
            if "one_sample_t" in entry:
                t = entry["one_sample_t"]
                line += f"  t({t['df']:g})={t['statistic']:.3f} p={t['p_value']:.4f}"
            if "rm_anova" in entry:
                f = entry["rm_anova"]
                line += (
                    f"  F({f['df'][0]:g},{f['df'][1]:g})={f['statistic']:.3f} "
                    f"p={f['p_value']:.4f}"
                )
            click.echo(line)
    stages = json.loads((base / "hapa_stages.json").read_text())["counts"]
    click.echo("\nHAPA stages: " + "  ".join(f"{k}={v}" for k, v in sorted(stages.items())))
    prefs = json.loads((base / "preferences.json").read_text())["table"]
    click.echo("preferences:")
    for topic, row in sorted(prefs.items()):
        click.echo(f"  {topic:<22} " + "  ".join(f"{k}={v}" for k, v in sorted(row.items())))


@main.command()
@click.option("--template", "template_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--responses", "responses_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="CSV: user_id, week_index, then one column per item id.")
def score(template_path: str, responses_path: str) -> None:
    """Score questionnaire responses against a template."""
    try:
        template = load_template(template_path)
    except (CoachAIError, ValueError, KeyError) as exc:
        _fail(f"bad template: {exc}", EXIT_VALIDATION)
    item_ids = [i.item_id for i in template.items]
    with open(responses_path, newline="") as fh:
        reader = csv_mod.DictReader(fh)
        missing = [c for c in ["user_id", "week_index", *item_ids]
                   if c not in (reader.fieldnames or [])]
        if missing:
            _fail(f"responses CSV missing columns: {', '.join(missing)}", EXIT_VALIDATION)
        for row in reader:
            response = QuestionnaireResponse(
                user_id=row["user_id"],
                template_id=template.template_id,
                week_index=int(row["week_index"]),
                answers={i: row[i] for i in item_ids},
                submitted_at=datetime(2000, 1, 1, tzinfo=timezone.utc),
            )
            try:
                scores = score_response(template, response)
            except CoachAIError as exc:
                _fail(f"row for {row['user_id']}: {exc}", EXIT_VALIDATION)
            dims = "  ".join(f"{d}={v:.3f}" for d, v in sorted(scores.per_dimension.items()))
            click.echo(f"{row['user_id']} w{row['week_index']}: {dims}  total={scores.total:g}")


if __name__ == "__main__":
    main()
