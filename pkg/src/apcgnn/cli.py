"""Command-line interface: synthetic data, training, evaluation, ablations,
ROC export, single predictions, and the HTTP service."""

from __future__ import annotations

import csv
import json
import os
import sys
from pathlib import Path

import click
import numpy as np

from .data import (
    FEATURE_NAMES,
    Cohort,
    generate_synthetic_cohort,
    load_cohort_csv,
    save_cohort_csv,
)
from .explain import predict_new
from .metrics import EvalReport
from .persist import load_model, save_model
from .training import TrainConfig, evaluate, run_ablations, train_and_evaluate


def _parse_synthetic(spec: str) -> tuple[int, int]:
    try:
        n_text, seed_text = spec.split(",")
        return int(n_text), int(seed_text)
    except ValueError:
        raise click.BadParameter("expected N,SEED (e.g. 540,7)")


def _parse_seeds(spec: str) -> list[int]:
    spec = spec.strip()
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def _load_config(path: str | None, seed: int | None) -> TrainConfig:
    payload = {}
    if path:
        payload = json.loads(Path(path).read_text())
    if seed is not None:
        payload["seed"] = seed
    return TrainConfig.from_dict(payload)


def _load_data(data: str | None, synthetic: str | None) -> Cohort:
    if (data is None) == (synthetic is None):
        raise click.UsageError("provide exactly one of --data or --synthetic")
    if synthetic is not None:
        n, seed = _parse_synthetic(synthetic)
        return generate_synthetic_cohort(n, seed)
    cohort, rejected = load_cohort_csv(data)
    for rej in rejected:
        click.echo(f"rejected line {rej.line}: {rej.reason}", err=True)
    if cohort.n_patients == 0:
        raise click.ClickException("no valid rows in the input file")
    return cohort


def _write_confusion_csv(report: EvalReport, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["true\\pred"] + report.class_names)
        for name, row in zip(report.class_names, report.confusion):
            writer.writerow([name] + row)


@click.group()
def main():
    """Adaptive patient-centric graph classifier for diabetes typing."""


@main.command()
@click.option("--n", default=540, show_default=True, help="Number of patients.")
@click.option("--seed", default=7, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def generate(n, seed, out):
    """Write a synthetic cohort CSV."""
    save_cohort_csv(generate_synthetic_cohort(n, seed), out)
    click.echo(f"wrote {n} patients to {out}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False))
@click.option("--synthetic", help="N,SEED synthetic cohort instead of a CSV.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--report", "report_path", type=click.Path(dir_okay=False))
def train(data, synthetic, config_path, seed, out, report_path):
    """Train on a cohort and persist the model as JSON."""
    cohort = _load_data(data, synthetic)
    config = _load_config(config_path, seed)
    model, report, _ = train_and_evaluate(cohort, config)
    save_model(model, out)
    click.echo(
        f"trained {config.variant} ({config.epochs} epochs); "
        f"test accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f}"
    )
    if report_path:
        Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
        click.echo(f"evaluation report written to {report_path}")


@main.command("evaluate")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False))
@click.option("--confusion-csv", type=click.Path(dir_okay=False))
def evaluate_cmd(model_path, data, report_path, confusion_csv):
    """Evaluate a persisted model against a labeled CSV."""
    model = load_model(model_path)
    cohort = _load_data(data, None)
    report = evaluate(model, cohort.features, cohort.labels)
    Path(report_path).write_text(json.dumps(report.to_dict(), indent=2))
    click.echo(f"accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f}")
    if confusion_csv:
        _write_confusion_csv(report, confusion_csv)
        click.echo(f"confusion matrix written to {confusion_csv}")


@main.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False))
@click.option("--synthetic", help="N,SEED synthetic cohort instead of a CSV.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seeds", default="1..5", show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def ablate(data, synthetic, config_path, seeds, out):
    """Run the ablation grid across seeds and write the table as JSON."""
    cohort = _load_data(data, synthetic)
    config = _load_config(config_path, None)
    report = run_ablations(cohort, config, _parse_seeds(seeds))
    Path(out).write_text(json.dumps(report.to_dict(), indent=2))
    for row in report.rows:
        mean = row["mean_accuracy"]
        shown = "failed" if mean is None else f"{mean:.4f}"
        click.echo(f"{row['name']:<16} mean accuracy {shown}")
    click.echo(f"ablation table written to {out}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--data", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def roc(model_path, data, out):
    """Write one-vs-rest ROC points (class,threshold,fpr,tpr) as CSV."""
    model = load_model(model_path)
    cohort = _load_data(data, None)
    report = evaluate(model, cohort.features, cohort.labels)
    if not report.roc:
        raise click.ClickException("no ROC curves: every class is degenerate")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "threshold", "fpr", "tpr"])
        for name, points in report.roc.items():
            for threshold, fpr, tpr in points:
                writer.writerow([name, "" if threshold is None else threshold, fpr, tpr])
    click.echo(f"ROC points for {len(report.roc)} classes written to {out}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--features", "features_json", required=True,
              help='JSON object, e.g. \'{"age": 52, "bmi": 29, ...}\'; null = missing.')
def predict(model_path, features_json):
    """Predict one patient and print the explanation report as JSON."""
    model = load_model(model_path)
    payload = json.loads(features_json)
    unknown = set(payload) - set(FEATURE_NAMES)
    if unknown:
        raise click.ClickException(f"unknown feature keys: {sorted(unknown)}")
    x = np.array(
        [np.nan if payload.get(name) is None else float(payload[name])
         for name in FEATURE_NAMES]
    )
    report = predict_new(x, model)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.option("--port", default=None, type=int,
              help="Port (defaults to APC_PORT or 8080).")
@click.option("--registry", default="model_registry", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--frontend", "frontend_dir", default=None,
              type=click.Path(file_okay=False),
              help="Static bundle directory for the web console.")
def serve(port, registry, frontend_dir):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    if port is None:
        port = int(os.environ.get("APC_PORT", "8080"))
    app = create_app(registry_dir=registry, frontend_dir=frontend_dir)
    uvicorn.run(app, host="0.0.0.0", port=port)


if __name__ == "__main__":
    sys.exit(main())
