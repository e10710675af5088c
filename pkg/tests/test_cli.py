import csv
import json

import pytest
from click.testing import CliRunner

from apcgnn.cli import main

CONFIG = {"hidden_dim": 8, "epochs": 5, "k_min": 2, "k_max": 4, "seed": 3}


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture()
def workdir(tmp_path, runner):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(CONFIG))
    return tmp_path


def invoke(runner, args):
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_generate_writes_csv(runner, workdir):
    out = workdir / "cohort.csv"
    invoke(runner, ["generate", "--n", "60", "--seed", "2", "--out", str(out)])
    lines = out.read_text().strip().split("\n")
    assert len(lines) == 61
    assert lines[0].startswith("age,bmi")


def test_train_evaluate_roc_predict_flow(runner, workdir):
    cohort = workdir / "cohort.csv"
    model = workdir / "model.json"
    report = workdir / "report.json"
    invoke(runner, ["generate", "--n", "90", "--seed", "5", "--out", str(cohort)])
    result = invoke(runner, [
        "train", "--data", str(cohort), "--config", str(workdir / "config.json"),
        "--out", str(model), "--report", str(report),
    ])
    assert "test accuracy" in result.output
    assert json.loads(model.read_text())["schema_version"] == 1
    assert "accuracy" in json.loads(report.read_text())

    eval_report = workdir / "eval.json"
    confusion = workdir / "confusion.csv"
    invoke(runner, [
        "evaluate", "--model", str(model), "--data", str(cohort),
        "--report", str(eval_report), "--confusion-csv", str(confusion),
    ])
    payload = json.loads(eval_report.read_text())
    assert len(payload["confusion"]) == 3
    rows = list(csv.reader(confusion.open()))
    assert len(rows) == 4  # header + 3 classes

    roc_csv = workdir / "roc.csv"
    invoke(runner, ["roc", "--model", str(model), "--data", str(cohort),
                    "--out", str(roc_csv)])
    rows = list(csv.reader(roc_csv.open()))
    assert rows[0] == ["class", "threshold", "fpr", "tpr"]
    assert {r[0] for r in rows[1:]} == {"type1", "type2", "gestational"}

    result = invoke(runner, [
        "predict", "--model", str(model),
        "--features", json.dumps({"age": 40, "bmi": 26, "fpg": 120, "hba1c": 6.2,
                                  "sbp": 118, "dbp": 72, "pregnancies": 2}),
    ])
    payload = json.loads(result.output)
    assert payload["predicted_class"] in ("type1", "type2", "gestational")


def test_train_synthetic_shortcut_and_determinism(runner, workdir):
    a = workdir / "a.json"
    b = workdir / "b.json"
    args = ["train", "--synthetic", "90,5", "--config", str(workdir / "config.json")]
    invoke(runner, args + ["--out", str(a)])
    invoke(runner, args + ["--out", str(b)])
    assert a.read_text() == b.read_text()


def test_ablate_produces_five_rows(runner, workdir):
    out = workdir / "ablation.json"
    invoke(runner, [
        "ablate", "--synthetic", "90,5", "--config", str(workdir / "config.json"),
        "--seeds", "1,2", "--out", str(out),
    ])
    payload = json.loads(out.read_text())
    assert [row["name"] for row in payload["rows"]] == [
        "full", "no_blending", "no_consistency", "vanilla_gcn", "mlp",
    ]
    assert payload["seeds"] == [1, 2]


def test_seed_range_syntax(runner, workdir):
    out = workdir / "ablation.json"
    invoke(runner, [
        "ablate", "--synthetic", "90,5", "--config", str(workdir / "config.json"),
        "--seeds", "1..2", "--out", str(out),
    ])
    assert json.loads(out.read_text())["seeds"] == [1, 2]


def test_data_and_synthetic_are_mutually_exclusive(runner, workdir):
    result = runner.invoke(main, [
        "train", "--data", "x.csv", "--synthetic", "90,5", "--out", "m.json",
    ])
    assert result.exit_code != 0


def test_predict_rejects_unknown_feature(runner, workdir):
    model = workdir / "model.json"
    invoke(runner, ["train", "--synthetic", "90,5",
                    "--config", str(workdir / "config.json"), "--out", str(model)])
    result = runner.invoke(main, [
        "predict", "--model", str(model), "--features", json.dumps({"glucose": 1}),
    ])
    assert result.exit_code != 0
    assert "unknown feature" in result.output
