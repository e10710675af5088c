"""HTTP service: training jobs, prediction with explanations, metrics,
ablations, and a model registry of versioned JSON files.

One training (or ablation) job runs at a time on a background thread;
prediction always serves the currently-installed model, which is swapped
atomically when a job finishes. The registry directory holds numbered
model/report files plus a `current` pointer, so a restarted service serves
exactly the metrics it served before.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, field_validator

from .data import FEATURE_NAMES, Cohort, generate_synthetic_cohort, load_cohort_csv_text
from .explain import predict_new
from .metrics import EvalReport
from .persist import load_model, model_to_dict, save_model
from .training import (
    AblationReport,
    TrainConfig,
    TrainedModel,
    run_ablations,
    train_and_evaluate,
)


class SyntheticSource(BaseModel):
    model_config = ConfigDict(extra="forbid")
    n: int = 540
    seed: int = 7


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: dict | None = None
    synthetic: SyntheticSource | None = None
    csv_text: str | None = None


class AblateRequest(TrainRequest):
    seeds: list[int] = [1, 2, 3, 4, 5]


class PredictRequest(BaseModel):
    """Feature object; keys match the CSV header, null means missing."""

    model_config = ConfigDict(extra="forbid")
    age: float | None = None
    bmi: float | None = None
    fpg: float | None = None
    hba1c: float | None = None
    sbp: float | None = None
    dbp: float | None = None
    pregnancies: float | None = None

    @field_validator("*")
    @classmethod
    def non_negative(cls, value, info):
        if value is not None and value < 0:
            raise ValueError(f"implausible negative value for {info.field_name}")
        return value

    def as_vector(self) -> np.ndarray:
        return np.array(
            [np.nan if getattr(self, name) is None else float(getattr(self, name))
             for name in FEATURE_NAMES]
        )


class Registry:
    """Numbered model/report JSON files plus a `current` pointer file."""

    def __init__(self, directory: str | Path):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    def _pointer(self) -> Path:
        return self.dir / "current"

    def next_version(self) -> int:
        existing = [
            int(p.stem.split("_")[1]) for p in self.dir.glob("model_*.json")
        ]
        return max(existing, default=0) + 1

    def store(self, model: TrainedModel, report: EvalReport) -> int:
        version = self.next_version()
        save_model(model, self.dir / f"model_{version:05d}.json")
        (self.dir / f"report_{version:05d}.json").write_text(
            json.dumps(report.to_dict())
        )
        tmp = self._pointer().with_suffix(".tmp")
        tmp.write_text(str(version))
        os.replace(tmp, self._pointer())
        return version

    def store_ablation(self, report: AblationReport) -> None:
        (self.dir / "ablation.json").write_text(json.dumps(report.to_dict()))

    def load_current(self):
        pointer = self._pointer()
        if not pointer.exists():
            return None, None, None
        version = int(pointer.read_text().strip())
        model = load_model(self.dir / f"model_{version:05d}.json")
        report_path = self.dir / f"report_{version:05d}.json"
        report = (
            EvalReport.from_dict(json.loads(report_path.read_text()))
            if report_path.exists()
            else None
        )
        return version, model, report

    def load_ablation(self) -> AblationReport | None:
        path = self.dir / "ablation.json"
        if not path.exists():
            return None
        return AblationReport.from_dict(json.loads(path.read_text()))


class ServiceState:
    def __init__(self, registry: Registry):
        self.lock = threading.Lock()
        self.registry = registry
        self.model: TrainedModel | None = None
        self.report: EvalReport | None = None
        self.version: int | None = None
        self.ablation: AblationReport | None = None
        self.jobs: dict[str, dict] = {}
        self.busy = False
        self._job_counter = 0

    def restore(self) -> None:
        version, model, report = self.registry.load_current()
        with self.lock:
            if model is not None:
                self.version, self.model, self.report = version, model, report
            self.ablation = self.registry.load_ablation()

    def new_job(self, kind: str) -> dict:
        with self.lock:
            if self.busy:
                raise HTTPException(409, "a training job is already running")
            self.busy = True
            self._job_counter += 1
            job = {
                "id": f"job-{self._job_counter}",
                "kind": kind,
                "status": "running",
                "progress": None,
                "report": None,
                "error": None,
                "rejected_rows": [],
            }
            self.jobs[job["id"]] = job
            return job

    def current_model(self) -> tuple[TrainedModel, int | None]:
        with self.lock:
            model, version = self.model, self.version
        if model is None:
            raise HTTPException(503, "no model loaded; train one first")
        return model, version


def _resolve_cohort(request: TrainRequest) -> tuple[Cohort, list[dict]]:
    if (request.synthetic is None) == (request.csv_text is None):
        raise HTTPException(400, "provide exactly one of `synthetic` or `csv_text`")
    if request.synthetic is not None:
        try:
            cohort = generate_synthetic_cohort(request.synthetic.n, request.synthetic.seed)
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return cohort, []
    try:
        cohort, rejected = load_cohort_csv_text(request.csv_text)
    except ValueError as exc:
        raise HTTPException(400, f"malformed CSV: {exc}")
    diagnostics = [{"line": r.line, "reason": r.reason} for r in rejected]
    try:
        cohort.check_trainable()
    except ValueError as exc:
        raise HTTPException(400, {"error": str(exc), "rejected_rows": diagnostics})
    return cohort, diagnostics


def _resolve_config(request: TrainRequest) -> TrainConfig:
    try:
        return TrainConfig.from_dict(request.config or {})
    except (ValueError, TypeError) as exc:
        raise HTTPException(400, f"invalid config: {exc}")


def create_app(
    registry_dir: str | Path = "model_registry",
    frontend_dir: str | Path | None = None,
) -> FastAPI:
    app = FastAPI(title="Patient-centric diabetes classifier")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    state = ServiceState(Registry(registry_dir))
    state.restore()
    app.state.service = state

    def _finish_training(job, cohort, config):
        try:
            def progress(epoch, breakdown):
                with state.lock:
                    job["progress"] = {
                        "epoch": epoch + 1,
                        "total_epochs": config.epochs,
                        "loss": breakdown.total,
                    }

            model, report, _ = train_and_evaluate(cohort, config, progress)
            version = state.registry.store(model, report)
            with state.lock:
                state.model, state.report, state.version = model, report, version
                job["status"] = "done"
                job["report"] = report.to_dict()
        except Exception as exc:  # surfaced through the job record
            with state.lock:
                job["status"] = "failed"
                job["error"] = f"{type(exc).__name__}: {exc}"
        finally:
            with state.lock:
                state.busy = False

    def _finish_ablation(job, cohort, config, seeds):
        try:
            report = run_ablations(cohort, config, seeds)
            state.registry.store_ablation(report)
            with state.lock:
                state.ablation = report
                job["status"] = "done"
                job["report"] = report.to_dict()
        except Exception as exc:
            with state.lock:
                job["status"] = "failed"
                job["error"] = f"{type(exc).__name__}: {exc}"
        finally:
            with state.lock:
                state.busy = False

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.post("/api/train", status_code=202)
    def start_training(request: TrainRequest):
        cohort, rejected = _resolve_cohort(request)
        config = _resolve_config(request)
        try:
            cohort.check_trainable()
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        job = state.new_job("train")
        job["rejected_rows"] = rejected
        thread = threading.Thread(
            target=_finish_training, args=(job, cohort, config), daemon=True
        )
        thread.start()
        return {"job_id": job["id"]}

    @app.post("/api/ablate", status_code=202)
    def start_ablation(request: AblateRequest):
        cohort, rejected = _resolve_cohort(request)
        config = _resolve_config(request)
        if not request.seeds:
            raise HTTPException(400, "seeds must be non-empty")
        job = state.new_job("ablate")
        job["rejected_rows"] = rejected
        thread = threading.Thread(
            target=_finish_ablation, args=(job, cohort, config, request.seeds),
            daemon=True,
        )
        thread.start()
        return {"job_id": job["id"]}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        with state.lock:
            job = state.jobs.get(job_id)
            if job is None:
                raise HTTPException(404, f"unknown job {job_id!r}")
            return dict(job)

    @app.post("/api/predict")
    def predict(request: PredictRequest):
        model, version = state.current_model()
        try:
            report = predict_new(
                request.as_vector(),
                model,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        except ValueError as exc:
            raise HTTPException(422, str(exc))
        payload = report.to_dict()
        payload["model_version"] = version
        return payload

    @app.get("/api/model")
    def model_info():
        model, version = state.current_model()
        payload = model_to_dict(model)
        return {
            "version": version,
            "model_id": model.weights_hash(),
            "schema_version": payload["schema_version"],
            "hidden_dim": payload["hidden_dim"],
            "variant": payload["variant"],
            "class_names": payload["class_names"],
            "feature_names": payload["feature_names"],
            "n_train": model.n_train,
            "config": payload["config"],
        }

    @app.get("/api/metrics")
    def metrics():
        with state.lock:
            report = state.report
        if report is None:
            raise HTTPException(503, "no evaluation report; train a model first")
        return report.to_dict()

    @app.get("/api/roc")
    def roc_curves():
        with state.lock:
            report = state.report
        if report is None or not report.roc:
            raise HTTPException(503, "no ROC data; train a model first")
        return {"classes": report.roc}

    @app.get("/api/ablation")
    def ablation():
        with state.lock:
            report = state.ablation
        if report is None:
            raise HTTPException(503, "no ablation report; run one first")
        return report.to_dict()

    if frontend_dir is not None and Path(frontend_dir).is_dir():
        app.mount("/", StaticFiles(directory=frontend_dir, html=True), name="console")

    return app
