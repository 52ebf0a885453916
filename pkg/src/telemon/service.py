"""HTTP service: ingestion, daily worklists, reviews and training jobs.

All state flows through the append-only Store; reads rebuild their view
from it so a restart (or crash) reproduces exactly the acknowledged
records. Writes are serialized by a single lock, training runs in one
background worker, and in sim mode the clock only moves via
POST /sim/advance.
"""

from __future__ import annotations

import csv
import math
import queue
import threading
import time
import traceback
from dataclasses import dataclass, replace
from datetime import date as Date, timedelta
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import features, metrics, mlp, triage
from .errors import TelemonError, ValidationError
from .pipeline import assemble_samples, oversample_minority, sample_matrix, split_by_patient, standardize
from .records import ClinicalEvent, DailyMeasurement, PatientProfile
from .scoring import FeatureHistory, ModelScorer, RuleScorer
from .store import Store

API_PREFIX = "/api/v1"
SCORE_LOOKBACK_DAYS = 30  # how far back a stale-but-complete day may be scored from


class ApiError(TelemonError):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


class PatientIn(BaseModel):
    patient_id: str
    age: int
    gender: str
    nyha_class: str
    lvef_pct: float
    diabetes: bool
    av_block: bool
    lbbb: bool
    lives_alone: bool
    anxiety: bool


class MeasurementIn(BaseModel):
    patient_id: str
    date: Date
    weight_kg: float | None = None
    sys_bp_mmhg: float | None = None
    dia_bp_mmhg: float | None = None
    spo2_pct: float | None = None
    hr_bpm: float | None = None
    sinus_rhythm: bool | None = None
    ventricular_tachycardia: bool | None = None
    atrial_fibrillation: bool | None = None
    wellbeing: int | None = None
    complaints: bool | None = None


class EventIn(BaseModel):
    patient_id: str
    date: Date
    kind: str


class ReviewIn(BaseModel):
    patient_id: str
    date: Date


class TrainIn(BaseModel):
    learning_rate: float = 0.001
    batch_size: int = 4096
    max_epochs: int = 453
    patience: int | None = 50
    seed: int = 0
    label_horizon: int = 0
    hidden_layer_sizes: list[int] = [35, 20, 35]
    activation: str = "relu"
    dropout_rates: list[float] = [0.25, 0.15, 0.3]


@dataclass
class TrainJob:
    job_id: str
    status: str  # queued | running | done | failed
    config: dict
    model_id: str | None = None
    error: str | None = None
    started_at: float | None = None  # monotonic seconds
    finished_at: float | None = None

    def to_json(self) -> dict:
        return {
            "job_id": self.job_id,
            "status": self.status,
            "config": self.config,
            "model_id": self.model_id,
            "error": self.error,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


class ServiceContext:
    """Everything behind the endpoints: store, scorer, jobs, sim clock."""

    def __init__(self, data_dir, model_id=None, capacity=20, coverage_days=14,
                 mode="live", sim_start: Date | None = None):
        if mode not in ("live", "sim"):
            raise ValidationError(f"mode must be live or sim, got {mode!r}")
        self.store = Store(data_dir)
        self.write_lock = threading.Lock()
        self.capacity = capacity
        self.coverage_days = coverage_days
        self.mode = mode
        self.sim_date = sim_start or Date(2024, 1, 1)
        self.active_model_id: str | None = None
        if model_id is not None:
            if not self.store.model_path(model_id).exists():
                raise ValidationError(f"model {model_id!r} not found in store")
            self.active_model_id = model_id
        self.jobs: dict[str, TrainJob] = {}
        self.jobs_lock = threading.Lock()
        self.job_queue: queue.Queue[str | None] = queue.Queue()
        self.worker = threading.Thread(target=self._train_worker, daemon=True)
        self.worker.start()

    # -- scoring --

    def scorer(self):
        if self.active_model_id is not None:
            model, scaler = mlp.load_model(self.store.model_path(self.active_model_id))
            return ModelScorer(model, scaler, model_id=self.active_model_id)
        return RuleScorer()

    def top_model_features(self, limit: int = 3) -> list[str]:
        if self.active_model_id is None:
            return []
        path = self.store.metrics_dir(self.active_model_id) / "importance.csv"
        if not path.exists():
            return []
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        rows.sort(key=lambda r: -float(r[1]))
        return [name for name, _ in (r[:2] for r in rows[:limit])]

    def today(self) -> Date:
        return self.sim_date if self.mode == "sim" else Date.today()

    def build_worklist(self, day: Date, capacity: int | None = None) -> dict:
        state = self.store.state
        history = FeatureHistory(self.store.profiles(), self.store.measurements())
        deaths = {ev.patient_id: ev.date for ev in state.events if ev.kind == "death"}

        review_state = triage.ReviewState()
        scores: dict[str, float] = {}
        rows: dict[str, np.ndarray] = {}
        reviewed_today: set[str] = set()
        for pid in history.patient_ids:
            enrolled = history.enrollment_date(pid)
            if enrolled > day:
                continue
            if pid in deaths and deaths[pid] < day:
                continue
            review_state.register(pid, enrolled)
            last_review = state.reviews.get(pid)
            if last_review is not None and last_review <= day:
                review_state.patients[pid].last_review_date = last_review
                if last_review == day:
                    reviewed_today.add(pid)
            row = self._latest_complete_row(history, pid, day)
            if row is None:
                scores[pid] = 0.0
            else:
                rows[pid] = row
        scorer = self.scorer()
        # One row at a time: worklist scores must be bit-identical to an
        # offline predict() of the same single feature vector.
        for pid in sorted(rows):
            scores[pid] = float(scorer.score_rows(rows[pid][None, :])[0])

        capacity = capacity or self.capacity
        worklist = triage.build_worklist(scores, review_state, day, capacity, self.coverage_days)
        top_features = self.top_model_features() if scorer.name == "model" else []
        entries = []
        for e in worklist.entries:
            if e.patient_id not in rows:
                explanation = {"kind": "no_data", "items": []}
            elif scorer.name == "rules":
                explanation = {"kind": "fired_rules", "items": scorer.explain(rows[e.patient_id])}
            else:
                explanation = {"kind": "top_features", "items": top_features}
            entries.append({
                "patient_id": e.patient_id,
                "risk": e.risk,
                "days_since_review": e.days_since_review,
                "overdue": e.overdue,
                "reviewed_today": e.patient_id in reviewed_today,
                "explanation": explanation,
            })
        return {
            "date": day.isoformat(),
            "scorer": scorer.name,
            "model_id": self.active_model_id,
            "capacity": capacity,
            "coverage_days": self.coverage_days,
            "coverage_slots_used": worklist.coverage_slots_used,
            "entries": entries,
        }

    @staticmethod
    def _latest_complete_row(history: FeatureHistory, pid: str, day: Date):
        """Newest complete feature row at or before `day`, within the lookback."""
        candidate = min(day, history.last_date(pid))
        floor = max(history.enrollment_date(pid), day - timedelta(days=SCORE_LOOKBACK_DAYS))
        while candidate >= floor:
            row = history.features_on(pid, candidate)
            if row is not None:
                return row
            candidate -= timedelta(days=1)
        return None

    # -- training jobs --

    def submit_train(self, payload: TrainIn) -> TrainJob:
        with self.jobs_lock:
            job_id = f"job-{len(self.jobs) + 1:04d}"
            job = TrainJob(job_id=job_id, status="queued", config=payload.model_dump())
            self.jobs[job_id] = job
        self.job_queue.put(job_id)
        return job

    def _train_worker(self) -> None:
        while True:
            job_id = self.job_queue.get()
            if job_id is None:
                return
            with self.jobs_lock:
                job = self.jobs[job_id]
                job.status = "running"
                job.started_at = time.monotonic()
            try:
                job.model_id = self._run_training(TrainIn(**job.config))
                job.status = "done"
            except Exception as exc:  # job failures must never kill the worker
                job.status = "failed"
                job.error = f"{type(exc).__name__}: {exc}"
                if not isinstance(exc, TelemonError):
                    traceback.print_exc()
            finally:
                job.finished_at = time.monotonic()
                self.job_queue.task_done()

    def _run_training(self, cfg: TrainIn) -> str:
        profiles = self.store.profiles()
        measurements = self.store.measurements()
        events = self.store.events()
        if len(profiles) < 6:
            raise ValidationError(f"insufficient data: need at least 6 patients, have {len(profiles)}")
        samples = assemble_samples(profiles, measurements, events, horizon=cfg.label_horizon)
        labels = {s.label for s in samples}
        if labels != {True, False}:
            raise ValidationError("insufficient data: need samples of both classes")

        split = split_by_patient(samples, seed=cfg.seed)
        split = replace(split, train=oversample_minority(split.train, seed=cfg.seed))
        std = standardize(split)
        model = mlp.init_model(
            [len(samples[0].features), *cfg.hidden_layer_sizes, 1],
            cfg.activation, cfg.dropout_rates, seed=cfg.seed,
        )
        config = mlp.TrainConfig(
            learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
            max_epochs=cfg.max_epochs, patience=cfg.patience, seed=cfg.seed,
        )
        model, history = mlp.train(model, std, config)

        model_id = self.store.next_model_id()
        mlp.save_model(self.store.model_path(model_id), model, split.scaler)
        try:
            self._write_model_metrics(model_id, model, split)
        except ValidationError:
            pass  # e.g. single-class test set; the model itself is still usable
        self.active_model_id = model_id
        return model_id

    def _write_model_metrics(self, model_id, model, split) -> None:
        X_test, y_test = sample_matrix(split.test)
        scored = metrics.ScoredSet(
            mlp.predict(model, split.scaler, X_test), y_test,
            provenance=[(s.patient_id, s.date.isoformat()) for s in split.test],
        )
        report = metrics.compute_report(scored)
        out = self.store.metrics_dir(model_id)
        metrics.write_report_csvs(report, out)
        importance = metrics.permutation_importance(
            lambda X: mlp.predict(model, split.scaler, X), X_test, y_test, n_repeats=5, seed=0,
        )
        with open(out / "importance.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["feature", "mean_auc_drop"])
            for name, drop in zip(features.FEATURE_NAMES, importance.mean_drop):
                w.writerow([name, repr(float(drop))])


def _domain_status(exc: ValidationError) -> int:
    return 409 if "already exists" in str(exc) or "precedes last review" in str(exc) else 400


def create_app(data_dir, model_id=None, capacity=20, coverage_days=14,
               mode="live", sim_start: Date | None = None,
               static_dir: str | Path | None = None) -> FastAPI:
    ctx = ServiceContext(data_dir, model_id=model_id, capacity=capacity,
                         coverage_days=coverage_days, mode=mode, sim_start=sim_start)
    app = FastAPI(title="telemon", version="0.1.0")
    app.state.ctx = ctx

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"code": exc.code, "message": exc.message})

    @app.exception_handler(ValidationError)
    async def handle_domain_error(request: Request, exc: ValidationError):
        status = _domain_status(exc)
        code = "conflict" if status == 409 else "invalid"
        return JSONResponse(status_code=status, content={"code": code, "message": str(exc)})

    @app.get("/api/v1/health")
    def health():
        return {"status": "ok", "mode": ctx.mode, "date": ctx.today().isoformat()}

    @app.post("/api/v1/patients", status_code=201)
    def post_patient(payload: PatientIn):
        with ctx.write_lock:
            outcome = ctx.store.add_profile(PatientProfile(**payload.model_dump()))
        return {"patient_id": payload.patient_id, "outcome": outcome}

    @app.post("/api/v1/measurements", status_code=201)
    def post_measurements(payload: MeasurementIn | list[MeasurementIn]):
        batch = payload if isinstance(payload, list) else [payload]
        accepted = duplicates = 0
        with ctx.write_lock:
            for item in batch:
                outcome = ctx.store.add_measurement(DailyMeasurement(**item.model_dump()))
                if outcome == "duplicate":
                    duplicates += 1
                else:
                    accepted += 1
        return {"accepted": accepted, "duplicates": duplicates}

    @app.post("/api/v1/events", status_code=201)
    def post_event(payload: EventIn):
        with ctx.write_lock:
            outcome = ctx.store.add_event(ClinicalEvent(**payload.model_dump()))
        return {"outcome": outcome}

    @app.post("/api/v1/reviews", status_code=201)
    def post_review(payload: ReviewIn):
        with ctx.write_lock:
            outcome = ctx.store.add_review(payload.patient_id, payload.date)
        return {"outcome": outcome}

    @app.get("/api/v1/patients/{patient_id}/timeline")
    def patient_timeline(patient_id: str):
        profile = ctx.store.state.profiles.get(patient_id)
        if profile is None:
            raise ApiError(404, "not_found", f"unknown patient {patient_id!r}")
        history = FeatureHistory([profile], ctx.store.measurements())
        vitals = {}
        for vital in ("weight_kg", "sys_bp_mmhg", "dia_bp_mmhg", "spo2_pct", "hr_bpm", "wellbeing"):
            vitals[vital] = [
                {"date": day.isoformat(), "value": value, "imputed": imputed}
                for day, value, imputed in history.vital_series(patient_id, vital)
            ]
        events = [
            {"date": ev.date.isoformat(), "kind": ev.kind}
            for ev in ctx.store.events() if ev.patient_id == patient_id
        ]
        last_review = ctx.store.state.reviews.get(patient_id)
        return {
            "patient_id": patient_id,
            "profile": {
                "age": profile.age, "gender": profile.gender, "nyha_class": profile.nyha_class,
                "lvef_pct": profile.lvef_pct, "diabetes": profile.diabetes,
                "av_block": profile.av_block, "lbbb": profile.lbbb,
                "lives_alone": profile.lives_alone, "anxiety": profile.anxiety,
            },
            "vitals": vitals,
            "events": events,
            "last_review": last_review.isoformat() if last_review else None,
        }

    @app.get("/api/v1/worklist")
    def get_worklist(date: Date | None = None, capacity: int | None = None):
        day = date or ctx.today()
        return ctx.build_worklist(day, capacity)

    @app.post("/api/v1/train", status_code=202)
    def post_train(payload: TrainIn):
        return ctx.submit_train(payload).to_json()

    @app.get("/api/v1/jobs/{job_id}")
    def get_job(job_id: str):
        job = ctx.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "not_found", f"unknown job {job_id!r}")
        return job.to_json()

    @app.get("/api/v1/models")
    def get_models():
        return {
            "models": [
                {"model_id": mid, "active": mid == ctx.active_model_id}
                for mid in ctx.store.model_ids()
            ]
        }

    @app.get("/api/v1/models/{model_id}/metrics")
    def get_model_metrics(model_id: str):
        if not ctx.store.model_path(model_id).exists():
            raise ApiError(404, "not_found", f"unknown model {model_id!r}")
        summary_path = ctx.store.metrics_dir(model_id) / "summary.csv"
        summary = {}
        if summary_path.exists():
            with open(summary_path, newline="") as fh:
                for row in list(csv.reader(fh))[1:]:
                    summary[row[0]] = float(row[1])
        return {"model_id": model_id, "summary": summary}

    @app.post("/api/v1/sim/advance")
    def sim_advance(days: int = 1):
        if ctx.mode != "sim":
            raise ApiError(409, "not_sim_mode", "clock can only be advanced in sim mode")
        if days < 1:
            raise ApiError(400, "invalid", "days must be >= 1")
        with ctx.write_lock:
            ctx.sim_date = ctx.sim_date + timedelta(days=days)
        return {"date": ctx.sim_date.isoformat()}

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
