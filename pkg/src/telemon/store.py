"""Append-only file store for the service.

Every accepted write is one JSON line, fsynced before it is acknowledged;
replaying the log reconstructs the exact in-memory state, which doubles as
the crash-safety test oracle. Trained models and their metrics live as
snapshot files under models/.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path

from .errors import TelemonError, ValidationError
from .records import ClinicalEvent, DailyMeasurement, PatientProfile, check_event_ordering

LOG_FILE = "log.jsonl"
MODELS_DIR = "models"


class StoreCorruptError(TelemonError):
    def __init__(self, path: str, line: int, reason: str):
        self.path = path
        self.line = line
        super().__init__(f"corrupt store {path} at line {line}: {reason}")


@dataclass
class Review:
    patient_id: str
    date: Date


@dataclass
class StoreState:
    profiles: dict[str, PatientProfile] = field(default_factory=dict)
    measurements: dict[tuple[str, Date], DailyMeasurement] = field(default_factory=dict)
    events: list[ClinicalEvent] = field(default_factory=list)
    reviews: dict[str, Date] = field(default_factory=dict)  # last review per patient


def _profile_to_json(p: PatientProfile) -> dict:
    return {
        "patient_id": p.patient_id, "age": p.age, "gender": p.gender,
        "nyha_class": p.nyha_class, "lvef_pct": p.lvef_pct, "diabetes": p.diabetes,
        "av_block": p.av_block, "lbbb": p.lbbb, "lives_alone": p.lives_alone,
        "anxiety": p.anxiety,
    }


def _measurement_to_json(m: DailyMeasurement) -> dict:
    doc = {"patient_id": m.patient_id, "date": m.date.isoformat()}
    for name in ("weight_kg", "sys_bp_mmhg", "dia_bp_mmhg", "spo2_pct", "hr_bpm",
                 "sinus_rhythm", "ventricular_tachycardia", "atrial_fibrillation",
                 "wellbeing", "complaints"):
        value = getattr(m, name)
        if value is not None:
            doc[name] = value
    return doc


def _measurement_from_json(doc: dict) -> DailyMeasurement:
    kwargs = dict(doc)
    kwargs["date"] = Date.fromisoformat(kwargs["date"])
    return DailyMeasurement(**kwargs)


class Store:
    """Single-writer append-only store rooted at a data directory."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.models_dir = self.data_dir / MODELS_DIR
        self.models_dir.mkdir(exist_ok=True)
        self.log_path = self.data_dir / LOG_FILE
        self.state = StoreState()
        self._replay()
        self._log = open(self.log_path, "a", encoding="utf-8")

    def close(self) -> None:
        self._log.close()

    # -- replay --

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    kind = record["type"]
                    data = record["data"]
                    self._apply(kind, data)
                except (KeyError, TypeError, ValueError, ValidationError, json.JSONDecodeError) as exc:
                    raise StoreCorruptError(str(self.log_path), line_no, str(exc)) from exc

    def _apply(self, kind: str, data: dict) -> None:
        if kind == "profile":
            profile = PatientProfile(**data)
            profile.validate()
            self.state.profiles[profile.patient_id] = profile
        elif kind == "measurement":
            m = _measurement_from_json(data)
            m.validate()
            self.state.measurements[(m.patient_id, m.date)] = m
        elif kind == "event":
            ev = ClinicalEvent(patient_id=data["patient_id"],
                               date=Date.fromisoformat(data["date"]), kind=data["kind"])
            ev.validate()
            self.state.events.append(ev)
        elif kind == "review":
            self.state.reviews[data["patient_id"]] = Date.fromisoformat(data["date"])
        else:
            raise ValidationError(f"unknown record type {kind!r}")

    # -- durable appends --

    def _append(self, kind: str, data: dict) -> None:
        self._log.write(json.dumps({"type": kind, "data": data}) + "\n")
        self._log.flush()
        os.fsync(self._log.fileno())

    def add_profile(self, profile: PatientProfile) -> str:
        """Returns "created" or "duplicate"; conflicting re-registration errors."""
        profile.validate()
        existing = self.state.profiles.get(profile.patient_id)
        if existing is not None:
            if existing == profile:
                return "duplicate"
            raise ValidationError(f"patient {profile.patient_id!r} already registered with different data")
        self._append("profile", _profile_to_json(profile))
        self.state.profiles[profile.patient_id] = profile
        return "created"

    def add_measurement(self, m: DailyMeasurement) -> str:
        m.validate()
        if m.patient_id not in self.state.profiles:
            raise ValidationError(f"unknown patient {m.patient_id!r}")
        existing = self.state.measurements.get((m.patient_id, m.date))
        if existing is not None:
            if existing == m:
                return "duplicate"
            raise ValidationError(
                f"measurement for {m.patient_id!r} on {m.date.isoformat()} already exists with different values"
            )
        self._append("measurement", _measurement_to_json(m))
        self.state.measurements[(m.patient_id, m.date)] = m
        return "created"

    def add_event(self, ev: ClinicalEvent) -> str:
        ev.validate()
        if ev.patient_id not in self.state.profiles:
            raise ValidationError(f"unknown patient {ev.patient_id!r}")
        if ev in self.state.events:
            return "duplicate"
        check_event_ordering(self.state.events + [ev])
        self._append("event", {"patient_id": ev.patient_id, "date": ev.date.isoformat(),
                               "kind": ev.kind})
        self.state.events.append(ev)
        return "created"

    def add_review(self, patient_id: str, date: Date) -> str:
        if patient_id not in self.state.profiles:
            raise ValidationError(f"unknown patient {patient_id!r}")
        last = self.state.reviews.get(patient_id)
        if last is not None and date < last:
            raise ValidationError(
                f"review date {date.isoformat()} precedes last review {last.isoformat()}"
            )
        if last == date:
            return "duplicate"
        self._append("review", {"patient_id": patient_id, "date": date.isoformat()})
        self.state.reviews[patient_id] = date
        return "created"

    # -- views --

    def profiles(self) -> list[PatientProfile]:
        return [self.state.profiles[pid] for pid in sorted(self.state.profiles)]

    def measurements(self) -> list[DailyMeasurement]:
        return [self.state.measurements[key] for key in sorted(self.state.measurements)]

    def events(self) -> list[ClinicalEvent]:
        return sorted(self.state.events, key=lambda ev: (ev.patient_id, ev.date, ev.kind))

    def model_ids(self) -> list[str]:
        return sorted(p.stem for p in self.models_dir.glob("*.model"))

    def model_path(self, model_id: str) -> Path:
        return self.models_dir / f"{model_id}.model"

    def metrics_dir(self, model_id: str) -> Path:
        return self.models_dir / f"{model_id}.metrics"

    def next_model_id(self) -> str:
        return f"model-{len(self.model_ids()) + 1:04d}"
