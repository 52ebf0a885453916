"""Domain record types: patient profiles, daily measurements, clinical events."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date

from .errors import ValidationError

GENDERS = ("F", "M")
NYHA_CLASSES = ("II", "III")
EVENT_KINDS = ("intervention", "hospitalization", "death")

# Valid ranges for measured vitals, applied only when the value is present.
MEASUREMENT_RANGES = {
    "weight_kg": (20.0, 300.0),
    "sys_bp_mmhg": (40.0, 280.0),
    "dia_bp_mmhg": (20.0, 200.0),
    "spo2_pct": (50.0, 100.0),
    "hr_bpm": (20.0, 250.0),
}


@dataclass
class PatientProfile:
    """Static clinical and social attributes of one monitored patient."""

    patient_id: str
    age: int
    gender: str  # "F" or "M"
    nyha_class: str  # "II" or "III"
    lvef_pct: float
    diabetes: bool
    av_block: bool
    lbbb: bool
    lives_alone: bool
    anxiety: bool

    def validate(self) -> None:
        if not self.patient_id:
            raise ValidationError("patient_id must be non-empty")
        if self.age < 18:
            raise ValidationError(f"patient {self.patient_id}: age must be >= 18, got {self.age}")
        if self.gender not in GENDERS:
            raise ValidationError(f"patient {self.patient_id}: gender must be F or M, got {self.gender!r}")
        if self.nyha_class not in NYHA_CLASSES:
            raise ValidationError(
                f"patient {self.patient_id}: nyha_class must be II or III, got {self.nyha_class!r}"
            )
        if not 0.0 <= self.lvef_pct < 45.0:
            raise ValidationError(
                f"patient {self.patient_id}: lvef_pct must be in [0, 45), got {self.lvef_pct}"
            )


@dataclass
class DailyMeasurement:
    """One calendar day of self-measured vitals; every field may be absent."""

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

    def validate(self) -> None:
        ctx = f"patient {self.patient_id} on {self.date.isoformat()}"
        for field, (lo, hi) in MEASUREMENT_RANGES.items():
            value = getattr(self, field)
            if value is not None and not lo <= value <= hi:
                raise ValidationError(f"{ctx}: {field}={value} outside [{lo}, {hi}]")
        if (
            self.sys_bp_mmhg is not None
            and self.dia_bp_mmhg is not None
            and not self.dia_bp_mmhg < self.sys_bp_mmhg
        ):
            raise ValidationError(
                f"{ctx}: diastolic {self.dia_bp_mmhg} must be below systolic {self.sys_bp_mmhg}"
            )
        if self.wellbeing is not None and self.wellbeing not in (1, 2, 3, 4, 5):
            raise ValidationError(f"{ctx}: wellbeing must be in 1..5, got {self.wellbeing}")


@dataclass
class ClinicalEvent:
    """Dated intervention, hospitalization or death record."""

    patient_id: str
    date: Date
    kind: str

    def validate(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValidationError(
                f"patient {self.patient_id} on {self.date.isoformat()}: "
                f"unknown event kind {self.kind!r}"
            )


def check_event_ordering(events: list[ClinicalEvent]) -> None:
    """Enforce at most one death per patient and no events after a death."""
    deaths: dict[str, Date] = {}
    for ev in events:
        if ev.kind == "death":
            if ev.patient_id in deaths:
                raise ValidationError(f"patient {ev.patient_id}: more than one death event")
            deaths[ev.patient_id] = ev.date
    for ev in events:
        death = deaths.get(ev.patient_id)
        if death is not None and ev.date > death:
            raise ValidationError(
                f"patient {ev.patient_id}: event on {ev.date.isoformat()} "
                f"dated after death on {death.isoformat()}"
            )
