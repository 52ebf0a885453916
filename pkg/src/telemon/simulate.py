"""Synthetic cohort generator.

Real monitoring data of this kind is private, so experiments run on
synthetic cohorts built to match the target cohort profile: a ~2%
positive-day rate, a roughly 1:11 hospitalization:intervention mix, and
about one year of daily self-measurements per patient. Vital dynamics are AR(1) noise
around per-patient baselines with linear pre-event precursor ramps
(weight gain, SpO2 drop, wellbeing drop, heart-rate shift) injected ahead
of a configurable fraction of events. All dynamics are simulator design,
documented as synthetic, never clinical claims.

Generation is deterministic: every patient draws from its own generator
derived from (seed, patient index), so cohorts are reproducible and
per-patient work could run in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date as Date, timedelta

import numpy as np

from . import features
from .errors import ValidationError
from .records import ClinicalEvent, DailyMeasurement, PatientProfile

START_DATE = Date(2024, 1, 1)

# Calibration anchors: event mix and death share of the target cohort profile.
HOSPITALIZATION_COUNT = 387
INTERVENTION_COUNT = 4329
HOSP_FRACTION = HOSPITALIZATION_COUNT / (HOSPITALIZATION_COUNT + INTERVENTION_COUNT)
DEFAULT_DEATH_RATE = 100 / 763

# Hard clipping bounds applied after every adjustment; with missingness 0
# and signal_strength 0 every generated vital stays inside these.
PHYSIO_RANGES = {
    "weight_kg": (35.0, 250.0),
    "sys_bp_mmhg": (70.0, 240.0),
    "dia_bp_mmhg": (35.0, 160.0),
    "spo2_pct": (70.0, 100.0),
    "hr_bpm": (30.0, 220.0),
}

MIN_DEATH_DAY = 15  # deaths need some preceding series to be useful


@dataclass
class PrecursorConfig:
    """Linear pre-event ramps that give the model something to learn."""

    window_days: int = 7
    weight_ramp_kg: float = 2.0
    spo2_drop_pct: float = 3.0
    wellbeing_drop: int = 2
    hr_shift_bpm: float = 15.0
    signal_strength: float = 0.8  # fraction of events preceded by ramps

    def validate(self) -> None:
        if self.window_days < 1:
            raise ValidationError("precursor window_days must be >= 1")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ValidationError("signal_strength must be in [0, 1]")


@dataclass
class MissingnessConfig:
    """Per-feature daily missing probability plus a gap-length distribution."""

    daily_p: float = 0.04
    per_feature: dict[str, float] = field(default_factory=dict)
    gap_lengths: list[tuple[int, float]] = field(
        default_factory=lambda: [(1, 0.6), (2, 0.25), (3, 0.1), (5, 0.05)]
    )

    def rate_for(self, feature: str) -> float:
        return self.per_feature.get(feature, self.daily_p)

    def mean_gap(self) -> float:
        total = sum(p for _, p in self.gap_lengths)
        return sum(length * p for length, p in self.gap_lengths) / total

    def validate(self) -> None:
        for name, p in [("daily_p", self.daily_p), *self.per_feature.items()]:
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"missingness probability {name}={p} outside [0, 1]")
        if not self.gap_lengths:
            raise ValidationError("gap_lengths must not be empty")
        for length, p in self.gap_lengths:
            if length < 1 or p < 0:
                raise ValidationError("gap lengths must be >= 1 with nonnegative probabilities")


@dataclass
class CohortConfig:
    n_patients: int = 763
    horizon_days: int = 365
    seed: int = 0
    daily_event_rate: float = 0.02
    death_rate: float = DEFAULT_DEATH_RATE
    precursor: PrecursorConfig = field(default_factory=PrecursorConfig)
    missingness: MissingnessConfig = field(default_factory=MissingnessConfig)

    def validate(self) -> None:
        if self.n_patients < 0:
            raise ValidationError("n_patients must be >= 0")
        if self.horizon_days < 1:
            raise ValidationError("horizon_days must be >= 1")
        for name, p in (("daily_event_rate", self.daily_event_rate), ("death_rate", self.death_rate)):
            if not 0.0 <= p <= 1.0:
                raise ValidationError(f"{name}={p} outside [0, 1]")
        self.precursor.validate()
        self.missingness.validate()


def _ar1(eps: np.ndarray, phi: float) -> np.ndarray:
    out = np.empty_like(eps)
    acc = 0.0
    for i in range(eps.shape[0]):
        acc = phi * acc + eps[i]
        out[i] = acc
    return out


def _missing_mask(n: int, rate: float, miss: MissingnessConfig, rng: np.random.Generator) -> np.ndarray:
    """Boolean mask of missing days built from seeded gap starts."""
    mask = np.zeros(n, dtype=bool)
    if rate <= 0.0:
        return mask
    start_p = min(1.0, rate / miss.mean_gap())
    starts = np.flatnonzero(rng.random(n) < start_p)
    if starts.size == 0:
        return mask
    lengths = [length for length, _ in miss.gap_lengths]
    probs = np.array([p for _, p in miss.gap_lengths], dtype=np.float64)
    probs = probs / probs.sum()
    drawn = rng.choice(lengths, size=starts.size, p=probs)
    for start, length in zip(starts, drawn):
        mask[start:start + int(length)] = True
    return mask


def _generate_patient(idx: int, config: CohortConfig):
    rng = np.random.default_rng([config.seed, idx])
    pid = f"p{idx:04d}"
    profile = PatientProfile(
        patient_id=pid,
        age=int(np.clip(round(rng.normal(70, 10)), 40, 95)),
        gender="M" if rng.random() < 0.75 else "F",
        nyha_class="III" if rng.random() < 0.45 else "II",
        lvef_pct=float(np.clip(round(rng.normal(32, 6), 1), 15.0, 44.9)),
        diabetes=bool(rng.random() < 0.35),
        av_block=bool(rng.random() < 0.12),
        lbbb=bool(rng.random() < 0.2),
        lives_alone=bool(rng.random() < 0.3),
        anxiety=bool(rng.random() < 0.25),
    )

    dies = config.death_rate > 0 and config.horizon_days > MIN_DEATH_DAY and rng.random() < config.death_rate
    if dies:
        death_day = int(rng.integers(MIN_DEATH_DAY, config.horizon_days))
        n = death_day + 1
    else:
        death_day = None
        n = config.horizon_days

    # Per-patient baselines.
    weight_base = float(np.clip(rng.normal(82, 14), 50, 150))
    sys_base = float(np.clip(rng.normal(126, 13), 100, 170))
    spo2_base = float(np.clip(rng.normal(96.5, 1.2), 92, 99))
    hr_base = float(np.clip(rng.normal(72, 9), 55, 100))
    wb_base = int(rng.choice([3, 4, 5], p=[0.15, 0.55, 0.3]))
    af_prone = rng.random() < 0.25

    weight = weight_base + _ar1(rng.normal(0, 0.22, n), 0.97)
    sys_bp = sys_base + _ar1(rng.normal(0, 5.0, n), 0.6)
    dia_bp = 0.55 * sys_bp + 8.0 + _ar1(rng.normal(0, 3.0, n), 0.5)
    spo2 = spo2_base + _ar1(rng.normal(0, 0.7, n), 0.5)
    hr = hr_base + _ar1(rng.normal(0, 3.5, n), 0.6)
    wellbeing = wb_base + rng.choice([-1, 0, 1], size=n, p=[0.12, 0.76, 0.12])

    af = rng.random(n) < (0.18 if af_prone else 0.01)
    vt = rng.random(n) < 0.004
    sinus = ~af & ~vt & (rng.random(n) < 0.97)

    # Events: daily Bernoulli with the calibrated hospitalization mix;
    # a death event terminates the series on its day.
    event_days = np.flatnonzero(rng.random(n) < config.daily_event_rate)
    hosp_draw = rng.random(event_days.size) < HOSP_FRACTION
    events = [
        ClinicalEvent(pid, START_DATE + timedelta(days=int(d)),
                      "hospitalization" if hosp else "intervention")
        for d, hosp in zip(event_days, hosp_draw)
    ]
    precursor_anchors = list(event_days)
    if dies:
        events = [ev for ev in events if (ev.date - START_DATE).days != death_day]
        events.append(ClinicalEvent(pid, START_DATE + timedelta(days=death_day), "death"))
        precursor_anchors.append(death_day)

    pre = config.precursor
    for day in precursor_anchors:
        if rng.random() >= pre.signal_strength:
            continue
        for back in range(pre.window_days):
            t = int(day) - back
            if t < 0:
                break
            frac = (pre.window_days - back) / pre.window_days
            weight[t] += pre.weight_ramp_kg * frac
            spo2[t] -= pre.spo2_drop_pct * frac
            hr[t] += pre.hr_shift_bpm * frac
            wellbeing[t] -= int(round(pre.wellbeing_drop * frac))

    wellbeing = np.clip(wellbeing, 1, 5)
    complaint_p = 0.02 + 0.33 * (wellbeing <= 2) + 0.10 * (wellbeing == 3)
    complaints = rng.random(n) < complaint_p

    weight = np.clip(np.round(weight, 1), *PHYSIO_RANGES["weight_kg"])
    sys_bp = np.clip(np.round(sys_bp), *PHYSIO_RANGES["sys_bp_mmhg"])
    dia_bp = np.clip(np.round(dia_bp), *PHYSIO_RANGES["dia_bp_mmhg"])
    dia_bp = np.minimum(dia_bp, sys_bp - 5.0)
    spo2 = np.clip(np.round(spo2, 1), *PHYSIO_RANGES["spo2_pct"])
    hr = np.clip(np.round(hr), *PHYSIO_RANGES["hr_bpm"])

    columns = {
        "weight_kg": weight,
        "sys_bp_mmhg": sys_bp,
        "dia_bp_mmhg": dia_bp,
        "spo2_pct": spo2,
        "hr_bpm": hr,
        "sinus_rhythm": sinus,
        "ventricular_tachycardia": vt,
        "atrial_fibrillation": af,
        "wellbeing": wellbeing,
        "complaints": complaints,
    }
    missing = {
        name: _missing_mask(n, config.missingness.rate_for(name), config.missingness, rng)
        for name in features.MEASUREMENT_FEATURES
    }

    measurements = []
    for t in range(n):
        values = {}
        for name in features.MEASUREMENT_FEATURES:
            if missing[name][t]:
                continue
            raw = columns[name][t]
            if name == "wellbeing":
                values[name] = int(raw)
            elif name in ("sinus_rhythm", "ventricular_tachycardia", "atrial_fibrillation", "complaints"):
                values[name] = bool(raw)
            else:
                values[name] = float(raw)
        if values:
            measurements.append(DailyMeasurement(
                patient_id=pid, date=START_DATE + timedelta(days=t), **values
            ))
    events.sort(key=lambda ev: (ev.date, ev.kind))
    return profile, measurements, events


def generate_cohort(
    config: CohortConfig,
) -> tuple[list[PatientProfile], list[DailyMeasurement], list[ClinicalEvent]]:
    """Generate a full synthetic cohort, deterministic for a given config."""
    config.validate()
    profiles, measurements, events = [], [], []
    for idx in range(config.n_patients):
        profile, pm, pe = _generate_patient(idx, config)
        profiles.append(profile)
        measurements.extend(pm)
        events.extend(pe)
    return profiles, measurements, events


@dataclass
class CohortSummary:
    n_patients: int
    n_measurements: int
    events_by_kind: dict[str, int]
    positive_day_rate: float
    missingness_rate: float
    n_deaths: int


def summarize_cohort(profiles, measurements, events) -> CohortSummary:
    """Counts and rates used to sanity-check a cohort against its targets."""
    by_kind: dict[str, int] = {}
    event_days = set()
    for ev in events:
        by_kind[ev.kind] = by_kind.get(ev.kind, 0) + 1
        event_days.add((ev.patient_id, ev.date))
    n_meas = len(measurements)
    absent = 0
    for m in measurements:
        for name in features.MEASUREMENT_FEATURES:
            if getattr(m, name) is None:
                absent += 1
    total_fields = n_meas * len(features.MEASUREMENT_FEATURES)
    return CohortSummary(
        n_patients=len(profiles),
        n_measurements=n_meas,
        events_by_kind=by_kind,
        positive_day_rate=(len(event_days) / n_meas) if n_meas else 0.0,
        missingness_rate=(absent / total_fields) if total_fields else 0.0,
        n_deaths=by_kind.get("death", 0),
    )


# --- cohort-config file format: flat key=value lines, # comments ---

def config_to_text(config: CohortConfig) -> str:
    lines = [
        f"n_patients={config.n_patients}",
        f"horizon_days={config.horizon_days}",
        f"seed={config.seed}",
        f"daily_event_rate={repr(config.daily_event_rate)}",
        f"death_rate={repr(config.death_rate)}",
        f"precursor.window_days={config.precursor.window_days}",
        f"precursor.weight_ramp_kg={repr(config.precursor.weight_ramp_kg)}",
        f"precursor.spo2_drop_pct={repr(config.precursor.spo2_drop_pct)}",
        f"precursor.wellbeing_drop={config.precursor.wellbeing_drop}",
        f"precursor.hr_shift_bpm={repr(config.precursor.hr_shift_bpm)}",
        f"precursor.signal_strength={repr(config.precursor.signal_strength)}",
        f"missingness.daily_p={repr(config.missingness.daily_p)}",
        "missingness.gap_lengths=" + ",".join(
            f"{length}:{repr(p)}" for length, p in config.missingness.gap_lengths
        ),
    ]
    for name in sorted(config.missingness.per_feature):
        lines.append(f"missingness.daily_p.{name}={repr(config.missingness.per_feature[name])}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> CohortConfig:
    config = CohortConfig()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"cohort config line {line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            _apply_config_key(config, key, value)
        except (ValueError, ValidationError) as exc:
            raise ValidationError(f"cohort config line {line_no}: {exc}") from exc
    config.validate()
    return config


def _apply_config_key(config: CohortConfig, key: str, value: str) -> None:
    if key == "n_patients":
        config.n_patients = int(value)
    elif key == "horizon_days":
        config.horizon_days = int(value)
    elif key == "seed":
        config.seed = int(value)
    elif key == "daily_event_rate":
        config.daily_event_rate = float(value)
    elif key == "death_rate":
        config.death_rate = float(value)
    elif key == "precursor.window_days":
        config.precursor.window_days = int(value)
    elif key == "precursor.weight_ramp_kg":
        config.precursor.weight_ramp_kg = float(value)
    elif key == "precursor.spo2_drop_pct":
        config.precursor.spo2_drop_pct = float(value)
    elif key == "precursor.wellbeing_drop":
        config.precursor.wellbeing_drop = int(value)
    elif key == "precursor.hr_shift_bpm":
        config.precursor.hr_shift_bpm = float(value)
    elif key == "precursor.signal_strength":
        config.precursor.signal_strength = float(value)
    elif key == "missingness.daily_p":
        config.missingness.daily_p = float(value)
    elif key == "missingness.gap_lengths":
        pairs = []
        for chunk in value.split(","):
            length, p = chunk.split(":")
            pairs.append((int(length), float(p)))
        config.missingness.gap_lengths = pairs
    elif key.startswith("missingness.daily_p."):
        feature = key[len("missingness.daily_p."):]
        if feature not in features.MEASUREMENT_FEATURES:
            raise ValidationError(f"unknown measurement feature {feature!r}")
        config.missingness.per_feature[feature] = float(value)
    else:
        raise ValidationError(f"unknown cohort config key {key!r}")
