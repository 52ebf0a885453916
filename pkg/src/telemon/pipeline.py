"""Transforms raw cohort records into labeled, standardized, split training data.

Processing order used by the CLI and the training service:

    parse_cohort -> assemble_samples -> split_by_patient
        -> oversample_minority (train set only) -> standardize -> train

Missing vitals are linearly imputed for gaps of at most two consecutive
days; any patient-day that still lacks a schema feature (including the
weight history needed for the 1/3/8-day differences) is dropped rather
than zero-filled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import date as Date, timedelta

import numpy as np

from . import features
from .errors import ValidationError
from .records import ClinicalEvent, DailyMeasurement, PatientProfile

MAX_IMPUTE_GAP = 2  # longest run of missing days that linear imputation may fill


@dataclass
class LabeledSample:
    """Feature vector plus binary label, with (patient, date) provenance."""

    patient_id: str
    date: Date
    features: np.ndarray  # float64, features.N_FEATURES long
    label: bool


@dataclass
class FeatureScaler:
    """Per-feature mean/std standardization fitted on the training set.

    Features that are constant on the training set (std 0) are mapped to
    0.0 regardless of the incoming value.
    """

    means: np.ndarray
    stds: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "FeatureScaler":
        return cls(means=X.mean(axis=0), stds=X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        safe = np.where(self.stds == 0.0, 1.0, self.stds)
        return np.where(self.stds == 0.0, 0.0, (X - self.means) / safe)


@dataclass
class DatasetSplit:
    """Patient-disjoint train/validation/test sets plus the train scaler."""

    train: list[LabeledSample]
    validation: list[LabeledSample]
    test: list[LabeledSample]
    scaler: FeatureScaler


def impute_array(values: np.ndarray) -> np.ndarray:
    """Linearly fill interior NaN runs of length <= MAX_IMPUTE_GAP.

    Longer runs and leading/trailing runs stay NaN; observed values are
    never altered. Input is one feature for one patient on consecutive
    calendar days.
    """
    values = np.asarray(values, dtype=np.float64)
    out = values.copy()
    observed = np.flatnonzero(~np.isnan(values))
    for left, right in zip(observed[:-1], observed[1:]):
        gap = right - left - 1
        if 0 < gap <= MAX_IMPUTE_GAP:
            slope = (values[right] - values[left]) / (right - left)
            for k in range(1, gap + 1):
                out[left + k] = values[left] + slope * k
    return out


def impute_series(values) -> list[float | None]:
    """impute_array over an optional-float series, preserving None for gaps."""
    arr = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
    filled = impute_array(arr)
    return [None if np.isnan(v) else float(v) for v in filled]


def _label_days(events: list[ClinicalEvent], patient_id: str, horizon: int) -> set[Date]:
    """Days t for which some event of any kind falls inside [t, t+horizon]."""
    days: set[Date] = set()
    for ev in events:
        if ev.patient_id != patient_id:
            continue
        for back in range(horizon + 1):
            days.add(ev.date - timedelta(days=back))
    return days


def build_sample(
    profile: PatientProfile,
    window: dict[str, list[float | None]],
    events: list[ClinicalEvent],
    t: Date,
    horizon: int = 0,
) -> LabeledSample | None:
    """Assemble one labeled sample for day t from an imputed day window.

    `window` maps each measurement feature to its values on days
    t-8 .. t (index 8 is day t). Returns None when any schema feature is
    unavailable, which is the documented "dropped" outcome.
    """
    n = features.HISTORY_DAYS + 1
    for name in features.MEASUREMENT_FEATURES:
        if name not in window or len(window[name]) != n:
            raise ValidationError(f"window must cover days t-{features.HISTORY_DAYS}..t for {name}")

    vec = np.empty(features.N_FEATURES, dtype=np.float64)
    vec[0] = float(profile.age)
    vec[1] = 1.0 if profile.gender == "M" else 0.0
    vec[2] = float(profile.diabetes)
    vec[3] = 1.0 if profile.nyha_class == "III" else 0.0
    vec[4] = float(profile.lvef_pct)
    vec[5] = float(profile.av_block)
    vec[6] = float(profile.lbbb)
    vec[7] = float(profile.lives_alone)
    vec[8] = float(profile.anxiety)

    offset = len(features.PROFILE_FEATURES)
    for i, name in enumerate(features.MEASUREMENT_FEATURES):
        value = window[name][-1]
        if value is None:
            return None
        vec[offset + i] = float(value)

    weights = window["weight_kg"]
    w_t = weights[-1]
    for j, lag in enumerate(features.WEIGHT_DIFF_LAGS):
        w_prev = weights[-1 - lag]
        if w_prev is None:
            return None
        vec[offset + len(features.MEASUREMENT_FEATURES) + j] = float(w_t) - float(w_prev)

    label = t in _label_days(events, profile.patient_id, horizon)
    return LabeledSample(patient_id=profile.patient_id, date=t, features=vec, label=label)


def profile_row(profile: PatientProfile) -> np.ndarray:
    """Encode the static profile features in schema order."""
    return np.array([
        float(profile.age),
        1.0 if profile.gender == "M" else 0.0,
        float(profile.diabetes),
        1.0 if profile.nyha_class == "III" else 0.0,
        float(profile.lvef_pct),
        float(profile.av_block),
        float(profile.lbbb),
        float(profile.lives_alone),
        float(profile.anxiety),
    ])


def patient_day_matrices(
    profile: PatientProfile,
    rows: list[DailyMeasurement],
) -> tuple[Date, np.ndarray, np.ndarray]:
    """Per-day raw and full feature matrices for one patient.

    Returns (first_day, raw, X): `raw` is the (n_days, n_measurements)
    matrix before imputation, `X` the (n_days, n_features) schema matrix
    after imputation with weight-difference columns; NaN marks
    unavailable. Day 0 of both matrices is the first measurement day.
    """
    n_meas = len(features.MEASUREMENT_FEATURES)
    offset = len(features.PROFILE_FEATURES)
    rows = sorted(rows, key=lambda m: m.date)
    start, end = rows[0].date, rows[-1].date
    n_days = (end - start).days + 1

    raw = np.full((n_days, n_meas), np.nan)
    for m in rows:
        d = (m.date - start).days
        for i, name in enumerate(features.MEASUREMENT_FEATURES):
            value = getattr(m, name)
            if value is not None:
                raw[d, i] = float(value)
    M = raw.copy()
    for i in range(n_meas):
        M[:, i] = impute_array(M[:, i])

    X = np.empty((n_days, features.N_FEATURES))
    X[:, :offset] = profile_row(profile)
    X[:, offset:offset + n_meas] = M

    weight = M[:, 0]
    for j, lag in enumerate(features.WEIGHT_DIFF_LAGS):
        col = np.full(n_days, np.nan)
        if n_days > lag:
            col[lag:] = weight[lag:] - weight[:-lag]
        X[:, offset + n_meas + j] = col
    return start, raw, X


def assemble_samples(
    profiles: list[PatientProfile],
    measurements: list[DailyMeasurement],
    events: list[ClinicalEvent],
    horizon: int = 0,
) -> list[LabeledSample]:
    """Impute per-patient series and emit every complete patient-day sample.

    Vectorized equivalent of calling build_sample for each day; output is
    sorted by (patient_id, date).
    """
    by_patient: dict[str, list[DailyMeasurement]] = {}
    for m in measurements:
        by_patient.setdefault(m.patient_id, []).append(m)

    samples: list[LabeledSample] = []
    for profile in sorted(profiles, key=lambda p: p.patient_id):
        rows = by_patient.get(profile.patient_id)
        if not rows:
            continue
        start, _, X = patient_day_matrices(profile, rows)
        complete = ~np.isnan(X).any(axis=1)
        complete[:features.HISTORY_DAYS] = False

        positive_days = _label_days(events, profile.patient_id, horizon)
        for d in np.flatnonzero(complete):
            day = start + timedelta(days=int(d))
            samples.append(LabeledSample(
                patient_id=profile.patient_id,
                date=day,
                features=X[int(d)].copy(),
                label=day in positive_days,
            ))
    return samples


SPLIT_WEIGHTS = (4, 1, 1)  # train : validation : test, by patient count


def _deal_patients(ordered: list[str]) -> tuple[list[str], list[str], list[str]]:
    """Assign patients to sets keeping each set within 1 of its exact share."""
    total = sum(SPLIT_WEIGHTS)
    sets: tuple[list[str], ...] = ([], [], [])
    for k, pid in enumerate(ordered, start=1):
        deficits = [w / total * k - len(s) for w, s in zip(SPLIT_WEIGHTS, sets)]
        sets[int(np.argmax(deficits))].append(pid)
    return sets


def split_by_patient(samples: list[LabeledSample], seed: int) -> DatasetSplit:
    """Partition patients 4:1:1 into train/validation/test, stratified.

    Patients are bucketed by positive-sample count and sample-count
    quartile, shuffled within buckets by the seed, then dealt so every
    set stays within one patient of its exact share. The scaler is
    fitted on the train samples only.
    """
    by_patient: dict[str, list[LabeledSample]] = {}
    for s in samples:
        by_patient.setdefault(s.patient_id, []).append(s)
    patients = sorted(by_patient)
    if len(patients) < 6:
        raise ValidationError(f"need at least 6 patients to split 4:1:1, got {len(patients)}")

    rng = np.random.default_rng(seed)
    shuffled = [patients[i] for i in rng.permutation(len(patients))]

    counts = {pid: len(rows) for pid, rows in by_patient.items()}
    positives = {pid: sum(s.label for s in rows) for pid, rows in by_patient.items()}
    quartiles = np.quantile(list(counts.values()), [0.25, 0.5, 0.75])

    def bucket(pid: str) -> tuple[int, int]:
        return (positives[pid], int(np.searchsorted(quartiles, counts[pid], side="right")))

    # Stable sort: heavy patients first, ties remain in shuffled order.
    ordered = sorted(shuffled, key=lambda pid: bucket(pid), reverse=True)
    train_ids, val_ids, test_ids = _deal_patients(ordered)
    if not (train_ids and val_ids and test_ids):
        raise ValidationError("every split set must receive at least one patient")

    def collect(ids: list[str]) -> list[LabeledSample]:
        chosen = set(ids)
        return [s for s in samples if s.patient_id in chosen]

    train = collect(train_ids)
    scaler = FeatureScaler.fit(np.stack([s.features for s in train]))
    return DatasetSplit(train=train, validation=collect(val_ids), test=collect(test_ids), scaler=scaler)


def oversample_indices(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Indices of minority rows to duplicate until class counts are equal."""
    labels = np.asarray(labels, dtype=bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("oversampling needs at least one sample of each class")
    if n_pos == n_neg:
        return np.empty(0, dtype=np.int64)
    minority = np.flatnonzero(labels if n_pos < n_neg else ~labels)
    return rng.choice(minority, size=abs(n_neg - n_pos), replace=True)


def oversample_minority(train: list[LabeledSample], seed: int) -> list[LabeledSample]:
    """Balance classes by duplicating real minority samples (seeded).

    Majority samples are untouched and no synthetic values are created;
    an already balanced set is returned unchanged.
    """
    labels = np.array([s.label for s in train], dtype=bool)
    extra = oversample_indices(labels, np.random.default_rng(seed))
    return list(train) + [train[int(i)] for i in extra]


def standardize(split: DatasetSplit) -> DatasetSplit:
    """Apply the train-set scaler to every set of the split."""

    def apply(samples: list[LabeledSample]) -> list[LabeledSample]:
        return [replace(s, features=split.scaler.transform(s.features)) for s in samples]

    return DatasetSplit(
        train=apply(split.train),
        validation=apply(split.validation),
        test=apply(split.test),
        scaler=split.scaler,
    )


def sample_matrix(samples: list[LabeledSample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack samples into an (n, n_features) matrix and a bool label vector."""
    if not samples:
        return (np.empty((0, features.N_FEATURES)), np.empty(0, dtype=bool))
    X = np.stack([s.features for s in samples])
    y = np.array([s.label for s in samples], dtype=bool)
    return X, y
