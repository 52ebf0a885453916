"""Bridges stored cohorts to per-day risk scores for either scorer kind.

FeatureHistory caches the imputed per-patient day matrices so the service
worklist, the triage simulator and the CLI all score exactly the same
feature vectors the training pipeline would produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date as Date, timedelta

import numpy as np

from . import features, mlp, rules, triage
from .errors import ValidationError
from .pipeline import FeatureScaler, patient_day_matrices
from .records import DailyMeasurement, PatientProfile


@dataclass
class _PatientHistory:
    start: Date
    raw: np.ndarray  # (n_days, n_measurement_features), pre-imputation
    X: np.ndarray  # (n_days, n_features), post-imputation


class FeatureHistory:
    """Imputed per-day feature vectors for every patient with measurements."""

    def __init__(self, profiles: list[PatientProfile], measurements: list[DailyMeasurement]):
        by_patient: dict[str, list[DailyMeasurement]] = {}
        for m in measurements:
            by_patient.setdefault(m.patient_id, []).append(m)
        self._patients: dict[str, _PatientHistory] = {}
        for profile in profiles:
            rows = by_patient.get(profile.patient_id)
            if not rows:
                continue
            start, raw, X = patient_day_matrices(profile, rows)
            self._patients[profile.patient_id] = _PatientHistory(start=start, raw=raw, X=X)

    @property
    def patient_ids(self) -> list[str]:
        return sorted(self._patients)

    def enrollment_date(self, patient_id: str) -> Date:
        return self._patients[patient_id].start

    def last_date(self, patient_id: str) -> Date:
        h = self._patients[patient_id]
        return h.start + timedelta(days=h.X.shape[0] - 1)

    def active_on(self, patient_id: str, day: Date) -> bool:
        h = self._patients.get(patient_id)
        return h is not None and h.start <= day <= self.last_date(patient_id)

    def features_on(self, patient_id: str, day: Date) -> np.ndarray | None:
        """Complete schema vector for one patient-day, or None if any
        feature (including weight history) is unavailable."""
        h = self._patients.get(patient_id)
        if h is None:
            return None
        idx = (day - h.start).days
        if idx < features.HISTORY_DAYS or idx >= h.X.shape[0]:
            return None
        row = h.X[idx]
        if np.isnan(row).any():
            return None
        return row.copy()

    def vital_series(self, patient_id: str, vital: str) -> list[tuple[Date, float, bool]]:
        """(day, value, imputed) points for one vital, absent days skipped."""
        if vital not in features.MEASUREMENT_FEATURES:
            raise ValidationError(f"unknown vital {vital!r}")
        h = self._patients.get(patient_id)
        if h is None:
            return []
        col = features.MEASUREMENT_FEATURES.index(vital)
        meas_offset = len(features.PROFILE_FEATURES)
        points = []
        for idx in range(h.X.shape[0]):
            value = h.X[idx, meas_offset + col]
            if np.isnan(value):
                continue
            imputed = np.isnan(h.raw[idx, col])
            points.append((h.start + timedelta(days=idx), float(value), bool(imputed)))
        return points


class ModelScorer:
    """Scores complete patient-days with a trained network bundle."""

    name = "model"

    def __init__(self, model: mlp.MlpModel, scaler: FeatureScaler, model_id: str = ""):
        self.model = model
        self.scaler = scaler
        self.model_id = model_id

    def score_rows(self, X_raw: np.ndarray) -> np.ndarray:
        return np.atleast_1d(mlp.predict(self.model, self.scaler, X_raw))

    def explain(self, row: np.ndarray) -> list[str]:
        return []


class RuleScorer:
    """Scores patient-days with a rule set; explanations are fired rules."""

    name = "rules"

    def __init__(self, ruleset: rules.RuleSet | None = None):
        self.ruleset = ruleset if ruleset is not None else rules.default_ruleset()

    def score_rows(self, X_raw: np.ndarray) -> np.ndarray:
        return rules.score_matrix(self.ruleset, X_raw)

    def explain(self, row: np.ndarray) -> list[str]:
        day = dict(zip(features.FEATURE_NAMES, row))
        return [r.name for r in rules.fired_rules(self.ruleset, day)]


def scores_for_day(
    history: FeatureHistory,
    scorer,
    day: Date,
    carry: dict[str, float] | None = None,
) -> dict[str, float]:
    """Risk per active patient; incomplete days fall back to the carried
    last known score (0.0 when there has never been one)."""
    scores: dict[str, float] = {}
    rows = []
    row_pids = []
    for pid in history.patient_ids:
        if not history.active_on(pid, day):
            continue
        row = history.features_on(pid, day)
        if row is None:
            scores[pid] = carry.get(pid, 0.0) if carry else 0.0
        else:
            rows.append(row)
            row_pids.append(pid)
    if rows:
        for pid, score in zip(row_pids, scorer.score_rows(np.stack(rows))):
            scores[pid] = float(score)
    if carry is not None:
        carry.update(scores)
    return scores


def simulate_triage(
    profiles: list[PatientProfile],
    measurements: list[DailyMeasurement],
    scorer,
    capacity: int,
    coverage_days: int,
    horizon: int | None = None,
) -> triage.CoverageReport:
    """Replay the cohort day by day through worklists that get fully worked.

    Scores each active patient daily (carrying the last known score over
    incomplete days) and reports per-patient review gaps plus how much
    capacity coverage promotions consumed.
    """
    history = FeatureHistory(profiles, measurements)
    pids = history.patient_ids
    if not pids:
        raise ValidationError("cohort has no patients with measurements")
    first = min(history.enrollment_date(pid) for pid in pids)
    last = max(history.last_date(pid) for pid in pids)
    n_days = (last - first).days + 1
    if horizon is not None:
        n_days = min(n_days, horizon)

    carry: dict[str, float] = {}
    dates = [first + timedelta(days=i) for i in range(n_days)]
    daily_scores = [scores_for_day(history, scorer, day, carry) for day in dates]
    enrollments = {pid: history.enrollment_date(pid) for pid in pids}
    return triage.replay_worklists(daily_scores, enrollments, dates, capacity, coverage_days)
