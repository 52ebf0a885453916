"""Daily triage: risk-sorted worklists with a bounded-review-gap guarantee.

Overdue patients (not reviewed for at least `coverage_days`) pre-empt the
risk ordering, most-overdue first. With capacity K >= ceil(N / D) this
makes the D-day coverage guarantee hold for every consecutive-review gap
that begins after the initial warm-up, regardless of the score stream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date as Date
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ValidationError


@dataclass
class PatientReview:
    enrollment_date: Date
    last_review_date: Date | None = None


@dataclass
class ReviewState:
    """Per-patient review bookkeeping; single-writer by design."""

    patients: dict[str, PatientReview] = field(default_factory=dict)

    def register(self, patient_id: str, enrollment_date: Date) -> None:
        existing = self.patients.get(patient_id)
        if existing is None:
            self.patients[patient_id] = PatientReview(enrollment_date=enrollment_date)
        elif enrollment_date < existing.enrollment_date:
            existing.enrollment_date = enrollment_date

    def days_since_review(self, patient_id: str, today: Date) -> int:
        entry = self.patients[patient_id]
        anchor = entry.last_review_date or entry.enrollment_date
        return (today - anchor).days


@dataclass
class WorklistEntry:
    patient_id: str
    risk: float
    days_since_review: int
    overdue: bool


@dataclass
class Worklist:
    date: Date
    entries: list[WorklistEntry]
    capacity_used: int
    coverage_slots_used: int


def build_worklist(
    scores: Mapping[str, float],
    state: ReviewState,
    date: Date,
    capacity: int,
    coverage_days: int,
) -> Worklist:
    """One day's review queue: overdue first (most overdue leading, ties by
    risk), then the rest by descending risk; truncated to capacity.

    All ties end at patient_id ascending, so the ordering is total.
    """
    if capacity < 1:
        raise ValidationError("capacity must be >= 1")
    if coverage_days < 1:
        raise ValidationError("coverage_days must be >= 1")
    entries = []
    for pid in scores:
        if pid not in state.patients:
            raise ValidationError(f"scored patient {pid!r} missing from review state")
        days = state.days_since_review(pid, date)
        entries.append(WorklistEntry(
            patient_id=pid,
            risk=float(scores[pid]),
            days_since_review=days,
            overdue=days >= coverage_days,
        ))
    overdue = sorted(
        (e for e in entries if e.overdue),
        key=lambda e: (-e.days_since_review, -e.risk, e.patient_id),
    )
    remaining = sorted(
        (e for e in entries if not e.overdue),
        key=lambda e: (-e.risk, e.patient_id),
    )
    chosen = (overdue + remaining)[:capacity]
    return Worklist(
        date=date,
        entries=chosen,
        capacity_used=len(chosen),
        coverage_slots_used=sum(e.overdue for e in chosen),
    )


def record_review(state: ReviewState, patient_id: str, date: Date) -> ReviewState:
    """Mark one patient reviewed; re-reviewing the same day is a no-op."""
    entry = state.patients.get(patient_id)
    if entry is None:
        raise ValidationError(f"unknown patient {patient_id!r}")
    if entry.last_review_date is not None and date < entry.last_review_date:
        raise ValidationError(
            f"review date {date.isoformat()} precedes last review "
            f"{entry.last_review_date.isoformat()} for patient {patient_id!r}"
        )
    entry.last_review_date = date
    return state


@dataclass
class PatientCoverage:
    patient_id: str
    reviews: int
    max_gap_days: int  # longest stretch between consecutive reviews
    mean_risk_at_review: float


@dataclass
class CoverageReport:
    capacity: int
    coverage_days: int
    n_patients: int
    guarantee_feasible: bool  # capacity >= ceil(N / D)
    per_patient: list[PatientCoverage]
    max_gap_days: int
    coverage_slot_fraction: float  # share of used slots taken by overdue promotions
    mean_risk_reviewed: float
    mean_risk_unreviewed: float


def replay_worklists(
    daily_scores: list[Mapping[str, float]],
    enrollments: Mapping[str, Date],
    dates: list[Date],
    capacity: int,
    coverage_days: int,
) -> CoverageReport:
    """Replay a score stream day by day, reviewing everything listed.

    Models the simulator's assumption that practitioners clear each
    worklist completely.
    """
    if not daily_scores or len(daily_scores) != len(dates):
        raise ValidationError("need one score mapping per simulated day")
    state = ReviewState()
    review_dates: dict[str, list[Date]] = {}
    risks_at_review: dict[str, list[float]] = {}
    slots_used = 0
    coverage_slots = 0
    reviewed_risk_sum = unreviewed_risk_sum = 0.0
    reviewed_n = unreviewed_n = 0

    for day, scores in zip(dates, daily_scores):
        for pid in scores:
            if pid in enrollments:
                state.register(pid, enrollments[pid])
            else:
                state.register(pid, day)
        worklist = build_worklist(scores, state, day, capacity, coverage_days)
        listed = {e.patient_id for e in worklist.entries}
        slots_used += worklist.capacity_used
        coverage_slots += worklist.coverage_slots_used
        for entry in worklist.entries:
            record_review(state, entry.patient_id, day)
            review_dates.setdefault(entry.patient_id, []).append(day)
            risks_at_review.setdefault(entry.patient_id, []).append(entry.risk)
            reviewed_risk_sum += entry.risk
            reviewed_n += 1
        for pid, risk in scores.items():
            if pid not in listed:
                unreviewed_risk_sum += float(risk)
                unreviewed_n += 1

    n_patients = len(state.patients)
    per_patient = []
    max_gap_overall = 0
    for pid, entry in sorted(state.patients.items()):
        dates_reviewed = review_dates.get(pid, [])
        gaps = [(nxt - prev).days for prev, nxt in zip(dates_reviewed[:-1], dates_reviewed[1:])]
        max_gap = max(gaps) if gaps else 0
        max_gap_overall = max(max_gap_overall, max_gap)
        risks = risks_at_review.get(pid, [])
        per_patient.append(PatientCoverage(
            patient_id=pid,
            reviews=len(dates_reviewed),
            max_gap_days=max_gap,
            mean_risk_at_review=float(np.mean(risks)) if risks else 0.0,
        ))
    return CoverageReport(
        capacity=capacity,
        coverage_days=coverage_days,
        n_patients=n_patients,
        guarantee_feasible=capacity >= math.ceil(n_patients / coverage_days),
        per_patient=per_patient,
        max_gap_days=max_gap_overall,
        coverage_slot_fraction=(coverage_slots / slots_used) if slots_used else 0.0,
        mean_risk_reviewed=(reviewed_risk_sum / reviewed_n) if reviewed_n else 0.0,
        mean_risk_unreviewed=(unreviewed_risk_sum / unreviewed_n) if unreviewed_n else 0.0,
    )


COVERAGE_HEADER = ["patient_id", "max_gap_days", "reviews", "mean_risk_at_review"]


def write_coverage_csv(report: CoverageReport, path: str | Path) -> None:
    """Per-patient coverage rows plus a SUMMARY line."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COVERAGE_HEADER)
        for p in report.per_patient:
            w.writerow([p.patient_id, p.max_gap_days, p.reviews, repr(p.mean_risk_at_review)])
        total_reviews = sum(p.reviews for p in report.per_patient)
        w.writerow(["SUMMARY", report.max_gap_days, total_reviews, repr(report.mean_risk_reviewed)])
