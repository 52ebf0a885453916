"""Simulator determinism, calibration targets and invariants."""

from datetime import date, timedelta

import numpy as np
import pytest

from telemon import features, pipeline, simulate
from telemon.cohort_io import write_cohort
from telemon.errors import ValidationError
from telemon.records import ClinicalEvent

from conftest import make_measurement, make_profile


def test_empty_cohort():
    profiles, measurements, events = simulate.generate_cohort(
        simulate.CohortConfig(n_patients=0, seed=1))
    assert profiles == [] and measurements == [] and events == []


def test_generation_is_byte_deterministic(tmp_path):
    config = simulate.CohortConfig(n_patients=12, horizon_days=90, seed=42)
    for run in range(2):
        out = tmp_path / f"run{run}"
        write_cohort(out, *simulate.generate_cohort(config))
    for name in ("profiles.csv", "measurements.csv", "events.csv"):
        assert (tmp_path / "run0" / name).read_bytes() == (tmp_path / "run1" / name).read_bytes()


def test_all_vitals_within_physio_ranges_without_noise_sources():
    config = simulate.CohortConfig(n_patients=25, horizon_days=200, seed=3)
    config.precursor.signal_strength = 0.0
    config.missingness.daily_p = 0.0
    _, measurements, _ = simulate.generate_cohort(config)
    assert measurements, "expected data"
    for m in measurements:
        for vital, (lo, hi) in simulate.PHYSIO_RANGES.items():
            value = getattr(m, vital)
            assert value is not None
            assert lo <= value <= hi
        assert m.wellbeing in (1, 2, 3, 4, 5)
        assert m.dia_bp_mmhg < m.sys_bp_mmhg


def test_nothing_after_death():
    config = simulate.CohortConfig(n_patients=120, horizon_days=150, seed=5, death_rate=0.5)
    profiles, measurements, events = simulate.generate_cohort(config)
    deaths = {ev.patient_id: ev.date for ev in events if ev.kind == "death"}
    assert deaths, "expected some deaths at death_rate=0.5"
    for m in measurements:
        if m.patient_id in deaths:
            assert m.date <= deaths[m.patient_id]
    for ev in events:
        if ev.patient_id in deaths:
            assert ev.date <= deaths[ev.patient_id]
    # death terminates the horizon early
    last = {}
    for m in measurements:
        last[m.patient_id] = max(last.get(m.patient_id, m.date), m.date)
    for pid, death_day in deaths.items():
        assert last[pid] <= death_day


def test_event_rate_law_at_scale():
    # 300 patients x 365 days > 1e5 patient-days
    config = simulate.CohortConfig(n_patients=300, horizon_days=365, seed=7, death_rate=0.0)
    config.missingness.daily_p = 0.0
    profiles, measurements, events = simulate.generate_cohort(config)
    assert len(measurements) >= 100_000
    summary = simulate.summarize_cohort(profiles, measurements, events)
    assert summary.positive_day_rate == pytest.approx(config.daily_event_rate, rel=0.2)


def test_summarize_counting_fixture():
    profiles = [make_profile("p1"), make_profile("p2")]
    start = date(2024, 1, 1)
    measurements = [make_measurement("p1", start + timedelta(days=i)) for i in range(50)]
    measurements += [make_measurement("p2", start + timedelta(days=i)) for i in range(50)]
    events = [
        ClinicalEvent("p1", start + timedelta(days=3), "intervention"),
        ClinicalEvent("p1", start + timedelta(days=20), "intervention"),
        ClinicalEvent("p2", start + timedelta(days=49), "death"),
    ]
    summary = simulate.summarize_cohort(profiles, measurements, events)
    assert summary.n_patients == 2
    assert summary.n_measurements == 100
    assert summary.events_by_kind == {"intervention": 2, "death": 1}
    assert summary.positive_day_rate == pytest.approx(0.03)
    assert summary.n_deaths == 1


def test_empty_summary_is_all_zero():
    summary = simulate.summarize_cohort([], [], [])
    assert summary.n_measurements == 0
    assert summary.positive_day_rate == 0.0
    assert summary.missingness_rate == 0.0


def test_event_mix_matches_calibration_ratio(default_cohort):
    _, (profiles, measurements, events), _ = default_cohort
    summary = simulate.summarize_cohort(profiles, measurements, events)
    hosp = summary.events_by_kind["hospitalization"]
    interventions = summary.events_by_kind["intervention"]
    target = simulate.HOSPITALIZATION_COUNT / simulate.INTERVENTION_COUNT
    assert hosp / interventions == pytest.approx(target, rel=0.3)


def test_default_cohort_positive_sample_rate(default_cohort, default_experiment):
    samples = default_experiment["samples"]
    rate = np.mean([s.label for s in samples])
    assert 0.015 <= rate <= 0.025


def test_invalid_configs_rejected():
    with pytest.raises(ValidationError):
        simulate.CohortConfig(n_patients=-1).validate()
    with pytest.raises(ValidationError):
        simulate.CohortConfig(daily_event_rate=1.5).validate()
    with pytest.raises(ValidationError):
        simulate.generate_cohort(simulate.CohortConfig(horizon_days=0))
    bad = simulate.CohortConfig()
    bad.precursor.signal_strength = -0.1
    with pytest.raises(ValidationError):
        bad.validate()


def test_config_text_round_trip():
    config = simulate.CohortConfig(n_patients=99, horizon_days=120, seed=13,
                                   daily_event_rate=0.017, death_rate=0.2)
    config.precursor.weight_ramp_kg = 2.75
    config.missingness.per_feature["weight_kg"] = 0.01
    config.missingness.gap_lengths = [(1, 0.5), (4, 0.5)]
    text = simulate.config_to_text(config)
    assert simulate.config_from_text(text) == config


def test_config_text_rejects_unknown_keys():
    with pytest.raises(ValidationError, match="unknown"):
        simulate.config_from_text("bogus_key=3\n")
