"""Imputation, sample assembly, patient-level splitting, oversampling and
standardization contracts."""

from dataclasses import replace
from datetime import date, timedelta

import numpy as np
import pytest

from telemon import features, pipeline
from telemon.cohort_io import write_samples
from telemon.errors import ValidationError
from telemon.records import ClinicalEvent

from conftest import full_series, make_measurement, make_profile, make_separable_samples


# --- imputation ---

def test_impute_fills_single_gap_linearly():
    assert pipeline.impute_series([70.0, None, 72.0]) == [70.0, 71.0, 72.0]


def test_impute_fills_double_gap_on_the_line():
    # Oracle: evaluate the line through (day 0, 70) and (day 3, 73) at days 1, 2.
    expected = np.interp([1, 2], [0, 3], [70.0, 73.0])
    result = pipeline.impute_series([70.0, None, None, 73.0])
    assert result == [70.0, expected[0], expected[1], 73.0]
    assert result == [70.0, 71.0, 72.0, 73.0]


def test_impute_leaves_triple_gap_absent():
    series = [70.0, None, None, None, 74.0]
    assert pipeline.impute_series(series) == series


def test_impute_leaves_leading_and_trailing_gaps():
    series = [None, None, 70.0, None, 71.0, None]
    assert pipeline.impute_series(series) == [None, None, 70.0, 70.5, 71.0, None]


def _random_series(rng):
    n = rng.integers(1, 25)
    series = [float(v) for v in rng.normal(80, 5, n)]
    for i in range(int(n)):
        if rng.random() < 0.4:
            series[i] = None
    return series


def test_impute_idempotent_and_never_touches_observed():
    rng = np.random.default_rng(99)
    for _ in range(200):
        series = _random_series(rng)
        once = pipeline.impute_series(series)
        # observed values unchanged
        for orig, new in zip(series, once):
            if orig is not None:
                assert new == orig
        # gaps of length >= 3 and edge gaps never filled
        for i, (orig, new) in enumerate(zip(series, once)):
            if orig is None and new is not None:
                left = next((j for j in range(i - 1, -1, -1) if series[j] is not None), None)
                right = next((j for j in range(i + 1, len(series)) if series[j] is not None), None)
                assert left is not None and right is not None
                assert right - left - 1 <= pipeline.MAX_IMPUTE_GAP
        assert pipeline.impute_series(once) == once


# --- build_sample ---

def _window(weights):
    window = {name: [value] * 9 for name, value in (
        ("sys_bp_mmhg", 120.0), ("dia_bp_mmhg", 75.0), ("spo2_pct", 96.0),
        ("hr_bpm", 70.0), ("sinus_rhythm", 1.0), ("ventricular_tachycardia", 0.0),
        ("atrial_fibrillation", 0.0), ("wellbeing", 4.0), ("complaints", 0.0),
    )}
    window["weight_kg"] = weights
    return window


def test_build_sample_weight_diffs():
    # weights at t-8 .. t with known anchor points at the difference lags
    weights = [80.0, 80.1, 80.2, 80.3, 80.4, 81.0, 81.2, 81.5, 82.0]
    weights[0], weights[5], weights[7], weights[8] = 80.0, 81.0, 81.5, 82.0
    sample = pipeline.build_sample(make_profile(), _window(weights), [], date(2024, 1, 9))
    assert sample is not None
    idx = features.FEATURE_INDEX
    assert sample.features[idx["weight_diff_1d"]] == pytest.approx(0.5)
    assert sample.features[idx["weight_diff_3d"]] == pytest.approx(1.0)
    assert sample.features[idx["weight_diff_8d"]] == pytest.approx(2.0)


def test_build_sample_label_horizon_boundary():
    t = date(2024, 1, 9)
    window = _window([80.0] * 9)
    at_t = [ClinicalEvent("p1", t, "intervention")]
    after_t = [ClinicalEvent("p1", t + timedelta(days=1), "intervention")]
    assert pipeline.build_sample(make_profile(), window, at_t, t).label is True
    assert pipeline.build_sample(make_profile(), window, after_t, t).label is False
    # horizon 1 pulls next-day events into today's label
    assert pipeline.build_sample(make_profile(), window, after_t, t, horizon=1).label is True


def test_build_sample_dropped_when_history_missing():
    weights = [None, 80.1, 80.2, 80.3, 80.4, 81.0, 81.2, 81.5, 82.0]
    assert pipeline.build_sample(make_profile(), _window(weights), [], date(2024, 1, 9)) is None
    missing_today = _window([80.0] * 9)
    missing_today["spo2_pct"] = [96.0] * 8 + [None]
    assert pipeline.build_sample(make_profile(), missing_today, [], date(2024, 1, 9)) is None


def test_assemble_matches_build_sample():
    """Dual route: the vectorized assembly equals per-day build_sample."""
    rng = np.random.default_rng(5)
    start = date(2024, 3, 1)
    profile = make_profile("pX")
    rows = []
    for i in range(25):
        kwargs = {}
        if rng.random() < 0.25:
            kwargs["weight_kg"] = None
        if rng.random() < 0.2:
            kwargs["spo2_pct"] = None
        rows.append(make_measurement("pX", start + timedelta(days=i),
                                     **({"weight_kg": 80 + 0.1 * i} | kwargs)))
    events = [ClinicalEvent("pX", start + timedelta(days=12), "intervention")]
    samples = pipeline.assemble_samples([profile], rows, events)
    emitted = {s.date: s for s in samples}

    imputed = {
        name: pipeline.impute_series([getattr(rows[i], name) for i in range(25)])
        for name in features.MEASUREMENT_FEATURES
    }
    for i in range(25):
        day = start + timedelta(days=i)
        if i < features.HISTORY_DAYS:
            assert day not in emitted
            continue
        window = {name: series[i - 8:i + 1] for name, series in imputed.items()}
        expected = pipeline.build_sample(profile, window, events, day)
        if expected is None:
            assert day not in emitted
        else:
            assert day in emitted
            assert np.allclose(emitted[day].features, expected.features)
            assert emitted[day].label == expected.label


def test_assemble_requires_eight_days_of_history():
    profile = make_profile("pY")
    rows = full_series("pY", date(2024, 1, 1), 10)
    samples = pipeline.assemble_samples([profile], rows, [])
    assert [s.date for s in samples] == [date(2024, 1, 9), date(2024, 1, 10)]


# --- split ---

def _patients_of(samples):
    return {s.patient_id for s in samples}


def make_cohort_samples(n_patients, rng, positive_rate=0.02, samples_per_patient=30):
    samples = []
    for p in range(n_patients):
        pid = f"c{p:04d}"
        n = max(1, int(samples_per_patient + rng.integers(-8, 9)))
        for i in range(n):
            samples.append(pipeline.LabeledSample(
                patient_id=pid,
                date=date(2024, 1, 1) + timedelta(days=i),
                features=rng.normal(size=features.N_FEATURES),
                label=bool(rng.random() < positive_rate),
            ))
    return samples


def test_split_600_patients_is_400_100_100():
    rng = np.random.default_rng(0)
    samples = make_cohort_samples(600, rng)
    split = pipeline.split_by_patient(samples, seed=11)
    assert len(_patients_of(split.train)) == 400
    assert len(_patients_of(split.validation)) == 100
    assert len(_patients_of(split.test)) == 100


def test_split_patient_sets_disjoint_and_complete():
    rng = np.random.default_rng(1)
    for n_patients in (6, 7, 13, 50):
        samples = make_cohort_samples(n_patients, rng, positive_rate=0.1, samples_per_patient=5)
        split = pipeline.split_by_patient(samples, seed=3)
        train, val, test = map(_patients_of, (split.train, split.validation, split.test))
        assert not (train & val) and not (train & test) and not (val & test)
        assert train | val | test == _patients_of(samples)
        # each set within one patient of its exact 4:1:1 share
        for part, weight in ((train, 4), (val, 1), (test, 1)):
            assert abs(len(part) - n_patients * weight / 6) < 1 + 1e-9


def test_split_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(2)
    samples = make_cohort_samples(60, rng)
    a = pipeline.split_by_patient(samples, seed=5)
    b = pipeline.split_by_patient(samples, seed=5)
    assert _patients_of(a.train) == _patients_of(b.train)
    assert _patients_of(a.test) == _patients_of(b.test)
    c = pipeline.split_by_patient(samples, seed=6)
    assert _patients_of(a.train) != _patients_of(c.train)


def test_split_preserves_positive_rate_and_sample_load():
    rng = np.random.default_rng(3)
    samples = make_cohort_samples(300, rng, positive_rate=0.02)
    split = pipeline.split_by_patient(samples, seed=9)
    global_rate = np.mean([s.label for s in samples])
    assert global_rate == pytest.approx(0.02, rel=0.3)
    for part in (split.train, split.validation, split.test):
        rate = np.mean([s.label for s in part])
        assert abs(rate - global_rate) <= 0.25 * global_rate
        per_patient = len(part) / len(_patients_of(part))
        global_load = len(samples) / 300
        assert abs(per_patient - global_load) <= 0.25 * global_load


def test_split_rejects_tiny_cohorts():
    rng = np.random.default_rng(4)
    samples = make_cohort_samples(5, rng)
    with pytest.raises(ValidationError, match="at least 6"):
        pipeline.split_by_patient(samples, seed=0)


# --- oversampling ---

def _labeled(n_neg, n_pos, rng):
    samples = []
    for i in range(n_neg + n_pos):
        samples.append(pipeline.LabeledSample(
            patient_id=f"s{i}", date=date(2024, 1, 1),
            features=rng.normal(size=features.N_FEATURES), label=i >= n_neg,
        ))
    return samples


def test_oversample_balances_exactly():
    rng = np.random.default_rng(8)
    train = _labeled(98, 2, rng)
    balanced = pipeline.oversample_minority(train, seed=1)
    labels = [s.label for s in balanced]
    assert labels.count(False) == 98
    assert labels.count(True) == 98


def test_oversample_balanced_input_is_fixed_point():
    rng = np.random.default_rng(9)
    train = _labeled(50, 50, rng)
    assert pipeline.oversample_minority(train, seed=1) == train


def test_oversample_only_duplicates_real_samples():
    rng = np.random.default_rng(10)
    train = _labeled(40, 3, rng)
    balanced = pipeline.oversample_minority(train, seed=2)
    originals = {s.features.tobytes() for s in train if s.label}
    for s in balanced:
        if s.label:
            assert s.features.tobytes() in originals
    # majority untouched: the first len(train) entries are the originals
    assert balanced[:len(train)] == train


def test_oversample_single_class_rejected():
    rng = np.random.default_rng(11)
    with pytest.raises(ValidationError):
        pipeline.oversample_minority(_labeled(10, 0, rng), seed=0)


# --- standardization ---

def test_standardize_arithmetic():
    scaler = pipeline.FeatureScaler(
        means=np.full(features.N_FEATURES, 80.0),
        stds=np.full(features.N_FEATURES, 10.0),
    )
    row = np.full(features.N_FEATURES, 90.0)
    assert np.allclose(scaler.transform(row), 1.0)


def test_standardize_constant_feature_maps_to_zero():
    stds = np.ones(features.N_FEATURES)
    stds[0] = 0.0
    scaler = pipeline.FeatureScaler(means=np.zeros(features.N_FEATURES), stds=stds)
    row = np.full(features.N_FEATURES, 123.0)
    out = scaler.transform(row)
    assert out[0] == 0.0
    assert np.allclose(out[1:], 123.0)


def test_standardized_train_set_has_zero_mean_unit_std(separable_split):
    std = pipeline.standardize(separable_split)
    X = np.stack([s.features for s in std.train])
    # Oracle: recompute the statistics after the transform.
    assert np.abs(X.mean(axis=0)).max() < 1e-9
    nonconstant = separable_split.scaler.stds > 0
    assert np.abs(X.std(axis=0)[nonconstant] - 1.0).max() < 1e-9


def test_standardize_uses_train_statistics_for_val_and_test(separable_split):
    std = pipeline.standardize(separable_split)
    scaler = separable_split.scaler
    raw = separable_split.validation[0].features
    assert np.allclose(std.validation[0].features, scaler.transform(raw))
    raw = separable_split.test[-1].features
    assert np.allclose(std.test[-1].features, scaler.transform(raw))


def test_pipeline_determinism_bytes(tmp_path):
    rng = np.random.default_rng(12)
    samples = make_cohort_samples(30, rng, positive_rate=0.1, samples_per_patient=10)
    outputs = []
    for run in range(2):
        split = pipeline.split_by_patient(samples, seed=21)
        split = replace(split, train=pipeline.oversample_minority(split.train, seed=21))
        std = pipeline.standardize(split)
        path = tmp_path / f"run{run}.csv"
        write_samples(path, std.train)
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
