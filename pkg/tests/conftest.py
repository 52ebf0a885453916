"""Shared fixtures: CSV cohort fixtures, the separable split, and the
session-scoped default synthetic cohort used by calibration and acceptance
tests."""

from __future__ import annotations

from dataclasses import replace
from datetime import date, timedelta

import numpy as np
import pytest

from telemon import features, pipeline, simulate
from telemon.cohort_io import write_cohort
from telemon.records import DailyMeasurement, PatientProfile


def make_profile(pid="p1", **overrides) -> PatientProfile:
    kwargs = dict(
        patient_id=pid, age=70, gender="M", nyha_class="II", lvef_pct=35.0,
        diabetes=False, av_block=False, lbbb=False, lives_alone=False, anxiety=False,
    )
    kwargs.update(overrides)
    return PatientProfile(**kwargs)


def make_measurement(pid="p1", day=date(2024, 1, 1), **overrides) -> DailyMeasurement:
    kwargs = dict(
        patient_id=pid, date=day, weight_kg=80.0, sys_bp_mmhg=120.0, dia_bp_mmhg=75.0,
        spo2_pct=96.0, hr_bpm=70.0, sinus_rhythm=True, ventricular_tachycardia=False,
        atrial_fibrillation=False, wellbeing=4, complaints=False,
    )
    kwargs.update(overrides)
    return DailyMeasurement(**kwargs)


def full_series(pid: str, start: date, n_days: int, weight_fn=None) -> list[DailyMeasurement]:
    """n_days of complete measurements; weight_fn(day_index) sets the weight."""
    rows = []
    for i in range(n_days):
        weight = 80.0 if weight_fn is None else float(weight_fn(i))
        rows.append(make_measurement(pid, start + timedelta(days=i), weight_kg=weight))
    return rows


@pytest.fixture
def cohort_dir_factory(tmp_path):
    def write(profiles, measurements, events, name="cohort"):
        out = tmp_path / name
        write_cohort(out, profiles, measurements, events)
        return out

    return write


def make_separable_samples(n: int, informative: int, rng: np.random.Generator,
                           pid_prefix: str) -> list[pipeline.LabeledSample]:
    samples = []
    for i in range(n):
        label = bool(i % 2)
        vec = rng.normal(0.0, 1.0, features.N_FEATURES)
        vec[informative] = (1.2 if label else -1.2) + rng.normal(0.0, 0.3)
        samples.append(pipeline.LabeledSample(
            patient_id=f"{pid_prefix}{i:04d}",
            date=date(2024, 1, 1) + timedelta(days=i % 365),
            features=vec,
            label=label,
        ))
    return samples


INFORMATIVE_FEATURE = features.FEATURE_INDEX["weight_diff_3d"]


@pytest.fixture(scope="session")
def separable_split() -> pipeline.DatasetSplit:
    """Balanced split where exactly one feature carries all the signal."""
    rng = np.random.default_rng(1234)
    train = make_separable_samples(600, INFORMATIVE_FEATURE, rng, "tr")
    val = make_separable_samples(150, INFORMATIVE_FEATURE, rng, "va")
    test = make_separable_samples(150, INFORMATIVE_FEATURE, rng, "te")
    scaler = pipeline.FeatureScaler.fit(np.stack([s.features for s in train]))
    return pipeline.DatasetSplit(train=train, validation=val, test=test, scaler=scaler)


SEPARABLE_TRAIN_KWARGS = dict(learning_rate=0.01, batch_size=64, max_epochs=50, patience=None)


@pytest.fixture(scope="session")
def default_cohort():
    """The calibrated default cohort: 763 patients, one year, fixed seed."""
    import time

    config = simulate.CohortConfig(n_patients=763, horizon_days=365, seed=20240101)
    started = time.time()
    records = simulate.generate_cohort(config)
    return config, records, time.time() - started


@pytest.fixture(scope="session")
def default_experiment(default_cohort):
    """Full pipeline + default-architecture training on the default cohort."""
    import time

    from telemon import mlp

    _, (profiles, measurements, events), generate_seconds = default_cohort
    started = time.time()
    samples = pipeline.assemble_samples(profiles, measurements, events)
    split = pipeline.split_by_patient(samples, seed=7)
    split = replace(split, train=pipeline.oversample_minority(split.train, seed=7))
    std = pipeline.standardize(split)
    model = mlp.init_model([features.N_FEATURES, 35, 20, 35, 1], "relu", [0.25, 0.15, 0.3], seed=7)
    model, history = mlp.train(model, std, mlp.TrainConfig(seed=7))
    return {
        "samples": samples,
        "split": split,
        "std": std,
        "model": model,
        "history": history,
        "runtime_seconds": generate_seconds + (time.time() - started),
    }
