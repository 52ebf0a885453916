"""Feature schema shared by the whole system.

The schema is versioned and ordered; training, stored models, rule
evaluation and the service all index features through this module, so the
order here is the single source of truth.
"""

from __future__ import annotations

SCHEMA_VERSION = "v1"

# Static profile features (constant per patient).
PROFILE_FEATURES = (
    "age",
    "gender",
    "diabetes",
    "nyha",
    "lvef_pct",
    "av_block",
    "lbbb",
    "lives_alone",
    "anxiety",
)

# Daily measured features, in measurement-file column order.
MEASUREMENT_FEATURES = (
    "weight_kg",
    "sys_bp_mmhg",
    "dia_bp_mmhg",
    "spo2_pct",
    "hr_bpm",
    "sinus_rhythm",
    "ventricular_tachycardia",
    "atrial_fibrillation",
    "wellbeing",
    "complaints",
)

# Derived from the weight series: weight(t) - weight(t - k) for k in 1, 3, 8.
DERIVED_FEATURES = (
    "weight_diff_1d",
    "weight_diff_3d",
    "weight_diff_8d",
)

WEIGHT_DIFF_LAGS = (1, 3, 8)

# Longest lag needed for the derived features; samples need this much history.
HISTORY_DAYS = max(WEIGHT_DIFF_LAGS)

FEATURE_NAMES = PROFILE_FEATURES + MEASUREMENT_FEATURES + DERIVED_FEATURES
FEATURE_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}
N_FEATURES = len(FEATURE_NAMES)
