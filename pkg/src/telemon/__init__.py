"""Decision support for remote heart-failure monitoring.

Scores each patient's daily risk of needing an intervention from
self-measured vitals, sorts patients into capacity-limited review
worklists with a bounded-review-gap guarantee, and ships a calibrated
synthetic cohort simulator for end-to-end experiments.
"""

from .errors import ParseError, TelemonError, ValidationError
from .estimator import MlpRiskClassifier
from .pipeline import (
    DatasetSplit,
    FeatureScaler,
    LabeledSample,
    assemble_samples,
    build_sample,
    impute_series,
    oversample_minority,
    split_by_patient,
    standardize,
)
from .records import ClinicalEvent, DailyMeasurement, PatientProfile

__all__ = [
    "ClinicalEvent",
    "DailyMeasurement",
    "DatasetSplit",
    "FeatureScaler",
    "LabeledSample",
    "MlpRiskClassifier",
    "ParseError",
    "PatientProfile",
    "TelemonError",
    "ValidationError",
    "assemble_samples",
    "build_sample",
    "impute_series",
    "oversample_minority",
    "split_by_patient",
    "standardize",
]

__version__ = "0.1.0"
