"""Input validation helpers for the estimator-facing API."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def check_feature_matrix(X, n_features: int | None = None) -> np.ndarray:
    """Coerce to a finite 2-D float64 matrix, optionally checking width."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValidationError(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if not np.isfinite(X).all():
        raise ValidationError("feature matrix contains NaN or infinite values")
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(f"expected {n_features} features, got {X.shape[1]}")
    return X


def check_binary_labels(y, n_samples: int | None = None) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValidationError("labels must be a 1-D vector")
    if y.dtype != bool:
        unique = np.unique(y)
        if not np.isin(unique, (0, 1)).all():
            raise ValidationError(f"labels must be binary, got values {unique[:5]}")
        y = y.astype(bool)
    if n_samples is not None and y.shape[0] != n_samples:
        raise ValidationError(f"expected {n_samples} labels, got {y.shape[0]}")
    return y
