"""sklearn-compatible wrapper around the from-scratch network.

The estimator owns the scaler fitted on its training data, so predict-side
methods take raw (unstandardized) feature matrices and compose with the
wider sklearn ecosystem (get_params/set_params, fit/predict_proba).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import metrics, mlp
from .pipeline import FeatureScaler, oversample_indices
from .validation import check_binary_labels, check_feature_matrix


class MlpRiskClassifier(BaseEstimator):
    """Risk scorer with the architecture defaults used in production.

    fit() standardizes features with statistics from the training rows,
    optionally oversamples the minority class to balance, and selects the
    epoch with the best validation AUCROC. When no validation data is
    passed, a seeded row-level fraction is held out.
    """

    def __init__(
        self,
        hidden_layer_sizes=(35, 20, 35),
        activation="relu",
        dropout_rates=(0.25, 0.15, 0.3),
        learning_rate=0.001,
        batch_size=4096,
        max_epochs=453,
        patience=50,
        validation_fraction=1 / 6,
        balance_classes=True,
        seed=0,
    ):
        self.hidden_layer_sizes = hidden_layer_sizes
        self.activation = activation
        self.dropout_rates = dropout_rates
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.patience = patience
        self.validation_fraction = validation_fraction
        self.balance_classes = balance_classes
        self.seed = seed

    def fit(self, X, y, validation_data=None):
        X = check_feature_matrix(X)
        y = check_binary_labels(y, X.shape[0])
        rng = np.random.default_rng(self.seed)

        if validation_data is not None:
            X_train, y_train = X, y
            X_val = check_feature_matrix(validation_data[0], X.shape[1])
            y_val = check_binary_labels(validation_data[1], X_val.shape[0])
        else:
            n_val = max(1, int(round(X.shape[0] * self.validation_fraction)))
            order = rng.permutation(X.shape[0])
            val_idx, train_idx = order[:n_val], order[n_val:]
            X_train, y_train = X[train_idx], y[train_idx]
            X_val, y_val = X[val_idx], y[val_idx]

        self.scaler_ = FeatureScaler.fit(X_train)
        if self.balance_classes:
            extra = oversample_indices(y_train, rng)
            if extra.size:
                X_train = np.concatenate([X_train, X_train[extra]])
                y_train = np.concatenate([y_train, y_train[extra]])

        activations = self.activation
        if isinstance(activations, str):
            activations = [activations] * len(self.hidden_layer_sizes)
        model = mlp.init_model(
            [X.shape[1], *self.hidden_layer_sizes, 1],
            activations,
            list(np.broadcast_to(self.dropout_rates, (len(self.hidden_layer_sizes),))),
            seed=self.seed,
        )
        config = mlp.TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
        )
        self.model_, self.history_ = mlp.fit_arrays(
            model,
            self.scaler_.transform(X_train), y_train,
            self.scaler_.transform(X_val), y_val,
            config,
        )
        self.n_features_in_ = X.shape[1]
        return self

    @classmethod
    def from_trained(cls, model: mlp.MlpModel, scaler: FeatureScaler) -> "MlpRiskClassifier":
        """Wrap an already trained model bundle (e.g. loaded from disk)."""
        est = cls()
        est.model_ = model
        est.scaler_ = scaler
        est.history_ = None
        est.n_features_in_ = model.layer_dims[0]
        return est

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("this MlpRiskClassifier instance is not fitted yet")

    def predict_risk(self, X) -> np.ndarray:
        """Risk scores in (0, 1) for raw feature rows."""
        self._check_fitted()
        X = check_feature_matrix(X, self.n_features_in_)
        return mlp.predict(self.model_, self.scaler_, X)

    def predict_proba(self, X) -> np.ndarray:
        risk = self.predict_risk(X)
        return np.column_stack([1.0 - risk, risk])

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_risk(X) >= threshold).astype(int)

    def score(self, X, y) -> float:
        """Validation-style AUCROC on raw features."""
        y = check_binary_labels(np.asarray(y))
        return metrics.auc_roc(metrics.ScoredSet(self.predict_risk(X), y))
