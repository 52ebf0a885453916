"""From-scratch feedforward network for daily risk scoring.

Everything here is plain numpy: forward pass, backpropagation through
inverted dropout, binary cross-entropy, Adam, mini-batch training with
best-validation-AUCROC snapshotting, and seeded random hyperparameter
search. The sigmoid output yields a risk score in (0, 1) per patient-day.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import features, metrics
from .errors import ValidationError
from .pipeline import DatasetSplit, FeatureScaler, sample_matrix

BCE_EPS = 1e-12
ACTIVATIONS = ("relu", "sigmoid", "linear")


@dataclass
class MlpModel:
    """Network parameters; weights[i] has shape (fan_out, fan_in)."""

    layer_dims: list[int]  # input, hidden..., 1
    activations: list[str]  # one per hidden layer
    dropout_rates: list[float]  # one per hidden layer
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    feature_schema_version: str = features.SCHEMA_VERSION

    @property
    def n_hidden(self) -> int:
        return len(self.layer_dims) - 2

    def copy_parameters(self) -> tuple[list[np.ndarray], list[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]


@dataclass
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 4096
    max_epochs: int = 453
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    patience: int | None = 50  # None disables early stopping
    seed: int = 0

    def validate(self) -> None:
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_auc: list[float] = field(default_factory=list)
    selected_epoch: int = 0  # 1-based

    def __len__(self) -> int:
        return len(self.train_loss)


def init_model(
    layer_dims: list[int],
    activations: list[str] | str = "relu",
    dropout_rates: list[float] | float = 0.0,
    seed: int = 0,
    feature_schema_version: str = features.SCHEMA_VERSION,
) -> MlpModel:
    """He-initialize relu layers, Glorot-initialize sigmoid/linear ones.

    The output layer is always sigmoid (Glorot); biases start at zero.
    """
    layer_dims = [int(d) for d in layer_dims]
    if any(d <= 0 for d in layer_dims):
        raise ValidationError(f"layer dims must be positive, got {layer_dims}")
    if layer_dims[-1] != 1:
        raise ValidationError("output layer must have one unit")
    n_hidden = len(layer_dims) - 2
    if isinstance(activations, str):
        activations = [activations] * n_hidden
    if isinstance(dropout_rates, (int, float)):
        dropout_rates = [float(dropout_rates)] * n_hidden
    if len(activations) != n_hidden or len(dropout_rates) != n_hidden:
        raise ValidationError("need one activation and one dropout rate per hidden layer")
    for act in activations:
        if act not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {act!r}")
    for rate in dropout_rates:
        if not 0.0 <= rate <= 0.5:
            raise ValidationError(f"dropout rate {rate} outside [0, 0.5]")

    rng = np.random.default_rng(seed)
    weights, biases = [], []
    layer_acts = list(activations) + ["sigmoid"]  # output layer
    for i, act in enumerate(layer_acts):
        fan_in, fan_out = layer_dims[i], layer_dims[i + 1]
        if act == "relu":
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpModel(
        layer_dims=layer_dims,
        activations=list(activations),
        dropout_rates=[float(r) for r in dropout_rates],
        weights=weights,
        biases=biases,
        feature_schema_version=feature_schema_version,
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "sigmoid":
        return _sigmoid(z)
    return z  # linear


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(np.float64)
    if kind == "sigmoid":
        return a * (1.0 - a)
    return np.ones_like(z)


@dataclass
class ForwardCache:
    inputs: list[np.ndarray]  # layer inputs a_{l-1}
    zs: list[np.ndarray]
    pre_mask: list[np.ndarray | None]  # hidden activations before dropout
    masks: list[np.ndarray | None]  # inverted-dropout masks (scale included)
    probs: np.ndarray


def forward(
    model: MlpModel,
    X: np.ndarray,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Run the network; returns probabilities in (0, 1) and the layer cache.

    In train mode each hidden activation is zeroed with its dropout
    probability and survivors are scaled by 1/(1-r) (inverted dropout), so
    inference applies no compensation. Rate-0 layers skip masking entirely
    and consume no randomness.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.layer_dims[0]:
        raise ValidationError(
            f"feature length {X.shape[1]} does not match input dim {model.layer_dims[0]}"
        )
    if train_mode and rng is None and any(r > 0 for r in model.dropout_rates):
        raise ValidationError("train-mode forward with dropout needs an rng")

    a = X
    inputs, zs, pre_mask, masks = [], [], [], []
    for i in range(model.n_hidden):
        inputs.append(a)
        z = a @ model.weights[i].T + model.biases[i]
        h = _activate(z, model.activations[i])
        zs.append(z)
        pre_mask.append(h)
        rate = model.dropout_rates[i]
        if train_mode and rate > 0.0:
            mask = (rng.random(h.shape) >= rate) / (1.0 - rate)
            h = h * mask
            masks.append(mask)
        else:
            masks.append(None)
        a = h
    inputs.append(a)
    z_out = a @ model.weights[-1].T + model.biases[-1]
    probs = _sigmoid(z_out)[:, 0]
    cache = ForwardCache(inputs=inputs, zs=zs, pre_mask=pre_mask, masks=masks, probs=probs)
    return probs, cache


def bce_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean binary cross-entropy with probabilities clamped to [eps, 1-eps]."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if probs.shape != labels.shape:
        raise ValidationError("probabilities and labels must have the same length")
    p = np.clip(probs, BCE_EPS, 1.0 - BCE_EPS)
    return float(-np.mean(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p)))


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def backward(model: MlpModel, cache: ForwardCache, labels: np.ndarray) -> Gradients:
    """Analytic gradients of mean BCE w.r.t. every weight and bias.

    Uses the exact dropout masks recorded by the train-mode forward pass.
    """
    labels = np.asarray(labels, dtype=np.float64)
    n = labels.shape[0]
    if cache.probs.shape[0] != n:
        raise ValidationError("cache batch size does not match labels")

    # d(mean BCE)/dz_out for a sigmoid output collapses to (p - y)/n.
    delta = ((cache.probs - labels) / n)[:, None]
    d_weights: list[np.ndarray] = [None] * len(model.weights)
    d_biases: list[np.ndarray] = [None] * len(model.biases)

    for layer in range(len(model.weights) - 1, -1, -1):
        a_in = cache.inputs[layer]
        d_weights[layer] = delta.T @ a_in
        d_biases[layer] = delta.sum(axis=0)
        if layer == 0:
            break
        d_hidden = delta @ model.weights[layer]
        hidden = layer - 1
        if cache.masks[hidden] is not None:
            d_hidden = d_hidden * cache.masks[hidden]
        grad = _activation_grad(cache.zs[hidden], cache.pre_mask[hidden], model.activations[hidden])
        delta = d_hidden * grad
    return Gradients(weights=d_weights, biases=d_biases)


@dataclass
class AdamState:
    t: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]

    @classmethod
    def zeros(cls, model: MlpModel) -> "AdamState":
        return cls(
            t=0,
            m_w=[np.zeros_like(w) for w in model.weights],
            v_w=[np.zeros_like(w) for w in model.weights],
            m_b=[np.zeros_like(b) for b in model.biases],
            v_b=[np.zeros_like(b) for b in model.biases],
        )


def adam_step(
    model: MlpModel,
    state: AdamState,
    grads: Gradients,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> tuple[MlpModel, AdamState]:
    """One Adam update, in place, with bias-corrected moment estimates."""
    state.t += 1
    correction1 = 1.0 - beta1 ** state.t
    correction2 = 1.0 - beta2 ** state.t

    def update(param, g, m, v):
        if g.shape != param.shape:
            raise ValidationError("gradient shape does not match parameter shape")
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        param -= learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)

    for i in range(len(model.weights)):
        update(model.weights[i], grads.weights[i], state.m_w[i], state.v_w[i])
        update(model.biases[i], grads.biases[i], state.m_b[i], state.v_b[i])
    return model, state


def fit_arrays(
    model: MlpModel,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_val: np.ndarray,
    y_val: np.ndarray,
    config: TrainConfig,
) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch training loop over pre-standardized arrays.

    Returns the parameter snapshot from the epoch with the best validation
    AUCROC (ties keep the earliest epoch). Early stopping halts after
    `patience` epochs without improvement.
    """
    config.validate()
    if X_train.shape[0] == 0:
        raise ValidationError("training set is empty")
    if X_val.shape[0] == 0:
        raise ValidationError("validation set is empty")
    y_train = np.asarray(y_train, dtype=np.float64)
    y_val_bool = np.asarray(y_val, dtype=bool)

    rng = np.random.default_rng(config.seed)
    state = AdamState.zeros(model)
    history = TrainHistory()
    best_auc = -np.inf
    best_epoch = 0
    best_params = model.copy_parameters()
    n = X_train.shape[0]

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            probs, cache = forward(model, X_train[idx], train_mode=True, rng=rng)
            total_loss += bce_loss(probs, y_train[idx]) * idx.size
            grads = backward(model, cache, y_train[idx])
            adam_step(model, state, grads, config.learning_rate,
                      config.adam_beta1, config.adam_beta2, config.adam_epsilon)
        val_probs, _ = forward(model, X_val)
        val_auc = metrics.auc_roc(metrics.ScoredSet(val_probs, y_val_bool))
        history.train_loss.append(total_loss / n)
        history.val_loss.append(bce_loss(val_probs, y_val_bool.astype(np.float64)))
        history.val_auc.append(val_auc)
        if val_auc > best_auc:
            best_auc = val_auc
            best_epoch = epoch
            best_params = model.copy_parameters()
        elif config.patience is not None and epoch - best_epoch >= config.patience:
            break

    model.weights, model.biases = best_params
    history.selected_epoch = best_epoch
    return model, history


def train(model: MlpModel, split: DatasetSplit, config: TrainConfig) -> tuple[MlpModel, TrainHistory]:
    """Train on a standardized, class-balanced DatasetSplit."""
    X_train, y_train = sample_matrix(split.train)
    X_val, y_val = sample_matrix(split.validation)
    return fit_arrays(model, X_train, y_train, X_val, y_val, config)


def predict(model: MlpModel, scaler: FeatureScaler, X_raw: np.ndarray) -> np.ndarray:
    """Standardize raw features with the training scaler, then score them."""
    if model.feature_schema_version != features.SCHEMA_VERSION:
        raise ValidationError(
            f"model feature schema {model.feature_schema_version!r} does not match "
            f"runtime schema {features.SCHEMA_VERSION!r}"
        )
    X_raw = np.asarray(X_raw, dtype=np.float64)
    squeeze = X_raw.ndim == 1
    probs, _ = forward(model, scaler.transform(X_raw))
    return probs[0] if squeeze else probs


# --- model file serialization ---

MODEL_FORMAT_VERSION = "telemon-model-1"


def save_model(path: str | Path, model: MlpModel, scaler: FeatureScaler) -> None:
    """Write the model bundle (net + scaler) as self-describing JSON text.

    json round-trips doubles exactly via repr, so save -> load -> predict
    matches predict before save bit for bit.
    """
    doc = {
        "format": MODEL_FORMAT_VERSION,
        "feature_schema_version": model.feature_schema_version,
        "feature_names": list(features.FEATURE_NAMES),
        "layer_dims": model.layer_dims,
        "activations": model.activations,
        "dropout_rates": model.dropout_rates,
        "scaler": {
            "means": [float(v) for v in scaler.means],
            "stds": [float(v) for v in scaler.stds],
        },
        "layers": [
            {"weights": w.tolist(), "biases": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path: str | Path) -> tuple[MlpModel, FeatureScaler]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT_VERSION:
        raise ValidationError(f"unsupported model format {doc.get('format')!r}")
    model = MlpModel(
        layer_dims=[int(d) for d in doc["layer_dims"]],
        activations=list(doc["activations"]),
        dropout_rates=[float(r) for r in doc["dropout_rates"]],
        weights=[np.asarray(layer["weights"], dtype=np.float64) for layer in doc["layers"]],
        biases=[np.asarray(layer["biases"], dtype=np.float64) for layer in doc["layers"]],
        feature_schema_version=doc["feature_schema_version"],
    )
    scaler = FeatureScaler(
        means=np.asarray(doc["scaler"]["means"], dtype=np.float64),
        stds=np.asarray(doc["scaler"]["stds"], dtype=np.float64),
    )
    for i, w in enumerate(model.weights):
        expected = (model.layer_dims[i + 1], model.layer_dims[i])
        if w.shape != expected:
            raise ValidationError(f"layer {i} weights have shape {w.shape}, expected {expected}")
    return model, scaler


# --- hyperparameter search ---

@dataclass
class SearchSpace:
    """The tested grid: layer count, width, activation and dropout ranges."""

    min_layers: int = 2
    max_layers: int = 5
    min_neurons: int = 5
    max_neurons: int = 150
    activations: tuple[str, ...] = ("linear", "sigmoid", "relu")
    dropout_range: tuple[float, float] = (0.0, 0.5)
    budget: int = 10
    seed: int = 0


@dataclass
class SearchTrial:
    hidden_dims: list[int]
    activation: str
    dropout_rates: list[float]
    val_auc: float
    selected_epoch: int


def random_search(
    space: SearchSpace,
    split: DatasetSplit,
    base_config: TrainConfig,
    input_dim: int | None = None,
) -> tuple[MlpModel, TrainHistory, list[SearchTrial]]:
    """Train `budget` uniformly sampled configurations, ranked by val AUCROC.

    Returns the best trained model, its history, and the full leaderboard
    sorted best first.
    """
    if space.budget < 1:
        raise ValidationError("search budget must be >= 1")
    if input_dim is None:
        input_dim = features.N_FEATURES
    rng = np.random.default_rng(space.seed)
    leaderboard: list[SearchTrial] = []
    best: tuple[MlpModel, TrainHistory] | None = None
    best_auc = -np.inf

    for trial_idx in range(space.budget):
        n_layers = int(rng.integers(space.min_layers, space.max_layers + 1))
        dims = [int(rng.integers(space.min_neurons, space.max_neurons + 1)) for _ in range(n_layers)]
        activation = str(rng.choice(list(space.activations)))
        dropout = [float(rng.uniform(*space.dropout_range)) for _ in range(n_layers)]
        trial_seed = int(rng.integers(0, 2**31 - 1))

        model = init_model([input_dim, *dims, 1], activation, dropout, seed=trial_seed)
        config = replace(base_config, seed=trial_seed)
        model, history = train(model, split, config)
        auc = history.val_auc[history.selected_epoch - 1]
        leaderboard.append(SearchTrial(
            hidden_dims=dims,
            activation=activation,
            dropout_rates=dropout,
            val_auc=auc,
            selected_epoch=history.selected_epoch,
        ))
        if auc > best_auc:
            best_auc = auc
            best = (model, history)

    leaderboard.sort(key=lambda t: -t.val_auc)
    assert best is not None
    return best[0], best[1], leaderboard
