"""Small dense classifiers trained with plain SGD.

The victim, surrogate, and defense sub-models are all instances of
:class:`NeuralClassifier`: a stack of affine layers with tanh (default) or
rectifier hidden activations and a linear output head read through a
softmax. Training is hand-written mini-batch SGD with momentum so that
every update is reproducible from the seed and checkable against finite
differences.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.exceptions import NotFittedError

from .exceptions import (
    ArchitectureError,
    ConfigError,
    DimensionMismatchError,
    InvalidInputError,
    TrainingDivergedError,
)
from .numerics import softmax_rows
from .rng import SeededRng, derive_seed
from .validation import as_labels, as_matrix, as_vector

_ACTIVATIONS = ("tanh", "relu")


def _act(z, activation):
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(z, activation):
    if activation == "tanh":
        t = np.tanh(z)
        return 1.0 - t * t
    return (z > 0.0).astype(np.float64)


def one_hot(labels, n_classes: int) -> np.ndarray:
    """Dense one-hot encoding of an integer label vector."""
    y = as_labels(labels, "labels", n_classes=n_classes)
    out = np.zeros((y.shape[0], n_classes), dtype=np.float64)
    out[np.arange(y.shape[0]), y] = 1.0
    return out


class NeuralClassifier(BaseEstimator):
    """Dense multi-layer classifier with deterministic SGD training.

    Parameters
    ----------
    hidden_layers : tuple of int
        Widths of the hidden layers. May be empty (linear model), but
        penultimate-feature extraction then is unavailable.
    activation : {"tanh", "relu"}
        Hidden-layer activation. The output layer is always linear.
    epochs : int
        Number of passes over the training data. Must be >= 1.
    batch_size : int
        Mini-batch size; the trailing partial batch is used as-is.
    learning_rate, momentum, weight_decay : float
        SGD step size, classical momentum coefficient, and L2 penalty on
        the weight matrices (biases are not decayed).
    n_classes : int or None
        Fixed class count. When None it is inferred from the targets,
        which is unsafe if some class is absent from the training labels.
    seed : int
        Seed for weight initialization and batch shuffling.

    Attributes
    ----------
    weights_ : list of ndarray, shape (fan_out, fan_in) per layer
    biases_ : list of ndarray, shape (fan_out,) per layer
    loss_curve_ : list of float, mean training cross-entropy per epoch
    """

    def __init__(
        self,
        hidden_layers=(64, 64),
        activation="tanh",
        epochs=30,
        batch_size=32,
        learning_rate=0.05,
        momentum=0.9,
        weight_decay=1e-4,
        n_classes=None,
        seed=0,
    ):
        self.hidden_layers = hidden_layers
        self.activation = activation
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.n_classes = n_classes
        self.seed = seed

    # ------------------------------------------------------------------
    # construction helpers

    def _validate_hyperparams(self):
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if int(self.epochs) < 1:
            raise InvalidInputError("epochs must be >= 1")
        if int(self.batch_size) < 1:
            raise InvalidInputError("batch_size must be >= 1")
        if not (0 <= float(self.momentum) < 1):
            raise InvalidInputError("momentum must lie in [0, 1)")
        if float(self.learning_rate) <= 0:
            raise InvalidInputError("learning_rate must be positive")
        if float(self.weight_decay) < 0:
            raise InvalidInputError("weight_decay must be non-negative")
        for w in self.hidden_layers:
            if int(w) < 1:
                raise ArchitectureError("hidden layer widths must be >= 1")

    def _init_layers(self, rng, dims):
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            u = rng.uniform((fan_out, fan_in))
            weights.append(bound * (2.0 * u - 1.0))
            biases.append(np.zeros(fan_out, dtype=np.float64))
        return weights, biases

    def init_weights(self, n_features: int, n_classes: int) -> "NeuralClassifier":
        """Set seeded initial weights without training (an untrained model)."""
        self._validate_hyperparams()
        if n_features < 1 or n_classes < 2:
            raise InvalidInputError("need n_features >= 1 and n_classes >= 2")
        dims = [int(n_features), *[int(w) for w in self.hidden_layers], int(n_classes)]
        self.weights_, self.biases_ = self._init_layers(SeededRng(self.seed), dims)
        self.layer_dims_ = dims
        self.n_features_in_ = dims[0]
        self.n_classes_ = dims[-1]
        self.classes_ = np.arange(dims[-1])
        self.loss_curve_ = []
        return self

    @classmethod
    def from_layers(cls, weights, biases, activation="tanh", **params):
        """Assemble a ready-to-use model from explicit layer arrays."""
        if len(weights) != len(biases) or not weights:
            raise ArchitectureError("need one bias vector per weight matrix")
        dims = [np.asarray(weights[0]).shape[1]]
        for W, b in zip(weights, biases):
            W = np.asarray(W, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
                raise ArchitectureError("inconsistent layer shapes")
            if W.shape[1] != dims[-1]:
                raise ArchitectureError("layer input width does not match previous output")
            dims.append(W.shape[0])
        model = cls(
            hidden_layers=tuple(dims[1:-1]),
            activation=activation,
            n_classes=dims[-1],
            **params,
        )
        model.weights_ = [np.array(W, dtype=np.float64) for W in weights]
        model.biases_ = [np.array(b, dtype=np.float64) for b in biases]
        model.layer_dims_ = dims
        model.n_features_in_ = dims[0]
        model.n_classes_ = dims[-1]
        model.classes_ = np.arange(dims[-1])
        model.loss_curve_ = []
        return model

    # ------------------------------------------------------------------
    # training

    def _resolve_targets(self, X, y):
        y_arr = np.asarray(y)
        if y_arr.ndim == 2:
            T = as_matrix(y_arr, "targets")
            if T.shape[0] != X.shape[0]:
                raise DimensionMismatchError("X and targets disagree on row count")
            if np.any(T < 0) or np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-6):
                raise InvalidInputError("soft targets must be probability rows")
            n_classes = self.n_classes if self.n_classes is not None else T.shape[1]
            if T.shape[1] != n_classes:
                raise DimensionMismatchError(
                    f"targets have {T.shape[1]} columns, expected {n_classes}"
                )
            return T, int(n_classes)
        labels = as_labels(y_arr, "y")
        if labels.shape[0] != X.shape[0]:
            raise DimensionMismatchError("X and y disagree on row count")
        n_classes = self.n_classes if self.n_classes is not None else int(labels.max()) + 1
        if n_classes < 2:
            raise InvalidInputError("need at least 2 classes")
        return one_hot(labels, int(n_classes)), int(n_classes)

    def fit(self, X, y):
        """Train on hard labels (1-d ints) or soft targets (2-d rows summing to 1).

        Cross-entropy against the target distribution in both cases; a
        one-hot target makes the two coincide.
        """
        X = as_matrix(X, "X")
        T, n_classes = self._resolve_targets(X, y)
        self._validate_hyperparams()

        rng = SeededRng(self.seed)
        dims = [X.shape[1], *[int(w) for w in self.hidden_layers], n_classes]
        weights, biases = self._init_layers(rng, dims)
        velocity_w = [np.zeros_like(W) for W in weights]
        velocity_b = [np.zeros_like(b) for b in biases]

        n = X.shape[0]
        batch = int(self.batch_size)
        lr = float(self.learning_rate)
        mu = float(self.momentum)
        wd = float(self.weight_decay)
        loss_curve = []

        for epoch in range(int(self.epochs)):
            order = rng.permutation(n)
            total_loss = 0.0
            for start in range(0, n, batch):
                idx = order[start : start + batch]
                xb, tb = X[idx], T[idx]
                zs, acts = self._forward_cached(xb, weights, biases)
                logits = zs[-1]
                shifted = logits - logits.max(axis=1, keepdims=True)
                log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
                log_p = shifted - log_norm
                total_loss += float(-(tb * log_p).sum())

                g = (np.exp(log_p) - tb) / idx.shape[0]
                for layer in range(len(weights) - 1, -1, -1):
                    grad_w = g.T @ acts[layer] + wd * weights[layer]
                    grad_b = g.sum(axis=0)
                    if layer > 0:
                        g = (g @ weights[layer]) * _act_grad(zs[layer - 1], self.activation)
                    velocity_w[layer] = mu * velocity_w[layer] - lr * grad_w
                    velocity_b[layer] = mu * velocity_b[layer] - lr * grad_b
                    weights[layer] += velocity_w[layer]
                    biases[layer] += velocity_b[layer]

            epoch_loss = total_loss / n
            if not np.isfinite(epoch_loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}", epoch=epoch
                )
            loss_curve.append(epoch_loss)

        self.weights_ = weights
        self.biases_ = biases
        self.layer_dims_ = dims
        self.n_features_in_ = dims[0]
        self.n_classes_ = n_classes
        self.classes_ = np.arange(n_classes)
        self.loss_curve_ = loss_curve
        return self

    def _forward_cached(self, X, weights, biases):
        """Forward pass keeping pre-activations and activations for backprop."""
        zs, acts = [], [X]
        h = X
        for layer, (W, b) in enumerate(zip(weights, biases)):
            z = h @ W.T + b
            zs.append(z)
            if layer < len(weights) - 1:
                h = _act(z, self.activation)
                acts.append(h)
        return zs, acts

    def loss_and_gradients(self, X, y):
        """Cross-entropy loss and its exact gradients at the current weights.

        Returns ``(loss, grads_w, grads_b)`` where the gradients include the
        weight-decay term, matching one SGD step's direction. Used by the
        finite-difference check.
        """
        self._check_fitted()
        X = as_matrix(X, "X", cols=self.n_features_in_)
        T, _ = self._resolve_targets(X, y)
        zs, acts = self._forward_cached(X, self.weights_, self.biases_)
        logits = zs[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        log_p = shifted - log_norm
        wd = float(self.weight_decay)
        loss = float(-(T * log_p).sum() / X.shape[0]) + 0.5 * wd * sum(
            float((W * W).sum()) for W in self.weights_
        )
        g = (np.exp(log_p) - T) / X.shape[0]
        grads_w, grads_b = [None] * len(self.weights_), [None] * len(self.weights_)
        for layer in range(len(self.weights_) - 1, -1, -1):
            grads_w[layer] = g.T @ acts[layer] + wd * self.weights_[layer]
            grads_b[layer] = g.sum(axis=0)
            if layer > 0:
                g = (g @ self.weights_[layer]) * _act_grad(zs[layer - 1], self.activation)
        return loss, grads_w, grads_b

    # ------------------------------------------------------------------
    # inference

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError(
                "this NeuralClassifier has no weights; call fit or init_weights"
            )

    def decision_function(self, X) -> np.ndarray:
        """Raw logits for a batch of rows."""
        self._check_fitted()
        X = as_matrix(X, "X", cols=self.n_features_in_)
        h = X
        for layer, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            z = h @ W.T + b
            h = _act(z, self.activation) if layer < len(self.weights_) - 1 else z
        return h

    def predict_proba(self, X) -> np.ndarray:
        return softmax_rows(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        """Top-1 labels; ties resolve to the lowest class index."""
        return np.argmax(self.decision_function(X), axis=1)

    def score(self, X, y) -> float:
        labels = as_labels(y, "y")
        return float(np.mean(self.predict(X) == labels))

    def hidden_features(self, X) -> np.ndarray:
        """Penultimate-layer activations for a batch of rows."""
        self._check_fitted()
        if len(self.weights_) < 2:
            raise ArchitectureError(
                "penultimate features require at least one hidden layer"
            )
        X = as_matrix(X, "X", cols=self.n_features_in_)
        h = X
        for W, b in zip(self.weights_[:-1], self.biases_[:-1]):
            h = _act(h @ W.T + b, self.activation)
        return h

    # Single-vector fast paths for the per-query serving loop. These skip
    # re-validation; callers pass trusted float64 vectors.

    def forward_one(self, x):
        """(logits, penultimate) for one input; penultimate is None for linear models."""
        h = x
        hidden = None
        for layer, (W, b) in enumerate(zip(self.weights_, self.biases_)):
            z = W @ h + b
            if layer < len(self.weights_) - 1:
                h = _act(z, self.activation)
                hidden = h
            else:
                return z, hidden
        return z, hidden

    def predict_one(self, x) -> int:
        x = as_vector(x, "x", dim=self.n_features_in_)
        logits, _ = self.forward_one(x)
        return int(np.argmax(logits))

    def proba_one(self, x) -> np.ndarray:
        x = as_vector(x, "x", dim=self.n_features_in_)
        logits, _ = self.forward_one(x)
        shifted = logits - logits.max()
        e = np.exp(shifted)
        return e / e.sum()

    def n_parameters(self) -> int:
        self._check_fitted()
        return sum(W.size + b.size for W, b in zip(self.weights_, self.biases_))


def accuracy(model, X, y) -> float:
    """Top-1 accuracy of a fitted model on labeled rows."""
    labels = as_labels(y, "y")
    return float(np.mean(model.predict(X) == labels))


def agreement(model_a, model_b, X) -> float:
    """Fraction of rows on which two models emit the same top-1 label."""
    X = as_matrix(X, "X")
    return float(np.mean(model_a.predict(X) == model_b.predict(X)))


def train_ensemble(X, y, n_models: int, fraction: float, template, seed: int):
    """Train ``n_models`` copies of ``template`` on seeded data subsamples.

    Each sub-model sees an independent uniform subsample (without
    replacement, indices sorted ascending so training order is preserved)
    of round(fraction * n) rows and trains with the template's own seed.
    With fraction = 1 every sub-model sees the full data and the models
    coincide with a direct fit of the template.
    """
    X = as_matrix(X, "X")
    n = X.shape[0]
    if n_models < 1:
        raise ConfigError("n_models must be >= 1")
    if not 0 < fraction <= 1:
        raise ConfigError("fraction must lie in (0, 1]")
    k = int(round(fraction * n))
    if k < 1:
        raise ConfigError("subsample is empty; increase fraction or data size")
    if k < int(template.batch_size):
        raise ConfigError(
            f"subsample of {k} rows is smaller than batch_size "
            f"{template.batch_size}"
        )
    y_arr = np.asarray(y)
    models = []
    for i in range(n_models):
        idx = SeededRng(derive_seed(seed, "subset", i)).subsample(n, k)
        member = clone(template)
        member.fit(X[idx], y_arr[idx])
        models.append(member)
    return models
