"""Logistic-regression head on residual features.

Trained by plain gradient descent on binary cross-entropy from a zero
initialization, so training is fully deterministic for a fixed config.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_CLAMP = 1e-12


class DegenerateDataError(ValueError):
    """Training data contains only one class."""


class DivergenceError(ValueError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class LinearClassifier:
    weights: np.ndarray  # (dim,)
    bias: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise ValueError("classifier parameters must be finite")

    @property
    def dim(self):
        return self.weights.shape[0]

    @property
    def n_parameters(self):
        return self.dim + 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2_penalty: float = 1e-4
    batch_size: object = "full"  # positive int or "full"
    seed: int = 0
    early_stop_patience: int = 20  # on validation BCE; None disables

    def validate(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.l2_penalty < 0:
            raise ValueError("l2_penalty must be nonnegative")
        if self.batch_size != "full" and (
            not isinstance(self.batch_size, int) or self.batch_size < 1
        ):
            raise ValueError("batch_size must be a positive int or 'full'")
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1 or None")


def sigmoid(t):
    """Numerically stable logistic function; never overflows."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _check_xy(clf, features, labels):
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if features.ndim != 2:
        raise ValueError(f"features must be 2-D, got shape {features.shape}")
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels disagree on sample count")
    if features.shape[0] < 1:
        raise ValueError("need at least one sample")
    if clf is not None and features.shape[1] != clf.dim:
        raise ValueError(
            f"feature dim {features.shape[1]} does not match classifier dim {clf.dim}"
        )
    if not np.all(np.isin(labels, (0, 1))):
        raise ValueError("labels must be 0 or 1")
    return features, labels.astype(np.float64)


def predict(clf: LinearClassifier, z: np.ndarray) -> float:
    """Spoof probability sigma(w . z + b) for one residual vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (clf.dim,):
        raise ValueError(f"vector shape {z.shape} does not match classifier dim {clf.dim}")
    return float(sigmoid(np.array([clf.weights @ z + clf.bias]))[0])


def predict_batch(clf: LinearClassifier, features: np.ndarray) -> np.ndarray:
    features, _ = _check_xy(clf, features, np.zeros(np.asarray(features).shape[0]))
    return sigmoid(features @ clf.weights + clf.bias)


def bce_loss(clf, features, labels, l2_penalty: float = 0.0) -> float:
    """Mean binary cross-entropy plus optional ridge term on the weights."""
    features, y = _check_xy(clf, features, labels)
    p = np.clip(sigmoid(features @ clf.weights + clf.bias),
                PROB_CLAMP, 1.0 - PROB_CLAMP)
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    if l2_penalty:
        loss += l2_penalty * float(clf.weights @ clf.weights) / 2.0
    return float(loss)


def bce_gradient(clf, features, labels, l2_penalty: float = 0.0):
    """Analytic gradient of bce_loss: ((1/N) X^T (p - y) + l2 w, mean(p - y))."""
    features, y = _check_xy(clf, features, labels)
    p = sigmoid(features @ clf.weights + clf.bias)
    residual = p - y
    grad_w = features.T @ residual / features.shape[0]
    if l2_penalty:
        grad_w = grad_w + l2_penalty * clf.weights
    return grad_w, float(np.mean(residual))


def train(features, labels, cfg: TrainConfig = TrainConfig(), validation=None):
    """Gradient-descent training from zero parameters.

    Returns (classifier, trace) where trace is a dict with per-epoch
    'train_loss' and, when validation data is given, 'val_loss'. With a
    validation set, stops after `early_stop_patience` epochs without
    improvement and returns the parameters from the best epoch.
    """
    cfg.validate()
    features, y = _check_xy(None, features, labels)
    if len(np.unique(y)) < 2:
        raise DegenerateDataError("training data must contain both classes")
    val = None
    if validation is not None:
        val = _check_xy(None, validation[0], validation[1])
        if val[0].shape[1] != features.shape[1]:
            raise ValueError("validation feature dim does not match training dim")

    n, dim = features.shape
    w = np.zeros(dim)
    b = 0.0
    rng = np.random.default_rng(cfg.seed)
    batch = n if cfg.batch_size == "full" else min(cfg.batch_size, n)

    train_losses, val_losses = [], []
    best = (np.inf, w.copy(), b)
    stale = 0
    for epoch in range(cfg.epochs):
        if batch == n:
            order = np.arange(n)
        else:
            order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start : start + batch]
            clf = LinearClassifier(w, b)
            grad_w, grad_b = bce_gradient(clf, features[idx], y[idx], cfg.l2_penalty)
            w = w - cfg.learning_rate * grad_w
            b = b - cfg.learning_rate * grad_b

        clf = LinearClassifier(w, b)
        loss = bce_loss(clf, features, y, cfg.l2_penalty)
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite training loss at epoch {epoch}")
        train_losses.append(loss)

        if val is not None:
            vloss = bce_loss(clf, val[0], val[1], cfg.l2_penalty)
            val_losses.append(vloss)
            if vloss < best[0]:
                best = (vloss, w.copy(), b)
                stale = 0
            else:
                stale += 1
                if (cfg.early_stop_patience is not None
                        and stale >= cfg.early_stop_patience):
                    break

    if val is not None and np.isfinite(best[0]):
        w, b = best[1], best[2]
    trace = {"train_loss": np.array(train_losses)}
    if val is not None:
        trace["val_loss"] = np.array(val_losses)
    return LinearClassifier(w, b), trace
