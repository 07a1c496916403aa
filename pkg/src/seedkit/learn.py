"""Binary logistic regression over sparse bag-of-words vectors.

The trainer minimizes mean logistic loss plus an L2 penalty on the
weights (intercept unregularized) by deterministic full-batch gradient
descent with Armijo backtracking line search. Full-batch optimization was
chosen so a model is an exact function of its training set: no shuffle
order, no minibatch noise. TrainConfig.rng_seed exists for interface
completeness and is unused by this optimizer.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateSeedError, NumericalError, ValidationError
from .textpipe import SparseVector, Vocabulary

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class TrainConfig:
    l2_lambda: float = 1e-4
    max_epochs: int = 200
    tolerance: float = 1e-7
    fit_intercept: bool = True
    rng_seed: int = 0

    def __post_init__(self):
        if self.l2_lambda < 0:
            raise ValidationError("l2_lambda must be >= 0")
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")
        if self.tolerance < 0:
            raise ValidationError("tolerance must be >= 0")


@dataclass(frozen=True)
class TrainMeta:
    epochs_run: int
    final_loss: float
    n_examples: int
    n_positive: int


@dataclass(frozen=True)
class Model:
    weights: np.ndarray
    intercept: float
    train_meta: TrainMeta

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.intercept):
            raise ValidationError("model parameters must be finite")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Overflow-safe logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_grad(
    w: np.ndarray,
    b: float,
    x: sp.csr_matrix,
    y: np.ndarray,
    l2_lambda: float,
    fit_intercept: bool = True,
) -> tuple[float, np.ndarray, float]:
    """Regularized mean logistic loss with its analytic gradient.

    Returns (loss, grad_w, grad_b). The loss term uses logaddexp so large
    margins never overflow.
    """
    n = x.shape[0]
    z = np.asarray(x @ w).ravel() + b
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * l2_lambda * float(w @ w)
    residual = sigmoid(z) - y
    grad_w = np.asarray(x.T @ residual).ravel() / n + l2_lambda * w
    grad_b = float(residual.mean()) if fit_intercept else 0.0
    return loss, grad_w, grad_b


def examples_to_matrix(
    examples: Sequence[tuple[SparseVector, int]], n_features: int | None = None
) -> tuple[sp.csr_matrix, np.ndarray]:
    if not examples:
        raise ValidationError("no training examples")
    if n_features is None:
        n_features = 1 + max(
            (col for vec, _ in examples for col, _ in vec.entries), default=0
        )
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    labels = []
    for vec, label in examples:
        for col, weight in vec.entries:
            if col >= n_features:
                raise ValidationError(f"column {col} outside feature space {n_features}")
            indices.append(col)
            data.append(weight)
        indptr.append(len(indices))
        labels.append(label)
    x = sp.csr_matrix(
        (np.asarray(data), np.asarray(indices, dtype=np.int32), np.asarray(indptr, dtype=np.int64)),
        shape=(len(examples), n_features),
    )
    return x, np.asarray(labels, dtype=float)


def train_matrix(x: sp.csr_matrix, y: np.ndarray, cfg: TrainConfig) -> Model:
    """Fit on a prebuilt (n_examples, n_features) CSR matrix and 0/1 labels."""
    n = x.shape[0]
    if n < 2:
        raise ValidationError("training needs at least 2 examples")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise DegenerateSeedError("positive")
    if n_pos == n:
        raise DegenerateSeedError("negative")

    w = np.zeros(x.shape[1])
    b = 0.0
    loss, grad_w, grad_b = loss_and_grad(w, b, x, y, cfg.l2_lambda, cfg.fit_intercept)
    if not np.isfinite(loss):
        raise NumericalError("non-finite initial loss")

    step = 1.0
    epochs = 0
    for _ in range(cfg.max_epochs):
        grad_sq = float(grad_w @ grad_w) + grad_b * grad_b
        if grad_sq == 0.0:
            break
        step = min(step * 2.0, 1e6)  # warm-started backtracking
        accepted = False
        for _ in range(_MAX_BACKTRACKS):
            w_new = w - step * grad_w
            b_new = b - step * grad_b if cfg.fit_intercept else b
            new_loss, new_grad_w, new_grad_b = loss_and_grad(
                w_new, b_new, x, y, cfg.l2_lambda, cfg.fit_intercept
            )
            if np.isfinite(new_loss) and new_loss <= loss - _ARMIJO_C * step * grad_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        assert new_loss <= loss, "loss increased on an accepted step"
        epochs += 1
        improvement = (loss - new_loss) / max(abs(loss), np.finfo(float).tiny)
        w, b, grad_w, grad_b = w_new, b_new, new_grad_w, new_grad_b
        loss = new_loss
        if improvement <= cfg.tolerance:
            break
    if not np.isfinite(loss):
        raise NumericalError("non-finite loss during training")

    meta = TrainMeta(epochs_run=epochs, final_loss=loss, n_examples=n, n_positive=n_pos)
    return Model(weights=w, intercept=b if cfg.fit_intercept else 0.0, train_meta=meta)


def train(
    examples: Sequence[tuple[SparseVector, int]],
    cfg: TrainConfig,
    n_features: int | None = None,
) -> Model:
    """Fit from (vector, label) pairs; labels are 1 (positive) or 0."""
    x, y = examples_to_matrix(examples, n_features)
    return train_matrix(x, y, cfg)


def score(model: Model, vec: SparseVector) -> float:
    """Probability of the positive class for one document."""
    z = model.intercept
    w = model.weights
    for col, weight in vec.entries:
        if col >= w.shape[0]:
            raise ValidationError(f"column {col} outside vocabulary of {w.shape[0]}")
        z += w[col] * weight
    return float(sigmoid(np.asarray([z]))[0])


def score_matrix(model: Model, x: sp.csr_matrix) -> np.ndarray:
    """Probabilities for a batch of documents (rows of x)."""
    if x.shape[1] != model.weights.shape[0]:
        raise ValidationError(
            f"matrix has {x.shape[1]} columns, model expects {model.weights.shape[0]}"
        )
    z = np.asarray(x @ model.weights).ravel() + model.intercept
    return sigmoid(z)


def dump_model(model: Model, vocab: Vocabulary) -> str:
    """Portable JSON model dump tied to the vocabulary by hash."""
    payload = {
        "format": "seedkit-model-v1",
        "vocab_sha256": vocab.sha256(),
        "n_features": int(model.weights.shape[0]),
        "weights_b64": base64.b64encode(
            np.ascontiguousarray(model.weights, dtype="<f8").tobytes()
        ).decode("ascii"),
        "intercept": model.intercept,
        "train_meta": {
            "epochs_run": model.train_meta.epochs_run,
            "final_loss": model.train_meta.final_loss,
            "n_examples": model.train_meta.n_examples,
            "n_positive": model.train_meta.n_positive,
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def load_model(text: str, vocab: Vocabulary) -> Model:
    """Parse a model dump, verifying it was trained against this vocabulary."""
    payload = json.loads(text)
    if payload.get("format") != "seedkit-model-v1":
        raise ValidationError("unrecognized model format")
    if payload["vocab_sha256"] != vocab.sha256():
        raise ValidationError("model vocabulary hash does not match")
    weights = np.frombuffer(
        base64.b64decode(payload["weights_b64"]), dtype="<f8"
    ).astype(float)
    if weights.shape[0] != payload["n_features"]:
        raise ValidationError("weight payload length mismatch")
    meta = TrainMeta(**payload["train_meta"])
    return Model(weights=weights, intercept=float(payload["intercept"]), train_meta=meta)
