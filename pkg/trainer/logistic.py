"""
Multinomial logistic regression

The weight matrix W has shape K x (F+1): one row per class, the last column
is the bias (the input is augmented with a constant 1). Binary problems use
the same softmax path with K = 2.

Loss, gradient and accuracy accept anything exposing ``features`` (n x F
array) and ``labels`` (n integer array), i.e. a MiniBatch or a Dataset.
"""

from typing import Protocol

import numpy as np

from .exceptions import ModelInputError

PROB_FLOOR = 1e-12


class Labeled(Protocol):
    features: np.ndarray
    labels: np.ndarray


def init_weights(n_classes: int, n_features: int, rng: np.random.Generator,
                 scale: float = 0.05) -> np.ndarray:
    """Uniform initialization in [-scale, scale], bias column included"""
    return rng.uniform(-scale, scale, size=(n_classes, n_features + 1))


def _check_features(W: np.ndarray, X: np.ndarray):
    if X.shape[-1] != W.shape[1] - 1:
        raise ModelInputError(
            f"Feature length {X.shape[-1]} does not match weight matrix "
            f"expecting {W.shape[1] - 1}"
        )


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def scores(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-class scores dot(row_k, [x;1]) for a single vector or a matrix of rows"""
    X = np.asarray(X, dtype=float)
    _check_features(W, X)
    return X @ W[:, :-1].T + W[:, -1]


def predict_probs(W: np.ndarray, x) -> np.ndarray:
    """Class probability vector for one feature vector x"""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ModelInputError(f"Expected a feature vector, got shape {x.shape}")
    return _softmax(scores(W, x))


def predict_probs_batch(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Row-wise class probabilities for an n x F feature matrix"""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ModelInputError(f"Expected a feature matrix, got shape {X.shape}")
    return _softmax(scores(W, X))


def loss(W: np.ndarray, batch: Labeled) -> float:
    """Mean cross-entropy, probabilities clamped to [1e-12, 1 - 1e-12]"""
    labels = np.asarray(batch.labels)
    if len(labels) == 0:
        raise ModelInputError("Cannot compute loss on an empty batch")
    probs = predict_probs_batch(W, batch.features)
    true_probs = np.clip(probs[np.arange(len(labels)), labels], PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(-np.log(true_probs).mean())


def gradient(W: np.ndarray, batch: Labeled) -> np.ndarray:
    """
    Mini-batch average of (p - onehot(y)) outer [x;1]

    Returns a matrix with the shape of W.
    """
    X = np.asarray(batch.features, dtype=float)
    labels = np.asarray(batch.labels)
    if len(labels) == 0:
        raise ModelInputError("Cannot compute gradient on an empty batch")
    residual = predict_probs_batch(W, X)
    residual[np.arange(len(labels)), labels] -= 1.0
    augmented = np.hstack([X, np.ones((len(labels), 1))])
    return residual.T @ augmented / len(labels)


def predict(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties go to the lowest class index"""
    return np.argmax(scores(W, np.asarray(X, dtype=float)), axis=-1)


def accuracy(W: np.ndarray, examples: Labeled) -> float:
    """Fraction of examples whose argmax class equals the label"""
    labels = np.asarray(examples.labels)
    if len(labels) == 0:
        raise ModelInputError("Cannot compute accuracy of an empty example list")
    return float(np.mean(predict(W, examples.features) == labels))
