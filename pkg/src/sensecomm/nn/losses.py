"""Categorical cross-entropy over class probabilities."""

from __future__ import annotations

import numpy as np

from ..errors import LabelError

LOG_CLAMP = 1e-12  # added inside the log so saturated softmax cannot give -inf


def one_hot(labels: np.ndarray, num_classes: int = 2, dtype=np.float64) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= num_classes:
        raise LabelError(f"labels outside [0, {num_classes})")
    out = np.zeros((labels.shape[0], num_classes), dtype=dtype)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _check_onehot(onehot: np.ndarray):
    if onehot.ndim != 2 or not np.all((onehot == 0) | (onehot == 1)) \
            or not np.all(onehot.sum(axis=1) == 1):
        raise LabelError("one-hot rows must contain exactly one 1")


def cross_entropy(probs: np.ndarray, onehot: np.ndarray) -> float:
    """Mean of -sum(onehot * log(probs + eps)) over the batch.

    Accepts a single probability vector or a (N, K) batch.
    """
    probs, onehot = np.atleast_2d(probs), np.atleast_2d(onehot)
    _check_onehot(onehot)
    per_sample = -(onehot * np.log(probs + LOG_CLAMP)).sum(axis=1)
    return float(per_sample.mean())


def cross_entropy_logit_grad(probs: np.ndarray, onehot: np.ndarray) -> np.ndarray:
    """Gradient of the batch-mean loss w.r.t. pre-softmax logits: (p - y)/N."""
    probs, onehot = np.atleast_2d(probs), np.atleast_2d(onehot)
    _check_onehot(onehot)
    return (probs - onehot) / probs.shape[0]
