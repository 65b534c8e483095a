"""Multinomial logistic regression via full-batch gradient descent.

Kept deliberately simple: fixed epoch count, L2 penalty on weights only,
loss/gradient exposed as a function so it can be checked against finite
differences.
"""

from __future__ import annotations

import numpy as np


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy_loss_and_grad(weights, bias, X, y, l2):
    """Mean cross-entropy with L2 penalty on the weights (not the bias).

    Returns (loss, grad_weights, grad_bias); weights is (D, K), bias (K,).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = X.shape[0]
    probs = softmax(X @ weights + bias)
    eps = 1e-12
    loss = -np.log(probs[np.arange(n), y] + eps).mean() + 0.5 * l2 * float((weights**2).sum())
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    grad_w = X.T @ delta / n + l2 * weights
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


class LogisticModel:
    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return softmax(X @ self.weights + self.bias)

    def to_json_obj(self) -> dict:
        return {"weights": self.weights.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "LogisticModel":
        return cls(np.array(obj["weights"]), np.array(obj["bias"]))


def fit_logistic(
    X, y, n_classes: int, learning_rate: float = 0.1, l2: float = 0.01, epochs: int = 300
) -> LogisticModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    weights = np.zeros((X.shape[1], n_classes), dtype=np.float64)
    bias = np.zeros(n_classes, dtype=np.float64)
    for _ in range(epochs):
        _, gw, gb = cross_entropy_loss_and_grad(weights, bias, X, y, l2)
        weights -= learning_rate * gw
        bias -= learning_rate * gb
    return LogisticModel(weights, bias)
