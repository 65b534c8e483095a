"""Differentially private support vector classifier.

The RBF kernel is approximated with dhat random Fourier features of
bandwidth gamma; a linear SVM is trained per class (one-vs-rest) by
full-batch subgradient descent on the hinge loss with regularisation C;
output perturbation then adds Laplace noise to the learned weight vectors,
scaled to the sensitivity of the regularised minimiser divided by eps.
Only projected weights are stored, never training rows.  delta is carried
for reporting but the Laplace mechanism uses eps alone.
"""

from __future__ import annotations

import math

import numpy as np

SVM_EPOCHS = 200


def random_features(X, projection, phases, dhat):
    """cos-feature map: sqrt(2/dhat) * cos(X @ projection.T + phases)."""
    X = np.asarray(X, dtype=np.float64)
    return math.sqrt(2.0 / dhat) * np.cos(X @ projection.T + phases)


def _train_linear_svm(phi, targets, C):
    """Full-batch subgradient descent on hinge loss, Pegasos-style steps
    with tail-iterate averaging (halves the suboptimality of the last
    iterate without extra passes).

    phi is (n, dhat+1) with a trailing bias column, targets in {-1, +1}.
    Deterministic: zero init, fixed epoch count.
    """
    n, d = phi.shape
    lam = 1.0 / C
    w = np.zeros(d, dtype=np.float64)
    avg = np.zeros(d, dtype=np.float64)
    tail = SVM_EPOCHS // 2
    for t in range(SVM_EPOCHS):
        margin = targets * (phi @ w)
        active = margin < 1.0
        grad = lam * w - (targets[active, None] * phi[active]).sum(axis=0) / n
        w -= grad / (lam * (t + 2))
        if t >= SVM_EPOCHS - tail:
            avg += w
    return avg / tail


def noise_free_weights(X, y, n_classes, projection, phases, dhat, C):
    """One-vs-rest weight matrix (n_classes, dhat+1) before perturbation."""
    phi = random_features(X, projection, phases, dhat)
    phi = np.hstack([phi, np.ones((phi.shape[0], 1))])
    weights = np.zeros((n_classes, dhat + 1), dtype=np.float64)
    for c in range(n_classes):
        targets = np.where(np.asarray(y) == c, 1.0, -1.0)
        weights[c] = _train_linear_svm(phi, targets, C)
    return weights


def laplace_weight_scale(n_train: int, dhat: int, C: float, eps: float) -> float:
    """Per-coordinate Laplace scale for the output perturbation.

    L2 sensitivity of the strongly convex minimiser is at most
    2*sqrt(2)*C/n (feature map has norm <= sqrt(2)); the L1 budget spreads
    over dhat+1 coordinates, hence the sqrt(dhat+1) factor.
    """
    return 2.0 * math.sqrt(2.0) * C * math.sqrt(dhat + 1) / (n_train * eps)


class DpSvcModel:
    def __init__(self, projection, phases, weights, gamma, n_classes):
        self.projection = np.asarray(projection, dtype=np.float64)
        self.phases = np.asarray(phases, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.gamma = float(gamma)
        self.n_classes = n_classes

    @property
    def dhat(self) -> int:
        return self.projection.shape[0]

    def decision_function(self, X) -> np.ndarray:
        phi = random_features(X, self.projection, self.phases, self.dhat)
        phi = np.hstack([phi, np.ones((phi.shape[0], 1))])
        return phi @ self.weights.T

    def predict_proba(self, X) -> np.ndarray:
        margins = self.decision_function(X)
        squashed = 1.0 / (1.0 + np.exp(-margins))
        return squashed / squashed.sum(axis=1, keepdims=True)

    def to_json_obj(self) -> dict:
        return {
            "projection": self.projection.tolist(),
            "phases": self.phases.tolist(),
            "weights": self.weights.tolist(),
            "gamma": self.gamma,
        }

    @classmethod
    def from_json_obj(cls, obj: dict, n_classes: int) -> "DpSvcModel":
        return cls(
            np.array(obj["projection"]),
            np.array(obj["phases"]),
            np.array(obj["weights"]),
            obj["gamma"],
            n_classes,
        )


def fit_dp_svc(
    X,
    y,
    n_classes: int,
    dhat: int = 1000,
    C: float = 1.0,
    eps: float = 10.0,
    delta: float = 0.0,
    gamma: float = 0.1,
    seed: int = 0,
) -> DpSvcModel:
    """All randomness (projection, phases, noise) flows from seed alone."""
    X = np.asarray(X, dtype=np.float64)
    rng = np.random.default_rng(seed)
    d = X.shape[1]
    projection = rng.normal(0.0, math.sqrt(2.0 * gamma), size=(dhat, d))
    phases = rng.uniform(0.0, 2.0 * math.pi, size=dhat)
    weights = noise_free_weights(X, y, n_classes, projection, phases, dhat, C)
    scale = laplace_weight_scale(X.shape[0], dhat, C, eps)
    weights = weights + rng.laplace(0.0, scale, size=weights.shape)
    return DpSvcModel(projection, phases, weights, gamma, n_classes)
