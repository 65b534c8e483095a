"""k-nearest-neighbours classifier.

Instance-based by definition: the internals hold the training matrix
verbatim, which is exactly why the release layer refuses this kind.
"""

from __future__ import annotations

import numpy as np


class KnnModel:
    def __init__(self, matrix: np.ndarray, labels: np.ndarray, k: int, n_classes: int):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.k = k
        self.n_classes = n_classes

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        d2 = ((X[:, None, :] - self.matrix[None, :, :]) ** 2).sum(axis=2)
        # Ties on distance resolved by training-row order (stable argsort).
        nearest = np.argsort(d2, axis=1, kind="stable")[:, : self.k]
        out = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for i in range(X.shape[0]):
            out[i] = np.bincount(self.labels[nearest[i]], minlength=self.n_classes)
        return out / self.k

    def to_json_obj(self) -> dict:
        return {"matrix": self.matrix.tolist(), "labels": self.labels.tolist(), "k": self.k}

    @classmethod
    def from_json_obj(cls, obj: dict, n_classes: int) -> "KnnModel":
        return cls(np.array(obj["matrix"]), np.array(obj["labels"]), int(obj["k"]), n_classes)


def fit_knn(X, y, n_classes: int, k: int = 5) -> KnnModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds the number of training rows {X.shape[0]}")
    return KnnModel(X.copy(), y.copy(), k, n_classes)
