"""Random forest: bootstrapped CART trees with per-split feature subsampling.

Per-tree seeds are derived from (seed, tree index), so fits are reproducible
regardless of scheduling; probabilities are the mean of member-tree
probabilities.
"""

from __future__ import annotations

import math

import numpy as np

from ..seeds import derive_seed
from .tree import DecisionTree, TreeNodes, fit_tree


class RandomForest:
    def __init__(self, trees: list[DecisionTree], n_classes: int):
        self.trees = trees
        self.n_classes = n_classes

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict_proba(X)
        return acc / len(self.trees)

    def leaf_assignments(self, X) -> np.ndarray:
        """(n_rows, n_trees) matrix of leaf ids, one column per tree."""
        X = np.asarray(X, dtype=np.float64)
        return np.stack([tree.apply(X) for tree in self.trees], axis=1)

    def to_json_obj(self) -> dict:
        return {"trees": [t.nodes.to_json_obj() for t in self.trees]}

    @classmethod
    def from_json_obj(cls, obj: dict, n_classes: int) -> "RandomForest":
        trees = [DecisionTree(TreeNodes.from_json_obj(t), n_classes) for t in obj["trees"]]
        return cls(trees, n_classes)


def fit_forest(
    X,
    y,
    n_classes: int,
    n_estimators: int = 100,
    min_samples_leaf: int = 1,
    max_depth: int = 0,
    bootstrap: bool = True,
    seed: int = 0,
) -> RandomForest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    mtry = math.ceil(math.sqrt(d))
    trees = []
    for t in range(n_estimators):
        rng = np.random.default_rng(derive_seed(seed, "tree", t))
        if bootstrap:
            rows = rng.integers(0, n, size=n)
        else:
            rows = np.arange(n)
        trees.append(
            fit_tree(
                X[rows],
                y[rows],
                n_classes,
                min_samples_leaf=min_samples_leaf,
                max_depth=max_depth,
                rng=rng,
                mtry=mtry,
            )
        )
    return RandomForest(trees, n_classes)
