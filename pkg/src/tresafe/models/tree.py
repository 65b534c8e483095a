"""Binary CART classification tree with Gini impurity.

Thresholds are midpoints between consecutive distinct values; split-gain
ties are broken by the lowest column index, then the lowest threshold, so
fitting is fully deterministic.  Leaves store raw class counts, never rows.
"""

from __future__ import annotations

import numpy as np

LEAF = -1


class TreeNodes:
    """Flat node arrays; node 0 is the root, feature == LEAF marks leaves."""

    def __init__(self, feature, threshold, left, right, counts):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.counts = np.asarray(counts, dtype=np.int64)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def to_json_obj(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TreeNodes":
        return cls(obj["feature"], obj["threshold"], obj["left"], obj["right"], obj["counts"])


def _best_split(X, y, rows, n_classes, min_samples_leaf, candidate_features):
    """Return (score, feature, threshold) of the best legal split or None.

    Score is sum(c_left^2)/n_left + sum(c_right^2)/n_right, equivalent to
    minimising the weighted child Gini impurity.  All candidate features are
    scored in one vectorised pass; gain ties break to the lowest column
    index, then the lowest threshold.
    """
    n = len(rows)
    values = X[np.ix_(rows, candidate_features)]  # (n, F)
    order = np.argsort(values, axis=0, kind="mergesort")
    v = np.take_along_axis(values, order, axis=0)
    labels = y[rows][order]  # (n, F) labels in per-column sorted order
    boundary = v[:-1] != v[1:]  # (n-1, F) legal threshold positions
    n_left = np.arange(1, n)[:, None]
    legal = boundary & (n_left >= min_samples_leaf) & ((n - n_left) >= min_samples_leaf)
    if not legal.any():
        return None
    score = np.zeros((n - 1, len(candidate_features)), dtype=np.float64)
    total_sq = 0.0
    for c in range(n_classes):
        cum = np.cumsum(labels == c, axis=0, dtype=np.float64)
        cl = cum[:-1]
        cr = cum[-1] - cl
        score += cl * cl / n_left + cr * cr / (n - n_left)
    score[~legal] = -1.0
    # Column-major flatten: argmax ties resolve to the lowest feature index
    # first, then the lowest split position within that feature.
    flat = np.argmax(score.T)
    f_pos, b_pos = divmod(int(flat), n - 1)
    lo, hi = v[b_pos, f_pos], v[b_pos + 1, f_pos]
    thr = 0.5 * (lo + hi)
    if thr <= lo:  # adjacent floats: the midpoint rounds onto lo
        thr = hi
    return (float(score[b_pos, f_pos]), int(candidate_features[f_pos]), float(thr))


class DecisionTree:
    """Grown tree plus the hyperparameters that shaped it."""

    def __init__(self, nodes: TreeNodes, n_classes: int):
        self.nodes = nodes
        self.n_classes = n_classes

    def apply(self, X) -> np.ndarray:
        """Leaf index for every row."""
        X = np.asarray(X, dtype=np.float64)
        idx = np.zeros(X.shape[0], dtype=np.int64)
        nd = self.nodes
        active = nd.feature[idx] != LEAF
        while active.any():
            rows = np.nonzero(active)[0]
            cur = idx[rows]
            go_left = X[rows, nd.feature[cur]] < nd.threshold[cur]
            idx[rows] = np.where(go_left, nd.left[cur], nd.right[cur])
            active = nd.feature[idx] != LEAF
        return idx

    def predict_proba(self, X) -> np.ndarray:
        leaves = self.apply(X)
        counts = self.nodes.counts[leaves].astype(np.float64)
        return counts / counts.sum(axis=1, keepdims=True)

    def leaf_train_counts(self) -> np.ndarray:
        """Training-row count per leaf node (row count of its count vector)."""
        is_leaf = self.nodes.feature == LEAF
        return self.nodes.counts[is_leaf].sum(axis=1)

    def to_json_obj(self) -> dict:
        return self.nodes.to_json_obj()


def fit_tree(
    X,
    y,
    n_classes: int,
    min_samples_leaf: int = 1,
    max_depth: int = 0,
    rng: np.random.Generator | None = None,
    mtry: int = 0,
) -> DecisionTree:
    """Grow a tree; max_depth 0 means unlimited, mtry 0 means all features.

    When mtry > 0, each split considers a random subset of mtry features
    drawn from rng (random-forest style).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[rows], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(n))
    # Depth-first, left child first; explicit stack so memorising trees on
    # large data cannot hit the interpreter recursion limit.
    stack = [(root, np.arange(n), 0)]
    while stack:
        node_id, rows, depth = stack.pop()
        c = counts[node_id]
        if (
            len(rows) < 2 * min_samples_leaf
            or (max_depth and depth >= max_depth)
            or int(c.max()) == len(rows)  # pure
        ):
            continue
        if mtry > 0 and mtry < d:
            cand = np.sort(rng.choice(d, size=mtry, replace=False))
        else:
            cand = np.arange(d)
        best = _best_split(X, y, rows, n_classes, min_samples_leaf, cand)
        if best is None:
            continue
        _, f, thr = best
        go_left = X[rows, f] < thr
        feature[node_id] = f
        threshold[node_id] = thr
        left_id = new_node(rows[go_left])
        right_id = new_node(rows[~go_left])
        left[node_id] = left_id
        right[node_id] = right_id
        stack.append((right_id, rows[~go_left], depth + 1))
        stack.append((left_id, rows[go_left], depth + 1))
    nodes = TreeNodes(feature, threshold, left, right, np.array(counts, dtype=np.int64))
    return DecisionTree(nodes, n_classes)
