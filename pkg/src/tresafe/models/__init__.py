"""Uniform interface over the native classifier family.

Every trained model is a kind-tagged envelope with inspectable internals,
a canonical byte-stable JSON serialisation, and a fingerprint of its
fitting data.  The release layer only ever accepts this envelope.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from ..dataset import Dataset
from ..errors import DataError, FormatError, ProvenanceError, ShapeError, SpecError
from .dpsvc import DpSvcModel, fit_dp_svc, laplace_weight_scale, noise_free_weights, random_features
from .forest import RandomForest, fit_forest
from .linear import LogisticModel, cross_entropy_loss_and_grad, fit_logistic
from .neighbors import KnnModel, fit_knn
from .tree import DecisionTree, TreeNodes, fit_tree

FORMAT_VERSION = 1

#: Documented parameter sets per model kind: name -> (type, default).
PARAM_SCHEMAS: dict[str, dict[str, tuple[type, object]]] = {
    "decision_tree": {
        "min_samples_leaf": (int, 1),
        "max_depth": (int, 0),
    },
    "random_forest": {
        "n_estimators": (int, 100),
        "min_samples_leaf": (int, 1),
        "max_depth": (int, 0),
        "bootstrap": (bool, True),
    },
    "logistic_regression": {
        "learning_rate": (float, 0.1),
        "l2": (float, 0.01),
        "epochs": (int, 300),
    },
    "knn": {
        "k": (int, 5),
    },
    "dp_svc": {
        "dhat": (int, 1000),
        "C": (float, 1.0),
        "eps": (float, 10.0),
        "delta": (float, 0.0),
        "gamma": (float, 0.1),
    },
}

MODEL_KINDS = tuple(PARAM_SCHEMAS)

#: Library-style display names used in release reports.
DISPLAY_NAMES = {
    "decision_tree": "DecisionTreeClassifier",
    "random_forest": "RandomForestClassifier",
    "logistic_regression": "LogisticRegression",
    "knn": "KNeighborsClassifier",
    "dp_svc": "DPSVC",
}


def validate_params(kind: str, params: dict) -> dict:
    """Fill defaults, reject unknown keys / wrong types / unusable values."""
    if kind not in PARAM_SCHEMAS:
        raise SpecError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    schema = PARAM_SCHEMAS[kind]
    unknown = set(params) - set(schema)
    if unknown:
        raise SpecError(f"unknown parameter(s) for {kind}: {sorted(unknown)}")
    full = {}
    for name, (tp, default) in schema.items():
        value = params.get(name, default)
        if tp is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, tp) or (tp is int and isinstance(value, bool)):
            raise SpecError(f"parameter {name} of {kind} must be {tp.__name__}, got {value!r}")
        full[name] = value
    for name in ("k", "n_estimators", "dhat", "epochs"):
        if name in full and full[name] <= 0:
            raise SpecError(f"parameter {name} must be positive, got {full[name]}")
    if "min_samples_leaf" in full and full["min_samples_leaf"] < 1:
        raise SpecError(f"min_samples_leaf must be >= 1, got {full['min_samples_leaf']}")
    if "max_depth" in full and full["max_depth"] < 0:
        raise SpecError(f"max_depth must be >= 0 (0 = unlimited), got {full['max_depth']}")
    if kind == "dp_svc":
        for name in ("C", "eps", "gamma"):
            if full[name] <= 0:
                raise SpecError(f"parameter {name} must be positive, got {full[name]}")
    return full


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: kind, hyperparameters and the fit seed."""

    kind: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def resolved_params(self) -> dict:
        return validate_params(self.kind, self.params)


@dataclass
class TrainedModel:
    """Kind-tagged fitted classifier with an inspectable implementation."""

    kind: str
    params: dict
    n_classes: int
    impl: object
    fit_meta: dict

    @property
    def width(self) -> int:
        return int(self.fit_meta["n_features"])

    def predict_proba(self, rows) -> np.ndarray:
        return predict_proba(self, rows)


def data_fingerprint(ds: Dataset) -> str:
    """Stable hash of the fitting data (matrix + labels)."""
    h = hashlib.sha256()
    h.update(str(ds.matrix.shape).encode())
    h.update(np.ascontiguousarray(ds.matrix).tobytes())
    h.update(np.ascontiguousarray(ds.labels).tobytes())
    return h.hexdigest()


def fit(spec: ModelSpec, train: Dataset) -> TrainedModel:
    """Fit a model; deterministic given (spec, train)."""
    params = spec.resolved_params()
    n_classes = train.dictionary.n_classes
    present = np.unique(train.labels)
    if len(present) != n_classes:
        missing = sorted(set(range(n_classes)) - set(present.tolist()))
        names = [train.dictionary.classes[i] for i in missing]
        raise DataError(f"class(es) {names} absent from training data")
    X, y = train.matrix, train.labels
    if spec.kind == "decision_tree":
        impl = fit_tree(
            X, y, n_classes, min_samples_leaf=params["min_samples_leaf"],
            max_depth=params["max_depth"],
        )
    elif spec.kind == "random_forest":
        impl = fit_forest(
            X, y, n_classes, n_estimators=params["n_estimators"],
            min_samples_leaf=params["min_samples_leaf"], max_depth=params["max_depth"],
            bootstrap=params["bootstrap"], seed=spec.seed,
        )
    elif spec.kind == "logistic_regression":
        impl = fit_logistic(
            X, y, n_classes, learning_rate=params["learning_rate"],
            l2=params["l2"], epochs=params["epochs"],
        )
    elif spec.kind == "knn":
        impl = fit_knn(X, y, n_classes, k=params["k"])
    elif spec.kind == "dp_svc":
        impl = fit_dp_svc(
            X, y, n_classes, dhat=params["dhat"], C=params["C"], eps=params["eps"],
            delta=params["delta"], gamma=params["gamma"], seed=spec.seed,
        )
    else:  # pragma: no cover - validate_params already rejects
        raise SpecError(f"unknown model kind {spec.kind!r}")
    meta = {
        "n_train": train.n,
        "n_features": train.width,
        "data_fingerprint": data_fingerprint(train),
        "seed": spec.seed,
    }
    return TrainedModel(kind=spec.kind, params=params, n_classes=n_classes, impl=impl, fit_meta=meta)


def predict_proba(model: TrainedModel, rows) -> np.ndarray:
    """Row-stochastic class probabilities; pure function of (model, rows)."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != model.width:
        raise ShapeError(
            f"expected rows of width {model.width}, got shape {rows.shape}"
        )
    return model.impl.predict_proba(rows)


def _check_fingerprint(model: TrainedModel, train: Dataset) -> None:
    if data_fingerprint(train) != model.fit_meta["data_fingerprint"]:
        raise ProvenanceError("supplied dataset is not the one this model was fitted on")


def embedded_training_rows(model: TrainedModel, train: Dataset) -> dict:
    """Count training rows stored verbatim inside the model internals.

    Scans every array in the internals whose trailing dimension equals the
    feature width, so it also covers hand-edited envelopes.
    """
    _check_fingerprint(model, train)
    stored: list[np.ndarray] = []
    obj = internals_json_obj(model)

    def collect(node):
        if isinstance(node, dict):
            for key, v in node.items():
                if key == "counts":  # leaf class tallies, not input-space rows
                    continue
                collect(v)
        elif isinstance(node, list) and node:
            arr = np.asarray(node, dtype=object)
            try:
                arr = arr.astype(np.float64)
            except (TypeError, ValueError):
                for item in node:
                    collect(item)
                return
            if arr.ndim == 1 and arr.shape[0] == train.width:
                stored.append(arr[None, :])
            elif arr.ndim == 2 and arr.shape[1] == train.width:
                stored.append(arr)

    collect(obj)
    if not stored:
        return {"count": 0, "indices": []}
    bank = np.vstack(stored)
    hits = []
    for i in range(train.n):
        if (bank == train.matrix[i]).all(axis=1).any():
            hits.append(i)
    return {"count": len(hits), "indices": hits}


def k_anonymity(model: TrainedModel, train: Dataset) -> int:
    """Smallest training-row population of any decision region.

    Trees: minimum rows per leaf.  Forests: minimum rows per occupied
    leaf-assignment vector (one leaf per member tree), since intersections
    of leaves across trees are what single out individuals.
    """
    if model.kind == "decision_tree":
        leaves = model.impl.apply(train.matrix)
        counts = np.bincount(leaves)
        return int(counts[counts > 0].min())
    if model.kind == "random_forest":
        cells = model.impl.leaf_assignments(train.matrix)
        _, counts = np.unique(cells, axis=0, return_counts=True)
        return int(counts.min())
    raise SpecError(f"k-anonymity is defined for trees and forests, not {model.kind!r}")


# --- canonical serialisation ------------------------------------------------


def internals_json_obj(model: TrainedModel) -> dict:
    return model.impl.to_json_obj()


def _impl_from_json(kind: str, obj: dict, n_classes: int):
    if kind == "decision_tree":
        return DecisionTree(TreeNodes.from_json_obj(obj), n_classes)
    if kind == "random_forest":
        return RandomForest.from_json_obj(obj, n_classes)
    if kind == "logistic_regression":
        return LogisticModel.from_json_obj(obj)
    if kind == "knn":
        return KnnModel.from_json_obj(obj, n_classes)
    if kind == "dp_svc":
        return DpSvcModel.from_json_obj(obj, n_classes)
    raise FormatError(f"unknown model kind {kind!r} in model file")


def to_envelope(model: TrainedModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "params": dict(model.params),
        "n_classes": model.n_classes,
        "internals": internals_json_obj(model),
        "fit_meta": dict(model.fit_meta),
    }


ENVELOPE_KEYS = ("format_version", "kind", "params", "n_classes", "internals", "fit_meta")


def from_envelope(obj: dict) -> TrainedModel:
    if not isinstance(obj, dict) or set(obj) != set(ENVELOPE_KEYS):
        raise FormatError(
            f"model file must have exactly the keys {ENVELOPE_KEYS}"
        )
    if obj["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version {obj['format_version']!r}")
    kind = obj["kind"]
    if kind not in PARAM_SCHEMAS:
        raise FormatError(f"unknown model kind {kind!r} in model file")
    n_classes = int(obj["n_classes"])
    try:
        impl = _impl_from_json(kind, obj["internals"], n_classes)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed internals for {kind}: {exc}") from exc
    return TrainedModel(
        kind=kind,
        params=dict(obj["params"]),
        n_classes=n_classes,
        impl=impl,
        fit_meta=dict(obj["fit_meta"]),
    )


def serialize_model(model: TrainedModel) -> bytes:
    """Canonical bytes: sorted keys, minimal separators, repr floats."""
    return json.dumps(
        to_envelope(model), sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def deserialize_model(data: bytes | str) -> TrainedModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    return from_envelope(obj)


def model_digest(model: TrainedModel) -> str:
    return hashlib.sha256(serialize_model(model)).hexdigest()


def internals_digest(model: TrainedModel) -> str:
    blob = json.dumps(
        internals_json_obj(model), sort_keys=True, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def forest_member_models(model: TrainedModel) -> list[TrainedModel]:
    """Each forest member as a standalone decision-tree model (for the
    white-box ensemble checks)."""
    if model.kind != "random_forest":
        raise SpecError("member extraction only applies to random forests")
    members = []
    for tree in model.impl.trees:
        members.append(
            TrainedModel(
                kind="decision_tree",
                params={
                    "min_samples_leaf": model.params["min_samples_leaf"],
                    "max_depth": model.params["max_depth"],
                },
                n_classes=model.n_classes,
                impl=tree,
                fit_meta=dict(model.fit_meta),
            )
        )
    return members


__all__ = [
    "DISPLAY_NAMES",
    "MODEL_KINDS",
    "ModelSpec",
    "TrainedModel",
    "cross_entropy_loss_and_grad",
    "data_fingerprint",
    "deserialize_model",
    "embedded_training_rows",
    "fit",
    "forest_member_models",
    "from_envelope",
    "internals_digest",
    "k_anonymity",
    "laplace_weight_scale",
    "model_digest",
    "noise_free_weights",
    "predict_proba",
    "random_features",
    "serialize_model",
    "to_envelope",
    "validate_params",
]
