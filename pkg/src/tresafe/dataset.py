"""Tabular datasets, their machine-readable schema, and split operations.

The canonical on-disk formats are:

* data dictionary -- JSON ``{"features": [{"name", "indices", "encoding"},
  ...], "target": {"name", "classes"}}`` where ``encoding`` is one of
  ``onehot``, ``int64``, ``float64``;
* dataset -- CSV with a header row, the group id in the first column, the
  encoded matrix in index order in the middle, and the label string (mapped
  through ``target.classes``) in the last column.
"""

from __future__ import annotations

import io
import csv
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, SchemaError
from .seeds import rng_for

ENCODINGS = ("onehot", "int64", "float64")


@dataclass(frozen=True)
class FeatureSpec:
    """One model input: its name, encoded column positions and encoding."""

    name: str
    indices: tuple[int, ...]
    encoding: str

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise SchemaError(f"unknown encoding {self.encoding!r} for feature {self.name!r}")
        if len(self.indices) == 0:
            raise SchemaError(f"feature {self.name!r} has no column indices")
        if self.encoding == "onehot" and len(self.indices) < 2:
            raise SchemaError(f"onehot feature {self.name!r} needs at least 2 indices")
        if self.encoding in ("int64", "float64") and len(self.indices) != 1:
            raise SchemaError(f"{self.encoding} feature {self.name!r} must have exactly 1 index")
        if any(i < 0 for i in self.indices):
            raise SchemaError(f"feature {self.name!r} has negative indices")


@dataclass(frozen=True)
class DataDictionary:
    """Ordered feature schema plus the target column description."""

    features: tuple[FeatureSpec, ...]
    target_name: str
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(self.classes) < 2:
            raise SchemaError("target needs at least 2 classes")
        if len(set(self.classes)) != len(self.classes):
            raise SchemaError("target classes must be distinct")
        seen: set[int] = set()
        for spec in self.features:
            overlap = seen.intersection(spec.indices)
            if overlap:
                raise SchemaError(f"feature {spec.name!r} reuses column indices {sorted(overlap)}")
            seen.update(spec.indices)
        width = max(seen) + 1
        if seen != set(range(width)):
            missing = sorted(set(range(width)) - seen)
            raise SchemaError(f"column indices are not contiguous; missing {missing}")
        names = [spec.name for spec in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")

    @property
    def width(self) -> int:
        return sum(len(spec.indices) for spec in self.features)

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def feature(self, name: str) -> FeatureSpec:
        for spec in self.features:
            if spec.name == name:
                return spec
        raise ValueError(f"no feature named {name!r}")

    def column_names(self) -> list[str]:
        """Per-column names: one per index, onehot columns suffixed."""
        names = [""] * self.width
        for spec in self.features:
            if spec.encoding == "onehot":
                for j, idx in enumerate(spec.indices):
                    names[idx] = f"{spec.name}_{j}"
            else:
                names[spec.indices[0]] = spec.name
        return names

    def to_json_obj(self) -> dict:
        return {
            "features": [
                {"name": s.name, "indices": list(s.indices), "encoding": s.encoding}
                for s in self.features
            ],
            "target": {"name": self.target_name, "classes": list(self.classes)},
        }


def parse_data_dictionary(text: bytes | str) -> DataDictionary:
    """Parse the canonical JSON dictionary format."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"data dictionary is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "features" not in obj or "target" not in obj:
        raise SchemaError("data dictionary must have 'features' and 'target' keys")
    feats = []
    for entry in obj["features"]:
        try:
            feats.append(
                FeatureSpec(
                    name=str(entry["name"]),
                    indices=tuple(int(i) for i in entry["indices"]),
                    encoding=entry["encoding"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad feature entry {entry!r}: {exc}") from exc
    target = obj["target"]
    if not isinstance(target, dict) or "name" not in target or "classes" not in target:
        raise SchemaError("target must have 'name' and 'classes'")
    return DataDictionary(
        features=tuple(feats),
        target_name=str(target["name"]),
        classes=tuple(str(c) for c in target["classes"]),
    )


@dataclass
class Dataset:
    """Encoded matrix + class ids + per-row individual identifiers."""

    matrix: np.ndarray
    labels: np.ndarray
    group_ids: tuple[str, ...]
    dictionary: DataDictionary

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.group_ids = tuple(str(g) for g in self.group_ids)
        validate_dataset(self)
        self.matrix.setflags(write=False)
        self.labels.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def width(self) -> int:
        return self.matrix.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            matrix=self.matrix[rows].copy(),
            labels=self.labels[rows].copy(),
            group_ids=tuple(self.group_ids[i] for i in rows),
            dictionary=self.dictionary,
        )


def validate_dataset(ds: Dataset) -> None:
    if ds.matrix.ndim != 2 or ds.matrix.shape[0] == 0:
        raise DataError("dataset must contain at least one row")
    if ds.matrix.shape[1] != ds.dictionary.width:
        raise DataError(
            f"matrix width {ds.matrix.shape[1]} != dictionary width {ds.dictionary.width}"
        )
    if not np.isfinite(ds.matrix).all():
        raise DataError("matrix contains non-finite values")
    if len(ds.labels) != ds.matrix.shape[0] or len(ds.group_ids) != ds.matrix.shape[0]:
        raise DataError("labels/group_ids length mismatch")
    if ds.labels.min(initial=0) < 0 or ds.labels.max(initial=0) >= ds.dictionary.n_classes:
        raise DataError("labels outside [0, n_classes)")
    for spec in ds.dictionary.features:
        cols = ds.matrix[:, list(spec.indices)]
        if spec.encoding == "onehot":
            if not np.isin(cols, (0.0, 1.0)).all():
                raise DataError(f"onehot feature {spec.name!r} has values other than 0/1")
            ones = cols.sum(axis=1)
            if not (ones == 1.0).all():
                bad = int(np.argmax(ones != 1.0))
                raise DataError(f"onehot feature {spec.name!r} not exactly-one-hot at row {bad}")
        elif spec.encoding == "int64":
            if not (cols == np.round(cols)).all():
                raise DataError(f"int64 feature {spec.name!r} holds non-integral values")


def load_dataset(csv_bytes: bytes | str, dictionary: DataDictionary) -> Dataset:
    """Read the canonical CSV layout and validate encodings."""
    if isinstance(csv_bytes, bytes):
        text = csv_bytes.decode("utf-8")
    else:
        text = csv_bytes
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty file: missing header row") from None
    expected_cols = dictionary.width + 2
    if len(header) != expected_cols:
        raise DataError(f"expected {expected_cols} columns, header has {len(header)}")
    class_ids = {c: i for i, c in enumerate(dictionary.classes)}
    rows, labels, groups = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected_cols:
            raise DataError(f"line {lineno}: expected {expected_cols} cells, got {len(row)}")
        if any(cell.strip() == "" for cell in row):
            raise DataError(f"line {lineno}: empty cells are not supported")
        groups.append(row[0])
        try:
            rows.append([float(cell) for cell in row[1:-1]])
        except ValueError as exc:
            raise DataError(f"line {lineno}: non-numeric cell ({exc})") from exc
        label = row[-1]
        if label not in class_ids:
            raise DataError(f"line {lineno}: unknown label {label!r}")
        labels.append(class_ids[label])
    if not rows:
        raise DataError("dataset has a header but no rows")
    return Dataset(
        matrix=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        group_ids=tuple(groups),
        dictionary=dictionary,
    )


def _format_cell(value: float, integral: bool) -> str:
    if integral:
        return str(int(round(value)))
    return repr(float(value))


def write_dataset_csv(ds: Dataset) -> bytes:
    """Canonical CSV writer; load_dataset(write_dataset_csv(ds)) round-trips."""
    integral = np.zeros(ds.width, dtype=bool)
    for spec in ds.dictionary.features:
        if spec.encoding in ("onehot", "int64"):
            for idx in spec.indices:
                integral[idx] = True
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["group_id"] + ds.dictionary.column_names() + [ds.dictionary.target_name])
    for i in range(ds.n):
        cells = [ds.group_ids[i]]
        cells += [_format_cell(v, integral[j]) for j, v in enumerate(ds.matrix[i])]
        cells.append(ds.dictionary.classes[ds.labels[i]])
        writer.writerow(cells)
    return out.getvalue().encode("utf-8")


@dataclass(frozen=True)
class HoldoutPartition:
    """Group-disjoint research/holdout row split."""

    research_indices: tuple[int, ...]
    holdout_indices: tuple[int, ...]
    seed: int


def reserve_holdout(ds: Dataset, fraction: float, seed: int) -> HoldoutPartition:
    """Set aside all rows of a subset of individuals for attack simulation.

    Groups are shuffled by seed, then added to the holdout greedily while the
    running row count stays at or below fraction*n; a group that would
    overshoot is skipped.  If every group overshoots, the single group whose
    size is closest to the target (smaller on ties) is held out, so the
    holdout is never empty.
    """
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    groups: dict[str, list[int]] = {}
    for i, g in enumerate(ds.group_ids):
        groups.setdefault(g, []).append(i)
    if len(groups) < 2:
        raise DataError("need at least 2 distinct group ids to reserve a holdout")
    target = fraction * ds.n
    names = sorted(groups)
    order = rng_for(seed, "holdout").permutation(len(names))
    holdout: list[int] = []
    taken = 0
    for pos in order:
        rows = groups[names[pos]]
        if taken + len(rows) <= target:
            holdout.extend(rows)
            taken += len(rows)
    if not holdout:
        best = min(names, key=lambda g: (abs(len(groups[g]) - target), len(groups[g])))
        holdout.extend(groups[best])
    holdout_set = set(holdout)
    research = [i for i in range(ds.n) if i not in holdout_set]
    return HoldoutPartition(
        research_indices=tuple(research),
        holdout_indices=tuple(sorted(holdout)),
        seed=seed,
    )


@dataclass(frozen=True)
class SplitIndices:
    """Disjoint, exhaustive train/shadow/test thirds of a row set."""

    train: tuple[int, ...]
    shadow: tuple[int, ...]
    test: tuple[int, ...]
    repeat_id: int
    seed: int


def split_three_way(rows, repeat_id: int, seed: int) -> SplitIndices:
    """Split rows into three near-equal parts; remainder goes to the earlier
    parts (train, then shadow)."""
    rows = [int(r) for r in rows]
    if len(rows) < 3:
        raise ValueError(f"need at least 3 rows to split, got {len(rows)}")
    if not (0 <= repeat_id <= 4):
        raise ValueError(f"repeat_id must be in 0..4, got {repeat_id}")
    perm = rng_for(seed, "split3", repeat_id).permutation(len(rows))
    shuffled = [rows[i] for i in perm]
    n = len(rows)
    base, rem = divmod(n, 3)
    sizes = [base + (1 if i < rem else 0) for i in range(3)]
    a, b = sizes[0], sizes[0] + sizes[1]
    return SplitIndices(
        train=tuple(shuffled[:a]),
        shadow=tuple(shuffled[a:b]),
        test=tuple(shuffled[b:]),
        repeat_id=repeat_id,
        seed=seed,
    )


def synthesize_marginals(ds: Dataset, n_rows: int, seed: int) -> Dataset:
    """Draw rows feature-by-feature from the empirical marginals of ds.

    Onehot features sample a category from its observed frequencies; numeric
    columns resample observed values with replacement; labels follow the
    empirical label frequencies.  Rows are independent, so joint structure is
    deliberately not preserved.
    """
    if n_rows < 1:
        raise ValueError(f"n_rows must be >= 1, got {n_rows}")
    rng = rng_for(seed, "marginals")
    out = np.zeros((n_rows, ds.width), dtype=np.float64)
    for spec in ds.dictionary.features:
        cols = list(spec.indices)
        if spec.encoding == "onehot":
            freqs = ds.matrix[:, cols].mean(axis=0)
            choice = rng.choice(len(cols), size=n_rows, p=freqs / freqs.sum())
            out[np.arange(n_rows), np.array(cols)[choice]] = 1.0
        else:
            values = ds.matrix[:, cols[0]]
            out[:, cols[0]] = rng.choice(values, size=n_rows, replace=True)
    counts = np.bincount(ds.labels, minlength=ds.dictionary.n_classes).astype(float)
    labels = rng.choice(ds.dictionary.n_classes, size=n_rows, p=counts / counts.sum())
    return Dataset(
        matrix=out,
        labels=labels.astype(np.int64),
        group_ids=tuple(f"synth-{i}" for i in range(n_rows)),
        dictionary=ds.dictionary,
    )


def check_group_disjoint(members: Dataset, non_members: Dataset) -> None:
    """Raise LeakageError if the two sides share any individual."""
    from .errors import LeakageError

    shared = set(members.group_ids) & set(non_members.group_ids)
    if shared:
        sample = sorted(shared)[:5]
        raise LeakageError(f"{len(shared)} group ids appear on both sides, e.g. {sample}")
