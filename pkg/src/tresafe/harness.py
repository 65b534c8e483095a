"""Seeded sweep harness: hyperparameter grids x datasets x repeats, with
scenario comparison, cross-dataset risk ranges, vulnerability flagging and
a meta-predictor of vulnerability from hyperparameters.

Archives are CSV plus a JSON sidecar carrying the config, thresholds and
toolkit version; rows are pure functions of (config, cell index), so a
re-run produces byte-identical files regardless of scheduling.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .dataset import Dataset, load_dataset, parse_data_dictionary, split_three_way
from .errors import DataError, TresafeError
from .metrics import MetricSet, auc
from .models import ModelSpec, TrainedModel, fit, predict_proba
from .attacks import (
    AiaSettings,
    attribute_risk_ratio,
    salem_mia,
    salem_synth_shadow,
    worst_case_mia,
)
from .seeds import derive_seed
from .synth import make_synthetic

QUALITY_GATE_LEVEL = 0.75

METRIC_COLUMNS = (
    "TPR", "FPR", "FAR", "TNR", "PPV", "NPV", "FNR", "ACC", "F1",
    "Advantage", "AUC", "AUC_null_hi", "FDIF", "PDIF",
    "tpr_at_fpr_0.01", "tpr_at_fpr_0.05", "tpr_at_fpr_0.1",
)

ARCHIVE_COLUMNS = (
    "dataset", "kind", "params", "repeat_id", "scenario", "cell_seed", "failed",
    "target_auc", "target_tpr", "target_tnr", "quality_gate_pass",
) + METRIC_COLUMNS + ("aia_max_arr", "vulnerable_mia", "vulnerable_aia")

SWEEP_SCENARIOS = ("worst_case", "salem1", "salem_synth", "salem2")


@dataclass
class VulnerabilityThresholds:
    """Rule thresholds behind the binary vulnerability flags."""

    pdif_max: float = 0.05
    fdif_min: float = 0.0
    tpr_at_fpr_key: str = "0.1"
    tpr_at_fpr_min: float = 0.2
    arr_max: float = 1.25

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "VulnerabilityThresholds":
        return cls(**{k: v for k, v in obj.items() if k in cls.__dataclass_fields__})


@dataclass
class SweepConfig:
    """Everything a sweep needs; serialisable to/from JSON."""

    datasets: list[dict]          # {"name", and either "regime"/"n_rows" or "csv"/"dict"}
    grids: dict[str, dict]        # kind -> {param -> [values]}
    scenarios: list[str] = field(default_factory=lambda: ["worst_case", "salem1"])
    n_repeats: int = 5
    master_seed: int = 0
    prior_a: float = 0.1
    run_aia: bool = False
    aia_attribute: str | None = None
    thresholds: VulnerabilityThresholds = field(default_factory=VulnerabilityThresholds)

    def __post_init__(self):
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if not self.grids or any(not g for g in self.grids.values()):
            raise ValueError("grids must be non-empty")
        unknown = set(self.scenarios) - set(SWEEP_SCENARIOS)
        if unknown:
            raise ValueError(f"unknown scenarios {sorted(unknown)}")

    def to_json_obj(self) -> dict:
        obj = dict(self.__dict__)
        obj["thresholds"] = self.thresholds.to_json_obj()
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "SweepConfig":
        obj = dict(obj)
        if "thresholds" in obj and isinstance(obj["thresholds"], dict):
            obj["thresholds"] = VulnerabilityThresholds.from_json_obj(obj["thresholds"])
        known = {k: v for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def load_config(text: bytes | str) -> SweepConfig:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return SweepConfig.from_json_obj(json.loads(text))


def _param_points(grid: dict) -> list[dict]:
    """Cartesian product in deterministic (sorted-key, given-value) order."""
    names = sorted(grid)
    points = [{}]
    for name in names:
        points = [dict(p, **{name: v}) for p in points for v in grid[name]]
    return points


def param_point_id(params: dict) -> str:
    return "|".join(f"{k}={params[k]}" for k in sorted(params))


def _load_sweep_dataset(entry: dict) -> Dataset:
    if "regime" in entry:
        return make_synthetic(
            entry["regime"],
            int(entry.get("n_rows", 240)),
            n_features=int(entry.get("n_features", 8)),
            seed=int(entry.get("seed", 0)),
            label_noise=entry.get("label_noise"),
        )
    with open(entry["dict"], "rb") as fh:
        dictionary = parse_data_dictionary(fh.read())
    with open(entry["csv"], "rb") as fh:
        return load_dataset(fh.read(), dictionary)


def target_quality_gate(auc_value: float, tpr: float, tnr: float) -> bool:
    """True iff all of AUC, TPR and TNR reach 0.75 (inclusive)."""
    for v in (auc_value, tpr, tnr):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"gate inputs must lie in [0, 1], got {v}")
    return auc_value >= QUALITY_GATE_LEVEL and tpr >= QUALITY_GATE_LEVEL and tnr >= QUALITY_GATE_LEVEL


def target_performance(model: TrainedModel, test: Dataset) -> tuple[float, float, float]:
    """(auc, tpr, tnr) of the target on its test third; macro-averaged for
    more than two classes."""
    probs = predict_proba(model, test.matrix)
    preds = probs.argmax(axis=1)
    if model.n_classes == 2:
        auc_value = auc(probs[:, 1], test.labels)
        pos = test.labels == 1
        neg = ~pos
        tpr = float((preds[pos] == 1).mean()) if pos.any() else 0.0
        tnr = float((preds[neg] == 0).mean()) if neg.any() else 0.0
        return auc_value, tpr, tnr
    aucs, recalls = [], []
    for c in range(model.n_classes):
        mask = test.labels == c
        if mask.any() and (~mask).any():
            aucs.append(auc(probs[:, c], mask.astype(int)))
            recalls.append(float((preds[mask] == c).mean()))
    macro = float(np.mean(recalls)) if recalls else 0.0
    return (float(np.mean(aucs)) if aucs else 0.5), macro, macro


def _flatten_metrics(m: MetricSet) -> dict:
    row = {}
    for name in METRIC_COLUMNS:
        if name.startswith("tpr_at_fpr_"):
            row[name] = m.tpr_at_fpr.get(name.removeprefix("tpr_at_fpr_"))
        else:
            row[name] = getattr(m, name)
    return row


def metric_set_from_row(row: dict) -> MetricSet:
    """Rebuild a MetricSet from archive CSV cells (strings or values)."""
    values = {}
    tpr_map = {}
    for name in METRIC_COLUMNS:
        raw = row.get(name)
        value = None if raw in (None, "") else float(raw)
        if name.startswith("tpr_at_fpr_"):
            if value is not None:
                tpr_map[name.removeprefix("tpr_at_fpr_")] = value
        else:
            values[name] = value
    return MetricSet(**values, tpr_at_fpr=tpr_map)


def _cell_value(row: dict, name: str) -> float | None:
    value = row.get(name)
    if value in ("", None):
        return None
    return float(value)


def flag_vulnerable(row: dict, thresholds: VulnerabilityThresholds) -> bool | None:
    """Default rule: (PDIF below threshold AND FDIF positive) OR high TPR at
    the fixed low FPR.  Returns None (manual review) when the needed
    metrics are absent."""
    pdif_v = _cell_value(row, "PDIF")
    fdif_v = _cell_value(row, "FDIF")
    tpr = _cell_value(row, f"tpr_at_fpr_{thresholds.tpr_at_fpr_key}")
    if pdif_v is None or fdif_v is None or tpr is None:
        return None
    extreme = pdif_v < thresholds.pdif_max and fdif_v > thresholds.fdif_min
    return bool(extreme or tpr >= thresholds.tpr_at_fpr_min)


@dataclass(frozen=True)
class SweepCell:
    dataset_name: str
    kind: str
    params: dict
    repeat_id: int
    index: int


def _enumerate_cells(config: SweepConfig) -> list[SweepCell]:
    cells = []
    index = 0
    for entry in config.datasets:
        for kind in sorted(config.grids):
            for params in _param_points(config.grids[kind]):
                for repeat in range(config.n_repeats):
                    cells.append(SweepCell(entry["name"], kind, params, repeat, index))
                    index += 1
    return cells


def _blank_row(cell: SweepCell, seed: int) -> dict:
    row = {name: "" for name in ARCHIVE_COLUMNS}
    row.update(
        dataset=cell.dataset_name,
        kind=cell.kind,
        params=param_point_id(cell.params),
        repeat_id=cell.repeat_id,
        cell_seed=seed,
        failed=False,
    )
    return row


def run_cell(cell: SweepCell, data: Dataset, config: SweepConfig, unrelated: Dataset) -> list[dict]:
    """All scenario rows for one (dataset, kind, params, repeat) cell."""
    seed = derive_seed(config.master_seed, cell.index)
    rows: list[dict] = []
    try:
        split = split_three_way(range(data.n), cell.repeat_id, derive_seed(seed, "split"))
        train = data.subset(split.train)
        shadow = data.subset(split.shadow)
        test = data.subset(split.test)
        spec = ModelSpec(cell.kind, dict(cell.params), seed=derive_seed(seed, "fit"))
        model = fit(spec, train)
        auc_value, tpr, tnr = target_performance(model, test)
        gate = target_quality_gate(auc_value, tpr, tnr)
    except (TresafeError, ValueError) as exc:
        row = _blank_row(cell, derive_seed(config.master_seed, cell.index))
        row.update(scenario="", failed=True, quality_gate_pass="")
        row["params"] = param_point_id(cell.params)
        row["failure"] = str(exc)
        return [row]

    aia_max_arr = ""
    vulnerable_aia = ""
    if gate and config.run_aia:
        arrs = []
        names = (
            [config.aia_attribute]
            if config.aia_attribute
            else [f.name for f in data.dictionary.features]
        )
        for name in names:
            try:
                rep = attribute_risk_ratio(
                    model, train, test, AiaSettings(attribute=name, n_samples=24)
                )
            except TresafeError:
                continue
            arrs.append(rep.arr)
        if arrs:
            aia_max_arr = max(arrs)
            vulnerable_aia = bool(aia_max_arr > config.thresholds.arr_max)

    for scenario in config.scenarios:
        row = _blank_row(cell, seed)
        row.update(
            scenario=scenario,
            target_auc=auc_value,
            target_tpr=tpr,
            target_tnr=tnr,
            quality_gate_pass=gate,
        )
        if not gate:
            rows.append(row)
            continue
        try:
            if scenario == "worst_case":
                report = worst_case_mia(model, train, test, derive_seed(seed, "wc"))
            elif scenario == "salem1":
                report = salem_mia("salem1", spec, model, shadow, train, test, derive_seed(seed, "s1"))
            elif scenario == "salem_synth":
                synth_shadow = salem_synth_shadow(train, shadow.n, derive_seed(seed, "ss-data"))
                report = salem_mia("salem_synth", spec, model, synth_shadow, train, test, derive_seed(seed, "ss"))
            else:  # salem2
                report = salem_mia("salem2", spec, model, unrelated, train, test, derive_seed(seed, "s2"))
        except (TresafeError, ValueError) as exc:
            row.update(failed=True)
            row["failure"] = str(exc)
            rows.append(row)
            continue
        row.update(_flatten_metrics(report.metrics))
        flag = flag_vulnerable(row, config.thresholds)
        row["vulnerable_mia"] = "" if flag is None else flag
        row["aia_max_arr"] = aia_max_arr
        row["vulnerable_aia"] = vulnerable_aia
        rows.append(row)
    return rows


@dataclass
class ResultsArchive:
    """In-memory archive: ordered rows plus the sidecar metadata."""

    rows: list[dict]
    meta: dict

    def to_csv_bytes(self) -> bytes:
        out = io.StringIO()
        writer = csv.DictWriter(
            out, fieldnames=list(ARCHIVE_COLUMNS) + ["failure"], lineterminator="\n"
        )
        writer.writeheader()
        for row in self.rows:
            encoded = {}
            for key in list(ARCHIVE_COLUMNS) + ["failure"]:
                value = row.get(key, "")
                if isinstance(value, bool):
                    encoded[key] = str(value)
                elif isinstance(value, float):
                    encoded[key] = repr(value)
                else:
                    encoded[key] = value
            writer.writerow(encoded)
        return out.getvalue().encode("utf-8")

    def to_meta_bytes(self) -> bytes:
        return (json.dumps(self.meta, indent=2, sort_keys=True) + "\n").encode("utf-8")


def load_archive_rows(csv_bytes: bytes | str) -> list[dict]:
    if isinstance(csv_bytes, bytes):
        csv_bytes = csv_bytes.decode("utf-8")
    return list(csv.DictReader(io.StringIO(csv_bytes)))


def _run_cell_job(args):
    cell, data, config, unrelated = args
    return run_cell(cell, data, config, unrelated)


def run_grid(config: SweepConfig, workers: int = 1) -> ResultsArchive:
    """Execute the sweep; rows come back in cell-index order regardless of
    worker count, so archives are byte-stable."""
    datasets = {}
    for entry in config.datasets:
        try:
            datasets[entry["name"]] = _load_sweep_dataset(entry)
        except (OSError, TresafeError) as exc:
            raise DataError(f"failed to load sweep dataset {entry.get('name')!r}: {exc}") from exc
    # Fixed unrelated pool for salem2 regardless of which dataset a cell uses.
    unrelated = make_synthetic(
        "noisy", 240, n_features=5, seed=derive_seed(config.master_seed, "unrelated")
    )
    cells = _enumerate_cells(config)
    jobs = [(cell, datasets[cell.dataset_name], config, unrelated) for cell in cells]
    rows: list[dict] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for cell_rows in pool.map(_run_cell_job, jobs, chunksize=4):
                rows.extend(cell_rows)
    else:
        for job in jobs:
            rows.extend(_run_cell_job(job))
    meta = {
        "toolkit_version": __version__,
        "config": config.to_json_obj(),
        "columns": list(ARCHIVE_COLUMNS) + ["failure"],
        "n_cells": len(cells),
        "n_rows": len(rows),
    }
    return ResultsArchive(rows=rows, meta=meta)


# --- archive analysis ---------------------------------------------------------


def compare_scenarios(
    rows: list[dict],
    metric: str = "AUC",
    baseline: str = "worst_case",
    risk_threshold: float = 0.6,
    margin: float = 0.05,
) -> dict:
    """Per-cell (baseline - other) differences plus quadrant counts.

    Quadrants are counted on the (baseline, other) plane at risk_threshold;
    ``exceed_count`` tallies cells where some other scenario beats the
    baseline by more than ``margin``.
    """
    cells: dict[tuple, dict[str, float]] = {}
    skipped = 0
    for row in rows:
        if row.get("scenario") in ("", None) or row.get(metric) in ("", None):
            skipped += 1
            continue
        key = (row["dataset"], row["kind"], row["params"], row["repeat_id"])
        cells.setdefault(key, {})[row["scenario"]] = float(row[metric])
    differences = []
    quadrants = {"upper_left": 0, "upper_right": 0, "lower_left": 0, "lower_right": 0}
    exceed = 0
    compared = 0
    for key, values in sorted(cells.items()):
        if baseline not in values or len(values) < 2:
            skipped += 1
            continue
        base = values[baseline]
        others = {k: v for k, v in values.items() if k != baseline}
        compared += 1
        cell_exceeds = False
        for scenario, value in others.items():
            differences.append(
                {
                    "dataset": key[0], "kind": key[1], "params": key[2],
                    "repeat_id": key[3], "scenario": scenario,
                    "baseline": base, "value": value, "difference": base - value,
                }
            )
            if value - base > margin:
                cell_exceeds = True
            vertical = "upper" if value > risk_threshold else "lower"
            horizontal = "right" if base > risk_threshold else "left"
            quadrants[f"{vertical}_{horizontal}"] += 1
        if cell_exceeds:
            exceed += 1
    return {
        "metric": metric,
        "baseline": baseline,
        "differences": differences,
        "quadrants": quadrants,
        "risk_threshold": risk_threshold,
        "margin": margin,
        "cells_compared": compared,
        "exceed_count": exceed,
        "skipped": skipped,
    }


def risk_generalization(rows: list[dict], metrics=("AUC", "Advantage", "F1")) -> list[dict]:
    """Per (kind, params, scenario): min and max of each attack metric over
    datasets and repeats."""
    table: dict[tuple, dict] = {}
    for row in rows:
        if row.get("scenario") in ("", None):
            continue
        key = (row["kind"], row["params"], row["scenario"])
        entry = table.setdefault(key, {m: [] for m in metrics})
        for m in metrics:
            if row.get(m) not in ("", None):
                entry[m].append(float(row[m]))
    out = []
    for (kind, params, scenario), entry in sorted(table.items()):
        record = {"kind": kind, "params": params, "scenario": scenario}
        for m in metrics:
            values = entry[m]
            record[f"{m}_min"] = min(values) if values else ""
            record[f"{m}_max"] = max(values) if values else ""
            record[f"{m}_n"] = len(values)
        out.append(record)
    return out


# --- vulnerability meta-predictor --------------------------------------------


def _meta_features(rows: list[dict]) -> tuple[np.ndarray, np.ndarray, list[str]]:
    kinds = sorted({row["kind"] for row in rows})
    param_names = sorted({
        part.split("=", 1)[0] for row in rows for part in row["params"].split("|") if part
    })
    columns = [f"kind_{k}" for k in kinds] + param_names
    X = np.zeros((len(rows), len(columns)), dtype=np.float64)
    y = np.zeros(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        X[i, kinds.index(row["kind"])] = 1.0
        for part in row["params"].split("|"):
            if not part:
                continue
            name, raw = part.split("=", 1)
            if raw in ("True", "False"):
                value = 1.0 if raw == "True" else 0.0
            else:
                try:
                    value = float(raw)
                except ValueError:
                    value = 0.0
            X[i, len(kinds) + param_names.index(name)] = value
        y[i] = 1 if str(row["vulnerable_mia"]) == "True" else 0
    return X, y, columns


def fit_vulnerability_predictor(rows: list[dict], seed: int) -> tuple[TrainedModel, dict]:
    """Random-forest meta-classifier from (kind one-hot + params) to the
    vulnerability flag, evaluated on a held-out 10%.

    Returns (model, {"weighted_accuracy", "vulnerable_recall", ...});
    weighted accuracy uses inverse class frequencies (balanced accuracy).
    """
    usable = [row for row in rows if str(row.get("vulnerable_mia")) in ("True", "False")]
    if len(usable) < 50:
        raise DataError(f"need >= 50 labelled rows to train, got {len(usable)}")
    X, y, columns = _meta_features(usable)
    if y.min() == y.max():
        raise DataError("vulnerability flag is single-class; nothing to learn")
    rng = np.random.default_rng(derive_seed(seed, "meta-split"))
    order = rng.permutation(len(y))
    n_eval = max(1, len(y) // 10)
    eval_idx, fit_idx = order[:n_eval], order[n_eval:]
    if y[fit_idx].min() == y[fit_idx].max():
        raise DataError("training split is single-class; increase the archive size")

    from .dataset import DataDictionary, FeatureSpec

    dictionary = DataDictionary(
        features=tuple(FeatureSpec(c, (i,), "float64") for i, c in enumerate(columns)),
        target_name="vulnerable",
        classes=("safe", "vulnerable"),
    )
    train = Dataset(
        matrix=X[fit_idx],
        labels=y[fit_idx],
        group_ids=tuple(f"r{i}" for i in fit_idx),
        dictionary=dictionary,
    )
    spec = ModelSpec(
        "random_forest",
        {"n_estimators": 200, "min_samples_leaf": 1, "bootstrap": True},
        seed=derive_seed(seed, "meta-fit"),
    )
    meta = fit(spec, train)
    preds = predict_proba(meta, X[eval_idx]).argmax(axis=1)
    truth = y[eval_idx]
    recalls = []
    for cls in (0, 1):
        mask = truth == cls
        if mask.any():
            recalls.append(float((preds[mask] == cls).mean()))
    weighted_accuracy = float(np.mean(recalls)) if recalls else 0.0
    vuln_mask = truth == 1
    vulnerable_recall = float((preds[vuln_mask] == 1).mean()) if vuln_mask.any() else None
    majority = int(np.bincount(y[fit_idx]).argmax())
    baseline_recall = 1.0 if majority == 1 else 0.0
    evaluation = {
        "weighted_accuracy": weighted_accuracy,
        "vulnerable_recall": vulnerable_recall,
        "majority_baseline_recall": baseline_recall,
        "n_fit": int(len(fit_idx)),
        "n_eval": int(len(eval_idx)),
        "feature_columns": columns,
    }
    return meta, evaluation
