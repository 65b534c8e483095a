"""Membership- and attribute-inference attack simulations.

Membership scenarios:

* worst_case -- the attacker is handed true member/non-member labels and
  trains a classifier on the target's own predicted probabilities; a
  deliberately conservative ceiling on attacker success.
* salem1 / salem_synth / salem2 -- black-box variants that train the attack
  classifier on a shadow model's probabilities; they differ only in where
  the shadow data comes from (held-out split, marginal resample, unrelated
  data).
* lira -- a simplified offline likelihood-ratio attack: per-record normal
  fit to shadow-model confidences, scored against the target's confidence.

Attribute inference queries the model with candidate values for one hidden
attribute and reports when the true value stands out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, check_group_disjoint, synthesize_marginals
from .errors import DataError, DegenerateAttributeError
from .metrics import MetricSet, metrics_from_scores
from .models import ModelSpec, TrainedModel, fit, predict_proba
from .seeds import derive_seed, rng_for

#: Fixed attack-classifier configuration (random forest).
ATTACK_FOREST_PARAMS = {
    "n_estimators": 100,
    "min_samples_leaf": 1,
    "max_depth": 0,
    "bootstrap": True,
}

MIA_SCENARIOS = ("worst_case", "salem1", "salem_synth", "salem2", "lira")

#: FDIF tail percentage and permutation count baked into every MiaReport,
#: so reports can be recomputed from their per-record scores alone.
REPORT_FDIF_PCT = 10.0
REPORT_N_PERM = 1000


@dataclass
class MiaReport:
    """Outcome of one membership-inference simulation."""

    scenario: str
    attack_model_spec: ModelSpec
    metrics: MetricSet
    per_record_scores: list[tuple[int, float, int]]
    seeds: dict[str, int]
    shadow_note: str = ""

    def to_json_obj(self) -> dict:
        return {
            "scenario": self.scenario,
            "attack_model_spec": {
                "kind": self.attack_model_spec.kind,
                "params": dict(self.attack_model_spec.params),
                "seed": self.attack_model_spec.seed,
            },
            "metrics": self.metrics.to_json_obj(),
            "per_record_scores": [
                [int(r), float(s), int(m)] for r, s, m in self.per_record_scores
            ],
            "seeds": dict(self.seeds),
            "shadow_note": self.shadow_note,
        }


def recompute_metrics(report: MiaReport) -> MetricSet:
    """Re-derive the MetricSet from a report's per-record scores (audit)."""
    scores = np.array([s for _, s, _ in report.per_record_scores])
    members = np.array([m for _, _, m in report.per_record_scores])
    return metrics_from_scores(
        scores,
        members,
        pct=REPORT_FDIF_PCT,
        n_perm=REPORT_N_PERM,
        pdif_seed=report.seeds["pdif"],
    )


def _attack_features(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per-row attack inputs: the probability vector sorted descending plus
    the model's confidence in the row's true label.

    Sorting removes class-ordering artefacts; the true-label confidence is
    what separates memorised rows from lucky strangers when leaves are pure
    (a fully-grown tree answers one-hot for everyone).
    """
    sorted_probs = -np.sort(-probs, axis=1)
    conf_true = probs[np.arange(len(labels)), labels][:, None]
    return np.hstack([sorted_probs, conf_true])


def _prob_dataset_dictionary(n_classes: int):
    from .dataset import DataDictionary, FeatureSpec

    return DataDictionary(
        features=tuple(FeatureSpec(f"p{i}", (i,), "float64") for i in range(n_classes)),
        target_name="member",
        classes=("0", "1"),
    )


def attack_forest_spec(seed: int) -> ModelSpec:
    return ModelSpec("random_forest", dict(ATTACK_FOREST_PARAMS), seed=seed)


def _fit_attack_forest(features: np.ndarray, members: np.ndarray, seed: int) -> TrainedModel:
    dictionary = _prob_dataset_dictionary(features.shape[1])
    train = Dataset(
        matrix=features,
        labels=members.astype(np.int64),
        group_ids=tuple(f"a{i}" for i in range(features.shape[0])),
        dictionary=dictionary,
    )
    return fit(attack_forest_spec(seed), train)


def _stratified_halves(members: np.ndarray, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Split indices into two halves with per-class balance."""
    rng = rng_for(seed, "attack-split")
    first, second = [], []
    for cls in (0, 1):
        idx = np.nonzero(members == cls)[0]
        idx = idx[rng.permutation(len(idx))]
        half = len(idx) // 2
        first.extend(idx[:half])
        second.extend(idx[half:])
    return np.sort(np.array(first, dtype=np.int64)), np.sort(np.array(second, dtype=np.int64))


def _assemble_report(
    scenario: str,
    row_ids: np.ndarray,
    scores: np.ndarray,
    members: np.ndarray,
    attack_spec: ModelSpec,
    seeds: dict[str, int],
    shadow_note: str = "",
) -> MiaReport:
    metrics = metrics_from_scores(
        scores, members, pct=REPORT_FDIF_PCT, n_perm=REPORT_N_PERM, pdif_seed=seeds["pdif"]
    )
    records = [(int(r), float(s), int(m)) for r, s, m in zip(row_ids, scores, members)]
    return MiaReport(
        scenario=scenario,
        attack_model_spec=attack_spec,
        metrics=metrics,
        per_record_scores=records,
        seeds=seeds,
        shadow_note=shadow_note,
    )


def worst_case_mia(
    model: TrainedModel, train: Dataset, holdout: Dataset, seed: int
) -> MiaReport:
    """White-box-style ceiling: attack classifier fitted on half of the
    target's own member/non-member probabilities, evaluated on the rest."""
    check_group_disjoint(train, holdout)
    probs = np.vstack(
        [predict_proba(model, train.matrix), predict_proba(model, holdout.matrix)]
    )
    labels = np.concatenate([train.labels, holdout.labels])
    members = np.concatenate(
        [np.ones(train.n, dtype=np.int64), np.zeros(holdout.n, dtype=np.int64)]
    )
    features = _attack_features(probs, labels)
    fit_idx, eval_idx = _stratified_halves(members, derive_seed(seed, "wc-halves"))
    attack_seed = derive_seed(seed, "wc-attack")
    attack = _fit_attack_forest(features[fit_idx], members[fit_idx], attack_seed)
    scores = predict_proba(attack, features[eval_idx])[:, 1]
    seeds = {"seed": seed, "attack_fit": attack_seed, "pdif": derive_seed(seed, "wc-pdif")}
    return _assemble_report(
        "worst_case", eval_idx, scores, members[eval_idx], attack_forest_spec(attack_seed), seeds
    )


def _split_rows_in_half(n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    perm = rng_for(seed, "shadow-half").permutation(n)
    half = n // 2
    return np.sort(perm[:half]), np.sort(perm[half:])


SALEM_VARIANTS = ("salem1", "salem_synth", "salem2")


def salem_mia(
    variant: str,
    spec: ModelSpec,
    target: TrainedModel,
    shadow_data: Dataset,
    target_train: Dataset,
    target_test: Dataset,
    seed: int,
) -> MiaReport:
    """Shadow-model attack evaluated on the target's train/test rows.

    The shadow model is fitted with the supplied spec (same kind and
    hyperparameters as the target) on half of shadow_data; the attack
    classifier learns member/non-member from the shadow model's
    probabilities and is then scored against the target.
    """
    if variant not in SALEM_VARIANTS:
        raise ValueError(f"unknown salem variant {variant!r}")
    if shadow_data.dictionary.n_classes != target.n_classes:
        raise DataError(
            "shadow data has {} classes but the target model predicts {}; "
            "attack features cannot be reconciled".format(
                shadow_data.dictionary.n_classes, target.n_classes
            )
        )
    if shadow_data.n < 4:
        raise ValueError("shadow data too small to split in half")
    in_rows, out_rows = _split_rows_in_half(shadow_data.n, derive_seed(seed, variant, "half"))
    shadow_train = shadow_data.subset(in_rows)
    shadow_test = shadow_data.subset(out_rows)
    shadow_spec = ModelSpec(spec.kind, dict(spec.params), seed=derive_seed(seed, variant, "fit"))
    shadow_model = fit(shadow_spec, shadow_train)

    shadow_probs = np.vstack(
        [
            predict_proba(shadow_model, shadow_train.matrix),
            predict_proba(shadow_model, shadow_test.matrix),
        ]
    )
    shadow_labels = np.concatenate([shadow_train.labels, shadow_test.labels])
    shadow_members = np.concatenate(
        [np.ones(shadow_train.n, dtype=np.int64), np.zeros(shadow_test.n, dtype=np.int64)]
    )
    attack_seed = derive_seed(seed, variant, "attack")
    attack = _fit_attack_forest(
        _attack_features(shadow_probs, shadow_labels), shadow_members, attack_seed
    )

    target_probs = np.vstack(
        [predict_proba(target, target_train.matrix), predict_proba(target, target_test.matrix)]
    )
    target_labels = np.concatenate([target_train.labels, target_test.labels])
    members = np.concatenate(
        [np.ones(target_train.n, dtype=np.int64), np.zeros(target_test.n, dtype=np.int64)]
    )
    scores = predict_proba(attack, _attack_features(target_probs, target_labels))[:, 1]
    seeds = {
        "seed": seed,
        "shadow_fit": shadow_spec.seed,
        "attack_fit": attack_seed,
        "pdif": derive_seed(seed, variant, "pdif"),
    }
    notes = {
        "salem1": "shadow data: held-out split of the target data",
        "salem_synth": "shadow data: independent marginal resample of the target data",
        "salem2": "shadow data: unrelated dataset with matching class count",
    }
    return _assemble_report(
        variant,
        np.arange(len(scores)),
        scores,
        members,
        attack_forest_spec(attack_seed),
        seeds,
        notes[variant],
    )


def _logit_confidence(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    p = probs[np.arange(len(labels)), labels]
    p = np.clip(p, 1e-9, 1.0 - 1e-9)
    return np.log(p) - np.log1p(-p)


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    scaled = z / math.sqrt(2.0)
    out = np.fromiter((math.erf(v) for v in scaled.ravel()), dtype=np.float64,
                      count=scaled.size)
    return 0.5 * (1.0 + out.reshape(z.shape))


def lira_mia(
    spec: ModelSpec,
    target: TrainedModel,
    train: Dataset,
    population: Dataset,
    n_shadow: int,
    seed: int,
) -> MiaReport:
    """Simplified offline likelihood-ratio attack.

    Shadow models are fitted on bootstrap resamples of the population; for
    each evaluated row the shadow logit-confidences on its true label give
    an "out" normal distribution, and the score is the probability mass of
    that distribution below the target model's logit-confidence.  Rows whose
    shadow confidences are degenerate fall back to a rank-based score.
    """
    if n_shadow < 4:
        raise ValueError(f"n_shadow must be >= 4, got {n_shadow}")
    check_group_disjoint(train, population)
    eval_matrix = np.vstack([train.matrix, population.matrix])
    eval_labels = np.concatenate([train.labels, population.labels])
    members = np.concatenate(
        [np.ones(train.n, dtype=np.int64), np.zeros(population.n, dtype=np.int64)]
    )
    size = min(train.n, population.n)
    shadow_logits = np.zeros((len(eval_labels), n_shadow), dtype=np.float64)
    # A population row is "out" only for shadows whose resample missed it;
    # using in-sample confidences would make every non-member look extreme.
    out_of_sample = np.ones((len(eval_labels), n_shadow), dtype=bool)
    for s in range(n_shadow):
        rng = rng_for(seed, "lira-resample", s)
        rows = rng.integers(0, population.n, size=size)
        out_of_sample[train.n + np.unique(rows), s] = False
        shadow_spec = ModelSpec(spec.kind, dict(spec.params), seed=derive_seed(seed, "lira-fit", s))
        shadow_model = fit(shadow_spec, population.subset(rows))
        probs = predict_proba(shadow_model, eval_matrix)
        shadow_logits[:, s] = _logit_confidence(probs, eval_labels)

    target_logits = _logit_confidence(predict_proba(target, eval_matrix), eval_labels)
    # Rows with too few out-of-sample shadows fall back to the full set.
    too_few = out_of_sample.sum(axis=1) < 2
    out_of_sample[too_few] = True
    masked = np.ma.MaskedArray(shadow_logits, mask=~out_of_sample)
    mu = masked.mean(axis=1).filled(0.0)
    sigma = masked.std(axis=1, ddof=1).filled(0.0)
    degenerate = sigma < 1e-12
    scores = np.zeros(len(eval_labels), dtype=np.float64)
    ok = ~degenerate
    scores[ok] = _normal_cdf((target_logits[ok] - mu[ok]) / sigma[ok])
    if degenerate.any():
        # Rank-based fallback: midrank of the target logit among shadows.
        rows = np.nonzero(degenerate)[0]
        less = ((shadow_logits[rows] < target_logits[rows, None] - 1e-12) & out_of_sample[rows]).sum(axis=1)
        equal = ((np.abs(shadow_logits[rows] - target_logits[rows, None]) <= 1e-12) & out_of_sample[rows]).sum(axis=1)
        scores[rows] = (less + 0.5 * equal) / out_of_sample[rows].sum(axis=1)
    note = "offline variant; per-row out-of-sample shadow confidences"
    if degenerate.any():
        note += f"; rank-based fallback used for {int(degenerate.sum())} rows"
    if too_few.any():
        note += f"; {int(too_few.sum())} rows used all shadows (too few out-of-sample)"
    seeds = {"seed": seed, "pdif": derive_seed(seed, "lira-pdif")}
    return _assemble_report(
        "lira",
        np.arange(len(scores)),
        scores,
        members,
        ModelSpec(spec.kind, dict(spec.params), seed=seed),
        seeds,
        note,
    )


# --- attribute inference -----------------------------------------------------


@dataclass(frozen=True)
class AiaSettings:
    """Attribute-inference knobs: sample count and closeness percentage."""

    attribute: str
    n_samples: int = 100
    k_pct: float = 10.0

    def __post_init__(self):
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if not (0.0 < self.k_pct < 100.0):
            raise ValueError("k_pct must be in (0, 100)")


@dataclass
class AiaRecordOutcome:
    row: int
    correct: bool
    predicted: str | None = None  # categorical prediction, None when abstained
    bounds: tuple[float, float] | None = None  # continuous max-confidence bounds
    true_value: object = None


@dataclass
class AiaAttributeReport:
    """Attribute-level risk summary: train vs test inference success."""

    attribute: str
    p_vulnerable_train: float
    p_vulnerable_test: float
    arr: float  # math.inf when test-side success is zero but train is not
    arr_undefined: bool
    at_risk_train_ids: list[int]
    baseline_improvement: float

    def to_json_obj(self) -> dict:
        return {
            "attribute": self.attribute,
            "p_vulnerable_train": self.p_vulnerable_train,
            "p_vulnerable_test": self.p_vulnerable_test,
            "arr": "inf" if math.isinf(self.arr) else self.arr,
            "arr_undefined": self.arr_undefined,
            "at_risk_train_ids": list(self.at_risk_train_ids),
            "baseline_improvement": self.baseline_improvement,
        }


def aia_attribute(
    model: TrainedModel,
    records: Dataset,
    settings: AiaSettings,
    value_range: tuple[float, float] | None = None,
) -> list[AiaRecordOutcome]:
    """Per-record attribute inference against one attribute.

    Categorical (onehot) attributes: query the model with every category
    substituted; predict the category only when a unique one maximises the
    model's confidence in the record's true label, otherwise abstain.
    Continuous attributes: query n_samples equally spaced values over the
    observed range (or value_range when given), record the lowest and
    highest values attaining maximum confidence, and mark the record at
    risk when both bounds fall within k_pct% of the true value.
    """
    spec = records.dictionary.feature(settings.attribute)
    outcomes = []
    if spec.encoding == "onehot":
        cols = list(spec.indices)
        n_cat = len(cols)
        confidences = np.zeros((records.n, n_cat), dtype=np.float64)
        for cat in range(n_cat):
            queried = records.matrix.copy()
            queried[:, cols] = 0.0
            queried[:, cols[cat]] = 1.0
            probs = predict_proba(model, queried)
            confidences[:, cat] = probs[np.arange(records.n), records.labels]
        true_cat = np.argmax(records.matrix[:, cols], axis=1)
        for i in range(records.n):
            row_conf = confidences[i]
            best = row_conf.max()
            winners = np.nonzero(row_conf == best)[0]
            if len(winners) == 1:
                predicted = int(winners[0])
                outcomes.append(
                    AiaRecordOutcome(
                        row=i,
                        correct=bool(predicted == true_cat[i]),
                        predicted=f"{settings.attribute}_{predicted}",
                        true_value=f"{settings.attribute}_{int(true_cat[i])}",
                    )
                )
            else:
                outcomes.append(
                    AiaRecordOutcome(
                        row=i,
                        correct=False,
                        predicted=None,
                        true_value=f"{settings.attribute}_{int(true_cat[i])}",
                    )
                )
        return outcomes

    col = spec.indices[0]
    if value_range is None:
        lo, hi = float(records.matrix[:, col].min()), float(records.matrix[:, col].max())
    else:
        lo, hi = float(value_range[0]), float(value_range[1])
    if hi <= lo:
        raise DegenerateAttributeError(
            f"attribute {settings.attribute!r} has zero-width range [{lo}, {hi}]"
        )
    grid = np.linspace(lo, hi, settings.n_samples)
    confidences = np.zeros((records.n, settings.n_samples), dtype=np.float64)
    for j, value in enumerate(grid):
        queried = records.matrix.copy()
        queried[:, col] = value
        probs = predict_proba(model, queried)
        confidences[:, j] = probs[np.arange(records.n), records.labels]
    for i in range(records.n):
        row_conf = confidences[i]
        best = row_conf.max()
        winners = grid[row_conf == best]
        lo_v, hi_v = float(winners.min()), float(winners.max())
        true = float(records.matrix[i, col])
        tol = settings.k_pct / 100.0 * abs(true)
        at_risk = abs(lo_v - true) <= tol and abs(hi_v - true) <= tol
        outcomes.append(
            AiaRecordOutcome(
                row=i, correct=bool(at_risk), bounds=(lo_v, hi_v), true_value=true
            )
        )
    return outcomes


def _success_rate(outcomes: list[AiaRecordOutcome]) -> float:
    return sum(1 for o in outcomes if o.correct) / len(outcomes)


def _categorical_baseline_improvement(
    outcomes: list[AiaRecordOutcome], records: Dataset, spec, most_frequent: int
) -> float:
    """Accuracy gain over a most-frequent-value guess, among the records
    where the attack actually predicted."""
    cols = list(spec.indices)
    true_cat = np.argmax(records.matrix[:, cols], axis=1)
    predicted = [o for o in outcomes if o.predicted is not None]
    if not predicted:
        return 0.0
    attack_acc = sum(1 for o in predicted if o.correct) / len(predicted)
    base_acc = sum(1 for o in predicted if true_cat[o.row] == most_frequent) / len(predicted)
    return attack_acc - base_acc


def attribute_risk_ratio(
    model: TrainedModel,
    train: Dataset,
    test: Dataset,
    settings: AiaSettings,
) -> AiaAttributeReport:
    """Attribute Risk Ratio: inference success on training rows over success
    on unseen rows.  Values above 1 mean the model encodes something
    specific to its training data for this attribute."""
    spec = train.dictionary.feature(settings.attribute)
    if spec.encoding == "onehot":
        value_range = None
    else:
        col = spec.indices[0]
        value_range = (float(train.matrix[:, col].min()), float(train.matrix[:, col].max()))
    train_out = aia_attribute(model, train, settings, value_range)
    test_out = aia_attribute(model, test, settings, value_range)
    p_train = _success_rate(train_out)
    p_test = _success_rate(test_out)
    undefined = False
    if p_test > 0.0:
        arr = p_train / p_test
    elif p_train == 0.0:
        arr = 0.0  # no successful inference on either side
    else:
        arr = math.inf
        undefined = True
    if spec.encoding == "onehot":
        cols = list(spec.indices)
        most_frequent = int(np.argmax(train.matrix[:, cols].sum(axis=0)))
        improvement = _categorical_baseline_improvement(train_out, train, spec, most_frequent)
    else:
        col = spec.indices[0]
        median = float(np.median(train.matrix[:, col]))
        truths = train.matrix[:, col]
        tol = settings.k_pct / 100.0 * np.abs(truths)
        base_rate = float(np.mean(np.abs(median - truths) <= tol))
        improvement = p_train - base_rate
    return AiaAttributeReport(
        attribute=settings.attribute,
        p_vulnerable_train=p_train,
        p_vulnerable_test=p_test,
        arr=arr,
        arr_undefined=undefined,
        at_risk_train_ids=[o.row for o in train_out if o.correct],
        baseline_improvement=improvement,
    )


def salem_synth_shadow(train: Dataset, n_rows: int, seed: int) -> Dataset:
    """Shadow data for the salem_synth variant: marginal resample of the
    target's training data."""
    return synthesize_marginals(train, n_rows, seed)
