"""Attack-evaluation metrics: confusion rates, AUC with a chance band,
attacker probability under a prior, FDIF and its permutation p-value.

Rates with a zero denominator are reported as absent (None), never as 0,
so downstream gates fail closed instead of silently reading a safe value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ShapeError, UndefinedMetricError
from .seeds import rng_for

TPR_AT_FPR_TARGETS = ("0.01", "0.05", "0.1")

#: Score threshold used to turn per-record attack scores back into binary
#: predictions when recomputing rate metrics from a report.
SCORE_THRESHOLD = 0.5


@dataclass
class MetricSet:
    """The metric suite for one attack run.  None means undefined."""

    TPR: float | None = None
    FPR: float | None = None
    FAR: float | None = None
    TNR: float | None = None
    PPV: float | None = None
    NPV: float | None = None
    FNR: float | None = None
    ACC: float | None = None
    F1: float | None = None
    Advantage: float | None = None
    AUC: float | None = None
    AUC_null_hi: float | None = None
    FDIF: float | None = None
    PDIF: float | None = None
    tpr_at_fpr: dict[str, float] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json_obj(cls, obj: dict) -> "MetricSet":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


def _rate(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def confusion_metrics(y_true, y_pred) -> MetricSet:
    """Rates from the 2x2 table of binary labels vs binary predictions."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape or y_true.ndim != 1 or y_true.size == 0:
        raise ShapeError("y_true and y_pred must be equal-length non-empty 1-d arrays")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    m = MetricSet(
        TPR=_rate(tp, tp + fn),
        FPR=_rate(fp, fp + tn),
        FAR=_rate(fp, fp + tp),
        TNR=_rate(tn, tn + fp),
        PPV=_rate(tp, tp + fp),
        NPV=_rate(tn, tn + fn),
        FNR=_rate(fn, tp + fn),
        ACC=_rate(tp + tn, tp + tn + fp + fn),
        F1=_rate(2 * tp, 2 * tp + fp + fn),
    )
    if m.TPR is not None and m.FPR is not None:
        m.Advantage = abs(m.TPR - m.FPR)
    return m


def auc(scores, labels) -> float:
    """Probability that a positive outscores a negative; ties count 1/2.

    Computed with average ranks, which equals brute-force pair counting.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeError("scores and labels must be equal-length 1-d arrays")
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores), dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def auc_null_band(n_pos: int, n_neg: int, n_sigma: float) -> tuple[float, float]:
    """Chance band for the AUC of random scores: 0.5 +- n_sigma standard
    deviations of the null Mann-Whitney statistic, clipped to [0, 1]."""
    if n_pos < 1 or n_neg < 1:
        raise ValueError("n_pos and n_neg must be >= 1")
    sd = math.sqrt((n_pos + n_neg + 1) / (12.0 * n_pos * n_neg))
    lo = max(0.0, 0.5 - n_sigma * sd)
    hi = min(1.0, 0.5 + n_sigma * sd)
    return (lo, hi)


@dataclass(frozen=True)
class PriorAssumption:
    """Assumed proportion of attacker-held rows that are really members."""

    A: float

    def __post_init__(self):
        if not (0.0 < self.A <= 1.0):
            raise ValueError(f"A must be in (0, 1], got {self.A}")


def attacker_probability(prior: PriorAssumption, tpr: float, fpr: float) -> float:
    """P(row was a member | attacker says member) under the prior.

    P = (A*TPR) / (A*TPR + (1-A)*FPR).
    """
    if not (0.0 <= tpr <= 1.0 and 0.0 <= fpr <= 1.0):
        raise ValueError("TPR and FPR must lie in [0, 1]")
    num = prior.A * tpr
    den = num + (1.0 - prior.A) * fpr
    if den == 0.0:
        raise UndefinedMetricError("attacker probability undefined: A*TPR and (1-A)*FPR both zero")
    return num / den


def _tail_sizes(n: int, pct: float) -> int:
    if not (0.0 < pct <= 50.0):
        raise ValueError(f"pct must be in (0, 50], got {pct}")
    return math.ceil(pct / 100.0 * n)


def _tail_indices(scores: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    # Stable sorts keep input order among tied scores.
    asc = np.argsort(scores, kind="stable")
    desc = np.argsort(-scores, kind="stable")
    return desc[:m], asc[:m]


def fdif(scores, labels, pct: float = 10.0) -> float:
    """Member prevalence in the top pct% of scores minus the bottom pct%."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ShapeError("scores and labels must be equal-length 1-d arrays")
    m = _tail_sizes(len(scores), pct)
    if len(scores) < 2 * m:
        raise ValueError(f"need at least {2 * m} rows for pct={pct}, got {len(scores)}")
    top, bottom = _tail_indices(scores, m)
    return float(labels[top].mean() - labels[bottom].mean())


def pdif(scores, labels, pct: float = 10.0, n_perm: int = 1000, seed: int = 0) -> float:
    """One-sided permutation p-value for FDIF with add-one smoothing:
    (#{permuted FDIF >= observed} + 1) / (n_perm + 1)."""
    if n_perm < 1000:
        raise ValueError(f"n_perm must be >= 1000, got {n_perm}")
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    observed = fdif(scores, labels, pct)
    m = _tail_sizes(len(scores), pct)
    top, bottom = _tail_indices(scores, m)
    rng = rng_for(seed, "pdif")
    # The tail index sets do not depend on the labels, so permuting labels
    # reduces to re-reading the two fixed index sets.
    perms = rng.permuted(np.tile(labels, (n_perm, 1)), axis=1)
    stats = perms[:, top].mean(axis=1) - perms[:, bottom].mean(axis=1)
    count = int(np.sum(stats >= observed - 1e-12))
    return (count + 1) / (n_perm + 1)


def tpr_at_fixed_fpr(scores, labels, targets=TPR_AT_FPR_TARGETS) -> dict[str, float]:
    """Best achievable TPR at each FPR ceiling, from the empirical ROC.

    Uses the largest classification threshold whose FPR does not exceed the
    target; returns 0.0 when even the strictest threshold overshoots.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_labels = labels[order]
    tps = np.cumsum(sorted_labels == 1)
    fps = np.cumsum(sorted_labels == 0)
    # Only threshold at the last row of each tied-score block.
    block_end = np.append(sorted_scores[1:] != sorted_scores[:-1], True)
    tpr = tps[block_end] / n_pos
    fpr = fps[block_end] / n_neg
    out = {}
    for key in targets:
        limit = float(key)
        ok = fpr <= limit + 1e-12
        out[key] = float(tpr[ok].max()) if ok.any() else 0.0
    return out


def metrics_from_scores(
    scores,
    members,
    pct: float = 10.0,
    n_perm: int = 1000,
    pdif_seed: int = 0,
    n_sigma: float = 3.0,
) -> MetricSet:
    """Assemble the full MetricSet from per-record attack scores.

    Rate metrics come from thresholding the scores at SCORE_THRESHOLD, so the
    whole set can be recomputed from a report's per-record scores alone.
    """
    scores = np.asarray(scores, dtype=np.float64)
    members = np.asarray(members, dtype=np.int64)
    preds = (scores >= SCORE_THRESHOLD).astype(np.int64)
    m = confusion_metrics(members, preds)
    m.AUC = auc(scores, members)
    n_pos = int(np.sum(members == 1))
    n_neg = int(np.sum(members == 0))
    m.AUC_null_hi = auc_null_band(n_pos, n_neg, n_sigma)[1]
    tail = _tail_sizes(len(scores), pct)
    if len(scores) >= 2 * tail:
        m.FDIF = fdif(scores, members, pct)
        m.PDIF = pdif(scores, members, pct, n_perm=n_perm, seed=pdif_seed)
    m.tpr_at_fpr = tpr_at_fixed_fpr(scores, members)
    return m
