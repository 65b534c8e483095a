"""Figure rendering for the reporting paths.

Every CLI command that writes a delimited or JSON report can emit matching
PNG figures next to it: ROC curves and score histograms for attack reports,
quadrant scatter plots for scenario comparison, and min/max range plots for
cross-dataset risk.  Figures avoid wall-clock metadata so identical inputs
produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import auc_null_band

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def _roc_points(scores, members):
    scores = np.asarray(scores, dtype=np.float64)
    members = np.asarray(members, dtype=np.int64)
    order = np.argsort(-scores, kind="stable")
    labels = members[order]
    tps = np.concatenate([[0], np.cumsum(labels == 1)])
    fps = np.concatenate([[0], np.cumsum(labels == 0)])
    return fps / max(1, fps[-1]), tps / max(1, tps[-1])


def save_roc_figure(scores, members, path, title="attack ROC"):
    fpr, tpr = _roc_points(scores, members)
    members = np.asarray(members, dtype=np.int64)
    n_pos = int((members == 1).sum())
    n_neg = int((members == 0).sum())
    lo, hi = auc_null_band(n_pos, n_neg, 3.0)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.fill_between([0, 1], [lo, lo], [hi, hi], color="0.9", label="chance band (3 sd)")
    ax.plot([0, 1], [0, 1], color="0.5", lw=1, ls="--")
    ax.plot(fpr, tpr, color="tab:red", lw=2, label="attack")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_score_histogram(scores, members, path, title="attack scores"):
    scores = np.asarray(scores, dtype=np.float64)
    members = np.asarray(members, dtype=np.int64)
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.linspace(0.0, 1.0, 21)
    ax.hist(scores[members == 1], bins=bins, alpha=0.6, label="members", color="tab:red")
    ax.hist(scores[members == 0], bins=bins, alpha=0.6, label="non-members", color="tab:blue")
    ax.set_xlabel("attack score")
    ax.set_ylabel("rows")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_scenario_scatter(differences, path, metric="AUC", baseline="worst_case",
                          risk_threshold=0.6):
    """Baseline-vs-other scatter; the upper-left quadrant is where a weaker
    scenario would flag risk the conservative baseline misses."""
    base = np.array([d["baseline"] for d in differences], dtype=float)
    other = np.array([d["value"] for d in differences], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.axvline(risk_threshold, color="0.7", lw=1)
    ax.axhline(risk_threshold, color="0.7", lw=1)
    ax.plot([0, 1], [0, 1], color="0.5", lw=1, ls="--")
    ax.scatter(base, other, s=14, alpha=0.6, color="tab:purple")
    ax.set_xlabel(f"{baseline} {metric}")
    ax.set_ylabel(f"other scenario {metric}")
    lo = min(0.3, base.min() if len(base) else 0.3, other.min() if len(other) else 0.3)
    ax.set_xlim(lo, 1.02)
    ax.set_ylim(lo, 1.02)
    ax.set_title(f"scenario comparison ({metric})")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_risk_range_scatter(table, path, metric="AUC"):
    """Min-vs-max attack metric per hyperparameter point across datasets;
    points far off the diagonal are unsafe on some datasets only."""
    mins = np.array([row[f"{metric}_min"] for row in table if row[f"{metric}_min"] != ""], dtype=float)
    maxs = np.array([row[f"{metric}_max"] for row in table if row[f"{metric}_max"] != ""], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([0, 1], [0, 1], color="0.5", lw=1, ls="--")
    ax.scatter(mins, maxs, s=14, alpha=0.6, color="tab:green")
    ax.set_xlabel(f"min attack {metric}")
    ax.set_ylabel(f"max attack {metric}")
    ax.set_title(f"risk range across datasets ({metric})")
    ax.set_xlim(0.25, 1.02)
    ax.set_ylim(0.25, 1.02)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
