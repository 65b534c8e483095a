"""Seeded synthetic tabular generators for desk-scale experiments.

Three regimes cover the behaviours the sweep harness needs to exercise:
``separable`` (clean signal, models generalise), ``noisy`` (weak signal,
label noise), and ``memorize`` (label noise on top of a learnable core, so
unconstrained models memorise the noise and become attackable).
"""

from __future__ import annotations

import numpy as np

from .dataset import DataDictionary, Dataset, FeatureSpec
from .seeds import rng_for

REGIMES = ("separable", "noisy", "memorize")


def float_dictionary(n_features: int, classes=("0", "1")) -> DataDictionary:
    return DataDictionary(
        features=tuple(FeatureSpec(f"x{i}", (i,), "float64") for i in range(n_features)),
        target_name="y",
        classes=tuple(classes),
    )


def make_synthetic(
    regime: str,
    n_rows: int,
    n_features: int = 8,
    seed: int = 0,
    label_noise: float | None = None,
) -> Dataset:
    """One individual per row; labels depend on the first two features."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    rng = rng_for(seed, "synth", regime)
    X = rng.normal(size=(n_rows, n_features))
    # Mostly axis-aligned boundary so tree learners reach gate-level accuracy
    # on desk-scale training splits.
    signal = X[:, 0] + 0.35 * X[:, 1]
    if regime == "separable":
        noise = 0.0 if label_noise is None else label_noise
        # Push the classes apart so every reasonable model generalises.
        X[:, 0] += np.where(signal > 0, 0.75, -0.75)
    elif regime == "noisy":
        noise = 0.15 if label_noise is None else label_noise
    else:  # memorize
        noise = 0.08 if label_noise is None else label_noise
    y = (signal > 0).astype(np.int64)
    flips = rng.random(n_rows) < noise
    y[flips] = 1 - y[flips]
    return Dataset(
        matrix=X,
        labels=y,
        group_ids=tuple(f"{regime}-{i}" for i in range(n_rows)),
        dictionary=float_dictionary(n_features),
    )


def make_mixed_synthetic(
    n_rows: int,
    seed: int = 0,
    label_noise: float = 0.25,
    value_scale: float = 20.0,
    value_offset: float = 100.0,
) -> Dataset:
    """Mixed-encoding data for attribute-inference work: one onehot feature,
    one int64, and two float columns shifted away from zero so that
    percentage-closeness criteria are meaningful."""
    rng = rng_for(seed, "synth-mixed")
    cat = rng.integers(0, 3, size=n_rows)
    onehot = np.zeros((n_rows, 3))
    onehot[np.arange(n_rows), cat] = 1.0
    age = rng.integers(20, 90, size=n_rows).astype(float)
    f1 = value_offset + value_scale * rng.normal(size=n_rows)
    f2 = value_offset + value_scale * rng.normal(size=n_rows)
    X = np.column_stack([onehot, age, f1, f2])
    # The category dominates the label so models genuinely condition on it;
    # this is what attribute-inference checks need to be able to detect.
    signal = 1.5 * (cat == 1) - 0.75 + 0.5 * (f1 - value_offset) / value_scale
    y = (signal + 0.35 * rng.normal(size=n_rows) > 0).astype(np.int64)
    flips = rng.random(n_rows) < label_noise
    y[flips] = 1 - y[flips]
    dictionary = DataDictionary(
        features=(
            FeatureSpec("colour", (0, 1, 2), "onehot"),
            FeatureSpec("age", (3,), "int64"),
            FeatureSpec("risk_a", (4,), "float64"),
            FeatureSpec("risk_b", (5,), "float64"),
        ),
        target_name="outcome",
        classes=("no", "yes"),
    )
    return Dataset(
        matrix=X,
        labels=y,
        group_ids=tuple(f"p{i}" for i in range(n_rows)),
        dictionary=dictionary,
    )
