import json

import numpy as np
import pytest

from tresafe.dataset import DataDictionary, Dataset, FeatureSpec, write_dataset_csv
from tresafe.synth import make_mixed_synthetic, make_synthetic

_ACCEPTANCE_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, description): release acceptance criterion"
    )


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    number = desc = None
    # criterion metadata is stashed in user_properties by the fixture below
    for key, value in report.user_properties:
        if key == "criterion":
            number, desc = value
    if number is None:
        return
    if hasattr(report, "wasxfail"):
        outcome = "FAIL (documented defect, expected)"
    else:
        outcome = "PASS" if report.passed else "FAIL"
    _ACCEPTANCE_RESULTS.setdefault((number, desc), []).append(outcome)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (number, desc), outcomes in sorted(_ACCEPTANCE_RESULTS.items()):
        if any(o.startswith("FAIL (documented") for o in outcomes) and any(
            o == "PASS" for o in outcomes
        ):
            overall = "PASS (one sub-check pins a documented inconsistent reference value)"
        elif all(o == "PASS" for o in outcomes):
            overall = "PASS"
        elif all(o.startswith("FAIL (documented") for o in outcomes):
            overall = "FAIL (documented defect)"
        else:
            overall = "FAIL"
        terminalreporter.write_line(f"criterion {number:>2}: {overall} - {desc}")


@pytest.fixture
def criterion(request, record_property):
    marker = request.node.get_closest_marker("criterion")
    if marker:
        record_property("criterion", (marker.args[0], marker.args[1]))
    return None


@pytest.fixture(autouse=True)
def _fixed_epoch(monkeypatch):
    # Snapshot timestamps honour SOURCE_DATE_EPOCH; pin it so artefacts are
    # byte-stable across the whole suite.
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")


@pytest.fixture
def float_ds():
    return make_synthetic("memorize", 120, n_features=4, seed=3)


@pytest.fixture
def mixed_ds():
    return make_mixed_synthetic(240, seed=5)


@pytest.fixture
def tiny_dictionary():
    return DataDictionary(
        features=(
            FeatureSpec("colour", (0, 1, 2), "onehot"),
            FeatureSpec("age", (3,), "int64"),
            FeatureSpec("score", (4,), "float64"),
        ),
        target_name="outcome",
        classes=("no", "yes"),
    )


def dataset_files(tmp_path, ds: Dataset, stem: str = "data"):
    """Write a dataset + dictionary pair to disk; returns (csv, dict) paths."""
    csv_path = tmp_path / f"{stem}.csv"
    dict_path = tmp_path / f"{stem}.dict.json"
    csv_path.write_bytes(write_dataset_csv(ds))
    dict_path.write_text(json.dumps(ds.dictionary.to_json_obj()))
    return str(csv_path), str(dict_path)


def make_unique_rows_dataset(n=50, d=3, seed=0, n_classes=2):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    y = rng.integers(0, n_classes, size=n)
    y[:n_classes] = np.arange(n_classes)  # every class present
    dictionary = DataDictionary(
        features=tuple(FeatureSpec(f"x{i}", (i,), "float64") for i in range(d)),
        target_name="y",
        classes=tuple(str(c) for c in range(n_classes)),
    )
    return Dataset(matrix=X, labels=y, group_ids=[f"g{i}" for i in range(n)], dictionary=dictionary)
