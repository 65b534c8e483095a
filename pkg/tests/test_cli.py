import hashlib
import json
import os

import pytest

from tresafe.cli import main
from tresafe.dataset import reserve_holdout, write_dataset_csv
from tresafe.safemodel import load_default_rules
from tresafe.synth import make_synthetic

from conftest import dataset_files


def run(*argv):
    return main(list(argv))


def tree_hash(root):
    """Stable digest over every file under root (paths + contents)."""
    digest = hashlib.sha256()
    for base, _, files in sorted(os.walk(root)):
        for name in sorted(files):
            path = os.path.join(base, name)
            digest.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                digest.update(fh.read())
    return digest.hexdigest()


@pytest.fixture
def workspace(tmp_path):
    """Dataset files plus rules and a model spec, ready for the workflow."""
    ds = make_synthetic("separable", 260, n_features=4, seed=31)
    csv_path, dict_path = dataset_files(tmp_path, ds, "full")
    part = reserve_holdout(ds, 0.3, seed=5)
    research_csv = tmp_path / "research.csv"
    holdout_csv = tmp_path / "holdout.csv"
    research_csv.write_bytes(write_dataset_csv(ds.subset(part.research_indices)))
    holdout_csv.write_bytes(write_dataset_csv(ds.subset(part.holdout_indices)))
    rules_path = tmp_path / "rules.json"
    rules_path.write_text(json.dumps(load_default_rules().to_json_obj()))
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"kind": "decision_tree",
                                     "params": {"min_samples_leaf": 10}}))
    return {
        "tmp": tmp_path,
        "csv": csv_path,
        "dict": dict_path,
        "research": str(research_csv),
        "holdout": str(holdout_csv),
        "rules": str(rules_path),
        "spec": str(spec_path),
    }


def train_model(ws, out_name="trained"):
    out = ws["tmp"] / out_name
    code = run("train", "--spec", ws["spec"], "--train", ws["research"],
               "--dict", ws["dict"], "--out", str(out), "--seed", "7")
    assert code == 0
    return out


class TestSplit:
    def test_writes_partition_and_splits(self, workspace):
        out = workspace["tmp"] / "splits"
        code = run("split", "--train", workspace["csv"], "--dict", workspace["dict"],
                   "--out", str(out), "--seed", "3", "--holdout-fraction", "0.25")
        assert code == 0
        for name in ("research.csv", "holdout.csv", "partition.json", "splits.json"):
            assert (out / name).exists()
        partition = json.loads((out / "partition.json").read_text())
        splits = json.loads((out / "splits.json").read_text())
        assert len(splits) == 5
        n_research = len(partition["research_indices"])
        for entry in splits:
            assert sorted(entry["train"] + entry["shadow"] + entry["test"]) == list(range(n_research))


class TestTrain:
    def test_writes_model_and_snapshot(self, workspace):
        out = train_model(workspace)
        model = json.loads((out / "model.json").read_text())
        assert model["kind"] == "decision_tree"
        snap = json.loads((out / "model.snapshot.json").read_text())
        assert snap["params"]["min_samples_leaf"] == 10
        assert snap["timestamp"] == 1700000000  # SOURCE_DATE_EPOCH honoured

    def test_unreadable_input_is_exit_3(self, workspace):
        code = run("train", "--spec", workspace["spec"], "--train", workspace["research"],
                   "--dict", workspace["spec"],  # wrong file on purpose
                   "--out", str(workspace["tmp"] / "x"), "--seed", "1")
        assert code == 3


class TestCheckParams:
    def test_compliant_spec_exit_zero(self, workspace):
        out = workspace["tmp"] / "check"
        code = run("check-params", "--rules", workspace["rules"],
                   "--spec", workspace["spec"], "--out", str(out))
        assert code == 0
        assert json.loads((out / "check.json").read_text())["violations"] == []

    def test_violating_spec_exit_two(self, workspace):
        bad = workspace["tmp"] / "bad_spec.json"
        bad.write_text(json.dumps({"kind": "decision_tree",
                                   "params": {"min_samples_leaf": 2}}))
        out = workspace["tmp"] / "check2"
        code = run("check-params", "--rules", workspace["rules"], "--spec", str(bad),
                   "--out", str(out))
        assert code == 2
        report = json.loads((out / "check.json").read_text())
        assert report["adjusted_params"]["min_samples_leaf"] == 5

    def test_requires_exactly_one_input(self, workspace):
        assert run("check-params", "--rules", workspace["rules"],
                   "--out", str(workspace["tmp"] / "c")) == 1


class TestAttack:
    def test_worst_case_writes_report_and_figures(self, workspace):
        model_dir = train_model(workspace)
        out = workspace["tmp"] / "attack"
        code = run("attack", "--scenario", "worst_case",
                   "--model", str(model_dir / "model.json"),
                   "--train", workspace["research"], "--holdout", workspace["holdout"],
                   "--dict", workspace["dict"], "--out", str(out), "--seed", "11")
        assert code == 0
        report = json.loads((out / "attack_worst_case.json").read_text())
        assert report["scenario"] == "worst_case"
        assert report["per_record_scores"]
        assert (out / "attack_worst_case_roc.png").exists()
        assert (out / "attack_worst_case_scores.png").exists()

    def test_salem_requires_shadow(self, workspace):
        model_dir = train_model(workspace)
        code = run("attack", "--scenario", "salem1",
                   "--model", str(model_dir / "model.json"),
                   "--train", workspace["research"], "--holdout", workspace["holdout"],
                   "--dict", workspace["dict"],
                   "--out", str(workspace["tmp"] / "a2"), "--seed", "1")
        assert code == 1

    def test_non_canonical_model_is_exit_3(self, workspace):
        bogus = workspace["tmp"] / "model.pkl"
        bogus.write_bytes(b"\x80\x04weird")
        code = run("attack", "--scenario", "worst_case", "--model", str(bogus),
                   "--train", workspace["research"], "--holdout", workspace["holdout"],
                   "--dict", workspace["dict"],
                   "--out", str(workspace["tmp"] / "a3"), "--seed", "1")
        assert code == 3


class TestRelease:
    def release_args(self, workspace, model_dir, out):
        return [
            "release",
            "--model", str(model_dir / "model.json"),
            "--snapshot", str(model_dir / "model.snapshot.json"),
            "--rules", workspace["rules"],
            "--train", workspace["research"],
            "--holdout", workspace["holdout"],
            "--dict", workspace["dict"],
            "--researcher", "j4-smith",
            "--out", str(out),
            "--seed", "23",
        ]

    def test_approved_release_exit_zero(self, workspace):
        model_dir = train_model(workspace)
        out = workspace["tmp"] / "rel"
        assert run(*self.release_args(workspace, model_dir, out)) == 0
        report = json.loads((out / "release_report.json").read_text())
        assert report["recommendation"] == (
            "Run file model.json through next step of checking procedure"
        )
        assert (out / "release_worst_case_roc.png").exists()
        assert (out / "release_lira_roc.png").exists()

    def test_knn_release_denied_exit_two(self, workspace):
        knn_spec = workspace["tmp"] / "knn_spec.json"
        knn_spec.write_text(json.dumps({"kind": "knn", "params": {"k": 3}}))
        ws = dict(workspace, spec=str(knn_spec))
        model_dir = train_model(ws, "knn_model")
        out = workspace["tmp"] / "rel_knn"
        assert run(*self.release_args(workspace, model_dir, out)) == 2
        report = json.loads((out / "release_report.json").read_text())
        assert report["recommendation"] == "Do not allow release"
        assert "reason" in report


class TestSweepCompare:
    def sweep_config(self, workspace):
        cfg = {
            "datasets": [
                {"name": "memA", "regime": "memorize", "n_rows": 150,
                 "n_features": 4, "seed": 1},
            ],
            "grids": {"decision_tree": {"min_samples_leaf": [1, 20]}},
            "scenarios": ["worst_case", "salem1"],
            "n_repeats": 2,
            "master_seed": 0,
        }
        path = workspace["tmp"] / "sweep.json"
        path.write_text(json.dumps(cfg))
        return str(path)

    def test_sweep_then_compare(self, workspace):
        cfg = self.sweep_config(workspace)
        out = workspace["tmp"] / "runs"
        assert run("sweep", "--config", cfg, "--out", str(out), "--seed", "42") == 0
        assert (out / "archive.csv").exists()
        meta = json.loads((out / "archive.meta.json").read_text())
        assert meta["config"]["master_seed"] == 42
        cmp_out = workspace["tmp"] / "cmp"
        assert run("compare", "--archive", str(out / "archive.csv"),
                   "--out", str(cmp_out), "--risk-ranges") == 0
        assert (cmp_out / "comparison.json").exists()
        assert (cmp_out / "comparison.csv").exists()
        assert (cmp_out / "ranges.csv").exists()

    def test_predict_vuln(self, workspace, tmp_path):
        # hand-built archive with a separable vulnerability rule
        import csv as _csv

        rows = []
        for msl in range(1, 11):
            for rep in range(6):
                rows.append({
                    "dataset": "a", "kind": "decision_tree",
                    "params": f"min_samples_leaf={msl}", "repeat_id": rep,
                    "scenario": "worst_case", "vulnerable_mia": str(msl < 5),
                })
        path = tmp_path / "meta_archive.csv"
        with open(path, "w", newline="") as fh:
            writer = _csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
        out = tmp_path / "vuln"
        assert run("predict-vuln", "--archive", str(path), "--out", str(out), "--seed", "9") == 0
        ev = json.loads((out / "vulnerability_eval.json").read_text())
        assert ev["vulnerable_recall"] == 1.0
        assert (out / "vulnerability_predictor.json").exists()


class TestExitCodes:
    def test_help_exit_zero(self):
        assert run("--help") == 0

    def test_unknown_subcommand_exit_one(self):
        assert run("transmogrify") == 1

    def test_unknown_flag_exit_one(self):
        assert run("split", "--nonsense") == 1

    def test_missing_file_exit_one(self, workspace):
        # click validates the path exists -> usage error
        assert run("train", "--spec", "/nope.json", "--train", workspace["research"],
                   "--dict", workspace["dict"], "--out", "x", "--seed", "1") == 1


class TestDeterminism:
    def test_all_subcommands_byte_identical(self, workspace):
        def run_corpus(root):
            root.mkdir()
            split_out = root / "split"
            run("split", "--train", workspace["csv"], "--dict", workspace["dict"],
                "--out", str(split_out), "--seed", "3")
            train_out = root / "train"
            run("train", "--spec", workspace["spec"], "--train", str(split_out / "research.csv"),
                "--dict", workspace["dict"], "--out", str(train_out), "--seed", "7")
            check_out = root / "check"
            run("check-params", "--rules", workspace["rules"], "--spec", workspace["spec"],
                "--out", str(check_out))
            attack_out = root / "attack"
            run("attack", "--scenario", "worst_case", "--model", str(train_out / "model.json"),
                "--train", str(split_out / "research.csv"),
                "--holdout", str(split_out / "holdout.csv"),
                "--dict", workspace["dict"], "--out", str(attack_out), "--seed", "11")
            rel_out = root / "release"
            run("release", "--model", str(train_out / "model.json"),
                "--snapshot", str(train_out / "model.snapshot.json"),
                "--rules", workspace["rules"],
                "--train", str(split_out / "research.csv"),
                "--holdout", str(split_out / "holdout.csv"),
                "--dict", workspace["dict"], "--researcher", "r", "--out", str(rel_out),
                "--seed", "23")
            cfg = {
                "datasets": [{"name": "m", "regime": "memorize", "n_rows": 120,
                              "n_features": 4, "seed": 1}],
                "grids": {"decision_tree": {"min_samples_leaf": [1, 20]}},
                "scenarios": ["worst_case", "salem1"],
                "n_repeats": 2,
                "master_seed": 0,
            }
            cfg_path = root / "sweep.json"
            cfg_path.write_text(json.dumps(cfg))
            sweep_out = root / "sweep"
            run("sweep", "--config", str(cfg_path), "--out", str(sweep_out), "--seed", "42")
            cmp_out = root / "compare"
            run("compare", "--archive", str(sweep_out / "archive.csv"), "--out", str(cmp_out))
            return root

        first = run_corpus(workspace["tmp"] / "round1")
        second = run_corpus(workspace["tmp"] / "round2")
        assert tree_hash(first) == tree_hash(second)
