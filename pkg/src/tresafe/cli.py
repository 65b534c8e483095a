"""Command-line entry point for the TRE model-release workflow.

Every command reads and writes files (the audit trail an output checker
archives); nothing of substance goes to stdout only.  Exit codes: 0 on
success or an approved release, 1 for usage errors, 2 when a release is
denied or a check fails, 3 for unreadable or malformed inputs.
"""

from __future__ import annotations

import json
import os

import click
import numpy as np

from .attacks import MiaReport, lira_mia, salem_mia, worst_case_mia
from .dataset import (
    Dataset,
    load_dataset,
    parse_data_dictionary,
    reserve_holdout,
    split_three_way,
    write_dataset_csv,
)
from .errors import FormatError, TresafeError
from .harness import (
    compare_scenarios,
    fit_vulnerability_predictor,
    load_archive_rows,
    load_config,
    risk_generalization,
    run_grid,
)
from .metrics import PriorAssumption
from .models import (
    ModelSpec,
    deserialize_model,
    fit,
    serialize_model,
)
from .plots import (
    save_risk_range_scatter,
    save_roc_figure,
    save_scenario_scatter,
    save_score_histogram,
)
from .safemodel import (
    ReleaseContext,
    ReleaseThresholds,
    Snapshot,
    check_params,
    parse_rules,
    request_release,
    snapshot,
    write_report,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CHECK_FAILED = 2
EXIT_DATA = 3


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _load_data(csv_path: str, dict_path: str) -> Dataset:
    dictionary = parse_data_dictionary(_read_bytes(dict_path))
    return load_dataset(_read_bytes(csv_path), dictionary)


def _load_model_file(path: str):
    if not path.endswith(".json"):
        raise FormatError(f"model files must use the canonical .json envelope, got {path!r}")
    return deserialize_model(_read_bytes(path))


def _write(path: str, data: bytes) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(data)


def _write_json(path: str, obj) -> None:
    _write(path, (json.dumps(obj, indent=2, allow_nan=False) + "\n").encode("utf-8"))


def _attack_figures(report: MiaReport, out_dir: str, stem: str) -> None:
    scores = np.array([s for _, s, _ in report.per_record_scores])
    members = np.array([m for _, _, m in report.per_record_scores])
    save_roc_figure(scores, members, os.path.join(out_dir, f"{stem}_roc.png"),
                    title=f"{report.scenario} ROC")
    save_score_histogram(scores, members, os.path.join(out_dir, f"{stem}_scores.png"),
                         title=f"{report.scenario} scores")


@click.group(name="tresafe")
def cli():
    """Disclosure-risk checks for tabular models trained inside a TRE."""


@cli.command("split")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True),
              help="full dataset CSV")
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
@click.option("--holdout-fraction", default=0.25, show_default=True, type=float)
@click.option("--repeats", default=5, show_default=True, type=int)
def split_cmd(train_path, dict_path, out_dir, seed, holdout_fraction, repeats):
    """Reserve a group-disjoint holdout and write three-way research splits."""
    ds = _load_data(train_path, dict_path)
    part = reserve_holdout(ds, holdout_fraction, seed)
    research = ds.subset(part.research_indices)
    holdout = ds.subset(part.holdout_indices)
    _write(os.path.join(out_dir, "research.csv"), write_dataset_csv(research))
    _write(os.path.join(out_dir, "holdout.csv"), write_dataset_csv(holdout))
    _write_json(os.path.join(out_dir, "partition.json"), {
        "seed": seed,
        "holdout_fraction": holdout_fraction,
        "research_indices": list(part.research_indices),
        "holdout_indices": list(part.holdout_indices),
    })
    splits = []
    for repeat in range(repeats):
        s = split_three_way(range(research.n), repeat % 5, seed)
        splits.append({
            "repeat_id": s.repeat_id, "seed": s.seed,
            "train": list(s.train), "shadow": list(s.shadow), "test": list(s.test),
        })
    _write_json(os.path.join(out_dir, "splits.json"), splits)
    click.echo(f"wrote research/holdout CSVs and {repeats} splits to {out_dir}")


@cli.command("train")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True),
              help="JSON {kind, params}")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
def train_cmd(spec_path, train_path, dict_path, out_dir, seed):
    """Fit a model from a spec file; writes the model and its snapshot."""
    spec_obj = json.loads(_read_bytes(spec_path))
    spec = ModelSpec(kind=spec_obj["kind"], params=spec_obj.get("params", {}), seed=seed)
    ds = _load_data(train_path, dict_path)
    model = fit(spec, ds)
    _write(os.path.join(out_dir, "model.json"), serialize_model(model))
    snap = snapshot(model, ds)
    _write_json(os.path.join(out_dir, "model.snapshot.json"), snap.to_json_obj())
    click.echo(f"fitted {spec.kind}; wrote model.json and model.snapshot.json to {out_dir}")


@cli.command("check-params")
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--spec", "spec_path", type=click.Path(exists=True),
              help="JSON {kind, params} to check")
@click.option("--model", "model_path", type=click.Path(exists=True),
              help="canonical model file to check instead of a spec")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_context
def check_params_cmd(ctx, rules_path, spec_path, model_path, out_dir):
    """Check hyperparameters against the TRE rules file."""
    if (spec_path is None) == (model_path is None):
        raise click.UsageError("provide exactly one of --spec or --model")
    rules = parse_rules(_read_bytes(rules_path))
    if spec_path:
        obj = json.loads(_read_bytes(spec_path))
        kind, params = obj["kind"], obj.get("params", {})
    else:
        model = _load_model_file(model_path)
        kind, params = model.kind, model.params
    result = check_params(kind, params, rules)
    _write_json(os.path.join(out_dir, "check.json"), {
        "kind": kind, "params": params, **result.to_json_obj(),
    })
    if result.violations:
        click.echo(f"{len(result.violations)} violation(s); details in {out_dir}/check.json")
        ctx.exit(EXIT_CHECK_FAILED)
    click.echo(f"parameters comply with the rules; report in {out_dir}/check.json")


@cli.command("attack")
@click.option("--scenario", required=True,
              type=click.Choice(["worst_case", "salem1", "salem_synth", "salem2", "lira"]))
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--train", "train_path", required=True, type=click.Path(exists=True),
              help="the model's training data (members)")
@click.option("--holdout", "holdout_path", required=True, type=click.Path(exists=True),
              help="set-aside rows (non-members / lira population)")
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--shadow", "shadow_path", type=click.Path(exists=True),
              help="shadow data CSV for salem scenarios")
@click.option("--shadow-dict", "shadow_dict_path", type=click.Path(exists=True),
              help="dictionary for the shadow CSV (defaults to --dict)")
@click.option("--n-shadow", default=8, show_default=True, type=int,
              help="shadow model count for lira")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
def attack_cmd(scenario, model_path, train_path, holdout_path, dict_path, shadow_path,
               shadow_dict_path, n_shadow, out_dir, seed):
    """Run one membership-inference scenario against a model file."""
    model = _load_model_file(model_path)
    train = _load_data(train_path, dict_path)
    holdout = _load_data(holdout_path, dict_path)
    spec = ModelSpec(model.kind, dict(model.params), seed=model.fit_meta.get("seed", 0))
    if scenario == "worst_case":
        report = worst_case_mia(model, train, holdout, seed)
    elif scenario == "lira":
        report = lira_mia(spec, model, train, holdout, n_shadow=n_shadow, seed=seed)
    else:
        if not shadow_path:
            raise click.UsageError(f"--shadow is required for scenario {scenario}")
        shadow = _load_data(shadow_path, shadow_dict_path or dict_path)
        report = salem_mia(scenario, spec, model, shadow, train, holdout, seed)
    stem = f"attack_{scenario}"
    _write_json(os.path.join(out_dir, f"{stem}.json"), report.to_json_obj())
    _attack_figures(report, out_dir, stem)
    click.echo(
        f"{scenario}: AUC={report.metrics.AUC:.3f} "
        f"PDIF={report.metrics.PDIF if report.metrics.PDIF is not None else 'n/a'}; "
        f"report and figures in {out_dir}"
    )


@cli.command("release")
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--snapshot", "snapshot_path", required=True, type=click.Path(exists=True))
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--train", "train_path", required=True, type=click.Path(exists=True))
@click.option("--holdout", "holdout_path", required=True, type=click.Path(exists=True))
@click.option("--dict", "dict_path", required=True, type=click.Path(exists=True))
@click.option("--researcher", required=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
@click.option("--claimed-auc", type=float, help="the researcher's reported AUC")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              help="pipeline manifest JSON {n_input_rows, n_output_rows, augmentation_declared}")
@click.option("--prior-a", default=0.1, show_default=True, type=float,
              help="assumed member proportion among attacker-held rows")
@click.option("--thresholds", "thresholds_path", type=click.Path(exists=True),
              help="JSON overriding the release thresholds")
@click.option("--white-box/--black-box", default=True, show_default=True,
              help="whether ensemble members are checked individually")
@click.pass_context
def release_cmd(ctx, model_path, snapshot_path, rules_path, train_path, holdout_path,
                dict_path, researcher, out_dir, seed, claimed_auc, manifest_path,
                prior_a, thresholds_path, white_box):
    """Run the full request-release battery; exit 0 approve, 2 deny."""
    model = _load_model_file(model_path)
    snap = Snapshot.from_json_obj(json.loads(_read_bytes(snapshot_path)))
    rules = parse_rules(_read_bytes(rules_path))
    train = _load_data(train_path, dict_path)
    holdout = _load_data(holdout_path, dict_path)
    manifest = json.loads(_read_bytes(manifest_path)) if manifest_path else None
    thresholds = ReleaseThresholds()
    if thresholds_path:
        overrides = json.loads(_read_bytes(thresholds_path))
        thresholds = ReleaseThresholds(**overrides)
    context = ReleaseContext(
        model=model,
        snapshot=snap,
        rules=rules,
        train=train,
        holdout=holdout,
        researcher=researcher,
        model_save_file=os.path.basename(model_path),
        seed=seed,
        claimed_auc=claimed_auc,
        pipeline_manifest=manifest,
        prior=PriorAssumption(prior_a),
        thresholds=thresholds,
        white_box=white_box,
    )
    report = request_release(context)
    _write(os.path.join(out_dir, "release_report.json"), write_report(report))
    if report.released_model is not None and report.released_model is not model:
        # dp refit with the checker-chosen seed is the artefact that leaves
        _write(os.path.join(out_dir, "released_model.json"),
               serialize_model(report.released_model))
    for scenario, attack_report in report.attack_reports.items():
        _attack_figures(attack_report, out_dir, f"release_{scenario}")
    click.echo(f"recommendation: {report.recommendation}")
    click.echo(f"report written to {out_dir}/release_report.json")
    if report.recommendation != "Run file {} through next step of checking procedure".format(
        os.path.basename(model_path)
    ):
        ctx.exit(EXIT_CHECK_FAILED)


@cli.command("sweep")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int, help="overrides the config master_seed")
@click.option("--workers", default=1, show_default=True, type=int)
def sweep_cmd(config_path, out_dir, seed, workers):
    """Run the hyperparameter sweep; writes archive.csv and its sidecar."""
    config = load_config(_read_bytes(config_path))
    config.master_seed = seed
    archive = run_grid(config, workers=workers)
    _write(os.path.join(out_dir, "archive.csv"), archive.to_csv_bytes())
    _write(os.path.join(out_dir, "archive.meta.json"), archive.to_meta_bytes())
    click.echo(f"wrote {len(archive.rows)} rows to {out_dir}/archive.csv")


@cli.command("compare")
@click.option("--archive", "archive_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--metric", default="AUC", show_default=True)
@click.option("--baseline", default="worst_case", show_default=True)
@click.option("--risk-threshold", default=0.6, show_default=True, type=float)
@click.option("--margin", default=0.05, show_default=True, type=float)
@click.option("--risk-ranges", is_flag=True, help="also write min/max risk across datasets")
def compare_cmd(archive_path, out_dir, metric, baseline, risk_threshold, margin, risk_ranges):
    """Compare attack scenarios cell by cell across an archive."""
    rows = load_archive_rows(_read_bytes(archive_path))
    result = compare_scenarios(
        rows, metric=metric, baseline=baseline,
        risk_threshold=risk_threshold, margin=margin,
    )
    differences = result.pop("differences")
    import csv as _csv
    import io as _io

    out = _io.StringIO()
    if differences:
        writer = _csv.DictWriter(out, fieldnames=list(differences[0]), lineterminator="\n")
        writer.writeheader()
        for row in differences:
            writer.writerow(row)
    _write(os.path.join(out_dir, "comparison.csv"), out.getvalue().encode("utf-8"))
    _write_json(os.path.join(out_dir, "comparison.json"), result)
    if differences:
        save_scenario_scatter(
            differences, os.path.join(out_dir, "comparison.png"),
            metric=metric, baseline=baseline, risk_threshold=risk_threshold,
        )
    if risk_ranges:
        table = risk_generalization(rows)
        out = _io.StringIO()
        if table:
            writer = _csv.DictWriter(out, fieldnames=list(table[0]), lineterminator="\n")
            writer.writeheader()
            for row in table:
                writer.writerow(row)
        _write(os.path.join(out_dir, "ranges.csv"), out.getvalue().encode("utf-8"))
        if table:
            save_risk_range_scatter(table, os.path.join(out_dir, "ranges.png"))
    click.echo(
        f"compared {result['cells_compared']} cells; "
        f"{result['exceed_count']} exceed the baseline by > {margin}"
    )


@cli.command("predict-vuln")
@click.option("--archive", "archive_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", required=True, type=int)
def predict_vuln_cmd(archive_path, out_dir, seed):
    """Train the vulnerability meta-predictor on a sweep archive."""
    rows = load_archive_rows(_read_bytes(archive_path))
    meta_model, evaluation = fit_vulnerability_predictor(rows, seed)
    _write(os.path.join(out_dir, "vulnerability_predictor.json"), serialize_model(meta_model))
    _write_json(os.path.join(out_dir, "vulnerability_eval.json"), evaluation)
    click.echo(
        "meta-predictor: weighted accuracy {:.3f}, vulnerable recall {}".format(
            evaluation["weighted_accuracy"],
            f"{evaluation['vulnerable_recall']:.3f}" if evaluation["vulnerable_recall"] is not None else "n/a",
        )
    )


def main(argv=None) -> int:
    """Entry point with the documented exit-code mapping."""
    try:
        # In non-standalone mode click returns ctx.exit codes instead of
        # calling sys.exit.
        rv = cli.main(args=argv, standalone_mode=False)
        return int(rv) if isinstance(rv, int) else EXIT_OK
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        if exc.ctx is not None:
            click.echo(exc.ctx.get_usage(), err=True)
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except (TresafeError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
