"""Safe-wrapper layer: hyperparameter constraints, fit snapshots, tamper
detection, and the request-release check battery.

The constraints grammar is JSON: a map of model kind to a ``rules`` list,
where each rule is either a leaf ``{"keyword", "operator", "value"}`` with
operator ``min``/``max``/``equals``/``is_type``, or a combinator
``{"operator": "and"|"or", "subexpr": [...]}``.  Unknown model kinds fail
closed: no rules means no release.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .attacks import AiaSettings, MiaReport, attribute_risk_ratio, lira_mia, worst_case_mia
from .dataset import Dataset, write_dataset_csv
from .errors import DegenerateAttributeError, SchemaError
from .metrics import MetricSet, PriorAssumption, attacker_probability, auc
from .models import (
    DISPLAY_NAMES,
    ModelSpec,
    TrainedModel,
    data_fingerprint,
    fit,
    forest_member_models,
    internals_digest,
    k_anonymity,
    model_digest,
    predict_proba,
    serialize_model,
)
from .seeds import derive_seed

LEAF_OPERATORS = ("min", "max", "equals", "is_type")
COMBINATORS = ("and", "or")
IS_TYPE_NAMES = {"int": int, "float": float, "bool": bool, "str": str}

APPROVE_TEMPLATE = "Run file {name} through next step of checking procedure"
DENY_TEXT = "Do not allow release"
TAMPER_TEMPLATE = "parameter {name} changed from {old} to {new} after the model was fitted"
STRUCTURE_TAMPER_TEXT = "model internals changed after the model was fitted (digest mismatch)"


@dataclass(frozen=True)
class Rule:
    """One constraint: a leaf comparison or an and/or over sub-rules."""

    operator: str
    keyword: str | None = None
    value: object = None
    subexpr: tuple["Rule", ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.operator in LEAF_OPERATORS

    def to_json_obj(self) -> dict:
        if self.is_leaf:
            return {"keyword": self.keyword, "operator": self.operator, "value": self.value}
        return {"operator": self.operator, "subexpr": [r.to_json_obj() for r in self.subexpr]}


@dataclass
class RuleSet:
    """Per-model-kind constraint lists."""

    kinds: dict[str, tuple[Rule, ...]] = field(default_factory=dict)

    def rules_for(self, kind: str) -> tuple[Rule, ...] | None:
        return self.kinds.get(kind)

    def to_json_obj(self) -> dict:
        return {
            kind: {"rules": [r.to_json_obj() for r in rules]}
            for kind, rules in self.kinds.items()
        }


def _parse_rule(obj) -> Rule:
    if not isinstance(obj, dict) or "operator" not in obj:
        raise SchemaError(f"rule must be an object with an 'operator', got {obj!r}")
    op = obj["operator"]
    if op in COMBINATORS:
        sub = obj.get("subexpr")
        if not isinstance(sub, list) or not sub:
            raise SchemaError(f"combinator {op!r} needs a non-empty 'subexpr' list")
        return Rule(operator=op, subexpr=tuple(_parse_rule(s) for s in sub))
    if op not in LEAF_OPERATORS:
        raise SchemaError(f"unknown rule operator {op!r}")
    if "keyword" not in obj or "value" not in obj:
        raise SchemaError(f"leaf rule must have 'keyword' and 'value', got {obj!r}")
    value = obj["value"]
    if op == "is_type":
        if value not in IS_TYPE_NAMES:
            raise SchemaError(f"is_type value must be one of {sorted(IS_TYPE_NAMES)}, got {value!r}")
    elif op in ("min", "max"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(f"{op} rule value must be numeric, got {value!r}")
    return Rule(operator=op, keyword=str(obj["keyword"]), value=value)


def parse_rules(text: bytes | str) -> RuleSet:
    """Parse a constraints file; rejects unknown operators."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"rules file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("rules file must be a JSON object keyed by model kind")
    kinds = {}
    for kind, block in obj.items():
        if not isinstance(block, dict) or "rules" not in block or not isinstance(block["rules"], list):
            raise SchemaError(f"entry for {kind!r} must be an object with a 'rules' list")
        kinds[str(kind)] = tuple(_parse_rule(r) for r in block["rules"])
    return RuleSet(kinds=kinds)


def load_default_rules() -> RuleSet:
    path = os.path.join(os.path.dirname(__file__), "data", "default_rules.json")
    with open(path, "rb") as fh:
        return parse_rules(fh.read())


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def rule_satisfied(rule: Rule, params: dict) -> bool:
    """Recursive truth value of a rule against a parameter map."""
    if rule.operator == "and":
        return all(rule_satisfied(r, params) for r in rule.subexpr)
    if rule.operator == "or":
        return any(rule_satisfied(r, params) for r in rule.subexpr)
    if rule.keyword not in params:
        return False
    value = params[rule.keyword]
    if rule.operator == "min":
        return _is_number(value) and value >= rule.value
    if rule.operator == "max":
        return _is_number(value) and value <= rule.value
    if rule.operator == "equals":
        return type(value) is type(rule.value) and value == rule.value
    # is_type: exact type match; bool is not an int here.
    expected = IS_TYPE_NAMES[rule.value]
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def _leaf_violation_message(rule: Rule, params: dict) -> str:
    if rule.keyword not in params:
        return f"parameter {rule.keyword} is not set; constraint {rule.operator} {rule.value!r} applies"
    value = params[rule.keyword]
    if rule.operator == "min":
        return (
            f"parameter {rule.keyword} = {value} identified as less than the "
            f"recommended min value of {rule.value}."
        )
    if rule.operator == "max":
        return (
            f"parameter {rule.keyword} = {value} identified as greater than the "
            f"recommended max value of {rule.value}."
        )
    if rule.operator == "equals":
        return (
            f"parameter {rule.keyword} = {value} identified as different than the "
            f"recommended fixed value of {rule.value}."
        )
    return (
        f"parameter {rule.keyword} = {value!r} identified as different type to "
        f"recommendation of {rule.value}."
    )


@dataclass
class CheckResult:
    """Outcome of checking one parameter map against the rules."""

    violations: list[dict] = field(default_factory=list)
    adjusted_params: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json_obj(self) -> dict:
        return {
            "violations": list(self.violations),
            "adjusted_params": dict(self.adjusted_params),
            "warnings": list(self.warnings),
        }


def _collect(rule: Rule, params: dict, violations: list, fixes: dict) -> None:
    if rule.operator == "and":
        for sub in rule.subexpr:
            _collect(sub, params, violations, fixes)
        return
    if rule.operator == "or":
        if rule_satisfied(rule, params):
            return
        violations.append(
            {
                "keyword": "/".join(sorted({r.keyword or "or" for r in rule.subexpr})),
                "message": "none of the alternative constraints is satisfied: "
                + "; ".join(_leaf_violation_message(r, params) for r in rule.subexpr if r.is_leaf),
            }
        )
        # Repair along the first alternative only.
        _collect(rule.subexpr[0], params, [], fixes)
        return
    if rule_satisfied(rule, params):
        return
    violations.append({"keyword": rule.keyword, "message": _leaf_violation_message(rule, params)})
    if rule.operator in ("min", "max", "equals"):
        fixes[rule.keyword] = rule.value


def check_params(kind: str, params: dict, rules: RuleSet) -> CheckResult:
    """Evaluate every rule for the kind; min/max/equals violations are
    auto-fixed in adjusted_params with a warning, is_type ones are not.
    A kind with no rules yields a single fail-closed violation."""
    result = CheckResult(adjusted_params=dict(params))
    kind_rules = rules.rules_for(kind)
    if kind_rules is None:
        result.violations.append(
            {"keyword": "*", "message": f"no rules defined for model kind '{kind}'"}
        )
        return result
    fixes: dict = {}
    for rule in kind_rules:
        _collect(rule, params, result.violations, fixes)
    for name, value in fixes.items():
        old = params.get(name, "<unset>")
        result.adjusted_params[name] = value
        result.warnings.append(f"parameter {name} adjusted from {old} to {value}")
    return result


# --- snapshots and tamper detection ------------------------------------------


@dataclass
class Snapshot:
    """Copy of a freshly fitted model's identity for later comparison."""

    params: dict
    model_digest: str
    internals_digest: str
    data_fingerprint: str
    k_anonymity: int | None
    timestamp: int

    def to_json_obj(self) -> dict:
        return {
            "params": dict(self.params),
            "model_digest": self.model_digest,
            "internals_digest": self.internals_digest,
            "data_fingerprint": self.data_fingerprint,
            "k_anonymity": self.k_anonymity,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Snapshot":
        return cls(
            params=dict(obj["params"]),
            model_digest=obj["model_digest"],
            internals_digest=obj["internals_digest"],
            data_fingerprint=obj["data_fingerprint"],
            k_anonymity=obj["k_anonymity"],
            timestamp=int(obj["timestamp"]),
        )


def _snapshot_time() -> int:
    # Honour the reproducible-builds convention so archived artefacts can be
    # byte-stable when required.
    env = os.environ.get("SOURCE_DATE_EPOCH")
    return int(env) if env else int(time.time())


def snapshot(model: TrainedModel, train: Dataset | None = None) -> Snapshot:
    """Record params and digests of a freshly fitted model; computes the
    k-anonymity value when the kind supports it and train is supplied."""
    k_anon = None
    if train is not None and model.kind in ("decision_tree", "random_forest"):
        k_anon = k_anonymity(model, train)
    return Snapshot(
        params=dict(model.params),
        model_digest=model_digest(model),
        internals_digest=internals_digest(model),
        data_fingerprint=model.fit_meta["data_fingerprint"],
        k_anonymity=k_anon,
        timestamp=_snapshot_time(),
    )


def detect_tampering(model: TrainedModel, snap: Snapshot) -> list[str]:
    """Human-readable differences between the model now and at fit time."""
    diffs = []
    names = sorted(set(snap.params) | set(model.params))
    for name in names:
        old = snap.params.get(name, "<unset>")
        new = model.params.get(name, "<unset>")
        if old != new or type(old) is not type(new):
            diffs.append(TAMPER_TEMPLATE.format(name=name, old=old, new=new))
    if internals_digest(model) != snap.internals_digest:
        diffs.append(STRUCTURE_TAMPER_TEXT)
    return diffs


# --- request_release ----------------------------------------------------------


@dataclass
class ReleaseThresholds:
    """TRE risk-appetite knobs for the release decision."""

    deny_auc_above_null: bool = True
    pdif_min: float = 0.05
    tpr_at_fpr_key: str = "0.1"
    tpr_at_fpr_max: float = 0.2
    arr_max: float = 1.25
    size_warn_ratio: float = 0.1
    size_deny_ratio: float = 1.0
    performance_drift: float = 0.05
    k_anonymity_min: int | None = None
    lira_shadow_models: int = 8
    aia_n_samples: int = 100
    aia_k_pct: float = 10.0

    def to_json_obj(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ReleaseContext:
    """Everything request_release needs to reach a decision."""

    model: TrainedModel
    snapshot: Snapshot
    rules: RuleSet
    train: Dataset
    holdout: Dataset
    researcher: str
    model_save_file: str
    seed: int
    claimed_auc: float | None = None
    pipeline_manifest: dict | None = None
    prior: PriorAssumption = field(default_factory=lambda: PriorAssumption(0.1))
    thresholds: ReleaseThresholds = field(default_factory=ReleaseThresholds)
    white_box: bool = True


@dataclass
class ReleaseReport:
    """The release decision record written for output checkers."""

    researcher: str
    model_type: str
    model_save_file: str
    details: str
    recommendation: str
    reason: str | None
    checks: dict
    released_model: TrainedModel | None = None  # dp refit, when applicable
    attack_reports: dict = field(default_factory=dict)  # scenario -> MiaReport


def _mia_threshold_failures(name: str, metrics: MetricSet, th: ReleaseThresholds) -> list[str]:
    failures = []
    if (
        th.deny_auc_above_null
        and metrics.AUC is not None
        and metrics.AUC_null_hi is not None
        and metrics.AUC > metrics.AUC_null_hi
    ):
        failures.append(
            f"{name}: attack AUC {metrics.AUC:.3f} exceeds the chance ceiling "
            f"{metrics.AUC_null_hi:.3f}"
        )
    if metrics.PDIF is not None and metrics.PDIF < th.pdif_min:
        failures.append(f"{name}: PDIF {metrics.PDIF:.4f} below {th.pdif_min}")
    tpr = metrics.tpr_at_fpr.get(th.tpr_at_fpr_key)
    if tpr is not None and tpr >= th.tpr_at_fpr_max:
        failures.append(
            f"{name}: TPR {tpr:.3f} at FPR {th.tpr_at_fpr_key} reaches {th.tpr_at_fpr_max}"
        )
    return failures


def _holdout_auc(model: TrainedModel, holdout: Dataset) -> float:
    probs = predict_proba(model, holdout.matrix)
    if model.n_classes == 2:
        return auc(probs[:, 1], holdout.labels)
    # Macro one-vs-rest for multi-class targets.
    values = []
    for c in range(model.n_classes):
        labels = (holdout.labels == c).astype(int)
        if labels.min() == labels.max():
            continue
        values.append(auc(probs[:, c], labels))
    return float(np.mean(values)) if values else 0.5


def request_release(ctx: ReleaseContext) -> ReleaseReport:
    """Run the full check battery, in order, and assemble the report.

    Structural failures (constraints, tampering, instance-based kinds,
    provenance) decide the outcome on their own; the attack battery is then
    skipped and marked as such, mirroring fail-closed precedence.
    """
    th = ctx.thresholds
    checks: dict = {"thresholds": th.to_json_obj(), "seed": ctx.seed}
    hard: list[str] = []
    model = ctx.model

    # 1. constraint compliance, for current and fit-time parameters
    current = check_params(model.kind, model.params, ctx.rules)
    at_fit = check_params(model.kind, ctx.snapshot.params, ctx.rules)
    checks["constraints"] = {
        "current": current.to_json_obj(),
        "at_fit_time": at_fit.to_json_obj(),
    }
    if current.ok and at_fit.ok:
        details = "Model parameters are within recommended ranges.\n"
    else:
        seen = []
        for v in current.violations + at_fit.violations:
            if v["message"] not in seen:
                seen.append(v["message"])
        details = (
            "WARNING: model parameters may present a disclosure risk:\n- "
            + "\n- ".join(seen)
        )
        hard.append(details)

    # 2./3. tampering between fit and release request
    diffs = detect_tampering(model, ctx.snapshot)
    param_diffs = [d for d in diffs if d != STRUCTURE_TAMPER_TEXT]
    structure_diffs = [d for d in diffs if d == STRUCTURE_TAMPER_TEXT]
    checks["parameter_tampering"] = {"differences": param_diffs}
    checks["structure_tampering"] = {"differences": structure_diffs}
    if param_diffs:
        hard.append(
            f"WARNING: basic parameters differ in {len(param_diffs)} places:\n"
            + "\n".join(param_diffs) + "\n"
        )
    if structure_diffs:
        hard.append("WARNING: " + structure_diffs[0] + "\n")

    # 4. instance-based prohibition
    if model.kind == "knn":
        msg = (
            "Model of type knn is instance-based: its internals contain the "
            "training rows verbatim, so release is never permitted."
        )
        checks["instance_based"] = {"status": "fail", "message": msg}
        hard.append(msg)
    else:
        checks["instance_based"] = {"status": "pass"}

    # 5a. provenance: the supplied training data must be the fitting data
    if data_fingerprint(ctx.train) != model.fit_meta["data_fingerprint"]:
        msg = "training data fingerprint does not match the model's fit record"
        checks["provenance"] = {"status": "fail", "message": msg}
        hard.append(msg)
    else:
        checks["provenance"] = {"status": "pass"}

    # 5b. DP seed discipline: the checker, not the researcher, picks the
    # noise seed of the released dp variant.
    released_model = model
    if model.kind == "dp_svc":
        refit_seed = derive_seed(ctx.seed, "dp-release-refit")
        if checks["provenance"]["status"] == "pass":
            spec = ModelSpec(model.kind, dict(model.params), seed=refit_seed)
            released_model = fit(spec, ctx.train)
            checks["dp_seed"] = {
                "status": "refit",
                "checker_seed": refit_seed,
                "eps": model.params["eps"],
                "delta": model.params["delta"],
            }
        else:
            checks["dp_seed"] = {"status": "skipped", "message": "provenance failed"}
    else:
        checks["dp_seed"] = {"status": "not_applicable"}

    # 6. k-anonymity for trees and forests
    if model.kind in ("decision_tree", "random_forest") and checks["provenance"]["status"] == "pass":
        k_value = k_anonymity(model, ctx.train)
        checks["k_anonymity"] = {"value": k_value}
        if th.k_anonymity_min is not None and k_value < th.k_anonymity_min:
            msg = f"k-anonymity {k_value} below the configured minimum {th.k_anonymity_min}"
            checks["k_anonymity"]["status"] = "fail"
            hard.append(msg)
    else:
        checks["k_anonymity"] = {"status": "not_applicable"}

    # 7. model file size vs training data size
    model_bytes = len(serialize_model(released_model))
    data_bytes = len(write_dataset_csv(ctx.train))
    ratio = model_bytes / data_bytes
    checks["model_size"] = {
        "model_bytes": model_bytes,
        "training_data_bytes": data_bytes,
        "ratio": ratio,
    }
    warnings = []
    if ratio >= th.size_deny_ratio:
        msg = (
            f"model file ({model_bytes} bytes) is not smaller than the training "
            f"data ({data_bytes} bytes); stored rows suspected"
        )
        checks["model_size"]["status"] = "fail"
        hard.append(msg)
    elif ratio > th.size_warn_ratio:
        warnings.append(
            f"model file is {ratio:.2f}x the training data size; expected orders of magnitude smaller"
        )
        checks["model_size"]["status"] = "warn"
    else:
        checks["model_size"]["status"] = "pass"

    # 8. holdout performance vs the researcher's claim
    holdout_auc = _holdout_auc(released_model, ctx.holdout)
    checks["holdout_performance"] = {"holdout_auc": holdout_auc, "claimed_auc": ctx.claimed_auc}
    if ctx.claimed_auc is not None and holdout_auc < ctx.claimed_auc - th.performance_drift:
        msg = (
            f"holdout AUC {holdout_auc:.3f} falls more than {th.performance_drift} below "
            f"the claimed {ctx.claimed_auc:.3f}; possible over-fitting"
        )
        checks["holdout_performance"]["status"] = "fail"
        hard.append(msg)
    else:
        checks["holdout_performance"]["status"] = "pass"

    # 9. pipeline row counts (backdoor/poisoning guard)
    manifest = ctx.pipeline_manifest or {}
    n_in = manifest.get("n_input_rows")
    n_out = manifest.get("n_output_rows")
    augmented = bool(manifest.get("augmentation_declared", False))
    checks["pipeline_rows"] = {
        "n_input_rows": n_in,
        "n_output_rows": n_out,
        "augmentation_declared": augmented,
    }
    if n_in is not None and n_out is not None and n_out > n_in and not augmented:
        msg = (
            f"pipeline increased the record count from {n_in} to {n_out} "
            "without declared augmentation"
        )
        checks["pipeline_rows"]["status"] = "fail"
        hard.append(msg)
    else:
        checks["pipeline_rows"]["status"] = "pass"

    # 10.-12. attack battery, skipped once the outcome is already decided
    attack_reports: dict = {}
    if hard:
        for name in ("mia_worst_case", "aia", "lira", "ensemble_members"):
            checks[name] = {"status": "skipped", "message": "structural checks already failed"}
    else:
        wc = worst_case_mia(released_model, ctx.train, ctx.holdout, derive_seed(ctx.seed, "release-wc"))
        attack_reports["worst_case"] = wc
        checks["mia_worst_case"] = _mia_check_entry(wc, ctx.prior)
        hard.extend(_mia_threshold_failures("worst-case MIA", wc.metrics, th))

        checks["aia"] = {"attributes": {}}
        for spec_feature in ctx.train.dictionary.features:
            settings = AiaSettings(
                attribute=spec_feature.name, n_samples=th.aia_n_samples, k_pct=th.aia_k_pct
            )
            try:
                report = attribute_risk_ratio(released_model, ctx.train, ctx.holdout, settings)
            except DegenerateAttributeError as exc:
                checks["aia"]["attributes"][spec_feature.name] = {"status": "skipped", "message": str(exc)}
                continue
            checks["aia"]["attributes"][spec_feature.name] = report.to_json_obj()
            if report.arr > th.arr_max:
                arr_text = "inf" if math.isinf(report.arr) else f"{report.arr:.3f}"
                hard.append(
                    f"attribute inference: ARR {arr_text} for attribute "
                    f"'{spec_feature.name}' exceeds {th.arr_max}"
                )

        li = lira_mia(
            ModelSpec(released_model.kind, dict(released_model.params), seed=released_model.fit_meta.get("seed", 0)),
            released_model,
            ctx.train,
            ctx.holdout,
            n_shadow=th.lira_shadow_models,
            seed=derive_seed(ctx.seed, "release-lira"),
        )
        attack_reports["lira"] = li
        checks["lira"] = _mia_check_entry(li, ctx.prior)
        hard.extend(_mia_threshold_failures("likelihood-ratio MIA", li.metrics, th))

        if model.kind == "random_forest" and ctx.white_box:
            member_entries = []
            for i, member in enumerate(forest_member_models(released_model)):
                mr = worst_case_mia(
                    member, ctx.train, ctx.holdout, derive_seed(ctx.seed, "release-member", i)
                )
                failures = _mia_threshold_failures(f"ensemble member {i}", mr.metrics, th)
                member_entries.append(
                    {"member": i, "AUC": mr.metrics.AUC, "PDIF": mr.metrics.PDIF,
                     "failures": failures}
                )
                hard.extend(failures)
            checks["ensemble_members"] = {"members": member_entries}
        else:
            checks["ensemble_members"] = {"status": "not_applicable"}

    if warnings:
        checks["warnings"] = warnings

    name = os.path.basename(ctx.model_save_file)
    if hard:
        recommendation = DENY_TEXT
        # Reason always opens with the parameter-range summary, then each
        # distinct failure on its own block.
        blocks = [details] + [h for h in hard if h != details]
        reason = "\n".join(b.rstrip("\n") for b in blocks)
    else:
        recommendation = APPROVE_TEMPLATE.format(name=name)
        reason = None
    return ReleaseReport(
        researcher=ctx.researcher,
        model_type=DISPLAY_NAMES.get(model.kind, model.kind),
        model_save_file=ctx.model_save_file,
        details=details,
        recommendation=recommendation,
        reason=reason,
        checks=checks,
        released_model=released_model,
        attack_reports=attack_reports,
    )


def _mia_check_entry(report: MiaReport, prior: PriorAssumption) -> dict:
    entry = report.to_json_obj()
    entry.pop("per_record_scores")  # row-level scores stay out of the release record
    m = report.metrics
    if m.TPR is not None and m.FPR is not None and (m.TPR > 0 or m.FPR > 0):
        entry["attacker_probability"] = attacker_probability(prior, m.TPR, m.FPR)
        entry["prior_A"] = prior.A
    return entry


def write_report(report: ReleaseReport) -> bytes:
    """Serialise the report with the stable top-level key order:
    researcher, model_type, model_save_file, details, recommendation,
    reason (only when present), checks."""
    obj: dict = {
        "researcher": report.researcher,
        "model_type": report.model_type,
        "model_save_file": report.model_save_file,
        "details": report.details,
        "recommendation": report.recommendation,
    }
    if report.reason is not None:
        obj["reason"] = report.reason
    obj["checks"] = report.checks
    return (json.dumps(obj, indent=2, allow_nan=False) + "\n").encode("utf-8")


def parse_report(data: bytes | str) -> ReleaseReport:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    obj = json.loads(data)
    return ReleaseReport(
        researcher=obj["researcher"],
        model_type=obj["model_type"],
        model_save_file=obj["model_save_file"],
        details=obj["details"],
        recommendation=obj["recommendation"],
        reason=obj.get("reason"),
        checks=obj.get("checks", {}),
    )
