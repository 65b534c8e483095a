import numpy as np
import pytest

from tresafe.dataset import Dataset
from tresafe.errors import DataError, FormatError, ProvenanceError, ShapeError, SpecError
from tresafe.models import (
    ModelSpec,
    TrainedModel,
    cross_entropy_loss_and_grad,
    deserialize_model,
    embedded_training_rows,
    fit,
    forest_member_models,
    internals_digest,
    k_anonymity,
    laplace_weight_scale,
    model_digest,
    noise_free_weights,
    predict_proba,
    serialize_model,
    validate_params,
)
from tresafe.models.linear import LogisticModel
from tresafe.models.tree import DecisionTree, TreeNodes

from conftest import make_unique_rows_dataset

ALL_KINDS = [
    ("decision_tree", {}),
    ("random_forest", {"n_estimators": 5}),
    ("logistic_regression", {}),
    ("knn", {"k": 3}),
    ("dp_svc", {"dhat": 40}),
]


class TestFit:
    def test_unconstrained_tree_is_pure_on_unique_rows(self):
        ds = make_unique_rows_dataset(50, seed=1)
        model = fit(ModelSpec("decision_tree", {"min_samples_leaf": 1}), ds)
        probs = predict_proba(model, ds.matrix)
        assert (probs.argmax(axis=1) == ds.labels).all()
        # exhaustive purity check: every training row's leaf holds one class
        leaves = model.impl.apply(ds.matrix)
        for leaf in np.unique(leaves):
            rows = ds.labels[leaves == leaf]
            assert len(set(rows.tolist())) == 1

    def test_knn_k1_predicts_own_labels(self):
        ds = make_unique_rows_dataset(30, seed=2)
        model = fit(ModelSpec("knn", {"k": 1}), ds)
        probs = predict_proba(model, ds.matrix)
        assert (probs.argmax(axis=1) == ds.labels).all()

    def test_forest_refit_bit_identical(self):
        ds = make_unique_rows_dataset(40, seed=3)
        spec = ModelSpec("random_forest", {"n_estimators": 7}, seed=123)
        assert serialize_model(fit(spec, ds)) == serialize_model(fit(spec, ds))

    def test_unknown_param_rejected(self):
        ds = make_unique_rows_dataset(10, seed=4)
        with pytest.raises(SpecError, match="unknown parameter"):
            fit(ModelSpec("decision_tree", {"min_leaf": 2}), ds)

    @pytest.mark.parametrize(
        "kind,params",
        [("knn", {"k": 0}), ("random_forest", {"n_estimators": 0}), ("dp_svc", {"dhat": 0}),
         ("logistic_regression", {"epochs": -1})],
    )
    def test_non_positive_structural_params_rejected(self, kind, params):
        with pytest.raises(SpecError):
            validate_params(kind, params)

    def test_wrong_param_type_rejected(self):
        with pytest.raises(SpecError):
            validate_params("decision_tree", {"min_samples_leaf": 2.5})
        with pytest.raises(SpecError):
            validate_params("random_forest", {"bootstrap": 1})

    def test_class_absent_from_train(self, tiny_dictionary):
        matrix = np.zeros((6, 5))
        matrix[:, 0] = 1.0
        ds = Dataset(matrix=matrix, labels=[0] * 6, group_ids=[f"g{i}" for i in range(6)],
                     dictionary=tiny_dictionary)
        with pytest.raises(DataError, match="absent"):
            fit(ModelSpec("decision_tree", {}), ds)


class TestPredictProba:
    @pytest.mark.parametrize("kind,params", ALL_KINDS)
    def test_row_stochastic(self, kind, params):
        ds = make_unique_rows_dataset(45, d=4, seed=5, n_classes=3)
        model = fit(ModelSpec(kind, params, seed=2), ds)
        rng = np.random.default_rng(0)
        probs = predict_proba(model, rng.normal(size=(25, 4)))
        assert probs.shape == (25, 3)
        assert (probs >= 0).all() and (probs <= 1).all()
        assert np.abs(probs.sum(axis=1) - 1.0).max() < 1e-9

    def test_stump_returns_class_frequencies(self):
        ds = make_unique_rows_dataset(40, seed=6)
        # min_samples_leaf too large to allow any split: single leaf
        model = fit(ModelSpec("decision_tree", {"min_samples_leaf": 40}), ds)
        expected = np.bincount(ds.labels, minlength=2) / 40
        probs = predict_proba(model, ds.matrix)
        assert np.allclose(probs, expected)

    def test_zero_weight_logistic_is_uniform(self):
        impl = LogisticModel(np.zeros((4, 3)), np.zeros(3))
        model = TrainedModel(kind="logistic_regression", params={}, n_classes=3, impl=impl,
                             fit_meta={"n_train": 0, "n_features": 4, "data_fingerprint": "x"})
        probs = predict_proba(model, np.random.default_rng(1).normal(size=(6, 4)))
        assert np.allclose(probs, 1 / 3)

    def test_forest_probability_is_mean_of_trees(self):
        ds = make_unique_rows_dataset(30, seed=7)
        model = fit(ModelSpec("random_forest", {"n_estimators": 3}, seed=5), ds)
        rows = np.random.default_rng(2).normal(size=(5, 3))
        by_hand = sum(tree.predict_proba(rows) for tree in model.impl.trees) / 3
        assert np.allclose(predict_proba(model, rows), by_hand)

    def test_width_mismatch(self):
        ds = make_unique_rows_dataset(20, d=3, seed=8)
        model = fit(ModelSpec("decision_tree", {}), ds)
        with pytest.raises(ShapeError):
            predict_proba(model, np.zeros((4, 5)))

    @pytest.mark.parametrize("kind,params", ALL_KINDS)
    def test_no_train_serve_skew(self, kind, params):
        ds = make_unique_rows_dataset(36, seed=9)
        model = fit(ModelSpec(kind, params, seed=3), ds)
        first = predict_proba(model, ds.matrix)
        # round-trip through the canonical file and predict again
        clone = deserialize_model(serialize_model(model))
        assert np.array_equal(first, predict_proba(clone, ds.matrix))

    def test_tree_serving_matches_stored_leaf_counts(self):
        ds = make_unique_rows_dataset(40, seed=9)
        model = fit(ModelSpec("decision_tree", {"min_samples_leaf": 4}), ds)
        leaves = model.impl.apply(ds.matrix)
        counts = model.impl.nodes.counts[leaves].astype(float)
        assert np.allclose(predict_proba(model, ds.matrix),
                           counts / counts.sum(axis=1, keepdims=True))


class TestEmbeddedTrainingRows:
    def test_knn_embeds_everything(self):
        ds = make_unique_rows_dataset(25, seed=10)
        model = fit(ModelSpec("knn", {"k": 2}), ds)
        out = embedded_training_rows(model, ds)
        assert out["count"] == 25
        assert out["indices"] == list(range(25))

    def test_tree_embeds_nothing(self):
        ds = make_unique_rows_dataset(25, seed=11)
        model = fit(ModelSpec("decision_tree", {}), ds)
        assert embedded_training_rows(model, ds)["count"] == 0

    def test_dp_svc_embeds_nothing(self):
        ds = make_unique_rows_dataset(25, seed=12)
        model = fit(ModelSpec("dp_svc", {"dhat": 30}), ds)
        assert embedded_training_rows(model, ds)["count"] == 0

    def test_fingerprint_mismatch(self):
        ds = make_unique_rows_dataset(25, seed=13)
        other = make_unique_rows_dataset(25, seed=14)
        model = fit(ModelSpec("decision_tree", {}), ds)
        with pytest.raises(ProvenanceError):
            embedded_training_rows(model, other)


def build_stump(feature, threshold, n_classes=2):
    nodes = TreeNodes(
        feature=[feature, -1, -1],
        threshold=[threshold, 0.0, 0.0],
        left=[1, -1, -1],
        right=[2, -1, -1],
        counts=[[3, 3], [2, 1], [1, 2]],
    )
    return DecisionTree(nodes, n_classes)


class TestKAnonymity:
    def test_single_leaf_equivalence_class(self):
        ds = make_unique_rows_dataset(40, seed=15)
        model = fit(ModelSpec("decision_tree", {"min_samples_leaf": 40}), ds)
        assert k_anonymity(model, ds) == 40

    def test_min_samples_leaf_floor(self):
        ds = make_unique_rows_dataset(60, seed=16)
        model = fit(ModelSpec("decision_tree", {"min_samples_leaf": 5}), ds)
        assert k_anonymity(model, ds) >= 5

    def test_two_stump_forest_cell_intersection(self, tiny_dictionary):
        # Six rows; stump A splits on age, stump B on score, giving occupied
        # cells of sizes {3, 2, 1}: the forest only guarantees k = 1.
        matrix = np.zeros((6, 5))
        matrix[:, 0] = 1.0
        matrix[:, 3] = [0, 0, 0, 1, 1, 1]   # stump A: age < 0.5
        matrix[:, 4] = [0, 0, 0, 1, 0, 0]   # stump B: score < 0.5
        ds = Dataset(matrix=matrix, labels=[0, 1, 0, 1, 0, 1],
                     group_ids=[f"g{i}" for i in range(6)], dictionary=tiny_dictionary)
        from tresafe.models.forest import RandomForest

        forest = RandomForest([build_stump(3, 0.5), build_stump(4, 0.5)], 2)
        model = TrainedModel(kind="random_forest",
                             params={"min_samples_leaf": 1, "max_depth": 0,
                                     "n_estimators": 2, "bootstrap": True},
                             n_classes=2, impl=forest,
                             fit_meta={"n_train": 6, "n_features": 5, "data_fingerprint": "x"})
        # occupied cells by hand: rows 0-2 -> (A-left, B-left) = 3,
        # rows 4-5 -> (A-right, B-left) = 2, row 3 -> (A-right, B-right) = 1
        assert k_anonymity(model, ds) == 1

    def test_unsupported_kind(self):
        ds = make_unique_rows_dataset(20, seed=17)
        model = fit(ModelSpec("logistic_regression", {}), ds)
        with pytest.raises(SpecError):
            k_anonymity(model, ds)


class TestLogisticGradient:
    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(20)
        X = rng.normal(size=(20, 4))
        y = rng.integers(0, 3, size=20)
        weights = rng.normal(size=(4, 3)) * 0.5
        bias = rng.normal(size=3) * 0.1
        l2 = 0.05
        _, grad_w, grad_b = cross_entropy_loss_and_grad(weights, bias, X, y, l2)
        eps = 1e-6
        for arr, grad in ((weights, grad_w), (bias, grad_b)):
            it = np.nditer(arr, flags=["multi_index"])
            for _ in it:
                idx = it.multi_index
                orig = arr[idx]
                arr[idx] = orig + eps
                up, _, _ = cross_entropy_loss_and_grad(weights, bias, X, y, l2)
                arr[idx] = orig - eps
                down, _, _ = cross_entropy_loss_and_grad(weights, bias, X, y, l2)
                arr[idx] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric), 1e-8)
                assert abs(grad[idx] - numeric) / denom < 1e-5


class TestDpSvc:
    def test_huge_eps_matches_noise_free(self):
        ds = make_unique_rows_dataset(40, d=3, seed=21)
        spec = ModelSpec("dp_svc", {"dhat": 60, "eps": 1e9}, seed=7)
        model = fit(spec, ds)
        base = noise_free_weights(
            ds.matrix, ds.labels, 2, model.impl.projection, model.impl.phases, 61 - 1,
            C=model.params["C"],
        )
        clean = TrainedModel(kind="dp_svc", params=model.params, n_classes=2,
                             impl=type(model.impl)(model.impl.projection, model.impl.phases,
                                                   base, model.params["gamma"], 2),
                             fit_meta=model.fit_meta)
        rng = np.random.default_rng(3)
        rows = rng.normal(size=(30, 3))
        gap = np.abs(model.impl.decision_function(rows) - clean.impl.decision_function(rows))
        assert gap.max() < 1e-3

    def test_noise_varies_with_seed_at_low_eps(self):
        ds = make_unique_rows_dataset(40, d=3, seed=22)
        m1 = fit(ModelSpec("dp_svc", {"dhat": 30, "eps": 10.0}, seed=1), ds)
        m2 = fit(ModelSpec("dp_svc", {"dhat": 30, "eps": 10.0}, seed=2), ds)
        assert not np.array_equal(m1.impl.weights, m2.impl.weights)

    def test_noise_scale_shrinks_with_eps(self):
        assert laplace_weight_scale(100, 50, 1.0, 1e9) < 1e-9
        assert laplace_weight_scale(100, 50, 1.0, 1.0) > 0.01


class TestSerialization:
    @pytest.mark.parametrize("kind,params", ALL_KINDS)
    def test_round_trip_bit_identical(self, kind, params):
        ds = make_unique_rows_dataset(30, seed=23)
        model = fit(ModelSpec(kind, params, seed=4), ds)
        blob = serialize_model(model)
        clone = deserialize_model(blob)
        assert serialize_model(clone) == blob
        assert model_digest(clone) == model_digest(model)
        assert internals_digest(clone) == internals_digest(model)

    def test_envelope_key_set_enforced(self):
        with pytest.raises(FormatError):
            deserialize_model(b'{"kind": "decision_tree"}')

    def test_bad_json_rejected(self):
        with pytest.raises(FormatError):
            deserialize_model(b"pickle!")

    def test_unknown_kind_rejected(self):
        ds = make_unique_rows_dataset(20, seed=24)
        model = fit(ModelSpec("decision_tree", {}), ds)
        blob = serialize_model(model).replace(b'"decision_tree"', b'"mystery_model"')
        with pytest.raises(FormatError):
            deserialize_model(blob)

    def test_forest_members_are_standalone_trees(self):
        ds = make_unique_rows_dataset(30, seed=25)
        model = fit(ModelSpec("random_forest", {"n_estimators": 4}, seed=6), ds)
        members = forest_member_models(model)
        assert len(members) == 4
        combined = sum(predict_proba(m, ds.matrix) for m in members) / 4
        assert np.allclose(combined, predict_proba(model, ds.matrix))
