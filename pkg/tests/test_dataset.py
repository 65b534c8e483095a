import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tresafe.dataset import (
    Dataset,
    load_dataset,
    parse_data_dictionary,
    reserve_holdout,
    split_three_way,
    synthesize_marginals,
    write_dataset_csv,
)
from tresafe.errors import DataError, SchemaError

NURSERY_STYLE_DICT = {
    "features": [
        {"name": "parents", "indices": [0, 1, 2], "encoding": "onehot"},
        {"name": "has_nurs", "indices": [3, 4, 5, 6, 7], "encoding": "onehot"},
        {"name": "assessment_completed", "indices": [8, 9, 10, 11], "encoding": "onehot"},
        {"name": "children", "indices": [12, 13, 14, 15], "encoding": "onehot"},
        {"name": "atrialfibrillation", "indices": [16], "encoding": "int64"},
    ],
    "target": {"name": "label", "classes": ["0", "1"]},
}


class TestParseDataDictionary:
    def test_onehot_int64_mix(self):
        d = parse_data_dictionary(json.dumps(NURSERY_STYLE_DICT).encode())
        assert len(d.features) == 5
        assert d.width == 17  # inferred from the highest index
        assert d.feature("parents").indices == (0, 1, 2)
        assert d.feature("atrialfibrillation").encoding == "int64"

    def test_minimal_single_feature(self):
        text = (
            '{"features":[{"name":"x","indices":[0],"encoding":"float64"}],'
            '"target":{"name":"y","classes":["0","1"]}}'
        )
        d = parse_data_dictionary(text)
        assert d.width == 1
        assert d.classes == ("0", "1")

    def test_overlapping_indices_rejected(self):
        bad = {
            "features": [
                {"name": "a", "indices": [0, 3], "encoding": "onehot"},
                {"name": "b", "indices": [3], "encoding": "int64"},
            ],
            "target": {"name": "y", "classes": ["0", "1"]},
        }
        with pytest.raises(SchemaError):
            parse_data_dictionary(json.dumps(bad))

    def test_gapped_indices_rejected(self):
        bad = {
            "features": [{"name": "a", "indices": [1], "encoding": "float64"}],
            "target": {"name": "y", "classes": ["0", "1"]},
        }
        with pytest.raises(SchemaError):
            parse_data_dictionary(json.dumps(bad))

    def test_unknown_encoding_rejected(self):
        bad = {
            "features": [{"name": "a", "indices": [0], "encoding": "utf8"}],
            "target": {"name": "y", "classes": ["0", "1"]},
        }
        with pytest.raises(SchemaError):
            parse_data_dictionary(json.dumps(bad))

    def test_malformed_json(self):
        with pytest.raises(SchemaError):
            parse_data_dictionary(b"{not json")

    def test_single_class_rejected(self):
        bad = {
            "features": [{"name": "a", "indices": [0], "encoding": "float64"}],
            "target": {"name": "y", "classes": ["only"]},
        }
        with pytest.raises(SchemaError):
            parse_data_dictionary(json.dumps(bad))


class TestLoadDataset:
    def header(self, dictionary):
        return ",".join(["group_id"] + dictionary.column_names() + [dictionary.target_name])

    def test_ten_row_mixed_file(self, tiny_dictionary):
        rows = [self.header(tiny_dictionary)]
        for i in range(10):
            colour = [0, 0, 0]
            colour[i % 3] = 1
            rows.append(
                f"p{i}," + ",".join(map(str, colour)) + f",{30 + i},{0.5 * i},"
                + ("yes" if i % 2 else "no")
            )
        ds = load_dataset("\n".join(rows).encode(), tiny_dictionary)
        assert ds.n == 10
        assert ds.labels.tolist() == [0, 1] * 5

    def test_header_only_rejected(self, tiny_dictionary):
        with pytest.raises(DataError, match="no rows"):
            load_dataset(self.header(tiny_dictionary).encode(), tiny_dictionary)

    def test_double_hot_rejected(self, tiny_dictionary):
        text = self.header(tiny_dictionary) + "\np0,1,1,0,40,1.5,no"
        with pytest.raises(DataError, match="onehot"):
            load_dataset(text.encode(), tiny_dictionary)

    def test_unknown_label_rejected(self, tiny_dictionary):
        text = self.header(tiny_dictionary) + "\np0,1,0,0,40,1.5,maybe"
        with pytest.raises(DataError, match="label"):
            load_dataset(text.encode(), tiny_dictionary)

    def test_non_numeric_cell_rejected(self, tiny_dictionary):
        text = self.header(tiny_dictionary) + "\np0,1,0,0,forty,1.5,no"
        with pytest.raises(DataError, match="non-numeric"):
            load_dataset(text.encode(), tiny_dictionary)

    def test_empty_cell_rejected(self, tiny_dictionary):
        text = self.header(tiny_dictionary) + "\np0,1,0,0,,1.5,no"
        with pytest.raises(DataError, match="empty"):
            load_dataset(text.encode(), tiny_dictionary)

    def test_round_trip_bit_identical(self, mixed_ds):
        first = write_dataset_csv(mixed_ds)
        again = write_dataset_csv(load_dataset(first, mixed_ds.dictionary))
        assert first == again


class TestReserveHoldout:
    def test_one_group_per_row(self, float_ds):
        # 120 rows, 120 groups, fraction 0.25 -> clean 90/30
        part = reserve_holdout(float_ds, 0.25, seed=0)
        assert len(part.holdout_indices) == 30
        assert len(part.research_indices) == 90

    def test_episodic_rows_stay_together(self, tiny_dictionary):
        n = 30
        matrix = np.zeros((n, 5))
        matrix[:, 0] = 1.0
        matrix[:, 3] = 50
        matrix[:, 4] = np.arange(n)
        groups = [f"person{i // 3}" for i in range(n)]  # 3 episodes each
        ds = Dataset(matrix=matrix, labels=np.arange(n) % 2, group_ids=groups,
                     dictionary=tiny_dictionary)
        for seed in range(20):
            part = reserve_holdout(ds, 0.3, seed=seed)
            held = {ds.group_ids[i] for i in part.holdout_indices}
            kept = {ds.group_ids[i] for i in part.research_indices}
            assert held.isdisjoint(kept)
            assert all(
                sum(1 for i in part.holdout_indices if ds.group_ids[i] == g) == 3 for g in held
            )

    def test_two_group_brute_force(self, tiny_dictionary):
        # Groups of size 7 and 3, fraction 0.5: brute force over the two
        # single-group assignments says the 3-row group is the better holdout
        # (both are 2 rows from the target of 5; ties prefer the smaller).
        n = 10
        matrix = np.zeros((n, 5))
        matrix[:, 0] = 1.0
        matrix[:, 3] = 1
        matrix[:, 4] = np.arange(n)
        groups = ["big"] * 7 + ["small"] * 3
        ds = Dataset(matrix=matrix, labels=[0, 1] * 5, group_ids=groups,
                     dictionary=tiny_dictionary)
        target = 5.0
        candidates = {"big": 7, "small": 3}
        best = min(candidates, key=lambda g: (abs(candidates[g] - target), candidates[g]))
        assert best == "small"
        for seed in range(25):
            part = reserve_holdout(ds, 0.5, seed=seed)
            assert {ds.group_ids[i] for i in part.holdout_indices} == {"small"}

    def test_fraction_bounds(self, float_ds):
        with pytest.raises(ValueError):
            reserve_holdout(float_ds, 0.0, seed=0)
        with pytest.raises(ValueError):
            reserve_holdout(float_ds, 1.0, seed=0)

    def test_single_group_infeasible(self, tiny_dictionary):
        matrix = np.zeros((4, 5))
        matrix[:, 0] = 1.0
        ds = Dataset(matrix=matrix, labels=[0, 1, 0, 1], group_ids=["g"] * 4,
                     dictionary=tiny_dictionary)
        with pytest.raises(DataError):
            reserve_holdout(ds, 0.5, seed=0)

    def test_group_disjoint_over_many_seeds(self, tiny_dictionary):
        # 50 groups of 2 rows; every seed must produce group-disjoint sides.
        n = 100
        matrix = np.zeros((n, 5))
        matrix[:, 0] = 1.0
        matrix[:, 4] = np.arange(n)
        ds = Dataset(matrix=matrix, labels=np.arange(n) % 2,
                     group_ids=[f"g{i // 2}" for i in range(n)],
                     dictionary=tiny_dictionary)
        for seed in range(100):
            part = reserve_holdout(ds, 0.2, seed=seed)
            held = {ds.group_ids[i] for i in part.holdout_indices}
            kept = {ds.group_ids[i] for i in part.research_indices}
            assert held.isdisjoint(kept)
            assert part.holdout_indices and part.research_indices

    def test_deterministic(self, float_ds):
        assert reserve_holdout(float_ds, 0.3, seed=9) == reserve_holdout(float_ds, 0.3, seed=9)


class TestSplitThreeWay:
    def test_equal_thirds(self):
        s = split_three_way(range(90), 0, seed=1)
        assert (len(s.train), len(s.shadow), len(s.test)) == (30, 30, 30)

    def test_remainder_to_earlier_parts(self):
        s = split_three_way(range(91), 0, seed=1)
        assert (len(s.train), len(s.shadow), len(s.test)) == (31, 30, 30)
        s = split_three_way(range(92), 0, seed=1)
        assert (len(s.train), len(s.shadow), len(s.test)) == (31, 31, 30)

    def test_deterministic(self):
        assert split_three_way(range(50), 2, seed=7) == split_three_way(range(50), 2, seed=7)

    def test_repeats_differ(self):
        parts = {split_three_way(range(60), r, seed=7).train for r in range(5)}
        assert len(parts) == 5

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            split_three_way([1, 2], 0, seed=0)

    @given(n=st.integers(3, 400), repeat=st.integers(0, 4), seed=st.integers(0, 2**31))
    @settings(max_examples=60, deadline=None)
    def test_partition_property(self, n, repeat, seed):
        rows = list(range(100, 100 + n))
        s = split_three_way(rows, repeat, seed)
        parts = [s.train, s.shadow, s.test]
        assert sorted(i for p in parts for i in p) == rows
        sizes = sorted(len(p) for p in parts)
        assert sizes[-1] - sizes[0] <= 1


class TestSynthesizeMarginals:
    def test_constant_column_preserved(self, tiny_dictionary):
        n = 40
        matrix = np.zeros((n, 5))
        matrix[:, 1] = 1.0  # constant category
        matrix[:, 3] = 7
        matrix[:, 4] = 3.25
        ds = Dataset(matrix=matrix, labels=[0, 1] * 20, group_ids=[f"g{i}" for i in range(n)],
                     dictionary=tiny_dictionary)
        synth = synthesize_marginals(ds, 25, seed=0)
        assert (synth.matrix[:, 1] == 1.0).all()
        assert (synth.matrix[:, 3] == 7).all()
        assert (synth.matrix[:, 4] == 3.25).all()

    def test_binary_frequency_concentrates(self, tiny_dictionary):
        # 30% ones in an int64 column; at n=10^4 the synthetic frequency has
        # sd ~0.0046, so +-2 percentage points is a >4 sigma band.
        n = 200
        matrix = np.zeros((n, 5))
        matrix[:, 0] = 1.0
        matrix[:60, 3] = 1
        matrix[:, 4] = 0.5
        ds = Dataset(matrix=matrix, labels=[0, 1] * 100, group_ids=[f"g{i}" for i in range(n)],
                     dictionary=tiny_dictionary)
        synth = synthesize_marginals(ds, 10_000, seed=11)
        assert abs(synth.matrix[:, 3].mean() - 0.30) < 0.02

    def test_marginal_tv_distance_small(self, tiny_dictionary):
        # Columns with modest support so the n=10^4 resample can push the
        # total-variation distance under the 0.03 budget.
        rng = np.random.default_rng(42)
        n = 300
        matrix = np.zeros((n, 5))
        cats = rng.integers(0, 3, size=n)
        matrix[np.arange(n), cats] = 1.0
        matrix[:, 3] = rng.integers(1, 7, size=n)
        matrix[:, 4] = rng.choice(np.round(np.linspace(0.0, 5.0, 20), 2), size=n)
        ds = Dataset(matrix=matrix, labels=rng.integers(0, 2, size=n),
                     group_ids=[f"g{i}" for i in range(n)], dictionary=tiny_dictionary)
        synth = synthesize_marginals(ds, 10_000, seed=2)
        for spec in ds.dictionary.features:
            if spec.encoding == "onehot":
                src = ds.matrix[:, list(spec.indices)].mean(axis=0)
                out = synth.matrix[:, list(spec.indices)].mean(axis=0)
                tv = 0.5 * np.abs(src - out).sum()
            else:
                col = spec.indices[0]
                values, src_counts = np.unique(ds.matrix[:, col], return_counts=True)
                src_p = src_counts / ds.n
                out_p = np.array([(synth.matrix[:, col] == v).mean() for v in values])
                tv = 0.5 * (np.abs(src_p - out_p).sum() + (1.0 - out_p.sum()))
            assert tv < 0.03, spec.name

    def test_single_row_valid(self, mixed_ds):
        synth = synthesize_marginals(mixed_ds, 1, seed=3)
        assert synth.n == 1  # Dataset construction re-validates all invariants

    def test_deterministic(self, mixed_ds):
        a = synthesize_marginals(mixed_ds, 50, seed=9)
        b = synthesize_marginals(mixed_ds, 50, seed=9)
        assert np.array_equal(a.matrix, b.matrix) and np.array_equal(a.labels, b.labels)

    def test_bad_n_rows(self, mixed_ds):
        with pytest.raises(ValueError):
            synthesize_marginals(mixed_ds, 0, seed=0)
