import os
import tempfile

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from passclust import (
    ConstraintSet,
    DataFormatError,
    Dataset,
    load_constraints,
    load_dataset,
    sample_constraints,
    save_constraints,
)


class TestDataset:
    def test_basic_invariants(self):
        ds = Dataset([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert ds.n == 3 and ds.d == 2
        assert np.all(ds.weights == 1.0)

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            Dataset([[0.0], [1.0]], weights=[1.0, 0.0])

    def test_immutable(self):
        ds = Dataset([[0.0, 1.0]])
        with pytest.raises(ValueError):
            ds.points[0, 0] = 5.0


class TestLoadDataset:
    def test_parse_3x2(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("0,0\n1,0\n0,1\n")
        ds = load_dataset(p)
        assert ds.n == 3 and ds.d == 2
        assert np.all(ds.weights == 1.0)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(DataFormatError, match="empty dataset"):
            load_dataset(p)

    def test_ragged_row_names_row(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("0,0\n1\n")
        with pytest.raises(DataFormatError, match="row 2"):
            load_dataset(p)

    def test_non_numeric_names_cell(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("0,0\n1,abc\n")
        with pytest.raises(DataFormatError, match="row 2, column 2"):
            load_dataset(p)

    def test_header_skip(self, tmp_path):
        p = tmp_path / "h.csv"
        p.write_text("a,b\n1,2\n")
        ds = load_dataset(p, header=True)
        assert ds.n == 1 and ds.d == 2


class TestConstraintSet:
    def test_canonical_ordering(self):
        cs = ConstraintSet(frozenset({(3, 1)}), frozenset({(5, 2)}))
        assert (1, 3) in cs.ml and (2, 5) in cs.cl

    def test_rejects_self_pair(self):
        with pytest.raises(DataFormatError):
            ConstraintSet(frozenset({(2, 2)}), frozenset())

    def test_rejects_ml_cl_overlap(self):
        with pytest.raises(DataFormatError, match="both ML and CL"):
            ConstraintSet(frozenset({(0, 1)}), frozenset({(1, 0)}))

    def test_range_validation(self):
        cs = ConstraintSet(frozenset({(0, 5)}), frozenset())
        with pytest.raises(DataFormatError, match="out of range"):
            cs.validate_for(4)


class TestLoadConstraints:
    def test_parse(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("ML 0 1\nCL 1 2\n# comment\n")
        cs = load_constraints(p)
        assert cs.ml == frozenset({(0, 1)}) and cs.cl == frozenset({(1, 2)})

    def test_self_pair(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("ML 2 2\n")
        with pytest.raises(DataFormatError, match="self-pair"):
            load_constraints(p)

    def test_dedup_unordered(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("ML 0 1\nML 1 0\n")
        cs = load_constraints(p)
        assert cs.ml == frozenset({(0, 1)})

    def test_unknown_tag(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("XX 0 1\n")
        with pytest.raises(DataFormatError, match="unknown tag"):
            load_constraints(p)

    def test_out_of_range(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("CL 0 9\n")
        with pytest.raises(DataFormatError, match="out of range"):
            load_constraints(p, n=5)

    @given(st.sets(st.tuples(st.integers(0, 30), st.integers(0, 30))))
    @settings(max_examples=50)
    def test_round_trip(self, pairs):
        pairs = {(min(i, j), max(i, j)) for i, j in pairs if i != j}
        half = len(pairs) // 2
        as_list = sorted(pairs)
        cs = ConstraintSet(frozenset(as_list[:half]), frozenset(as_list[half:]))
        if cs.is_empty():
            return
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "c.txt")
            save_constraints(cs, path)
            assert load_constraints(path) == cs


class TestSampleConstraints:
    def test_three_point_quotas(self):
        ds = Dataset(np.zeros((3, 1)))
        truth = [0, 0, 1]
        for seed in range(10):
            cs = sample_constraints(ds, truth, n_ml=1, n_cl=1, seed=seed)
            assert cs.ml == frozenset({(0, 1)})
            assert len(cs.cl) == 1 and next(iter(cs.cl)) in {(0, 2), (1, 2)}

    def test_deterministic(self):
        ds = Dataset(np.random.default_rng(0).normal(size=(20, 2)))
        truth = np.arange(20) % 3
        a = sample_constraints(ds, truth, n_ml=5, n_cl=5, seed=42)
        b = sample_constraints(ds, truth, n_ml=5, n_cl=5, seed=42)
        assert a == b

    def test_iris_scale_quota(self):
        ds = Dataset(np.random.default_rng(1).normal(size=(150, 2)))
        truth = np.arange(150) % 3
        cs = sample_constraints(ds, truth, n_ml=37, n_cl=37, seed=0)
        assert len(cs.ml) == 37 and len(cs.cl) == 37
        assert len(cs.ml | cs.cl) == 74  # distinct pairs across both quotas
        truth = np.asarray(truth)
        assert all(truth[i] == truth[j] for i, j in cs.ml)
        assert all(truth[i] != truth[j] for i, j in cs.cl)

    def test_unsatisfiable_quota(self):
        ds = Dataset(np.zeros((4, 1)))
        with pytest.raises(ValueError, match="unsatisfiable"):
            sample_constraints(ds, [0, 0, 0, 0], n_ml=0, n_cl=1, seed=0)

    def test_truthless_sampling(self):
        ds = Dataset(np.zeros((10, 1)))
        cs = sample_constraints(ds, None, n_ml=3, n_cl=4, seed=5)
        assert len(cs.ml) == 3 and len(cs.cl) == 4
