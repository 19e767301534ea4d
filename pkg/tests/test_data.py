"""Triplet storage, file parsing, and seed-deterministic splits."""

import numpy as np
import pytest

import strecover as sr
from strecover.data import write_entry_set


def write_file(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def make_matrix(n_entries, n_rows=10, n_cols=12, seed=0):
    rng = np.random.default_rng(seed)
    cells = rng.choice(n_rows * n_cols, size=n_entries, replace=False)
    return sr.ObservedMatrix.from_arrays(
        n_rows, n_cols, cells // n_cols, cells % n_cols, rng.uniform(1, 5, n_entries)
    )


class TestLoadTriplets:
    def test_basic_two_entries(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,0,5.0\n1,1,3.0\n")
        m = sr.load_triplets(p)
        assert (m.n_rows, m.n_cols, m.n_known) == (2, 2, 2)
        assert m.value_at(0, 0) == 5.0
        assert m.value_at(1, 1) == 3.0

    def test_empty_with_declared_dims(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n")
        m = sr.load_triplets(p, n_rows=3, n_cols=4)
        assert (m.n_rows, m.n_cols, m.n_known) == (3, 4, 0)

    def test_empty_without_dims_rejected(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n")
        with pytest.raises(sr.ParameterError):
            sr.load_triplets(p)

    def test_duplicate_entry(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,0,1.0\n0,0,1.0\n")
        with pytest.raises(sr.DuplicateEntryError):
            sr.load_triplets(p)

    def test_wrong_arity_names_line(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,0,1.0\n1,2\n")
        with pytest.raises(sr.ParseError, match="line 3"):
            sr.load_triplets(p)

    def test_non_numeric_names_line(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,0,abc\n")
        with pytest.raises(sr.ParseError, match="line 2"):
            sr.load_triplets(p)

    @pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
    def test_non_finite_rejected(self, tmp_path, bad):
        p = write_file(tmp_path / "t.csv", f"i,j,v\n0,0,{bad}\n")
        with pytest.raises(sr.ParseError, match="line 2"):
            sr.load_triplets(p)

    def test_bad_header(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "a,b,c\n0,0,1.0\n")
        with pytest.raises(sr.ParseError, match="line 1"):
            sr.load_triplets(p)

    def test_no_trailing_newline(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,1,2.5")
        assert sr.load_triplets(p).value_at(0, 1) == 2.5

    def test_declared_dims_too_small(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n5,0,1.0\n")
        with pytest.raises(sr.ParameterError):
            sr.load_triplets(p, n_rows=2, n_cols=2)

    def test_dims_may_exceed_observed(self, tmp_path):
        p = write_file(tmp_path / "t.csv", "i,j,v\n0,0,1.0\n")
        m = sr.load_triplets(p, n_rows=7, n_cols=9)
        assert (m.n_rows, m.n_cols) == (7, 9)

    def test_round_trip(self, tmp_path):
        m = make_matrix(40)
        out = tmp_path / "out.csv"
        sr.write_triplets(m, out)
        back = sr.load_triplets(str(out), n_rows=m.n_rows, n_cols=m.n_cols)
        np.testing.assert_array_equal(back.row_idx, m.row_idx)
        np.testing.assert_array_equal(back.col_idx, m.col_idx)
        np.testing.assert_array_equal(back.values, m.values)

    def test_entry_set_round_trip(self, tmp_path):
        m = make_matrix(20)
        _, held_out = sr.split_by_sampling_rate(m, 0.5, seed=3)
        out = tmp_path / "test.csv"
        write_entry_set(held_out, out)
        back = sr.load_triplets(str(out), n_rows=m.n_rows, n_cols=m.n_cols)
        assert back.n_known == len(held_out)


class TestObservedMatrix:
    def test_unknown_cells_report_unknown(self):
        m = sr.ObservedMatrix.from_arrays(3, 3, [0], [1], [2.0])
        assert (0, 1) in m
        assert (1, 1) not in m
        with pytest.raises(KeyError):
            m.value_at(2, 2)

    def test_out_of_range_query(self):
        m = sr.ObservedMatrix.from_arrays(2, 2, [0], [0], [1.0])
        with pytest.raises(sr.ParameterError):
            m.value_at(5, 0)

    def test_out_of_range_index_rejected(self):
        with pytest.raises(sr.ParameterError):
            sr.ObservedMatrix.from_arrays(2, 2, [2], [0], [1.0])
        with pytest.raises(sr.ParameterError):
            sr.ObservedMatrix.from_arrays(2, 2, [0], [-1], [1.0])

    def test_non_finite_value_rejected(self):
        with pytest.raises(sr.ParameterError):
            sr.ObservedMatrix.from_arrays(2, 2, [0], [0], [np.nan])

    def test_duplicate_rejected(self):
        with pytest.raises(sr.DuplicateEntryError):
            sr.ObservedMatrix.from_arrays(2, 2, [0, 0], [1, 1], [1.0, 2.0])

    def test_entries_are_immutable(self):
        m = sr.ObservedMatrix.from_arrays(2, 2, [0], [0], [1.0])
        with pytest.raises(ValueError):
            m.values[0] = 9.0


class TestSplitBySamplingRate:
    def test_cardinality(self):
        m = make_matrix(100)
        fit, held_out = sr.split_by_sampling_rate(m, 0.3, seed=1)
        assert fit.n_known == 30
        assert len(held_out) == 70

    def test_rate_one_keeps_everything(self):
        m = make_matrix(25)
        fit, held_out = sr.split_by_sampling_rate(m, 1.0, seed=1)
        assert fit.n_known == 25
        assert len(held_out) == 0

    def test_round_half_up(self):
        m = make_matrix(10)
        fit, _ = sr.split_by_sampling_rate(m, 0.25, seed=1)
        assert fit.n_known == 3  # 2.5 rounds up
        fit, _ = sr.split_by_sampling_rate(m, 0.05, seed=1)
        assert fit.n_known == 1  # 0.5 rounds up

    def test_deterministic(self):
        m = make_matrix(60)
        a = sr.split_by_sampling_rate(m, 0.4, seed=9)
        b = sr.split_by_sampling_rate(m, 0.4, seed=9)
        np.testing.assert_array_equal(a[0].row_idx, b[0].row_idx)
        np.testing.assert_array_equal(a[1].values, b[1].values)

    def test_partition_exact(self):
        m = make_matrix(50)
        original = {(i, j, v) for i, j, v in m.iter_entries()}
        for rate in (0.1, 0.37, 0.8):
            for seed in (0, 7):
                fit, held_out = sr.split_by_sampling_rate(m, rate, seed)
                a = {(i, j, v) for i, j, v in fit.iter_entries()}
                b = {(i, j, v) for i, j, v in held_out.iter_entries()}
                assert a | b == original
                assert not a & b

    def test_dims_preserved(self):
        m = make_matrix(20, n_rows=9, n_cols=14)
        fit, _ = sr.split_by_sampling_rate(m, 0.5, seed=0)
        assert (fit.n_rows, fit.n_cols) == (9, 14)

    @pytest.mark.parametrize("rate", [0.0, -0.2, 1.0001])
    def test_bad_rate(self, rate):
        with pytest.raises(sr.ParameterError):
            sr.split_by_sampling_rate(make_matrix(10), rate, seed=0)

    def test_empty_matrix_rejected(self):
        with pytest.raises(sr.ParameterError):
            sr.split_by_sampling_rate(
                sr.ObservedMatrix(2, 2, *(np.array([], dtype=t) for t in (np.int64, np.int64, np.float64))),
                0.5,
                seed=0,
            )


class TestSplitHalf:
    def test_even(self):
        fit, val = sr.split_half(make_matrix(10), seed=2)
        assert (fit.n_known, len(val)) == (5, 5)

    def test_odd_ceils_fit(self):
        fit, val = sr.split_half(make_matrix(11), seed=2)
        assert (fit.n_known, len(val)) == (6, 5)

    def test_deterministic(self):
        m = make_matrix(30)
        a = sr.split_half(m, seed=4)
        b = sr.split_half(m, seed=4)
        np.testing.assert_array_equal(a[0].values, b[0].values)

    def test_too_few_entries(self):
        with pytest.raises(sr.ParameterError):
            sr.split_half(make_matrix(1), seed=0)


class TestSidecar:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "meta.json"
        sr.write_sidecar(7, 11, p)
        assert sr.load_sidecar(str(p)) == (7, 11)

    def test_malformed(self, tmp_path):
        p = tmp_path / "meta.json"
        p.write_text('{"rows": 3}', encoding="utf-8")
        with pytest.raises(sr.ParseError):
            sr.load_sidecar(str(p))
