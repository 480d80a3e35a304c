import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomic_index.datasets import (
    UNIVERSE_MAX,
    UNIVERSE_MIN,
    DuplicateKeysError,
    MalformedHeaderError,
    QueryWorkload,
    SortedTable,
    TruncatedFileError,
    UnsortedKeysError,
    generate_lognormal,
    generate_uniform,
    load_table,
    load_workload,
    lognormal_sampler,
    make_workload,
    save_table,
    save_workload,
    workload_size,
)

from oracles import ks_statistic_uniform, sample_skewness


class TestSortedTable:
    def test_rejects_short(self):
        with pytest.raises(ValueError):
            SortedTable(np.array([5], dtype=np.uint64))

    def test_rejects_duplicates(self):
        with pytest.raises(ValueError):
            SortedTable(np.array([3, 3, 7], dtype=np.uint64))

    def test_rejects_unsorted(self):
        with pytest.raises(ValueError):
            SortedTable(np.array([7, 3], dtype=np.uint64))

    def test_rejects_zero_key(self):
        with pytest.raises(ValueError):
            SortedTable(np.array([0, 5], dtype=np.uint64))

    def test_keys_become_readonly(self):
        table = SortedTable(np.array([1, 2, 3], dtype=np.uint64))
        with pytest.raises(ValueError):
            table.keys[0] = 9

    def test_member_mask(self):
        table = SortedTable(np.array([10, 20, 30], dtype=np.uint64))
        mask = table.member_mask(np.array([10, 15, 30, 31], dtype=np.uint64))
        assert mask.tolist() == [True, False, True, False]


class TestGenerators:
    def test_uniform_minimum_size(self):
        table = generate_uniform(2, seed=5)
        assert table.n == 2
        assert table.keys[0] < table.keys[1]

    def test_uniform_rejects_tiny_n(self):
        for n in (0, 1):
            with pytest.raises(ValueError):
                generate_uniform(n, seed=1)

    def test_uniform_exact_count_and_bounds(self):
        table = generate_uniform(50_000, seed=3)
        assert table.n == 50_000
        assert table.min_key >= UNIVERSE_MIN
        assert table.max_key <= UNIVERSE_MAX

    def test_uniform_deterministic(self):
        a = generate_uniform(5000, seed=77)
        b = generate_uniform(5000, seed=77)
        assert np.array_equal(a.keys, b.keys)

    def test_uniform_ks_distance(self):
        # empirical CDF within 0.02 of the closed-form uniform CDF
        table = generate_uniform(10_000, seed=21)
        d = ks_statistic_uniform(table.keys, UNIVERSE_MIN, UNIVERSE_MAX)
        assert d < 0.02

    def test_lognormal_minimum_size(self):
        table = generate_lognormal(2, seed=5)
        assert table.n == 2

    def test_lognormal_rejects_tiny_n(self):
        with pytest.raises(ValueError):
            generate_lognormal(1, seed=1)

    def test_lognormal_exact_count(self):
        table = generate_lognormal(30_000, seed=9)
        assert table.n == 30_000

    def test_lognormal_deterministic(self):
        a = generate_lognormal(5000, seed=42)
        b = generate_lognormal(5000, seed=42)
        assert np.array_equal(a.keys, b.keys)

    def test_lognormal_positive_skew(self):
        table = generate_lognormal(10_000, seed=13)
        assert sample_skewness(table.keys) > 0


class TestWorkload:
    def test_counts_n10(self):
        table = SortedTable(np.arange(1, 11, dtype=np.uint64))
        wl = make_workload(table, seed=1)
        assert wl.size == 5
        assert wl.member_count == 3
        members = table.member_mask(wl.queries)
        assert int(members.sum()) == 3

    def test_membership_against_scan(self, small_uniform):
        wl = make_workload(small_uniform, seed=4)
        key_set = set(small_uniform.keys.tolist())
        scanned = sum(1 for q in wl.queries.tolist() if q in key_set)
        assert scanned == wl.member_count

    def test_deterministic(self, small_uniform):
        a = make_workload(small_uniform, seed=8)
        b = make_workload(small_uniform, seed=8)
        assert np.array_equal(a.queries, b.queries)

    def test_not_sorted(self, small_uniform):
        wl = make_workload(small_uniform, seed=8)
        assert not np.all(wl.queries[1:] >= wl.queries[:-1])

    def test_lognormal_sampler_respects_membership(self):
        table = generate_lognormal(2000, seed=3)
        wl = make_workload(table, seed=5, absent_sampler=lognormal_sampler())
        members = table.member_mask(wl.queries)
        assert int(members.sum()) == wl.member_count

    @given(n=st.integers(min_value=2, max_value=4000))
    @settings(max_examples=30, deadline=None)
    def test_counts_property(self, n):
        # exact member/non-member split for any table size
        table = SortedTable(np.arange(1, n + 1, dtype=np.uint64) * 7)
        wl = make_workload(table, seed=n)
        expected_total = workload_size(n)
        expected_members = (expected_total + 1) // 2
        assert wl.size == expected_total
        assert wl.member_count == expected_members
        assert int(table.member_mask(wl.queries).sum()) == expected_members


class TestTableFiles:
    def test_round_trip(self, tmp_path):
        table = SortedTable(np.array([1, 5, 9], dtype=np.uint64))
        path = tmp_path / "t.bin"
        save_table(table, path)
        again = load_table(path)
        assert np.array_equal(again.keys, table.keys)

    def test_byte_size(self, tmp_path, small_uniform):
        path = tmp_path / "t.bin"
        save_table(small_uniform, path)
        assert path.stat().st_size == 8 + 8 * small_uniform.n

    @given(st.lists(st.integers(min_value=1, max_value=2**63 - 1), min_size=2, max_size=200, unique=True))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_property(self, tmp_path_factory, values):
        table = SortedTable(np.array(sorted(values), dtype=np.uint64))
        path = tmp_path_factory.mktemp("rt") / "t.bin"
        save_table(table, path)
        assert np.array_equal(load_table(path).keys, table.keys)

    def test_duplicate_keys_error(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes((3).to_bytes(8, "little") + b"".join(v.to_bytes(8, "little") for v in [3, 3, 7]))
        with pytest.raises(DuplicateKeysError):
            load_table(path)

    def test_unsorted_keys_error(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes((3).to_bytes(8, "little") + b"".join(v.to_bytes(8, "little") for v in [9, 3, 7]))
        with pytest.raises(UnsortedKeysError):
            load_table(path)

    def test_truncated_error(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes((4).to_bytes(8, "little") + (1).to_bytes(8, "little"))
        with pytest.raises(TruncatedFileError):
            load_table(path)

    def test_malformed_header_error(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes(b"\x01\x02")
        with pytest.raises(MalformedHeaderError):
            load_table(path)

    def test_trailing_bytes_error(self, tmp_path):
        path = tmp_path / "bad.bin"
        path.write_bytes((2).to_bytes(8, "little")
                         + (1).to_bytes(8, "little") + (2).to_bytes(8, "little") + b"x")
        with pytest.raises(MalformedHeaderError):
            load_table(path)


class TestWorkloadFiles:
    def test_round_trip(self, tmp_path, small_uniform):
        wl = make_workload(small_uniform, seed=2)
        path = tmp_path / "w.bin"
        save_workload(wl, path)
        again = load_workload(path)
        assert np.array_equal(again.queries, wl.queries)
        assert again.member_count == wl.member_count

    def test_member_count_overflow_rejected(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes((1).to_bytes(8, "little") + (2).to_bytes(8, "little") + (5).to_bytes(8, "little"))
        with pytest.raises(MalformedHeaderError):
            load_workload(path)

    def test_workload_validation(self):
        with pytest.raises(ValueError):
            QueryWorkload(queries=np.array([], dtype=np.uint64), member_count=0)
        with pytest.raises(ValueError):
            QueryWorkload(queries=np.array([1], dtype=np.uint64), member_count=2)
