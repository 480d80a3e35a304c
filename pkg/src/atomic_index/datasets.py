"""Sorted integer tables, synthetic generators, query workloads, and binary file I/O.

Keys live in the universe [1, 2**63 - 1] and are stored as unsigned 64-bit
integers. All randomness goes through numpy's PCG64 generator
(``np.random.default_rng``), so every artifact is reproducible from its seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

UNIVERSE_MIN = 1
UNIVERSE_MAX = 2**63 - 1

LOGNORMAL_SCALE = 1e9
LOGNORMAL_OVERDRAW = 1.2


class TableFileError(Exception):
    """Base class for table/workload file problems."""


class MalformedHeaderError(TableFileError):
    """File too short to contain its header, or header inconsistent."""


class TruncatedFileError(TableFileError):
    """File body shorter than the key count announced in the header."""


class UnsortedKeysError(TableFileError):
    """Keys in a table file are not in ascending order."""


class DuplicateKeysError(TableFileError):
    """A table file contains a repeated key."""


@dataclass(frozen=True)
class SortedTable:
    """A sorted, duplicate-free array of unsigned 64-bit keys.

    Immutable after construction; safe to share across threads.
    """

    keys: np.ndarray

    def __post_init__(self):
        keys = np.ascontiguousarray(self.keys, dtype=np.uint64)
        if keys.ndim != 1 or keys.size < 2:
            raise ValueError("a table needs at least two keys")
        if keys[0] < UNIVERSE_MIN or keys[-1] > UNIVERSE_MAX:
            raise ValueError("keys must lie in [1, 2**63 - 1]")
        if not np.all(keys[1:] > keys[:-1]):
            raise ValueError("keys must be strictly increasing")
        keys.setflags(write=False)
        object.__setattr__(self, "keys", keys)

    @property
    def n(self) -> int:
        return int(self.keys.size)

    @property
    def min_key(self) -> int:
        return int(self.keys[0])

    @property
    def max_key(self) -> int:
        return int(self.keys[-1])

    def member_mask(self, queries: np.ndarray) -> np.ndarray:
        """Boolean mask of which query keys are present in the table."""
        q = np.asarray(queries, dtype=np.uint64)
        pos = np.searchsorted(self.keys, q)
        pos = np.minimum(pos, self.n - 1)
        return self.keys[pos] == q


@dataclass(frozen=True)
class QueryWorkload:
    """Unsorted query keys, a known number of which are table members."""

    queries: np.ndarray
    member_count: int

    def __post_init__(self):
        q = np.ascontiguousarray(self.queries, dtype=np.uint64)
        if q.ndim != 1 or q.size == 0:
            raise ValueError("workload must contain at least one query")
        if not 0 <= self.member_count <= q.size:
            raise ValueError("member_count out of range")
        q.setflags(write=False)
        object.__setattr__(self, "queries", q)

    @property
    def size(self) -> int:
        return int(self.queries.size)


def _draw_uniform(rng: np.random.Generator, m: int) -> np.ndarray:
    return rng.integers(UNIVERSE_MIN, UNIVERSE_MAX, size=m, dtype=np.uint64, endpoint=True)


def _draw_lognormal(rng: np.random.Generator, m: int, scale: float) -> np.ndarray:
    samples = np.rint(rng.lognormal(0.0, 1.0, size=m) * scale)
    return np.clip(samples, UNIVERSE_MIN, UNIVERSE_MAX).astype(np.uint64)


def generate_uniform(n: int, seed: int) -> SortedTable:
    """n distinct keys drawn uniformly from the universe, sorted.

    Collisions are resolved by redrawing until exactly n distinct values
    exist, so the table size is exact.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    keys = np.unique(_draw_uniform(rng, n))
    while keys.size < n:
        keys = np.union1d(keys, _draw_uniform(rng, n - keys.size))
    return SortedTable(keys)


def generate_lognormal(
    n: int,
    seed: int,
    scale: float = LOGNORMAL_SCALE,
    overdraw: float = LOGNORMAL_OVERDRAW,
) -> SortedTable:
    """n distinct keys from Lognormal(0, 1) samples scaled to integers.

    Draws ``overdraw * n`` samples, scales by ``scale``, rounds to integers,
    clamps to the universe, deduplicates, and keeps the n smallest keys.
    The overdraw absorbs rounding collisions and bounds the extreme upper
    tail, which otherwise lets a handful of outlier keys dominate every
    downstream max-error statistic.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if scale <= 0:
        raise ValueError("scale must be positive")
    rng = np.random.default_rng(seed)
    keys = np.unique(_draw_lognormal(rng, int(np.ceil(overdraw * n)), scale))
    while keys.size < n:
        keys = np.union1d(keys, _draw_lognormal(rng, max(64, n - keys.size), scale))
    return SortedTable(keys[:n])


def uniform_sampler(rng: np.random.Generator, m: int) -> np.ndarray:
    """Absent-query sampler matching generate_uniform's distribution."""
    return _draw_uniform(rng, m)


def lognormal_sampler(scale: float = LOGNORMAL_SCALE) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Absent-query sampler matching generate_lognormal's distribution."""

    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        return _draw_lognormal(rng, m, scale)

    return draw


def workload_size(n: int) -> int:
    """Number of queries for a table of n keys: n/2, halves rounded up."""
    return (n + 1) // 2


def make_workload(
    table: SortedTable,
    seed: int,
    absent_sampler: Optional[Callable[[np.random.Generator, int], np.ndarray]] = None,
) -> QueryWorkload:
    """Build a workload of half the table size, half members half absent.

    Member queries are sampled from the table without replacement; absent
    queries come from ``absent_sampler`` (uniform over the universe when not
    given) with members rejected. The result is shuffled, not sorted.
    """
    sampler = absent_sampler or uniform_sampler
    rng = np.random.default_rng(seed)
    total = workload_size(table.n)
    member_count = (total + 1) // 2
    absent_count = total - member_count

    members = rng.choice(table.keys, size=member_count, replace=False)

    absent = np.empty(0, dtype=np.uint64)
    while absent.size < absent_count:
        cand = sampler(rng, max(64, 2 * (absent_count - absent.size)))
        cand = cand[~table.member_mask(cand)]
        absent = np.unique(np.concatenate([absent, cand]))
    if absent.size > absent_count:
        absent = rng.choice(absent, size=absent_count, replace=False)

    queries = np.concatenate([members, absent])
    rng.shuffle(queries)
    return QueryWorkload(queries=queries, member_count=member_count)


# Binary formats, all little-endian:
#   table file:    u64 n, then n ascending u64 keys
#   workload file: u64 n, u64 member_count, then n unsorted u64 keys

_U64 = struct.Struct("<Q")


def save_table(table: SortedTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_U64.pack(table.n))
        fh.write(table.keys.astype("<u8").tobytes())


def _read_u64(data: bytes, offset: int) -> int:
    return _U64.unpack_from(data, offset)[0]


def _validate_keys_sorted(keys: np.ndarray) -> None:
    if np.any(keys[1:] == keys[:-1]):
        raise DuplicateKeysError("table file contains duplicate keys")
    if not np.all(keys[1:] > keys[:-1]):
        raise UnsortedKeysError("table file keys are not ascending")


def load_table(path) -> SortedTable:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise MalformedHeaderError("file shorter than its 8-byte header")
    n = _read_u64(data, 0)
    expected = 8 + 8 * n
    if len(data) < expected:
        raise TruncatedFileError(f"expected {expected} bytes, found {len(data)}")
    if len(data) > expected:
        raise MalformedHeaderError(f"{len(data) - expected} trailing bytes after {n} keys")
    keys = np.frombuffer(data, dtype="<u8", count=n, offset=8)
    if n >= 2:
        _validate_keys_sorted(keys)
    return SortedTable(keys.astype(np.uint64))


def save_workload(workload: QueryWorkload, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_U64.pack(workload.size))
        fh.write(_U64.pack(workload.member_count))
        fh.write(workload.queries.astype("<u8").tobytes())


def load_workload(path) -> QueryWorkload:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16:
        raise MalformedHeaderError("file shorter than its 16-byte header")
    n = _read_u64(data, 0)
    member_count = _read_u64(data, 8)
    if member_count > n:
        raise MalformedHeaderError("member_count exceeds query count")
    expected = 16 + 8 * n
    if len(data) < expected:
        raise TruncatedFileError(f"expected {expected} bytes, found {len(data)}")
    if len(data) > expected:
        raise MalformedHeaderError(f"{len(data) - expected} trailing bytes after {n} queries")
    queries = np.frombuffer(data, dtype="<u8", count=n, offset=16)
    return QueryWorkload(queries=queries.astype(np.uint64), member_count=int(member_count))
