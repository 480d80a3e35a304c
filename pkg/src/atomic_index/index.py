"""Atomic learned index: model, error bound, table, and search routine.

The model predicts a real rank for a key; the prediction is rounded (half
away from zero) and clamped to [0, n - 1]. The error bound epsilon is the
largest such rounded-prediction error over all table keys, so for member
keys the true rank always lies in [p - epsilon, p + epsilon]. Queries for
absent keys can escape that interval because models need not be monotone,
so interval endpoints are checked against the table and widened when they
fail to bracket the query ("bracket repair"). Lookups are therefore
correct for every key in the universe, and the repair cost is charged to
the reported interval lengths rather than hidden.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol, Tuple, Union, runtime_checkable

import numpy as np

from . import kernels
from .datasets import SortedTable
from .search import (
    NO_PREDECESSOR,
    _branch_free_batch_core,
    branch_free_search,
    branchy_search,
    branchy_search_batch,
)

SEARCH_KINDS = ("branchy", "branch_free")
DEFAULT_CHUNK = 65536


@runtime_checkable
class CdfModel(Protocol):
    """Anything that maps keys to real rank estimates."""

    rank_scale: float

    def predict(self, key: int) -> float: ...

    def predict_many(self, keys: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class Predecessor:
    rank: int
    value: int


def clamped_round(predictions: np.ndarray, n: int) -> np.ndarray:
    """Clamp into [0, n - 1], round half away from zero; int64.

    Clamping first and rounding first give identical results because the
    clamp bounds are integers; clamping first keeps every value
    non-negative, where half-away rounding is just floor(x + 0.5).
    """
    p = np.asarray(predictions, dtype=np.float64)
    p = np.clip(p, 0, n - 1)
    p += 0.5
    np.floor(p, out=p)
    return p.astype(np.int64)


def compute_epsilon(model: CdfModel, table: SortedTable) -> int:
    """Largest |rounded clamped prediction - true rank| over table keys."""
    p = clamped_round(model.predict_many(table.keys), table.n)
    ranks = np.arange(table.n, dtype=np.int64)
    return int(np.max(np.abs(p - ranks)))


@dataclass(frozen=True)
class AtomicIndex:
    """Immutable search structure; concurrent lookups need no locking."""

    table: SortedTable
    model: Optional[CdfModel]  # None searches the full table every time
    epsilon: int
    search_kind: str = "branch_free"

    def __post_init__(self):
        if self.search_kind not in SEARCH_KINDS:
            raise ValueError(f"search_kind must be one of {SEARCH_KINDS}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")

    @property
    def n(self) -> int:
        return self.table.n


def build_index(
    table: SortedTable,
    model: Optional[CdfModel],
    search_kind: str = "branch_free",
) -> AtomicIndex:
    """Wire a trained model (or None for plain binary search) to its table."""
    eps = compute_epsilon(model, table) if model is not None else table.n - 1
    return AtomicIndex(table=table, model=model, epsilon=eps, search_kind=search_kind)


def predict_interval(index: AtomicIndex, key: int) -> Tuple[int, int]:
    """Rank interval guaranteed to contain the predecessor position, if any."""
    n = index.n
    if index.model is None:
        return 0, n - 1
    p = int(clamped_round(np.array([index.model.predict(key)]), n)[0])
    lo = max(0, p - index.epsilon)
    hi = min(n - 1, p + index.epsilon)
    keys = index.table.keys
    if keys[lo] > key:
        lo = 0
    elif hi < n - 1 and keys[hi + 1] <= key:
        hi = n - 1
    return lo, hi


def predict_interval_many(
    index: AtomicIndex, queries: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized predict_interval; returns (lo, hi, repaired mask)."""
    n = index.n
    m = len(queries)
    if index.model is None:
        zeros = np.zeros(m, dtype=np.int64)
        return zeros, np.full(m, n - 1, dtype=np.int64), np.zeros(m, dtype=bool)
    q = np.asarray(queries, dtype=np.uint64)
    p = clamped_round(index.model.predict_many(q), n)
    lo = np.maximum(p - index.epsilon, 0)
    hi = np.minimum(p + index.epsilon, n - 1)
    keys = index.table.keys
    low_miss = keys[lo] > q
    lo = np.where(low_miss, 0, lo)
    high_miss = (hi < n - 1) & (keys[np.minimum(hi + 1, n - 1)] <= q) & ~low_miss
    hi = np.where(high_miss, n - 1, hi)
    return lo, hi, low_miss | high_miss


def lookup(index: AtomicIndex, key: int) -> Optional[Predecessor]:
    """Largest table key <= query key, or None when the query is below all keys."""
    keys = index.table.keys
    if key < keys[0]:
        return None
    lo, hi = predict_interval(index, key)
    if index.search_kind == "branchy":
        rank = branchy_search(keys, key, lo, hi)
    else:
        rank = branch_free_search(keys, key, lo, hi)
    if rank is None:
        return None
    return Predecessor(rank=int(rank), value=int(keys[rank]))


def _lookup_chunk_branch_free(index: AtomicIndex, q: np.ndarray) -> np.ndarray:
    """Interval prediction + batch search with repair applied lazily.

    The eager repair in predict_interval_many probes both endpoints for
    every query; here the unrepaired interval is searched first and the
    rare queries whose predecessor escaped it are re-searched on the
    widened range. Results are identical, endpoint probes are only paid by the
    escapees.
    """
    keys = index.table.keys
    n = index.n
    if index.model is None:
        lo = np.zeros(q.shape[0], dtype=np.int64)
        hi = np.full(q.shape[0], n - 1, dtype=np.int64)
        return _branch_free_batch_core(keys, q, lo, hi)

    p = clamped_round(index.model.predict_many(q), n)
    lo = p - index.epsilon
    np.maximum(lo, 0, out=lo)
    hi = p + index.epsilon
    np.minimum(hi, n - 1, out=hi)
    res = _branch_free_batch_core(keys, q, lo, hi)

    # predecessor below the interval (or absent): widen to [0, lo]; lanes
    # whose query sits below the whole table stay empty-handed either way
    miss_low = np.flatnonzero(res == NO_PREDECESSOR)
    if miss_low.size:
        sub = _branch_free_batch_core(
            keys, q[miss_low], np.zeros(miss_low.size, dtype=np.int64), lo[miss_low]
        )
        res[miss_low] = sub
    # predecessor possibly above the interval: widen to [hi, n - 1]; a lane
    # already at hi == n - 1 just reruns a one-key range
    maybe_high = np.flatnonzero(res == hi)
    if maybe_high.size:
        nxt = np.minimum(hi[maybe_high] + 1, n - 1)
        above = maybe_high[keys[nxt] <= q[maybe_high]]
        if above.size:
            sub = _branch_free_batch_core(
                keys, q[above], hi[above], np.full(above.size, n - 1, dtype=np.int64)
            )
            res[above] = sub
    return res


def lookup_batch(
    index: AtomicIndex,
    queries: np.ndarray,
    chunk: int = DEFAULT_CHUNK,
    engine: str = "auto",
) -> np.ndarray:
    """Vectorized lookup; int64 ranks with NO_PREDECESSOR sentinel.

    Branch-free batches run on the compiled per-query kernels when numba
    is importable ("auto"); engine="numpy" forces the chunked vector
    pipeline, whose per-query intermediates stay cache-resident. All
    engines return exactly what scalar lookup returns.
    """
    if engine not in ("auto", "numpy"):
        raise ValueError("engine must be 'auto' or 'numpy'")
    q = np.ascontiguousarray(queries, dtype=np.uint64)
    if index.search_kind == "branchy":
        lo, hi, _ = predict_interval_many(index, q)
        return branchy_search_batch(index.table.keys, q, lo, hi)
    if engine == "auto" and kernels.AVAILABLE:
        return kernels.lookup_branch_free(index, q)
    out = np.empty(q.shape[0], dtype=np.int64)
    for start in range(0, q.shape[0], chunk):
        stop = min(start + chunk, q.shape[0])
        out[start:stop] = _lookup_chunk_branch_free(index, q[start:stop])
    return out


def repair_rate(index: AtomicIndex, queries: np.ndarray) -> float:
    """Fraction of queries whose predicted interval needed widening."""
    _, _, repaired = predict_interval_many(index, queries)
    return float(repaired.mean()) if len(queries) else 0.0
