"""Final-stage predecessor search over a rank interval of a sorted array.

Two routines with identical results: a classic early-exit binary search and
a uniform binary search whose loop body contains no data-dependent branch.
Both answer: largest rank r in [lo, hi] with keys[r] <= key, or no
predecessor when every key in the range exceeds the query.

The branch-free loop maintains a base rank and a remaining length, halving
the length each step and moving the base by arithmetic on the comparison
result. Its step count is ceil(log2(range length)) regardless of the key;
branch freedom is a property of the algorithm shape here, Python itself
gives no machine-code guarantees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

NO_PREDECESSOR = -1  # sentinel rank used by the batch API


@dataclass(frozen=True)
class SearchStats:
    """Element probes performed and the resulting rank (None if no predecessor)."""

    comparisons: int
    result_rank: Optional[int]


def _check_bounds(n: int, lo: int, hi: int) -> None:
    if not (0 <= lo <= hi <= n - 1):
        raise ValueError(f"invalid search bounds [{lo}, {hi}] for {n} keys")


def branchy_search(keys, key: int, lo: int, hi: int) -> Optional[int]:
    """Standard binary search with early exit on an exact match."""
    _check_bounds(len(keys), lo, hi)
    result = None
    while lo <= hi:
        mid = (lo + hi) >> 1
        v = keys[mid]
        if v == key:
            return mid
        if v < key:
            result = mid
            lo = mid + 1
        else:
            hi = mid - 1
    return result


def branchy_search_stats(keys, key: int, lo: int, hi: int) -> SearchStats:
    """branchy_search with an element-probe counter."""
    _check_bounds(len(keys), lo, hi)
    result = None
    probes = 0
    while lo <= hi:
        mid = (lo + hi) >> 1
        v = keys[mid]
        probes += 1
        if v == key:
            return SearchStats(probes, mid)
        if v < key:
            result = mid
            lo = mid + 1
        else:
            hi = mid - 1
    return SearchStats(probes, result)


def branch_free_search(keys, key: int, lo: int, hi: int) -> Optional[int]:
    """Uniform binary search: fixed step count, select-based base updates."""
    _check_bounds(len(keys), lo, hi)
    base = lo
    length = hi - lo + 1
    while length > 1:
        half = length >> 1
        base += half * (keys[base + half - 1] <= key)
        length -= half
    rank = base + (keys[base] <= key) - 1
    return rank if rank >= lo else None


def branch_free_search_stats(keys, key: int, lo: int, hi: int) -> SearchStats:
    """branch_free_search with an element-probe counter."""
    _check_bounds(len(keys), lo, hi)
    base = lo
    length = hi - lo + 1
    probes = 0
    while length > 1:
        half = length >> 1
        probes += 1
        base += half * (keys[base + half - 1] <= key)
        length -= half
    probes += 1
    rank = base + (keys[base] <= key) - 1
    return SearchStats(probes, rank if rank >= lo else None)


def branch_free_search_batch(keys: np.ndarray, queries: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorized uniform binary search over per-query intervals.

    Each lane follows exactly the scalar halving schedule for its own range
    length. Finished lanes are compacted away so total work stays
    proportional to the sum of per-lane step counts. Returns int64 ranks
    with NO_PREDECESSOR where keys[lo] > query.
    """
    n = keys.shape[0]
    lo = np.asarray(lo, dtype=np.int64)
    hi = np.asarray(hi, dtype=np.int64)
    if lo.size and (lo.min() < 0 or hi.max() > n - 1 or np.any(lo > hi)):
        raise ValueError("invalid search bounds in batch")
    return _branch_free_batch_core(keys, np.asarray(queries, dtype=np.uint64), lo, hi)


def _branch_free_batch_core(keys: np.ndarray, q: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Unvalidated batch search; callers guarantee 0 <= lo <= hi < n."""
    base = lo.copy()
    length = hi - lo + 1
    idx = np.arange(q.shape[0])
    out = np.empty(q.shape[0], dtype=np.int64)
    qa = q
    while length.size:
        active = length > 1
        n_active = int(np.count_nonzero(active))
        if n_active == 0:
            break
        if n_active <= (idx.size >> 1):
            done = ~active
            out[idx[done]] = base[done]
            idx = idx[active]
            base = base[active]
            length = length[active]
            qa = qa[active]
            active = length > 1
        half = length >> 1
        go = keys[base + half - 1] <= qa
        go &= active
        base += half * go
        length -= half
    out[idx] = base
    res = out + (keys[out] <= q).astype(np.int64) - 1
    return np.where(res >= lo, res, NO_PREDECESSOR)


def branchy_search_batch(keys, queries: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Per-query loop over branchy_search; int64 ranks with NO_PREDECESSOR."""
    kl = keys.tolist()
    out = np.empty(len(queries), dtype=np.int64)
    lo_l = np.asarray(lo, dtype=np.int64).tolist()
    hi_l = np.asarray(hi, dtype=np.int64).tolist()
    for i, key in enumerate(queries.tolist()):
        r = branchy_search(kl, key, lo_l[i], hi_l[i])
        out[i] = NO_PREDECESSOR if r is None else r
    return out
