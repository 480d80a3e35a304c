"""Compiled batch-lookup kernels.

The vectorized numpy pipeline in index.py pays several full-array passes
per search step, and a one-query-at-a-time loop serializes its table
probes behind each other. These kernels process queries in small blocks:
each search step issues one probe for every query in the block before any
query advances, so independent cache misses overlap while every query
still follows the exact branch-free halving schedule for its own range.
Prediction arithmetic matches the model classes operation for operation,
making kernel results bit-identical to the numpy and scalar paths; when
numba is missing the package falls back to the numpy pipeline.

Kernels are single-threaded on purpose: timed sections must not
parallelize.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

_BLOCK = 256


@njit(cache=True)
def _bfs_range(keys, q, lo, hi):
    """Uniform binary search; lo - 1 (as -1 when lo = 0) means no predecessor."""
    base = lo
    length = hi - lo + 1
    while length > 1:
        half = length >> 1
        base += half * (keys[base + half - 1] <= q)
        length -= half
    return base + (keys[base] <= q) - 1


@njit(cache=True)
def _finish_lane(keys, qk, base, lo, hi, n):
    """Final select plus bracket repair for one searched lane."""
    r = base + (keys[base] <= qk) - 1
    if r < lo:
        if lo > 0:
            r = _bfs_range(keys, qk, 0, lo)
        if r < 0:
            r = -1
    elif r == hi and hi < n - 1 and keys[hi + 1] <= qk:
        r = _bfs_range(keys, qk, hi, n - 1)
    return r


@njit(cache=True)
def _plain_bfs(keys, queries, out):
    n = keys.shape[0]
    m = queries.shape[0]
    base = np.empty(_BLOCK, dtype=np.int64)
    for s in range(0, m, _BLOCK):
        cnt = min(_BLOCK, m - s)
        for i in range(cnt):
            base[i] = 0
        length = n
        while length > 1:
            half = length >> 1
            for i in range(cnt):
                base[i] += half * (keys[base[i] + half - 1] <= queries[s + i])
            length -= half
        for i in range(cnt):
            qk = queries[s + i]
            r = base[i] + (keys[base[i]] <= qk) - 1
            out[s + i] = r if r >= 0 else -1


@njit(cache=True)
def _interval_bfs_block(keys, queries, s, cnt, p, eps, base, length, out):
    """Search one block given rounded predictions p for lanes [s, s + cnt)."""
    n = keys.shape[0]
    maxlen = 1
    for i in range(cnt):
        lo = p[i] - eps
        if lo < 0:
            lo = 0
        hi = p[i] + eps
        if hi > n - 1:
            hi = n - 1
        base[i] = lo
        ln = hi - lo + 1
        length[i] = ln
        if ln > maxlen:
            maxlen = ln
    while maxlen > 1:
        for i in range(cnt):
            ln = length[i]
            half = ln >> 1
            base[i] += half * (keys[base[i] + half - 1] <= queries[s + i])
            length[i] = ln - half
        maxlen -= maxlen >> 1
    for i in range(cnt):
        qk = queries[s + i]
        lo = p[i] - eps
        if lo < 0:
            lo = 0
        hi = p[i] + eps
        if hi > n - 1:
            hi = n - 1
        out[s + i] = _finish_lane(keys, qk, base[i], lo, hi, n)


@njit(cache=True)
def _poly_bfs(keys, queries, weights, intercept, inv_key_scale, key_offset, rank_scale, eps, out):
    n = keys.shape[0]
    g = weights.shape[0]
    m = queries.shape[0]
    base = np.empty(_BLOCK, dtype=np.int64)
    length = np.empty(_BLOCK, dtype=np.int64)
    p = np.empty(_BLOCK, dtype=np.int64)
    for s in range(0, m, _BLOCK):
        cnt = min(_BLOCK, m - s)
        for i in range(cnt):
            xh = (np.float64(queries[s + i]) - key_offset) * inv_key_scale
            acc = weights[g - 1] * xh
            for j in range(g - 2, -1, -1):
                acc += weights[j]
                acc *= xh
            acc += intercept
            acc *= rank_scale
            if acc < 0.0:
                acc = 0.0
            elif acc > n - 1.0:
                acc = n - 1.0
            p[i] = np.int64(math.floor(acc + 0.5))
        _interval_bfs_block(keys, queries, s, cnt, p, eps, base, length, out)


@njit(cache=True)
def _predicted_bfs(keys, queries, predictions, eps, out):
    n = keys.shape[0]
    m = queries.shape[0]
    base = np.empty(_BLOCK, dtype=np.int64)
    length = np.empty(_BLOCK, dtype=np.int64)
    p = np.empty(_BLOCK, dtype=np.int64)
    for s in range(0, m, _BLOCK):
        cnt = min(_BLOCK, m - s)
        for i in range(cnt):
            acc = predictions[s + i]
            if acc < 0.0:
                acc = 0.0
            elif acc > n - 1.0:
                acc = n - 1.0
            p[i] = np.int64(math.floor(acc + 0.5))
        _interval_bfs_block(keys, queries, s, cnt, p, eps, base, length, out)


def lookup_branch_free(index, queries: np.ndarray) -> np.ndarray:
    """Kernel-backed batch lookup for a branch-free index."""
    out = np.empty(queries.shape[0], dtype=np.int64)
    keys = index.table.keys
    model = index.model
    if model is None:
        _plain_bfs(keys, queries, out)
        return out
    weights = getattr(model, "weights", None)
    intercept = getattr(model, "intercept", None)
    if intercept is not None and isinstance(weights, np.ndarray):
        _poly_bfs(keys, queries, weights, model.intercept, model.inv_key_scale,
                  model.key_offset, model.rank_scale, index.epsilon, out)
        return out
    # chunk the model's batch prediction so activations stay modest
    predictions = np.empty(queries.shape[0], dtype=np.float64)
    step = 65536
    for start in range(0, queries.shape[0], step):
        stop = min(start + step, queries.shape[0])
        predictions[start:stop] = model.predict_many(queries[start:stop])
    _predicted_bfs(keys, queries, predictions, index.epsilon, out)
    return out
