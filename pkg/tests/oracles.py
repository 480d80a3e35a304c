"""Independent reference implementations used to cross-check the library.

Everything here is deliberately naive (linear scans, cofactor inverses,
nested loops, finite differences) and shares no code with the package.
"""

from __future__ import annotations

import math

import numpy as np


def predecessor_scan(keys, key, lo, hi):
    """Largest rank in [lo, hi] with keys[rank] <= key, by literal scan."""
    best = None
    for rank in range(lo, hi + 1):
        if keys[rank] <= key:
            best = rank
    return best


def predecessor_scan_vec(keys: np.ndarray, key, lo: int, hi: int):
    """Same scan over a slice, vectorized for large sweeps."""
    window = keys[lo:hi + 1]
    mask = window <= np.uint64(key)
    if not mask.any():
        return None
    return lo + int(np.nonzero(mask)[0][-1])


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5) * (1 if x >= 0 else -1))


def brute_epsilon(predict, keys) -> int:
    """Max |rounded clamped prediction - rank| via a per-key python loop."""
    n = len(keys)
    worst = 0
    for rank, key in enumerate(keys):
        p = round_half_away(predict(int(key)))
        p = min(max(p, 0), n - 1)
        worst = max(worst, abs(p - rank))
    return worst


def forward_triple_loop(weights, biases, bits):
    """Fully connected forward pass with nested python loops, relu hidden."""
    h = [float(v) for v in bits]
    last = len(weights) - 1
    for layer, (w, b) in enumerate(zip(weights, biases)):
        fan_in, fan_out = w.shape
        out = []
        for j in range(fan_out):
            acc = float(b[j])
            for i in range(fan_in):
                acc += h[i] * float(w[i, j])
            if layer < last and acc < 0.0:
                acc = 0.0
            out.append(acc)
        h = out
    return h[0]


def _minor(a, row, col):
    return [[a[i][j] for j in range(len(a)) if j != col] for i in range(len(a)) if i != row]


def _det(a):
    m = len(a)
    if m == 0:
        return 1.0
    if m == 1:
        return a[0][0]
    total = 0.0
    for col in range(m):
        total += ((-1) ** col) * a[0][col] * _det(_minor(a, 0, col))
    return total


def adjugate_solve(matrix, rhs):
    """Solve via the cofactor (adjugate) inverse; fine up to 4x4."""
    a = [[float(v) for v in row] for row in np.asarray(matrix)]
    b = [float(v) for v in np.asarray(rhs)]
    m = len(a)
    det = _det(a)
    if det == 0.0:
        raise ZeroDivisionError("singular matrix")
    inv = [[((-1) ** (i + j)) * _det(_minor(a, j, i)) / det for j in range(m)] for i in range(m)]
    return np.array([sum(inv[i][j] * b[j] for j in range(m)) for i in range(m)])


def finite_diff_grads(loss_fn, params, coords, h=1e-5):
    """Central finite differences of loss_fn at a sample of coordinates.

    params is a list of arrays modified in place around each evaluation;
    coords is a list of (array_index, flat_offset) pairs.
    """
    grads = []
    for ai, off in coords:
        flat = params[ai].ravel()
        orig = flat[off]
        flat[off] = orig + h
        up = loss_fn()
        flat[off] = orig - h
        down = loss_fn()
        flat[off] = orig
        grads.append((up - down) / (2.0 * h))
    return np.array(grads)


def ks_statistic_uniform(keys: np.ndarray, lo: int, hi: int) -> float:
    """Two-sided Kolmogorov distance to the closed-form uniform CDF."""
    x = np.sort(np.asarray(keys, dtype=np.float64))
    n = x.size
    cdf = (x - lo) / (hi - lo)
    upper = np.max(np.arange(1, n + 1) / n - cdf)
    lower = np.max(cdf - np.arange(0, n) / n)
    return float(max(upper, lower))


def sample_skewness(values: np.ndarray) -> float:
    v = np.asarray(values, dtype=np.float64)
    centered = v - v.mean()
    m2 = float((centered**2).mean())
    m3 = float((centered**3).mean())
    return m3 / m2**1.5


def poly_mse(weights, intercept, normalized_keys, normalized_ranks) -> float:
    """Mean squared error of a polynomial on normalized pairs."""
    pred = np.full_like(normalized_keys, float(intercept))
    for power, w in enumerate(weights, start=1):
        pred += float(w) * normalized_keys**power
    return float(((pred - normalized_ranks) ** 2).mean())
