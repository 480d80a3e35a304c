"""Closed-form polynomial regression of a table's key-to-rank mapping.

Fits rank as a polynomial of degree 1, 2, or 3 in the key by minimizing
mean squared error. Keys are normalized to [0, 1] before powers are built
(raw 63-bit keys cubed would destroy the conditioning of the moment
matrix) and ranks are normalized to [0, 1], so the learned coefficients
live on a well-scaled problem. Predictions are denormalized by rank_scale,
which equals n - 1 for a table of n keys.

The minimizer is obtained by solving the (g+1) x (g+1) normal-equations
system with Gaussian elimination and partial pivoting rather than forming
an explicit inverse; the moment sums feeding that system are accumulated
with compensated summation.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .datasets import SortedTable

DEGREES = (1, 2, 3)
DEGREE_NAMES = {1: "L", 2: "Q", 3: "C"}

_PIVOT_TOL = 1e-12
_RESIDUAL_TOL = 1e-8
_SUM_CHUNK = 65536


class SingularMatrixError(ValueError):
    """Normal-equations matrix has no usable pivot."""


class DegenerateInputError(ValueError):
    """Table cannot support the requested fit (collapsed key range)."""


@dataclass(frozen=True)
class PolynomialModel:
    """Polynomial rank predictor with its key/rank normalization constants.

    Keys normalize through a precomputed reciprocal of key_scale; every
    prediction path (scalar, vectorized, compiled) applies the identical
    float64 operation sequence, so their outputs agree bit for bit.
    """

    degree: int
    weights: np.ndarray  # one coefficient per power 1..degree
    intercept: float
    key_offset: float
    key_scale: float
    rank_scale: float
    train_seconds: Optional[float] = field(default=None, compare=False)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.degree not in DEGREES:
            raise ValueError("degree must be 1, 2, or 3")
        if w.shape != (self.degree,):
            raise ValueError("need one weight per power 1..degree")
        if not (np.all(np.isfinite(w)) and math.isfinite(self.intercept)):
            raise ValueError("coefficients must be finite")
        if self.key_scale <= 0:
            raise ValueError("key_scale must be positive")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "inv_key_scale", 1.0 / self.key_scale)

    @property
    def name(self) -> str:
        return DEGREE_NAMES[self.degree]

    def predict(self, key: int) -> float:
        """Unclamped real rank estimate for a single key."""
        xh = (float(key) - self.key_offset) * self.inv_key_scale
        acc = float(self.weights[-1]) * xh
        for w in self.weights[-2::-1]:
            acc += w
            acc *= xh
        acc += self.intercept
        return acc * self.rank_scale

    def predict_many(self, keys: np.ndarray) -> np.ndarray:
        """Vectorized predict; float64 array of unclamped rank estimates."""
        xh = keys.astype(np.float64)
        xh -= self.key_offset
        xh *= self.inv_key_scale
        acc = self.weights[-1] * xh
        for w in self.weights[-2::-1]:
            acc += w
            acc *= xh
        acc += self.intercept
        acc *= self.rank_scale
        return acc


def compensated_sum(values: np.ndarray) -> float:
    """Exact-style sum: fsum over pairwise-summed chunks."""
    if values.size <= _SUM_CHUNK:
        return float(math.fsum(values.tolist())) if values.size < 512 else float(values.sum())
    parts = [float(values[i:i + _SUM_CHUNK].sum()) for i in range(0, values.size, _SUM_CHUNK)]
    return float(math.fsum(parts))


def design_matrix(normalized_keys: np.ndarray, degree: int) -> np.ndarray:
    """Rows [x, x**2, .., x**degree, 1] for normalized keys; last column ones."""
    if degree not in DEGREES:
        raise ValueError("degree must be 1, 2, or 3")
    x = np.asarray(normalized_keys, dtype=np.float64)
    cols = [x ** k for k in range(1, degree + 1)]
    cols.append(np.ones_like(x))
    return np.column_stack(cols)


def solve_normal_equations(gram: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve gram @ theta = rhs by Gaussian elimination with partial pivoting.

    Intended for the tiny symmetric systems produced by fits (at most 4x4).
    Raises SingularMatrixError when the best available pivot is below
    1e-12, and checks the solution residual against 1e-8 * max|rhs|.
    """
    a = np.array(gram, dtype=np.float64)
    b = np.array(rhs, dtype=np.float64)
    m = b.shape[0]
    if a.shape != (m, m):
        raise ValueError("gram matrix and rhs sizes disagree")

    for col in range(m):
        pivot_row = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot_row, col]) < _PIVOT_TOL:
            raise SingularMatrixError(f"pivot {a[pivot_row, col]:.3e} below tolerance")
        if pivot_row != col:
            a[[col, pivot_row]] = a[[pivot_row, col]]
            b[[col, pivot_row]] = b[[pivot_row, col]]
        for row in range(col + 1, m):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]

    theta = np.zeros(m)
    for row in range(m - 1, -1, -1):
        theta[row] = (b[row] - a[row, row + 1:] @ theta[row + 1:]) / a[row, row]

    residual = np.max(np.abs(np.asarray(gram, dtype=np.float64) @ theta - np.asarray(rhs, dtype=np.float64)))
    bound = _RESIDUAL_TOL * max(np.max(np.abs(rhs)), 1e-300)
    if residual > bound:
        raise SingularMatrixError(f"solution residual {residual:.3e} exceeds {bound:.3e}")
    return theta


def fit_polynomial(table: SortedTable, degree: int) -> PolynomialModel:
    """MSE-minimizing polynomial of the table's key-to-rank mapping.

    Builds the moment sums of the normalized design matrix with compensated
    summation and solves the normal equations. The wall-clock fit time is
    recorded on the returned model.
    """
    if degree not in DEGREES:
        raise ValueError("degree must be 1, 2, or 3")
    n = table.n
    if n < degree + 1:
        raise ValueError(f"need at least {degree + 1} keys for degree {degree}")

    t0 = time.perf_counter()
    key_offset = float(table.keys[0])
    key_scale = float(table.keys[-1]) - key_offset
    if key_scale <= 0.0:
        raise DegenerateInputError("key range collapsed after normalization")

    xh = table.keys.astype(np.float64)
    xh -= key_offset
    xh *= 1.0 / key_scale
    yh = np.arange(n, dtype=np.float64)
    yh /= n - 1

    # moments S[k] = sum xh**k (k <= 2g) and T[k] = sum yh * xh**k (k <= g)
    s_moments = [float(n)]
    t_moments = [compensated_sum(yh)]
    power = np.ones_like(xh)
    for k in range(1, 2 * degree + 1):
        power = power * xh
        s_moments.append(compensated_sum(power))
        if k <= degree:
            t_moments.append(compensated_sum(power * yh))

    # columns ordered [xh, .., xh**g, 1]
    size = degree + 1
    gram = np.empty((size, size))
    rhs = np.empty(size)
    for a in range(degree):
        for b in range(degree):
            gram[a, b] = s_moments[a + b + 2]
        gram[a, degree] = s_moments[a + 1]
        gram[degree, a] = s_moments[a + 1]
        rhs[a] = t_moments[a + 1]
    gram[degree, degree] = s_moments[0]
    rhs[degree] = t_moments[0]

    try:
        theta = solve_normal_equations(gram, rhs)
    except SingularMatrixError as exc:
        raise DegenerateInputError(f"normal equations unsolvable: {exc}") from exc
    elapsed = time.perf_counter() - t0

    return PolynomialModel(
        degree=degree,
        weights=theta[:degree],
        intercept=float(theta[degree]),
        key_offset=key_offset,
        key_scale=key_scale,
        rank_scale=float(n - 1),
        train_seconds=elapsed,
    )


def predict_poly(model: PolynomialModel, key: int) -> float:
    """Unclamped real rank estimate; clamping is the index layer's job."""
    return model.predict(key)
