"""Piecewise-linear quantile functions on a dyadic grid.

A state at level m holds the k - 1 interior quantiles q_j = Q(j/2^m),
k = 2^m, with the boundary convention Q(0) = 0, Q(1) = 1.  Everything
else in the package (priors, likelihoods, samplers, summaries) consumes
this geometry.
"""

from dataclasses import dataclass, field

import numpy as np

MIN_GAP = 1e-12

__all__ = [
    "MIN_GAP",
    "DyadicQuantileVector",
    "PiecewiseQuantileFunction",
    "UnitAffineMap",
    "identity_vector",
    "refine",
]


@dataclass(frozen=True)
class DyadicQuantileVector:
    """Strictly increasing interior quantiles at dyadic resolution."""

    level: int
    values: np.ndarray

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("level must be a positive integer")
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        k = 2**self.level
        if vals.shape != (k - 1,):
            raise ValueError(f"expected {k - 1} interior quantiles, got {vals.shape}")
        full = np.concatenate(([0.0], vals, [1.0]))
        if np.any(np.diff(full) < MIN_GAP):
            raise ValueError("quantiles must be strictly increasing inside (0, 1)")

    @property
    def k(self) -> int:
        return 2**self.level

    def full(self) -> np.ndarray:
        """Knot values including the boundaries 0 and 1 (length k + 1)."""
        return np.concatenate(([0.0], self.values, [1.0]))

    def interp(self) -> "PiecewiseQuantileFunction":
        return PiecewiseQuantileFunction(self)

    def max_increment(self) -> float:
        """Largest cell width, boundary cells included."""
        return float(np.max(np.diff(self.full())))


def identity_vector(level: int) -> DyadicQuantileVector:
    k = 2**level
    return DyadicQuantileVector(level, np.arange(1, k) / k)


def refine(q: DyadicQuantileVector, weights) -> DyadicQuantileVector:
    """Insert the level m+1 quantiles inside the current cells.

    Each new quantile splits its parent interval at the fraction given by
    the corresponding weight: new = left * (1 - w) + right * w.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (q.k,):
        raise ValueError(f"expected {q.k} weights, got {w.shape}")
    if np.any(w <= 0.0) or np.any(w >= 1.0):
        raise ValueError("weights must lie strictly inside (0, 1)")
    parents = q.full()
    child = np.empty(2 * q.k + 1)
    child[::2] = parents
    child[1::2] = parents[:-1] * (1.0 - w) + parents[1:] * w
    return DyadicQuantileVector(q.level + 1, child[1:-1])


class PiecewiseQuantileFunction:
    """A dyadic quantile vector viewed as a function by linear interpolation."""

    def __init__(self, q: DyadicQuantileVector):
        self.vector = q
        self.k = q.k
        self._y = np.arange(self.k + 1) / self.k
        self._q = q.full()

    def quantile_at(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < 0.0) or np.any(y > 1.0):
            raise ValueError("y must lie in [0, 1]")
        out = np.interp(y, self._y, self._q)
        return float(out) if out.ndim == 0 else out

    __call__ = quantile_at

    def cdf_at(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("x must lie in [0, 1]")
        out = np.interp(x, self._q, self._y)
        return float(out) if out.ndim == 0 else out

    def density_at(self, x) -> float:
        """Histogram density: 1/(k * cell width) on the cell (q_{j-1}, q_j]."""
        x = float(x)
        if not 0.0 < x < 1.0:
            raise ValueError("x must lie in (0, 1)")
        j = int(np.searchsorted(self._q, x, side="left"))
        return 1.0 / (self.k * (self._q[j] - self._q[j - 1]))

    def quantile_density(self, y) -> float:
        """Cell slope (q_j - q_{j-1}) * k on ((j-1)/k, j/k]."""
        y = float(y)
        if not 0.0 < y < 1.0:
            raise ValueError("y must lie in (0, 1)")
        j = int(np.ceil(y * self.k))
        return (self._q[j] - self._q[j - 1]) * self.k


@dataclass(frozen=True)
class UnitAffineMap:
    """Affine map from a raw data range onto [0, 1]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("need lo < hi")

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)

    def inverse(self, u):
        return self.lo + np.asarray(u, dtype=float) * (self.hi - self.lo)
