"""Likelihood models over dyadic quantile vectors.

Two models share the same cell-count machinery: the exact likelihood of
the piecewise-linear (random histogram) quantile model, and the
multinomial substitute likelihood that depends on the data only through
the counts.  Both factorize over the pyramid, which the samplers exploit;
`factorized_log_lik` checks that identity term by term.  All quantities
are kept in log scale.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .pyramid import DyadicQuantileVector, UnitAffineMap
from .priors import pyramid_node_terms
from .special import log_binom, log_factorial

__all__ = [
    "Dataset",
    "CellCounts",
    "cell_counts",
    "count_in",
    "log_lik_interp",
    "log_lik_substitute",
    "kappa_bar",
    "kappa_sub",
    "factorized_log_lik",
    "lambda_bar",
    "lambda_kl",
    "approx_log_lik_substitute",
    "log_lik_semiparam",
]

_NORM_CLIP = 1e-8


@dataclass(frozen=True)
class Dataset:
    """Sorted observations on [0, 1] plus the map back to raw scale."""

    values: np.ndarray
    affine: UnitAffineMap = field(default_factory=lambda: UnitAffineMap(0.0, 1.0))

    def __post_init__(self):
        vals = np.sort(np.asarray(self.values, dtype=float))
        object.__setattr__(self, "values", vals)
        if vals.size and (vals[0] < 0.0 or vals[-1] > 1.0):
            raise ValueError("unit-scale values must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def has_ties(self) -> bool:
        return bool(np.any(np.diff(self.values) == 0.0))

    @classmethod
    def from_raw(cls, raw, bounds=None, padding=1e-3) -> "Dataset":
        """Map raw-scale data into [0, 1], padding min/max unless bounds given."""
        raw = np.asarray(raw, dtype=float)
        if raw.size == 0:
            raise ValueError("dataset must contain at least one observation")
        if bounds is None:
            lo, hi = float(np.min(raw)), float(np.max(raw))
            if lo == hi:
                raise ValueError("all values equal: zero-width data range")
            pad = padding * (hi - lo)
            affine = UnitAffineMap(lo - pad, hi + pad)
        else:
            affine = UnitAffineMap(float(bounds[0]), float(bounds[1]))
        return cls(affine.forward(raw), affine)

    def empirical_quantile(self, y) -> np.ndarray:
        """F_n^{-1}(y) = smallest order statistic with F_n >= y."""
        if self.n == 0:
            raise ValueError("empirical quantiles need at least one observation")
        y = np.atleast_1d(np.asarray(y, dtype=float))
        idx = np.clip(np.ceil(y * self.n).astype(int) - 1, 0, self.n - 1)
        return self.values[idx]


@dataclass(frozen=True)
class CellCounts:
    counts: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "counts", np.asarray(self.counts, dtype=int))

    @property
    def n(self) -> int:
        return int(self.counts.sum())


def count_in(values: np.ndarray, a: float, b: float) -> int:
    """Number of points in (a, b]; a lower bound at 0 is treated as closed."""
    hi = int(np.searchsorted(values, b, side="right"))
    lo = int(np.searchsorted(values, a, side="right")) if a > 0.0 else 0
    return hi - lo


def cell_counts(data: Dataset, q: DyadicQuantileVector) -> CellCounts:
    """Counts per quantile cell under the (q_{j-1}, q_j] convention."""
    qf = q.full()
    edges = np.searchsorted(data.values, qf, side="right")
    edges[0] = 0
    return CellCounts(np.diff(edges))


def log_lik_interp(data: Dataset, q: DyadicQuantileVector) -> float:
    """Exact log likelihood of the random-histogram quantile model."""
    gaps = np.diff(q.full())
    if np.any(gaps <= 0.0):
        raise ValueError("nonpositive cell width")
    counts = cell_counts(data, q).counts
    return float(np.sum(counts * (-math.log(q.k) - np.log(gaps))))


def log_lik_substitute(data: Dataset, q: DyadicQuantileVector) -> float:
    """Multinomial substitute log likelihood; empty cells are fine."""
    counts = cell_counts(data, q).counts
    n = data.n
    return (
        log_factorial(n)
        - float(sum(log_factorial(int(c)) for c in counts))
        - n * math.log(q.k)
    )


def kappa_bar(data: Dataset, q: float, a: float, b: float) -> float:
    """Log of the interpolation-likelihood node factor on (a, b)."""
    if not a < q < b:
        raise ValueError("need a < q < b")
    m_left = count_in(data.values, a, q)
    m_right = count_in(data.values, q, b)
    return m_left * math.log(0.5 * (b - a) / (q - a)) + m_right * math.log(
        0.5 * (b - a) / (b - q)
    )


def kappa_sub(data: Dataset, q: float, a: float, b: float) -> float:
    """Log symmetric-binomial node factor of the substitute likelihood."""
    if not a < q < b:
        raise ValueError("need a < q < b")
    m_left = count_in(data.values, a, q)
    m_total = count_in(data.values, a, b)
    return log_binom(m_total, m_left) + m_total * math.log(0.5)


def factorized_log_lik(data: Dataset, q: DyadicQuantileVector, kind: str) -> float:
    """Sum of node factors over the pyramid; equals the direct log likelihood."""
    if kind == "interp":
        node = kappa_bar
    elif kind == "substitute":
        node = kappa_sub
    else:
        raise ValueError(f"unknown likelihood kind {kind!r}")
    qf = q.full()
    total = 0.0
    for _lev, _j, lp, cp, rp in pyramid_node_terms(q.level):
        total += node(data, qf[cp], qf[lp], qf[rp])
    return total


def _cell_masses(f0_cdf, qf: np.ndarray) -> np.ndarray:
    vals = np.array([f0_cdf(x) for x in qf], dtype=float)
    return np.diff(vals)


def lambda_bar(q: DyadicQuantileVector, f0_cdf) -> float:
    """Large-n limit of -log(interp likelihood)/n, up to the log k shift."""
    qf = q.full()
    masses = _cell_masses(f0_cdf, qf)
    gaps = np.diff(qf)
    return float(np.sum(masses * np.log(gaps * q.k)))


def lambda_kl(q: DyadicQuantileVector, f0_cdf) -> float:
    """KL distance from the cell-mass distribution to the uniform one."""
    masses = _cell_masses(f0_cdf, q.full())
    out = 0.0
    for p in masses:
        if p > 0.0:
            out += p * math.log(p * q.k)
    return out


def approx_log_lik_substitute(data: Dataset, q: DyadicQuantileVector) -> float:
    """Quadratic approximation to the substitute log likelihood.

    Valid only when every cell is populated; refuses empty cells.
    """
    counts = cell_counts(data, q).counts
    if np.any(counts == 0):
        raise ValueError("approximation undefined with empty cells")
    n = data.n
    k = q.k
    p = counts / n
    return float(-0.5 * n * k * np.sum((p - 1.0 / k) ** 2) + 0.5 * np.sum(np.log(p)))


def log_lik_semiparam(
    mu: float, sigma: float, q_unif: DyadicQuantileVector, raw_values
) -> float:
    """Log likelihood of the normal-location-scale pyramid model.

    The quantile process is mu + sigma * Phi^{-1}(Q_unif(y)); boundary
    cells clip the infinite normal quantiles at Phi^{-1}(1e-8) and
    Phi^{-1}(1 - 1e-8).  Data falling outside the outermost cuts has zero
    density under the histogram model, so such states score -inf.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    raw = np.sort(np.asarray(raw_values, dtype=float))
    n = raw.size
    if n == 0:
        return 0.0
    k = q_unif.k
    u = q_unif.full()
    u[0] = _NORM_CLIP
    u[-1] = 1.0 - _NORM_CLIP
    z = ndtri(np.clip(u, _NORM_CLIP, 1.0 - _NORM_CLIP))
    if np.any(np.diff(z) <= 0.0):
        raise ValueError("degenerate normal-scale cell")
    cuts = mu + sigma * z
    if raw[0] <= cuts[0] or raw[-1] > cuts[-1]:
        return -math.inf
    edges = np.searchsorted(raw, cuts, side="right")
    counts = np.diff(edges)
    return float(
        -n * math.log(sigma) + np.sum(counts * (-math.log(k) - np.log(np.diff(z))))
    )
