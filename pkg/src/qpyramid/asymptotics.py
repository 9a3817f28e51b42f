"""Empirical verification rigs for the limit behavior of the posteriors.

Experiments return an ExperimentReport holding the parameter grid, the
computed statistics, the declared thresholds, and pass flags; runs are
reproducible from the stored seed.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import TrueDistribution, get_distribution
from .likelihoods import Dataset
from .priors import PriorSpec, tau2
from .pyramid import DyadicQuantileVector
from .sampler import ChainConfig, run_chain

__all__ = [
    "StepDensity",
    "BridgeCovariance",
    "ExperimentReport",
    "histogram_density",
    "quantile_density_step",
    "kl_quantile_divergence",
    "hellinger",
    "hellinger_to_true",
    "bvm_experiment",
    "consistency_experiment",
    "delta_decay_experiment",
    "prior_mean_experiment",
]


# ---------------------------------------------------------------------------
# piecewise-constant densities


@dataclass(frozen=True)
class StepDensity:
    """Piecewise-constant function on [0, 1]: values[i] on (breaks[i], breaks[i+1]]."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)
        if b.size != v.size + 1:
            raise ValueError("need one more breakpoint than values")
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0.0):
            raise ValueError("breakpoints must increase from 0 to 1")

    def integral(self) -> float:
        return float(np.sum(self.values * np.diff(self.breaks)))


def histogram_density(q: DyadicQuantileVector) -> StepDensity:
    """The random-histogram density on x implied by a quantile vector."""
    qf = q.full()
    return StepDensity(qf, 1.0 / (q.k * np.diff(qf)))


def quantile_density_step(q: DyadicQuantileVector) -> StepDensity:
    """The quantile density on y: cell slope per dyadic cell."""
    qf = q.full()
    return StepDensity(np.arange(q.k + 1) / q.k, np.diff(qf) * q.k)


def _merged(f: StepDensity, g: StepDensity):
    breaks = np.union1d(f.breaks, g.breaks)
    mids = 0.5 * (breaks[:-1] + breaks[1:])
    fv = f.values[np.searchsorted(f.breaks, mids) - 1]
    gv = g.values[np.searchsorted(g.breaks, mids) - 1]
    return np.diff(breaks), fv, gv


def kl_quantile_divergence(q: StepDensity, q0: StepDensity) -> float:
    """Exact integral of q log(q/q0) over the union of breakpoints.

    Not a probability-density KL, so nonnegativity is not guaranteed and
    is not asserted; zero cells raise.
    """
    widths, qv, q0v = _merged(q, q0)
    if np.any(qv <= 0.0) or np.any(q0v <= 0.0):
        raise ValueError("divergence undefined with a zero-density cell")
    return float(np.sum(widths * qv * np.log(qv / q0v)))


def hellinger(f: StepDensity, g: StepDensity) -> float:
    """Hellinger distance between two piecewise-constant densities."""
    for d in (f, g):
        if abs(d.integral() - 1.0) > 1e-9:
            raise ValueError("inputs must integrate to 1")
    widths, fv, gv = _merged(f, g)
    affinity = float(np.sum(widths * np.sqrt(fv * gv)))
    return math.sqrt(max(0.0, 1.0 - affinity))


def hellinger_to_true(f: StepDensity, dist: TrueDistribution) -> float:
    """Hellinger distance from a histogram density to a reference density,
    with the cross term integrated in closed form per cell."""
    if abs(f.integral() - 1.0) > 1e-9:
        raise ValueError("input must integrate to 1")
    affinity = 0.0
    for a, b, c in zip(f.breaks[:-1], f.breaks[1:], f.values):
        affinity += math.sqrt(c) * dist.sqrt_pdf_integral(a, b)
    return math.sqrt(max(0.0, 1.0 - affinity))


# ---------------------------------------------------------------------------
# Brownian-bridge covariance


@dataclass(frozen=True)
class BridgeCovariance:
    """Covariance of the Brownian bridge at the k-cell dyadic grid."""

    k: int

    def matrix(self) -> np.ndarray:
        t = np.arange(1, self.k) / self.k
        return np.minimum.outer(t, t) * (1.0 - np.maximum.outer(t, t))

    def inverse(self) -> np.ndarray:
        """Tridiagonal inverse: 2k on the diagonal, -k off it."""
        m = self.k - 1
        inv = np.zeros((m, m))
        np.fill_diagonal(inv, 2.0 * self.k)
        idx = np.arange(m - 1)
        inv[idx, idx + 1] = -float(self.k)
        inv[idx + 1, idx] = -float(self.k)
        return inv

    def correlation(self, i: int, j: int) -> float:
        s = self.matrix()
        return float(s[i - 1, j - 1] / math.sqrt(s[i - 1, i - 1] * s[j - 1, j - 1]))


# ---------------------------------------------------------------------------
# experiment reports


@dataclass
class ExperimentReport:
    name: str
    params: dict
    stats: dict
    thresholds: dict
    passed: bool
    seed: int

    def to_json(self, indent=2) -> str:
        def _clean(obj):
            if isinstance(obj, dict):
                return {k: _clean(v) for k, v in obj.items()}
            if isinstance(obj, (list, tuple)):
                return [_clean(v) for v in obj]
            if isinstance(obj, np.ndarray):
                return obj.tolist()
            if isinstance(obj, (np.integer,)):
                return int(obj)
            if isinstance(obj, (np.floating,)):
                return float(obj)
            if isinstance(obj, (np.bool_,)):
                return bool(obj)
            return obj

        return json.dumps(
            _clean(
                {
                    "experiment": self.name,
                    "params": self.params,
                    "stats": self.stats,
                    "thresholds": self.thresholds,
                    "passed": bool(self.passed),
                    "seed": self.seed,
                }
            ),
            indent=indent,
        )


def _resolve_dist(f0) -> TrueDistribution:
    return f0 if isinstance(f0, TrueDistribution) else get_distribution(f0)


# ---------------------------------------------------------------------------
# experiments


def bvm_experiment(
    f0,
    n: int,
    k: int,
    prior: PriorSpec,
    iterations: int = 20000,
    chains: int = 4,
    seed: int = 0,
    sd_rel_tol: float = 0.25,
    mean_abs_tol: float = 0.1,
    corr_abs_tol: float = 0.15,
) -> ExperimentReport:
    """Pseudo-posterior normality check for sqrt(n)(q_j - F_n^{-1}(j/k)).

    Targets: mean 0, SD q0(j/k) sqrt{(j/k)(1 - j/k)}, and Brownian-bridge
    correlations between cells.
    """
    dist = _resolve_dist(f0)
    level = int(round(math.log2(k)))
    if 2**level != k:
        raise ValueError("k must be a power of two")
    rng = np.random.default_rng(seed)
    data = Dataset(np.clip(dist.sample(n, rng), 0.0, 1.0))
    spec = prior.with_level(level)
    chain_seeds = np.random.SeedSequence(seed).generate_state(chains)
    pooled = []
    for c in range(chains):
        config = ChainConfig(
            iterations=iterations,
            seed=int(chain_seeds[c]),
            likelihood_kind="substitute",
        )
        pooled.append(run_chain(config, data, spec).draws)
    draws = np.vstack(pooled)

    ys = np.arange(1, k) / k
    emp = data.empirical_quantile(ys)
    c_mat = math.sqrt(n) * (draws - emp)
    q0_density = np.array([dist.pdf(dist.quantile(y)) for y in ys])
    target_sd = np.sqrt(ys * (1.0 - ys)) / q0_density
    means = c_mat.mean(axis=0)
    sds = c_mat.std(axis=0, ddof=1)
    bridge = BridgeCovariance(k)
    corr_pairs = {}
    corr_pass = True
    if k >= 4:
        target_corr = bridge.correlation(1, 3)
        got = float(np.corrcoef(c_mat[:, 0], c_mat[:, 2])[0, 1])
        corr_pairs = {"pair": [1, 3], "target": target_corr, "observed": got}
        corr_pass = abs(got - target_corr) <= corr_abs_tol
    mean_pass = bool(np.all(np.abs(means) <= mean_abs_tol))
    sd_pass = bool(np.all(np.abs(sds / target_sd - 1.0) <= sd_rel_tol))
    return ExperimentReport(
        name="bvm",
        params={"f0": dist.name, "n": n, "k": k, "iterations": iterations,
                "chains": chains},
        stats={
            "means": means,
            "sds": sds,
            "target_sds": target_sd,
            "correlation": corr_pairs,
        },
        thresholds={"mean_abs": mean_abs_tol, "sd_rel": sd_rel_tol,
                    "corr_abs": corr_abs_tol},
        passed=mean_pass and sd_pass and corr_pass,
        seed=seed,
    )


def default_k_rule(n: int) -> int:
    """k_n = 2^ceil(log2 sqrt(n)): grows without bound while k_n/n -> 0."""
    return 2 ** math.ceil(math.log2(math.sqrt(n)))


def consistency_experiment(
    f0,
    n_grid,
    prior: PriorSpec,
    k_rule=default_k_rule,
    iterations: int = 600,
    seeds=(0, 1, 2),
) -> ExperimentReport:
    """Posterior Hellinger distance to f0 along a growing-n grid."""
    dist = _resolve_dist(f0)
    n_grid = sorted(int(n) for n in n_grid)
    ks = [k_rule(n) for n in n_grid]
    ratios = [k / n for k, n in zip(ks, n_grid)]
    if not all(a < b for a, b in zip(ks, ks[1:])):
        raise ValueError("k-rule must grow along the n grid")
    if not all(a > b for a, b in zip(ratios, ratios[1:])):
        raise ValueError("k-rule must have k_n/n decreasing along the n grid")

    distances = {}
    for seed in seeds:
        rng = np.random.default_rng(seed)
        row = []
        for n, k in zip(n_grid, ks):
            level = int(round(math.log2(k)))
            data = Dataset(np.clip(dist.sample(n, rng), 0.0, 1.0))
            config = ChainConfig(
                iterations=iterations, seed=seed * 7919 + n,
                likelihood_kind="interp",
            )
            draws = run_chain(config, data, prior.with_level(level))
            hd = [
                hellinger_to_true(histogram_density(v), dist)
                for v in draws.vectors()
            ]
            row.append(float(np.median(hd)))
        distances[seed] = row
    decreasing = all(
        all(a > b for a, b in zip(row, row[1:])) for row in distances.values()
    )
    return ExperimentReport(
        name="consistency",
        params={"f0": dist.name, "n_grid": n_grid, "k_grid": ks,
                "iterations": iterations, "seeds": list(seeds)},
        stats={"median_hellinger": {str(s): d for s, d in distances.items()}},
        thresholds={"strictly_decreasing": True},
        passed=decreasing,
        seed=min(seeds),
    )


def _ev2(spec: PriorSpec, m: int) -> float:
    """E V^2 of the level-m weight law for symmetric families."""
    if spec.mode != "homogeneous":
        raise ValueError("tail bound defined for level-homogeneous symmetric laws")
    if spec.family == "uniform":
        return 1.0 / 3.0
    if spec.family == "beta":
        return 0.25 + 0.25 / (spec.schedule.a(m) + 1.0)
    if spec.family == "md":
        return 0.25 + tau2(spec.schedule.a(m))
    raise ValueError(f"no second-moment bound for family {spec.family!r}")


def delta_decay_experiment(
    prior: PriorSpec,
    m_grid,
    replicates: int = 5000,
    eps: float = 0.5,
    seed: int = 0,
) -> ExperimentReport:
    """Monte-Carlo tail of the maximum cell width against the (2c)^m bound."""
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    m_grid = sorted(int(m) for m in m_grid)
    rng = np.random.default_rng(seed)
    tails, bounds, ses = [], [], []
    for m in m_grid:
        spec = prior.with_level(m)
        q = spec.sample_many(replicates, rng)
        full = np.hstack(
            [np.zeros((replicates, 1)), q, np.ones((replicates, 1))]
        )
        delta = np.max(np.diff(full, axis=1), axis=1)
        p_hat = float(np.mean(delta >= eps))
        c = max(_ev2(spec, lev) for lev in range(1, m + 1))
        bound = (2.0 * c) ** m / eps**2
        se = math.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / replicates)
        tails.append(p_hat)
        bounds.append(bound)
        ses.append(se)
    passed = all(p <= b + 3.0 * s for p, b, s in zip(tails, bounds, ses))
    return ExperimentReport(
        name="delta-decay",
        params={"m_grid": m_grid, "replicates": replicates, "eps": eps},
        stats={"tail_probability": tails, "bound": bounds, "mc_se": ses},
        thresholds={"bound_plus_3se": True},
        passed=passed,
        seed=seed,
    )


def prior_mean_experiment(
    prior: PriorSpec,
    draws: int = 20000,
    seed: int = 0,
) -> ExperimentReport:
    """Monte-Carlo check that the prior mean of Q sits at its target."""
    rng = np.random.default_rng(seed)
    q = prior.sample_many(draws, rng)
    k = q.shape[1] + 1
    ys = np.arange(1, k) / k
    if prior.mode == "centered":
        target = np.array([prior.target(y) for y in ys])
    elif prior.transform_target is not None:
        target = np.array([prior.transform_target(y) for y in ys])
    else:
        target = ys
    means = q.mean(axis=0)
    ses = q.std(axis=0, ddof=1) / math.sqrt(draws)
    dev = np.abs(means - target)
    passed = bool(np.all(dev <= 3.0 * ses))
    return ExperimentReport(
        name="prior-mean",
        params={"level": prior.level, "draws": draws},
        stats={"mean": means, "target": target, "abs_dev": dev, "se": ses},
        thresholds={"max_dev_over_se": 3.0},
        passed=passed,
        seed=seed,
    )
