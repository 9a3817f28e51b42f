"""Laws of the pyramid interpolation weights and the resulting priors.

A prior over dyadic quantile vectors is built by drawing, level by level,
a weight V in (0, 1) for every new quantile and splitting the parent
interval at that fraction.  This module provides the weight laws
(uniform, Beta, median-Dirichlet), level schedules for their parameters,
prior sampling and density evaluation, Eq-style centering at a target
quantile function, and the analytic quantities attached to the Beta and
median-Dirichlet pyramids (xi, expected max quantile density, tau^2).
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .pyramid import MIN_GAP, DyadicQuantileVector, refine
from .special import betainc_reg, log_beta

__all__ = [
    "VLaw",
    "UniformV",
    "BetaV",
    "FixedV",
    "MedianDirichletV",
    "LevelSchedule",
    "CenterTarget",
    "IDENTITY_TARGET",
    "YSQUARED_TARGET",
    "PriorSpec",
    "pyramid_node_terms",
    "sample_prior",
    "log_prior_density",
    "centering_means",
    "transform_center",
    "md_cdf",
    "md_sample",
    "xi",
    "expected_max_qdensity",
    "tau2",
    "rho",
    "parse_prior",
]

_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# weight laws


class VLaw:
    """Law of a single interpolation weight on (0, 1)."""

    def sample(self, rng, size=None):
        raise NotImplementedError

    def log_density(self, v: float) -> float:
        raise NotImplementedError

    def mean(self) -> float:
        raise NotImplementedError


class UniformV(VLaw):
    def sample(self, rng, size=None):
        return _clamp(rng.uniform(0.0, 1.0, size))

    def log_density(self, v):
        if not 0.0 < v < 1.0:
            return -math.inf
        return 0.0

    def mean(self):
        return 0.5

    def __repr__(self):
        return "UniformV()"


class BetaV(VLaw):
    def __init__(self, a: float, b: float):
        if a <= 0.0 or b <= 0.0:
            raise ValueError("Beta parameters must be positive")
        self.a = a
        self.b = b
        self._log_norm = log_beta(a, b)

    def sample(self, rng, size=None):
        return _clamp(rng.beta(self.a, self.b, size))

    def log_density(self, v):
        if not 0.0 < v < 1.0:
            return -math.inf
        return (
            (self.a - 1.0) * math.log(v)
            + (self.b - 1.0) * math.log1p(-v)
            - self._log_norm
        )

    def mean(self):
        return self.a / (self.a + self.b)

    def __repr__(self):
        return f"BetaV({self.a!r}, {self.b!r})"


class FixedV(VLaw):
    """Degenerate weight; useful for deterministic constructions in tests."""

    def __init__(self, v: float = 0.5):
        if not 0.0 < v < 1.0:
            raise ValueError("v must lie in (0, 1)")
        self.v = v

    def sample(self, rng, size=None):
        if size is None:
            return self.v
        return np.full(size, self.v)

    def log_density(self, v):
        raise ValueError("a degenerate weight law has no density on (0, 1)")

    def mean(self):
        return self.v


class MedianDirichletV(VLaw):
    """MD(a): law of the median of a Dirichlet process with uniform base."""

    _DIFF_STEP = 1e-6

    def __init__(self, a: float):
        if a <= 0.0:
            raise ValueError("concentration must be positive")
        self.a = a

    def sample(self, rng, size=None):
        if size is None:
            return md_sample(self.a, rng)
        u = rng.uniform(0.0, 1.0, size)
        flat = np.asarray(u, dtype=float).ravel()
        out = np.array([_md_invert(self.a, ui) for ui in flat])
        return _clamp(out.reshape(np.shape(u)))

    def log_density(self, v):
        if not 0.0 < v < 1.0:
            return -math.inf
        h = min(self._DIFF_STEP, 0.5 * v, 0.5 * (1.0 - v))
        dens = (md_cdf(self.a, v + h) - md_cdf(self.a, v - h)) / (2.0 * h)
        if dens <= 0.0:
            return -math.inf
        return math.log(dens)

    def mean(self):
        return 0.5

    def __repr__(self):
        return f"MedianDirichletV({self.a!r})"


def _clamp(v):
    return np.clip(v, _CLAMP, 1.0 - _CLAMP)


# ---------------------------------------------------------------------------
# schedules and centering targets


@dataclass(frozen=True)
class LevelSchedule:
    """Rule mapping a pyramid level m to the concentration a_m."""

    kind: str
    value: float = 0.0
    table: tuple = ()

    @classmethod
    def constant(cls, a: float) -> "LevelSchedule":
        if a <= 0.0:
            raise ValueError("a must be positive")
        return cls("constant", a)

    @classmethod
    def polynomial(cls, c: float) -> "LevelSchedule":
        """a_m = c * m^3."""
        if c <= 0.0:
            raise ValueError("c must be positive")
        return cls("polynomial", c)

    @classmethod
    def from_table(cls, values) -> "LevelSchedule":
        vals = tuple(float(v) for v in values)
        if any(v <= 0.0 for v in vals):
            raise ValueError("all a_m must be positive")
        return cls("table", table=vals)

    def a(self, m: int) -> float:
        if self.kind == "constant":
            return self.value
        if self.kind == "polynomial":
            return self.value * m**3
        if m > len(self.table):
            raise ValueError(f"schedule table has no entry for level {m}")
        return self.table[m - 1]


@dataclass(frozen=True)
class CenterTarget:
    """A strictly increasing target quantile function with inverse and slope."""

    name: str
    fn: Callable[[float], float]
    inverse: Callable[[float], float]
    deriv: Callable[[float], float]

    def __call__(self, y):
        return self.fn(y)


IDENTITY_TARGET = CenterTarget("identity", lambda y: y, lambda q: q, lambda y: 1.0)
YSQUARED_TARGET = CenterTarget(
    "ysquared", lambda y: y * y, lambda q: math.sqrt(q), lambda y: 2.0 * y
)

_BUILTIN_TARGETS = {t.name: t for t in (IDENTITY_TARGET, YSQUARED_TARGET)}


def centering_means(q_null, m: int):
    """Per-node weight means that put the prior mean of Q at q_null.

    Returns a list with one array per level; entry i of the level-l array
    is the mean for the node at odd index j = 2i + 1.
    """
    means = []
    for lev in range(1, m + 1):
        k = 2**lev
        grid = np.array([q_null(j / k) for j in range(k + 1)], dtype=float)
        if np.any(np.diff(grid) <= 0.0):
            raise ValueError("centering target must be strictly increasing")
        odd = np.arange(1, k, 2)
        mu = (grid[odd] - grid[odd - 1]) / (grid[odd + 1] - grid[odd - 1])
        means.append(mu)
    return means


def transform_center(q_unif, q_null):
    """Compose a uniform-centered quantile function with a target map."""

    def composed(y):
        return q_null(q_unif(y))

    return composed


# ---------------------------------------------------------------------------
# pyramid node bookkeeping


def pyramid_node_terms(level: int):
    """All (level, odd index, left/center/right positions) node terms.

    Positions index the full knot vector of length 2^level + 1, boundaries
    included.  Terms are ordered root first, then level by level.
    """
    terms = []
    for lev in range(1, level + 1):
        stride = 2 ** (level - lev)
        for j in range(1, 2**lev, 2):
            c = j * stride
            terms.append((lev, j, c - stride, c, c + stride))
    return terms


# ---------------------------------------------------------------------------
# prior specification


class PriorSpec:
    """Assignment of a weight law to every node of a pyramid.

    Modes:
      - "homogeneous": one law per level, from a family plus schedule;
      - "centered": asymmetric Beta with per-node means matching a target;
      - "md_adaptive": MD(a) with a = b / parent gap, set at sample time;
      - "fixed": degenerate weights (testing / deterministic constructions).

    An optional transform target composes every sampled pyramid with a
    monotone map, centering the prior median at that map.
    """

    def __init__(self, level, mode, family=None, schedule=None, target=None,
                 b=None, fixed_v=0.5, transform_target=None):
        if level < 1:
            raise ValueError("level must be positive")
        self.level = level
        self.mode = mode
        self.family = family
        self.schedule = schedule
        self.target = target
        self.b = b
        self.fixed_v = fixed_v
        self.transform_target = transform_target
        self._level_laws = None
        self._node_means = None
        if mode == "homogeneous":
            self._level_laws = [
                self._make_law(m) for m in range(1, level + 1)
            ]
        elif mode == "centered":
            if schedule is None or target is None:
                raise ValueError("centered mode needs a schedule and a target")
            self._node_means = centering_means(target, level)
        elif mode == "md_adaptive":
            if b is None or b <= 0.0:
                raise ValueError("md_adaptive mode needs b > 0")
        elif mode != "fixed":
            raise ValueError(f"unknown prior mode {mode!r}")

    # constructors ----------------------------------------------------------

    @classmethod
    def uniform(cls, level):
        return cls(level, "homogeneous", family="uniform")

    @classmethod
    def symmetric_beta(cls, level, schedule: LevelSchedule):
        return cls(level, "homogeneous", family="beta", schedule=schedule)

    @classmethod
    def median_dirichlet(cls, level, schedule: LevelSchedule):
        return cls(level, "homogeneous", family="md", schedule=schedule)

    @classmethod
    def md_adaptive(cls, level, b: float):
        return cls(level, "md_adaptive", b=b)

    @classmethod
    def centered_beta(cls, level, schedule: LevelSchedule, target: CenterTarget):
        return cls(level, "centered", schedule=schedule, target=target)

    @classmethod
    def fixed(cls, level, v=0.5):
        return cls(level, "fixed", fixed_v=v)

    def with_level(self, level: int) -> "PriorSpec":
        return PriorSpec(level, self.mode, family=self.family,
                         schedule=self.schedule, target=self.target,
                         b=self.b, fixed_v=self.fixed_v,
                         transform_target=self.transform_target)

    def with_transform(self, target: CenterTarget) -> "PriorSpec":
        spec = self.with_level(self.level)
        spec.transform_target = target
        return spec

    # law lookup ------------------------------------------------------------

    def _make_law(self, m):
        if self.family == "uniform":
            return UniformV()
        if self.schedule is None:
            raise ValueError(f"{self.family} family needs a level schedule")
        a_m = self.schedule.a(m)
        if self.family == "beta":
            return BetaV(0.5 * a_m, 0.5 * a_m)
        if self.family == "md":
            return MedianDirichletV(a_m)
        raise ValueError(f"unknown family {self.family!r}")

    def node_law(self, level: int, j: int, parent_gap: float) -> VLaw:
        """Law of the weight at node (level, odd j); the parent gap only
        matters in the md_adaptive mode."""
        if self.mode == "homogeneous":
            return self._level_laws[level - 1]
        if self.mode == "fixed":
            return FixedV(self.fixed_v)
        if self.mode == "md_adaptive":
            if parent_gap <= 0.0:
                raise ValueError("parent gap must be positive")
            return MedianDirichletV(self.b / parent_gap)
        mu = self._node_means[level - 1][(j - 1) // 2]
        a_m = self.schedule.a(level)
        return BetaV(a_m * mu, a_m * (1.0 - mu))

    # sampling and density --------------------------------------------------

    def sample(self, rng) -> DyadicQuantileVector:
        return sample_prior(self, rng)

    def sample_many(self, size: int, rng) -> np.ndarray:
        """Vectorized prior draws; rows are interior quantile vectors."""
        cur = np.tile([0.0, 1.0], (size, 1))
        for lev in range(1, self.level + 1):
            n_nodes = 2 ** (lev - 1)
            if self.mode == "homogeneous":
                w = self._level_laws[lev - 1].sample(rng, (size, n_nodes))
            elif self.mode == "fixed":
                w = np.full((size, n_nodes), self.fixed_v)
            elif self.mode == "centered":
                w = np.empty((size, n_nodes))
                a_m = self.schedule.a(lev)
                for i, mu in enumerate(self._node_means[lev - 1]):
                    w[:, i] = _clamp(rng.beta(a_m * mu, a_m * (1.0 - mu), size))
            else:  # md_adaptive: concentration depends on each parent gap
                gaps = np.diff(cur, axis=1)
                w = np.empty((size, n_nodes))
                u = rng.uniform(0.0, 1.0, (size, n_nodes))
                for r in range(size):
                    for i in range(n_nodes):
                        w[r, i] = _md_invert(self.b / gaps[r, i], u[r, i])
                w = _clamp(w)
            nxt = np.empty((size, 2**lev + 1))
            nxt[:, ::2] = cur
            nxt[:, 1::2] = cur[:, :-1] * (1.0 - w) + cur[:, 1:] * w
            cur = nxt
        q = cur[:, 1:-1]
        if self.transform_target is not None:
            q = np.vectorize(self.transform_target.fn)(q)
        return q

    def log_density(self, q: DyadicQuantileVector) -> float:
        return log_prior_density(self, q)


def sample_prior(spec: PriorSpec, rng) -> DyadicQuantileVector:
    """Draw one pyramid top-down via repeated refinement."""
    q = None
    for lev in range(1, spec.level + 1):
        n_nodes = 2 ** (lev - 1)
        if spec.mode == "md_adaptive" and q is not None:
            gaps = np.diff(q.full())
            w = np.array(
                [_clamp(md_sample(spec.b / g, rng)) for g in gaps], dtype=float
            )
        elif spec.mode == "md_adaptive":
            w = np.array([_clamp(md_sample(spec.b, rng))])
        else:
            w = np.empty(n_nodes)
            for i in range(n_nodes):
                law = spec.node_law(lev, 2 * i + 1, 1.0)
                w[i] = _clamp(law.sample(rng))
        if q is None:
            q = DyadicQuantileVector(1, np.array([w[0]]))
        else:
            q = refine(q, w)
    if spec.transform_target is not None:
        q = DyadicQuantileVector(
            spec.level, np.array([spec.transform_target.fn(v) for v in q.values])
        )
    return q


def log_prior_density(spec: PriorSpec, q: DyadicQuantileVector) -> float:
    """Joint log density of the interior quantiles under the pyramid prior."""
    if q.level != spec.level:
        raise ValueError("state level does not match the prior specification")
    qf = q.full()
    if spec.transform_target is not None:
        # change of variables back to the uniform-centered pyramid
        inv = spec.transform_target.inverse
        deriv = spec.transform_target.deriv
        u = np.array([inv(v) for v in qf])
        jac = -sum(math.log(deriv(ui)) for ui in u[1:-1])
        inner = spec.with_level(spec.level)
        inner.transform_target = None
        return (
            log_prior_density(inner, DyadicQuantileVector(q.level, u[1:-1])) + jac
        )
    total = 0.0
    for lev, j, lp, cp, rp in pyramid_node_terms(spec.level):
        gap = qf[rp] - qf[lp]
        if gap <= 0.0:
            raise ValueError("nonpositive parent gap")
        v = (qf[cp] - qf[lp]) / gap
        law = spec.node_law(lev, j, gap)
        total += law.log_density(v) - math.log(gap)
    return total


# ---------------------------------------------------------------------------
# median-Dirichlet distribution


def md_cdf(a: float, x: float) -> float:
    """CDF of MD(a): Pr{Beta(ax, a(1-x)) >= 1/2}."""
    if a <= 0.0:
        raise ValueError("concentration must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return betainc_reg(a * (1.0 - x), a * x, 0.5)


def _md_invert(a: float, u: float, tol: float = 1e-10) -> float:
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if md_cdf(a, mid) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def md_sample(a: float, rng) -> float:
    """Inverse-CDF draw from MD(a) by bisection."""
    return float(_clamp(_md_invert(a, rng.uniform(0.0, 1.0))))


# ---------------------------------------------------------------------------
# analytic quantities of the symmetric Beta pyramid


def xi(b: float) -> float:
    """Mean of V | {V >= 1/2} for V ~ Beta(b, b), in closed form."""
    if b <= 0.0:
        raise ValueError("b must be positive")
    log_front = math.lgamma(2.0 * b) - 2.0 * math.lgamma(b) - b * math.log(4.0)
    bracket = 1.0 / b + math.exp(
        math.lgamma(0.5) + math.lgamma(b) - math.lgamma(b + 0.5)
    )
    return math.exp(log_front) * bracket


def expected_max_qdensity(schedule: LevelSchedule, m: int) -> float:
    """Mean of the largest quantile-density value at level m: prod 2*xi(a_j/2)."""
    out = 1.0
    for j in range(1, m + 1):
        out *= 2.0 * xi(0.5 * schedule.a(j))
    return out


def _adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _adaptive_simpson(
        f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1
    ) + _adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)


def tau2(a: float, tol: float = 1e-8) -> float:
    """Variance of MD(a), by adaptive quadrature of the tail integral."""
    if a <= 0.0:
        raise ValueError("concentration must be positive")

    def integrand(x):
        if x <= 0.0:
            return 1.0
        if x >= 1.0:
            return 0.0
        s = math.sqrt(x)
        return betainc_reg(a * s, a * (1.0 - s), 0.5)

    fa, fb = 1.0, 0.0
    mid = integrand(0.5)
    whole = (fa + 4.0 * mid + fb) / 6.0
    second_moment = _adaptive_simpson(integrand, 0.0, 1.0, fa, mid, fb, whole, tol, 20)
    return second_moment - 0.25


def rho(a: float) -> float:
    """Shape factor 4 (a + 1) tau^2(a); runs from 1/3 up to 1."""
    return 4.0 * (a + 1.0) * tau2(a)


# ---------------------------------------------------------------------------
# CLI grammar


def parse_prior(text: str, level: int) -> PriorSpec:
    """Parse specs like 'beta:c=2.5', 'beta-const:a=2', 'uniform',
    'md:c=1.0', 'md-adaptive:b=0.5', with an optional ',center=<name>'."""
    parts = [p for p in text.strip().split(",") if p]
    if not parts:
        raise ValueError("empty prior specification")
    head = parts[0]
    opts = {}
    for extra in parts[1:]:
        if "=" not in extra:
            raise ValueError(f"malformed prior option {extra!r}")
        key, val = extra.split("=", 1)
        opts[key.strip()] = val.strip()

    name, _, args = head.partition(":")
    kv = {}
    if args:
        for item in args.split(";"):
            if "=" not in item:
                raise ValueError(f"malformed prior argument {item!r}")
            key, val = item.split("=", 1)
            kv[key.strip()] = float(val)

    center = opts.pop("center", None)
    if opts:
        raise ValueError(f"unknown prior options: {sorted(opts)}")

    target = None
    if center is not None:
        if center not in _BUILTIN_TARGETS:
            raise ValueError(
                f"unknown centering target {center!r}; "
                f"builtins: {sorted(_BUILTIN_TARGETS)}"
            )
        target = _BUILTIN_TARGETS[center]

    if name == "uniform":
        spec = PriorSpec.uniform(level)
    elif name == "beta":
        spec = PriorSpec.symmetric_beta(level, LevelSchedule.polynomial(kv["c"]))
    elif name == "beta-const":
        spec = PriorSpec.symmetric_beta(level, LevelSchedule.constant(kv["a"]))
    elif name == "md":
        spec = PriorSpec.median_dirichlet(level, LevelSchedule.polynomial(kv["c"]))
    elif name == "md-adaptive":
        spec = PriorSpec.md_adaptive(level, kv["b"])
    else:
        raise ValueError(f"unknown prior family {name!r}")

    if target is not None:
        if name in ("beta", "beta-const"):
            spec = PriorSpec.centered_beta(level, spec.schedule, target)
        else:
            spec = spec.with_transform(target)
    return spec
