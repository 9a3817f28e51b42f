"""Metropolis-Hastings samplers for the quantile-pyramid posteriors.

One sweep visits every interior quantile in order and proposes a uniform
draw between its current neighbors; the proposal density is symmetric at
fixed neighbors and cancels from the accept ratio.  Only the two cells
touching the site are recomputed per move.  Log prior and log likelihood
are maintained incrementally and resynchronized from scratch at a fixed
cadence; the largest resync discrepancy is reported on the draw matrix.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtri

from .likelihoods import Dataset, log_lik_interp, log_lik_substitute
from .priors import PriorSpec, log_prior_density, pyramid_node_terms
from .pyramid import MIN_GAP, DyadicQuantileVector

__all__ = [
    "ChainConfig",
    "DrawMatrix",
    "mh_sweep",
    "run_chain",
    "run_chain_semiparam",
    "concat_chains",
]

_NORM_CLIP = 1e-8
_NUDGE = 1e-9


@dataclass(frozen=True)
class ChainConfig:
    iterations: int
    burn_in: int = -1  # -1 resolves to iterations // 10
    thin: int = 1
    seed: int = 0
    init_mode: str = "empirical_quantiles"
    likelihood_kind: str = "substitute"
    resync_every: int = 1000

    def __post_init__(self):
        if self.burn_in == -1:
            object.__setattr__(self, "burn_in", self.iterations // 10)
        if not self.iterations > self.burn_in >= 0:
            raise ValueError("need iterations > burn_in >= 0")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.init_mode not in ("prior_draw", "empirical_quantiles"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")
        if self.likelihood_kind not in ("interp", "substitute"):
            raise ValueError(f"unknown likelihood kind {self.likelihood_kind!r}")


@dataclass
class DrawMatrix:
    level: int
    sweeps: np.ndarray
    draws: np.ndarray
    log_prior: np.ndarray
    log_lik: np.ndarray
    accepts: np.ndarray
    resync_max_err: float = 0.0
    mu: np.ndarray | None = None
    sigma: np.ndarray | None = None
    chain_id: np.ndarray | None = None

    @property
    def n_draws(self) -> int:
        return int(self.draws.shape[0])

    def vectors(self):
        return [DyadicQuantileVector(self.level, row) for row in self.draws]


def concat_chains(matrices) -> DrawMatrix:
    """Stack per-chain draw matrices, tagging rows with their chain index."""
    if not matrices:
        raise ValueError("no chains to concatenate")
    level = matrices[0].level
    ids = np.concatenate(
        [np.full(m.n_draws, i, dtype=int) for i, m in enumerate(matrices)]
    )
    return DrawMatrix(
        level=level,
        sweeps=np.concatenate([m.sweeps for m in matrices]),
        draws=np.vstack([m.draws for m in matrices]),
        log_prior=np.concatenate([m.log_prior for m in matrices]),
        log_lik=np.concatenate([m.log_lik for m in matrices]),
        accepts=np.concatenate([m.accepts for m in matrices]),
        resync_max_err=max(m.resync_max_err for m in matrices),
        chain_id=ids,
    )


class _MHCore:
    """Precomputed geometry shared by all sweeps of one chain."""

    def __init__(self, spec: PriorSpec, data: Dataset, kind: str):
        self.spec = spec
        self.values = data.values
        self.n = data.n
        self.k = 2**spec.level
        self.kind = kind
        self.logk = math.log(self.k)
        self.terms = pyramid_node_terms(spec.level)
        self.site_terms = [[] for _ in range(self.k + 1)]
        for t in self.terms:
            for pos in t[2:5]:
                if 0 < pos < self.k:
                    self.site_terms[pos].append(t)
        self.full_prior_eval = spec.transform_target is not None

    def init_cum(self, qf: np.ndarray) -> np.ndarray:
        cum = np.searchsorted(self.values, qf, side="right")
        cum[0] = 0
        cum[-1] = self.n
        return cum

    def loglik_total(self, qf, cum) -> float:
        counts = np.diff(cum)
        if self.kind == "interp":
            return float(np.sum(counts * (-self.logk - np.log(np.diff(qf)))))
        return (
            math.lgamma(self.n + 1.0)
            - float(sum(math.lgamma(c + 1.0) for c in counts))
            - self.n * self.logk
        )

    def logprior_total(self, qf) -> float:
        return log_prior_density(
            self.spec, DyadicQuantileVector(self.spec.level, qf[1:-1].copy())
        )

    def _local_prior(self, qf, terms) -> float:
        spec = self.spec
        tot = 0.0
        for lev, j, lp, cp, rp in terms:
            gap = qf[rp] - qf[lp]
            v = (qf[cp] - qf[lp]) / gap
            tot += spec.node_law(lev, j, gap).log_density(v) - math.log(gap)
        return tot

    def sweep(self, qf, cum, rng):
        """One full scan; mutates qf/cum, returns (accepts, dprior, dlik)."""
        values = self.values
        kind_interp = self.kind == "interp"
        logk = self.logk
        accepts = 0
        d_prior = 0.0
        d_lik = 0.0
        for j in range(1, self.k):
            lo = qf[j - 1]
            hi = qf[j + 1]
            u = rng.uniform(lo, hi)
            accept_draw = rng.random()
            if u - lo < MIN_GAP or hi - u < MIN_GAP:
                continue
            old = qf[j]
            c_old = cum[j]
            c_new = int(np.searchsorted(values, u, side="right"))
            n1o = c_old - cum[j - 1]
            n2o = cum[j + 1] - c_old
            n1n = c_new - cum[j - 1]
            n2n = cum[j + 1] - c_new
            if kind_interp:
                dll = (
                    n1n * (-logk - math.log(u - lo))
                    + n2n * (-logk - math.log(hi - u))
                    - n1o * (-logk - math.log(old - lo))
                    - n2o * (-logk - math.log(hi - old))
                )
            else:
                dll = (
                    math.lgamma(n1o + 1.0)
                    + math.lgamma(n2o + 1.0)
                    - math.lgamma(n1n + 1.0)
                    - math.lgamma(n2n + 1.0)
                )
            if self.full_prior_eval:
                lp_old = self.logprior_total(qf)
                qf[j] = u
                lp_new = self.logprior_total(qf)
            else:
                st = self.site_terms[j]
                lp_old = self._local_prior(qf, st)
                qf[j] = u
                lp_new = self._local_prior(qf, st)
            dlp = lp_new - lp_old
            if math.log(accept_draw) < dll + dlp:
                cum[j] = c_new
                accepts += 1
                d_prior += dlp
                d_lik += dll
            else:
                qf[j] = old
        return accepts, d_prior, d_lik


def mh_sweep(q: DyadicQuantileVector, data: Dataset, spec: PriorSpec, kind: str, rng):
    """One Metropolis-Hastings scan over all sites; returns (q', accepts)."""
    if q.level != spec.level:
        raise ValueError("state level does not match the prior specification")
    core = _MHCore(spec, data, kind)
    qf = q.full()
    cum = core.init_cum(qf)
    accepts, _, _ = core.sweep(qf, cum, rng)
    return DyadicQuantileVector(q.level, qf[1:-1].copy()), accepts


def _empirical_init(data: Dataset, level: int) -> np.ndarray:
    k = 2**level
    if data.n == 0:
        raise ValueError("empirical initialization needs data")
    q = data.empirical_quantile(np.arange(1, k) / k).astype(float)
    # nudge into strict monotonicity inside (0, 1)
    lo = _NUDGE
    for j in range(k - 1):
        if q[j] <= lo:
            q[j] = lo
        lo = q[j] + _NUDGE
    hi = 1.0 - _NUDGE
    for j in range(k - 2, -1, -1):
        if q[j] >= hi:
            q[j] = hi
        hi = q[j] - _NUDGE
    return q


def run_chain(config: ChainConfig, data: Dataset, spec: PriorSpec) -> DrawMatrix:
    """Run one reproducible chain and store every thin-th post-burn-in state."""
    rng = np.random.default_rng(config.seed)
    core = _MHCore(spec, data, config.likelihood_kind)
    k = core.k
    qf = np.empty(k + 1)
    qf[0], qf[-1] = 0.0, 1.0
    if config.init_mode == "empirical_quantiles":
        qf[1:-1] = _empirical_init(data, spec.level)
    else:
        qf[1:-1] = spec.sample(rng).values
    cum = core.init_cum(qf)
    lp = core.logprior_total(qf)
    ll = core.loglik_total(qf, cum)

    kept_sweeps, kept_q, kept_lp, kept_ll, kept_acc = [], [], [], [], []
    resync_err = 0.0
    for sweep_idx in range(1, config.iterations + 1):
        acc, dlp, dll = core.sweep(qf, cum, rng)
        lp += dlp
        ll += dll
        if sweep_idx % config.resync_every == 0:
            lp_exact = core.logprior_total(qf)
            ll_exact = core.loglik_total(qf, cum)
            resync_err = max(resync_err, abs(lp - lp_exact), abs(ll - ll_exact))
            lp, ll = lp_exact, ll_exact
        if sweep_idx > config.burn_in and (
            (sweep_idx - config.burn_in - 1) % config.thin == 0
        ):
            kept_sweeps.append(sweep_idx)
            kept_q.append(qf[1:-1].copy())
            kept_lp.append(lp)
            kept_ll.append(ll)
            kept_acc.append(acc)

    return DrawMatrix(
        level=spec.level,
        sweeps=np.array(kept_sweeps, dtype=int),
        draws=np.array(kept_q) if kept_q else np.empty((0, k - 1)),
        log_prior=np.array(kept_lp),
        log_lik=np.array(kept_ll),
        accepts=np.array(kept_acc, dtype=int),
        resync_max_err=resync_err,
    )


# ---------------------------------------------------------------------------
# semiparametric normal-location-scale sampler


def _semiparam_loglik(mu, sigma, qf, raw_sorted):
    n = raw_sorted.size
    k = qf.size - 1
    u = qf.copy()
    u[0] = _NORM_CLIP
    u[-1] = 1.0 - _NORM_CLIP
    z = ndtri(np.clip(u, _NORM_CLIP, 1.0 - _NORM_CLIP))
    cuts = mu + sigma * z
    if n and (raw_sorted[0] <= cuts[0] or raw_sorted[-1] > cuts[-1]):
        return -math.inf
    edges = np.searchsorted(raw_sorted, cuts, side="right")
    counts = np.diff(edges)
    return float(
        -n * math.log(sigma)
        + np.sum(counts * (-math.log(k) - np.log(np.diff(z))))
    )


def run_chain_semiparam(
    config: ChainConfig,
    raw_values,
    spec: PriorSpec,
    mu_prior=(0.0, 10.0),
    logsigma_prior=(0.0, 3.0),
    mu_step=0.1,
    logsigma_step=0.1,
) -> DrawMatrix:
    """Alternate pyramid sweeps with random-walk moves on (mu, log sigma).

    The pyramid state lives on the uniform scale; the data enter through
    the normal-location-scale likelihood.  Gaussian priors on mu and
    log sigma; zero step sizes freeze the corresponding parameter.
    """
    raw = np.sort(np.asarray(raw_values, dtype=float))
    n = raw.size
    rng = np.random.default_rng(config.seed)
    k = 2**spec.level
    core = _MHCore(spec, Dataset(np.empty(0)), "interp")  # prior terms only

    qf = np.empty(k + 1)
    qf[0], qf[-1] = 0.0, 1.0
    if config.init_mode == "prior_draw":
        qf[1:-1] = spec.sample(rng).values
    else:
        qf[1:-1] = np.arange(1, k) / k
    mu = float(np.mean(raw)) if n else 0.0
    sigma = float(np.std(raw)) if n and np.std(raw) > 0 else 1.0

    lp = core.logprior_total(qf)
    ll = _semiparam_loglik(mu, sigma, qf, raw)

    def _param_log_prior(m, ls):
        return -0.5 * ((m - mu_prior[0]) / mu_prior[1]) ** 2 - 0.5 * (
            (ls - logsigma_prior[0]) / logsigma_prior[1]
        ) ** 2

    kept = {key: [] for key in ("sweeps", "q", "lp", "ll", "acc", "mu", "sigma")}
    for sweep_idx in range(1, config.iterations + 1):
        acc = 0
        # pyramid sweep under the semiparametric likelihood
        for j in range(1, k):
            lo, hi = qf[j - 1], qf[j + 1]
            u = rng.uniform(lo, hi)
            accept_draw = rng.random()
            if u - lo < MIN_GAP or hi - u < MIN_GAP:
                continue
            old = qf[j]
            st = core.site_terms[j]
            lp_old = core._local_prior(qf, st)
            qf[j] = u
            lp_new = core._local_prior(qf, st)
            ll_new = _semiparam_loglik(mu, sigma, qf, raw)
            if math.log(accept_draw) < (ll_new - ll) + (lp_new - lp_old):
                lp += lp_new - lp_old
                ll = ll_new
                acc += 1
            else:
                qf[j] = old
        # location / scale random walks
        if mu_step > 0.0:
            mu_new = mu + mu_step * rng.standard_normal()
            ll_new = _semiparam_loglik(mu_new, sigma, qf, raw)
            dpost = (ll_new - ll) + (
                _param_log_prior(mu_new, math.log(sigma))
                - _param_log_prior(mu, math.log(sigma))
            )
            if math.log(rng.random()) < dpost:
                mu, ll = mu_new, ll_new
                acc += 1
        if logsigma_step > 0.0:
            ls_new = math.log(sigma) + logsigma_step * rng.standard_normal()
            sig_new = math.exp(ls_new)
            ll_new = _semiparam_loglik(mu, sig_new, qf, raw)
            dpost = (ll_new - ll) + (
                _param_log_prior(mu, ls_new) - _param_log_prior(mu, math.log(sigma))
            )
            if math.log(rng.random()) < dpost:
                sigma, ll = sig_new, ll_new
                acc += 1
        if sweep_idx > config.burn_in and (
            (sweep_idx - config.burn_in - 1) % config.thin == 0
        ):
            kept["sweeps"].append(sweep_idx)
            kept["q"].append(qf[1:-1].copy())
            kept["lp"].append(lp)
            kept["ll"].append(ll)
            kept["acc"].append(acc)
            kept["mu"].append(mu)
            kept["sigma"].append(sigma)

    return DrawMatrix(
        level=spec.level,
        sweeps=np.array(kept["sweeps"], dtype=int),
        draws=np.array(kept["q"]) if kept["q"] else np.empty((0, k - 1)),
        log_prior=np.array(kept["lp"]),
        log_lik=np.array(kept["ll"]),
        accepts=np.array(kept["acc"], dtype=int),
        mu=np.array(kept["mu"]),
        sigma=np.array(kept["sigma"]),
    )
