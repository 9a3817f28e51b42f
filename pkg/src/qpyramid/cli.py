"""Command-line tool: fit posterior quantile pyramids and run the
asymptotics experiments.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import (
    bvm_experiment,
    consistency_experiment,
    delta_decay_experiment,
    prior_mean_experiment,
)
from .likelihoods import Dataset
from .priors import parse_prior
from .sampler import ChainConfig, concat_chains, run_chain, run_chain_semiparam
from .summaries import default_grid, gini, posterior_summary

__all__ = ["main"]


class DataError(Exception):
    pass


def _repr_float(x: float) -> str:
    return repr(float(x))


def ingest(path, bounds=None):
    """Read one number per line (comments start with '#') into a Dataset."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            values.append(float(stripped))
        except ValueError:
            raise DataError(f"{path}: line {lineno}: not a number: {stripped!r}")
    if not values:
        raise DataError(f"{path}: no data values found")
    try:
        return Dataset.from_raw(np.array(values), bounds=bounds)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc


def _prepare_outdir(out, force):
    outdir = Path(out)
    if outdir.exists() and any(outdir.iterdir()) and not force:
        raise DataError(f"output directory {out} is not empty (use --force)")
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def _worker_cap(requested):
    env = os.environ.get("QPYRAMID_WORKERS")
    cap = int(env) if env else requested
    return max(1, min(requested, cap))


def _run_one_chain(args):
    config, data, spec = args
    return run_chain(config, data, spec)


def _write_draws_csv(path, draws, level, with_chain):
    k = 2**level
    cols = [f"q_{j}" for j in range(1, k)]
    header = ["sweep"] + cols + ["log_prior", "log_lik"]
    if draws.mu is not None:
        header += ["mu", "sigma"]
    if with_chain:
        header = ["chain"] + header
    lines = [",".join(header)]
    for i in range(draws.n_draws):
        row = [str(int(draws.sweeps[i]))]
        row += [_repr_float(v) for v in draws.draws[i]]
        row += [_repr_float(draws.log_prior[i]), _repr_float(draws.log_lik[i])]
        if draws.mu is not None:
            row += [_repr_float(draws.mu[i]), _repr_float(draws.sigma[i])]
        if with_chain:
            row = [str(int(draws.chain_id[i]))] + row
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_grid_csv(path, summary):
    lines = ["y,mean,median,lo,hi"]
    for i in range(summary.y.size):
        lines.append(
            ",".join(
                _repr_float(v)
                for v in (
                    summary.y[i],
                    summary.mean[i],
                    summary.median[i],
                    summary.lower[i],
                    summary.upper[i],
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_fit(args):
    bounds = None
    if args.bounds:
        parts = args.bounds.split(",")
        if len(parts) != 2:
            raise DataError("--bounds expects 'lo,hi'")
        bounds = (float(parts[0]), float(parts[1]))
    spec = parse_prior(args.prior, args.level)
    outdir = _prepare_outdir(args.out, args.force)

    raw_bytes = Path(args.data).read_bytes() if Path(args.data).exists() else b""
    data = ingest(args.data, bounds=bounds)

    chain_seeds = np.random.SeedSequence(args.seed).generate_state(args.chains)
    if args.likelihood == "semiparam":
        raw = data.affine.inverse(data.values)
        mats = []
        for s in chain_seeds:
            config = ChainConfig(
                iterations=args.iters, burn_in=args.burnin, thin=args.thin,
                seed=int(s), likelihood_kind="interp",
            )
            mats.append(run_chain_semiparam(config, raw, spec))
    else:
        tasks = [
            (
                ChainConfig(
                    iterations=args.iters, burn_in=args.burnin, thin=args.thin,
                    seed=int(s), likelihood_kind=args.likelihood,
                ),
                data,
                spec,
            )
            for s in chain_seeds
        ]
        workers = _worker_cap(args.workers if args.workers else args.chains)
        if len(tasks) > 1 and workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                mats = list(pool.map(_run_one_chain, tasks))
        else:
            mats = [_run_one_chain(t) for t in tasks]
    draws = concat_chains(mats) if len(mats) > 1 else mats[0]

    _write_draws_csv(outdir / "draws.csv", draws, args.level, len(mats) > 1)
    summary = posterior_summary(draws, grid=default_grid(args.grid_points),
                                alpha=args.alpha)
    _write_grid_csv(outdir / "grid.csv", summary)

    pairs = np.array([gini(v) for v in draws.vectors()])
    functionals = {
        "gini_paper": {"mean": float(pairs[:, 0].mean()),
                       "sd": float(pairs[:, 0].std(ddof=1)) if len(pairs) > 1 else 0.0},
        "gini_standard": {"mean": float(pairs[:, 1].mean()),
                          "sd": float(pairs[:, 1].std(ddof=1)) if len(pairs) > 1 else 0.0},
    }
    (outdir / "functionals.json").write_text(json.dumps(functionals, indent=2) + "\n")

    manifest = {
        "tool_version": __version__,
        "command": "fit",
        "config": {
            "data": str(args.data),
            "bounds": list(bounds) if bounds else None,
            "level": args.level,
            "prior": args.prior,
            "likelihood": args.likelihood,
            "iters": args.iters,
            "burnin": args.burnin,
            "thin": args.thin,
            "chains": args.chains,
            "seed": args.seed,
            "alpha": args.alpha,
            "grid_points": args.grid_points,
        },
        "data_fingerprint": {
            "n": data.n,
            "sha256": hashlib.sha256(raw_bytes).hexdigest(),
        },
        "affine": {"lo": data.affine.lo, "hi": data.affine.hi},
        "wall_clock": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return 0


def _parse_int_list(text):
    return [int(v) for v in text.split(",")]


def _parse_m_range(text):
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return _parse_int_list(text)


def cmd_lab(args):
    outdir = _prepare_outdir(args.out, args.force)
    level = args.k.bit_length() - 1 if args.k else 5
    prior = parse_prior(args.prior, max(level, 1))
    if args.experiment == "bvm":
        report = bvm_experiment(
            args.f0, n=args.n[0], k=args.k or 4, prior=prior,
            iterations=args.iters, chains=args.chains, seed=args.seed,
        )
    elif args.experiment == "consistency":
        report = consistency_experiment(
            args.f0, n_grid=args.n, prior=prior, iterations=args.iters,
            seeds=tuple(range(args.seed, args.seed + 3)),
        )
    elif args.experiment == "delta-decay":
        report = delta_decay_experiment(
            prior, m_grid=args.m, replicates=args.replicates, eps=args.eps,
            seed=args.seed,
        )
    elif args.experiment == "prior-mean":
        report = prior_mean_experiment(
            prior.with_level(args.m[-1] if args.m else prior.level),
            draws=args.replicates, seed=args.seed,
        )
    else:
        raise DataError(f"unknown experiment {args.experiment!r}")
    (outdir / "report.json").write_text(report.to_json() + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qpyramid",
        description="Nonparametric Bayesian quantile inference with pyramid priors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="run posterior chains on a data file")
    fit.add_argument("--data", required=True)
    fit.add_argument("--bounds", default=None, help="lo,hi raw-scale bounds")
    fit.add_argument("--level", type=int, default=5)
    fit.add_argument("--prior", default="uniform")
    fit.add_argument("--likelihood", default="substitute",
                     choices=["interp", "substitute", "semiparam"])
    fit.add_argument("--iters", type=int, default=5000)
    fit.add_argument("--burnin", type=int, default=-1)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--chains", type=int, default=1)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--alpha", type=float, default=0.1)
    fit.add_argument("--grid-points", type=int, default=512)
    fit.add_argument("--workers", type=int, default=0)
    fit.add_argument("--out", required=True)
    fit.add_argument("--force", action="store_true")
    fit.set_defaults(func=cmd_fit)

    lab = sub.add_parser("lab", help="run an asymptotics experiment")
    lab.add_argument("experiment",
                     choices=["bvm", "consistency", "delta-decay", "prior-mean"])
    lab.add_argument("--n", type=_parse_int_list, default=[2000])
    lab.add_argument("--k", type=int, default=0)
    lab.add_argument("--f0", default="uniform")
    lab.add_argument("--prior", default="uniform")
    lab.add_argument("--m", type=_parse_m_range, default=[])
    lab.add_argument("--iters", type=int, default=20000)
    lab.add_argument("--chains", type=int, default=4)
    lab.add_argument("--replicates", type=int, default=5000)
    lab.add_argument("--eps", type=float, default=0.5)
    lab.add_argument("--seed", type=int, default=0)
    lab.add_argument("--out", required=True)
    lab.add_argument("--force", action="store_true")
    lab.set_defaults(func=cmd_lab)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
