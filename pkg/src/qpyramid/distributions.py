"""Reference data-generating distributions on [0, 1] for experiments.

Each carries exact cdf/pdf/quantile maps plus a closed-form integral of
sqrt(pdf) over a cell, which lets Hellinger distances against histogram
densities be computed without quadrature.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["TrueDistribution", "UNIFORM", "YSQUARED", "TILTED", "get_distribution"]


@dataclass(frozen=True)
class TrueDistribution:
    name: str
    cdf: Callable[[float], float]
    pdf: Callable[[float], float]
    quantile: Callable[[float], float]
    sqrt_pdf_integral: Callable[[float, float], float]

    def sample(self, n: int, rng) -> np.ndarray:
        u = rng.uniform(0.0, 1.0, n)
        return np.array([self.quantile(v) for v in u])


UNIFORM = TrueDistribution(
    name="uniform",
    cdf=lambda x: x,
    pdf=lambda x: 1.0,
    quantile=lambda y: y,
    sqrt_pdf_integral=lambda a, b: b - a,
)

# quantile function y^2: density 1/(2 sqrt(x)), unbounded at zero
YSQUARED = TrueDistribution(
    name="ysquared",
    cdf=lambda x: math.sqrt(x),
    pdf=lambda x: 0.5 / math.sqrt(x),
    quantile=lambda y: y * y,
    sqrt_pdf_integral=lambda a, b: (4.0 / 3.0)
    / math.sqrt(2.0)
    * (b**0.75 - a**0.75),
)

# bounded tilted-linear density 1/2 + x
TILTED = TrueDistribution(
    name="tilted",
    cdf=lambda x: 0.5 * x + 0.5 * x * x,
    pdf=lambda x: 0.5 + x,
    quantile=lambda y: 0.5 * (math.sqrt(1.0 + 8.0 * y) - 1.0),
    sqrt_pdf_integral=lambda a, b: (2.0 / 3.0)
    * ((0.5 + b) ** 1.5 - (0.5 + a) ** 1.5),
)

_REGISTRY = {d.name: d for d in (UNIFORM, YSQUARED, TILTED)}


def get_distribution(name: str) -> TrueDistribution:
    if name not in _REGISTRY:
        raise ValueError(f"unknown distribution {name!r}; builtins: {sorted(_REGISTRY)}")
    return _REGISTRY[name]
