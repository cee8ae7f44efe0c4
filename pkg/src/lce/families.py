"""Standard discrete test families on Z and Z^d.

Every family here is log-concave in the extensible sense.  Truncated families
(geometric tails, quantized Gaussians) carry exact or certified deficits so
that downstream error budgets stay honest.
"""

from __future__ import annotations

import math

import numpy as np

from . import densities
from .errors import LceError
from .lattice import Box, LatticePmf, make_product, quantize_density


def uniform_interval(m: int, lo: int = 0) -> LatticePmf:
    """Uniform mass on {lo, ..., lo + m - 1}."""
    if m < 1:
        raise LceError("m must be positive")
    box = Box((lo,), (lo + m - 1,))
    return LatticePmf(box, np.full(box.shape, 1.0 / m), 0.0, {"family": "uniform", "m": m})


def binomial_pmf(n: int, prob: float = 0.5) -> LatticePmf:
    if n < 1 or not (0.0 < prob < 1.0):
        raise LceError("need n >= 1 and 0 < prob < 1")
    ks = np.arange(n + 1)
    vals = np.array([math.comb(n, int(k)) * prob**k * (1 - prob) ** (n - k) for k in ks])
    return LatticePmf(Box((0,), (n,)), vals, 0.0, {"family": "binomial", "n": n, "prob": prob})


def one_sided_geometric(q: float, tail_tol: float = 1e-14) -> LatticePmf:
    """p(k) = (1-q) q^k on {0..K}; the cut tail q^(K+1) is the exact deficit."""
    if not (0.0 < q < 1.0):
        raise LceError("need 0 < q < 1")
    K = max(1, int(math.ceil(math.log(tail_tol) / math.log(q))) + 1)
    ks = np.arange(K + 1)
    vals = (1.0 - q) * q**ks
    deficit = q ** (K + 1)
    return LatticePmf(Box((0,), (K,)), vals, deficit, {"family": "geometric", "q": q})


def two_sided_geometric(q: float, tail_tol: float = 1e-14) -> LatticePmf:
    """p(k) proportional to q^|k| on {-K..K}; exact symmetric tail deficit."""
    if not (0.0 < q < 1.0):
        raise LceError("need 0 < q < 1")
    C = (1.0 - q) / (1.0 + q)
    K = 1
    while 2.0 * C * q ** (K + 1) / (1.0 - q) > tail_tol:
        K += 1
    ks = np.arange(-K, K + 1)
    vals = C * q ** np.abs(ks)
    deficit = 2.0 * C * q ** (K + 1) / (1.0 - q)
    return LatticePmf(Box((-K,), (K,)), vals, deficit, {"family": "two_sided_geometric", "q": q})


def quantized_gaussian(sigma: float, dim: int = 1, radius_multiplier: float = 12.0) -> LatticePmf:
    """Isotropic Gaussian density sampled on Z^d and normalized."""
    return quantize_density(densities.gaussian(sigma, dim), radius_multiplier=radius_multiplier)


def assorted_pmfs_1d(count: int = 20) -> list[LatticePmf]:
    """Deterministic zoo of 1-d p.m.f.s covering shapes from point mass to wide."""
    from .lattice import point_mass

    pool = [
        point_mass((0,)),
        point_mass((5,)),
        uniform_interval(2),
        uniform_interval(3, lo=-1),
        uniform_interval(7),
        uniform_interval(16, lo=-8),
        binomial_pmf(4),
        binomial_pmf(9, 0.3),
        binomial_pmf(20, 0.5),
        binomial_pmf(14, 0.7),
        one_sided_geometric(0.3),
        one_sided_geometric(0.6),
        one_sided_geometric(0.85),
        two_sided_geometric(0.25),
        two_sided_geometric(0.5),
        two_sided_geometric(0.8),
        quantized_gaussian(1.0),
        quantized_gaussian(2.5),
        quantized_gaussian(6.0),
        quantized_gaussian(10.0),
    ]
    while len(pool) < count:
        pool.append(binomial_pmf(3 + len(pool), 0.5))
    return pool[:count]


def extensible_zoo_1d(count: int = 50) -> list[LatticePmf]:
    """At least ``count`` log-concave 1-d p.m.f.s: geometric-type, binomial-type,
    uniform, and quantized-Gaussian instances."""
    zoo: list[LatticePmf] = []
    for m in (1, 2, 3, 5, 8, 13, 25, 40):
        zoo.append(uniform_interval(m))
    for n in (1, 2, 4, 8, 16, 32, 64):
        for prob in (0.5, 0.3):
            zoo.append(binomial_pmf(n, prob))
    for q in (0.1, 0.25, 0.4, 0.5, 0.65, 0.8, 0.9, 0.95):
        zoo.append(one_sided_geometric(q))
        zoo.append(two_sided_geometric(q))
    for sigma in (0.5, 1.0, 2.0, 4.0, 8.0, 16.0):
        zoo.append(quantized_gaussian(sigma))
    i = 0
    while len(zoo) < count:
        zoo.append(binomial_pmf(10 + i, 0.5))
        i += 1
    return zoo


def product_gaussian(sigma: float, dim: int, radius_multiplier: float = 12.0) -> LatticePmf:
    """Product of 1-d quantized Gaussians (coordinates independent)."""
    factor = quantized_gaussian(sigma, 1, radius_multiplier)
    return make_product([factor] * dim)
