"""Discrete entropy, moments, isotropy diagnostics, and max-mass bounds.

Entropy is in nats throughout.  Moments are exact finite sums accumulated with
the correctly rounded summation from :mod:`lce.numerics`; the argmax tie-break
is lexicographic.  Operator norms and determinants of the small covariance
matrices go through the cyclic-Jacobi eigensolver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateCovarianceError, LceError
from .lattice import LatticePmf
from .numerics import jacobi_eigenvalues, neg_xlogx, stable_sum


@dataclass(frozen=True)
class CovarianceMatrix:
    dim: int
    entries: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(self.entries, dtype=np.float64)
        if m.shape != (self.dim, self.dim):
            raise LceError("covariance shape mismatch")
        scale = 1.0 + float(np.abs(m).max(initial=0.0))
        if float(np.abs(m - m.T).max(initial=0.0)) > 1e-12 * scale:
            raise LceError("covariance must be symmetric")
        eig = jacobi_eigenvalues(m)
        if eig.size and float(eig[0]) < -1e-9 * scale:
            raise LceError(f"covariance has eigenvalue {eig[0]}, not PSD within tolerance")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    def eigenvalues(self) -> np.ndarray:
        return jacobi_eigenvalues(self.entries)

    def det(self) -> float:
        return float(np.prod(self.eigenvalues()))


@dataclass(frozen=True)
class MomentSummary:
    mass: float
    mean: np.ndarray
    cov: CovarianceMatrix
    max_value: float
    argmax: tuple[int, ...]
    sigma_hat: float


@dataclass(frozen=True)
class IsotropyScore:
    op_norm_deviation: float
    normalized: float


@dataclass(frozen=True)
class EntropyBoundsReport:
    """Max-mass and entropy bound diagnostics for one p.m.f."""

    dim: int
    entropy: float
    max_value: float
    det_cov: float
    sigma_hat: float
    max_width_product: Optional[float]  # d=1 only: max p * sqrt(1 + 4 Var)
    max_sqrt_det: float  # max p * det(Cov)^(1/2)
    gauss_slack: float  # (d/2) log(2 pi e det(Cov + I/12)^(1/d)) - H


def shannon_entropy(p: LatticePmf) -> float:
    """H(p) = -sum p log p in nats, with 0 log 0 = 0."""
    p.assert_normalized()
    return stable_sum(neg_xlogx(p.values))


def discrete_moments(p: LatticePmf) -> MomentSummary:
    p.assert_normalized()
    d = p.dim
    vals = p.values
    mass = p.mass
    coords = []
    for i in range(d):
        shape = [1] * d
        shape[i] = vals.shape[i]
        coords.append(p.box.axis_coords(i).astype(np.float64).reshape(shape))
    mean = np.array([stable_sum(vals * coords[i]) / mass for i in range(d)])
    cov = np.zeros((d, d))
    for i in range(d):
        ci = coords[i] - mean[i]
        for j in range(i, d):
            cj = coords[j] - mean[j]
            cov[i, j] = cov[j, i] = stable_sum(vals * ci * cj) / mass
    flat_arg = int(np.argmax(vals))  # first occurrence in C order = lex smallest
    idx = np.unravel_index(flat_arg, vals.shape)
    argmax = tuple(int(a) + l for a, l in zip(idx, p.box.lo))
    det = float(np.prod(jacobi_eigenvalues(cov)))
    sigma_hat = max(det, 0.0) ** (1.0 / (2.0 * d))
    return MomentSummary(
        mass=mass,
        mean=mean,
        cov=CovarianceMatrix(d, cov),
        max_value=float(vals.max()),
        argmax=argmax,
        sigma_hat=sigma_hat,
    )


def isotropy_score(p: LatticePmf | MomentSummary) -> IsotropyScore:
    """Operator-norm deviation of Cov from sigma_hat^2 * I, absolute and per sigma_hat."""
    summary = p if isinstance(p, MomentSummary) else discrete_moments(p)
    if summary.sigma_hat <= 0.0 or summary.cov.det() <= 0.0:
        raise DegenerateCovarianceError("degenerate covariance: isotropy score undefined")
    d = summary.cov.dim
    dev = summary.cov.entries - summary.sigma_hat**2 * np.eye(d)
    eig = jacobi_eigenvalues(dev)
    op = float(np.max(np.abs(eig)))
    return IsotropyScore(op_norm_deviation=op, normalized=op / summary.sigma_hat)


def max_pmf_width_product(p: LatticePmf) -> float:
    """d=1 statistic max p * sqrt(1 + 4 Var(p))."""
    if p.dim != 1:
        raise LceError("max_pmf_width_product is defined for d = 1 only")
    s = discrete_moments(p)
    var = float(s.cov.entries[0, 0])
    return s.max_value * math.sqrt(1.0 + 4.0 * var)


def entropy_covariance_bounds(p: LatticePmf) -> EntropyBoundsReport:
    """Bound ratios tying max mass and entropy to the discrete covariance.

    ``gauss_slack`` is nonnegative for every p.m.f. with finite second moments:
    the Gaussian maximizes entropy at fixed covariance, and adding an
    independent uniform cell shifts the covariance by I/12.
    """
    s = discrete_moments(p)
    d = p.dim
    H = shannon_entropy(p)
    det = max(s.cov.det(), 0.0)
    shifted = s.cov.entries + np.eye(d) / 12.0
    det_shifted = float(np.prod(jacobi_eigenvalues(shifted)))
    gauss_slack = 0.5 * d * math.log(2.0 * math.pi * math.e * det_shifted ** (1.0 / d)) - H
    return EntropyBoundsReport(
        dim=d,
        entropy=H,
        max_value=s.max_value,
        det_cov=det,
        sigma_hat=s.sigma_hat,
        max_width_product=max_pmf_width_product(p) if d == 1 else None,
        max_sqrt_det=s.max_value * math.sqrt(det),
        gauss_slack=gauss_slack,
    )


def variation_sum(p: LatticePmf, axis: int) -> float:
    """Total variation along one axis: sum over the enlarged box of |p(k) - p(k - e_axis)|."""
    if not (0 <= axis < p.dim):
        raise LceError(f"axis {axis} out of range for dimension {p.dim}")
    pad = [(0, 0)] * p.dim
    pad[axis] = (1, 1)
    padded = np.pad(p.values, pad)
    diffs = np.diff(padded, axis=axis)
    return stable_sum(np.abs(diffs))


def sum_of_maxima(p: LatticePmf, i: int, j: int) -> float:
    """sum over l in Z^(d-j) of |l_1|^i * max over the first j axes of p.

    The first ``j`` coordinates are maximized over, the remaining ``d - j``
    summed; ``l_1`` is the first summed coordinate (axis ``j``).  ``j = 0``
    means no maximization.  Any permuted variant is obtained by permuting the
    p.m.f.'s axes first.
    """
    if i not in (0, 1, 2):
        raise LceError("i must be 0, 1 or 2")
    if not (0 <= j <= p.dim - 1):
        raise LceError(f"j must lie in [0, {p.dim - 1}]")
    reduced = p.values.max(axis=tuple(range(j))) if j > 0 else p.values
    l1 = p.box.axis_coords(j).astype(np.float64)
    if i == 0:
        weights = np.ones_like(l1)
    else:
        weights = np.abs(l1) ** i
    shape = [1] * reduced.ndim
    shape[0] = reduced.shape[0]
    return stable_sum(reduced * weights.reshape(shape))
