"""Log-concave densities on R^d with declared moments and tail majorants.

Each density carries whatever closed-form knowledge its family provides
(mass, mean, covariance) plus a certified exponential tail bound
``f(x) <= amplitude * exp(-rate * |x - center|_2)`` valid for
``|x - center|_2 >= radius``.  The tail bound is what makes box truncation
auditable: every truncated constructor converts it into a deficit bound.

Registry families::

    gaussian{sigma, dim}            isotropic N(0, sigma^2 I)
    laplace_product{rate, dim}      product of two-sided exponentials
    sheared_gaussian{sigma, rho}    d=2 Gaussian, per-axis variance sigma^2,
                                    correlation rho (evaluator composed with
                                    the whitening map of the base Gaussian)
    asym_exponential{left_rate, right_rate}   d=1, centered, asymmetric
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import LceError


@dataclass(frozen=True)
class TailBound:
    amplitude: float
    rate: float
    radius: float

    def __post_init__(self):
        if self.amplitude <= 0 or self.rate <= 0 or self.radius < 0:
            raise LceError("tail bound needs amplitude > 0, rate > 0, radius >= 0")


@dataclass(frozen=True)
class ContinuousDensity:
    """Evaluator plus metadata for a nonnegative function on R^d."""

    dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    known_mass: Optional[float] = None
    known_mean: Optional[np.ndarray] = None
    known_cov: Optional[np.ndarray] = None
    tail_bound: Optional[TailBound] = None
    logconcave_flag: bool = True
    name: str = "custom"
    params: dict = field(default_factory=dict)
    center: Optional[np.ndarray] = None
    slice_argmax: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, pts) -> np.ndarray:
        return self.evaluate(as_points(pts, self.dim))

    def axis_scales(self) -> np.ndarray:
        """Per-axis standard deviations, used to size truncation boxes."""
        if self.known_cov is None:
            raise LceError(f"density {self.name} has no covariance metadata")
        return np.sqrt(np.diag(np.asarray(self.known_cov, dtype=np.float64)))

    def spot_check_tail(self, n_dirs: int = 16, n_radii: int = 8, span: float = 4.0) -> float:
        """Worst ratio f(x)/bound(x) on sampled rays beyond the tail radius (<=1 means valid)."""
        if self.tail_bound is None:
            raise LceError("density has no tail bound")
        tb = self.tail_bound
        c = self.center if self.center is not None else np.zeros(self.dim)
        rng = np.random.default_rng(7)
        dirs = rng.standard_normal((n_dirs, self.dim))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        radii = tb.radius + np.linspace(0.0, span * (1.0 + tb.radius), n_radii)
        worst = 0.0
        for r in radii:
            pts = c + r * dirs
            fv = self(pts)
            bound = tb.amplitude * math.exp(-tb.rate * r)
            if bound > 0:
                worst = max(worst, float(np.max(fv)) / bound)
        return worst


def as_points(pts, dim: int) -> np.ndarray:
    """Normalize input to shape (..., dim)."""
    a = np.asarray(pts, dtype=np.float64)
    if dim == 1 and (a.ndim == 0 or a.shape[-1] != 1):
        a = a.reshape(a.shape + (1,))
    if a.shape[-1] != dim:
        raise LceError(f"points have dimension {a.shape[-1]}, expected {dim}")
    return a


# ---------------------------------------------------------------------------
# registry families


def gaussian(sigma: float, dim: int = 1) -> ContinuousDensity:
    if sigma <= 0:
        raise LceError("sigma must be positive")
    sigma = float(sigma)
    norm = (2.0 * math.pi * sigma * sigma) ** (-dim / 2.0)

    def evaluate(pts):
        pts = as_points(pts, dim)
        return norm * np.exp(-0.5 * np.sum(pts * pts, axis=-1) / (sigma * sigma))

    # Gaussian majorant: e^{-r^2/2s^2} <= e^{-(r0/2s^2) r} for r >= r0, r0 = 6s.
    r0 = 6.0 * sigma
    tb = TailBound(amplitude=norm, rate=r0 / (2.0 * sigma * sigma), radius=r0)
    return ContinuousDensity(
        dim=dim,
        evaluate=evaluate,
        known_mass=1.0,
        known_mean=np.zeros(dim),
        known_cov=sigma * sigma * np.eye(dim),
        tail_bound=tb,
        name="gaussian",
        params={"sigma": sigma, "dim": dim},
        center=np.zeros(dim),
        slice_argmax=(lambda x: np.zeros_like(np.asarray(x, dtype=np.float64))) if dim == 2 else None,
    )


def laplace_product(rate: float, dim: int = 1) -> ContinuousDensity:
    if rate <= 0:
        raise LceError("rate must be positive")
    lam = float(rate)
    norm = (lam / 2.0) ** dim

    def evaluate(pts):
        pts = as_points(pts, dim)
        return norm * np.exp(-lam * np.sum(np.abs(pts), axis=-1))

    tb = TailBound(amplitude=norm, rate=lam / math.sqrt(dim), radius=0.0)
    return ContinuousDensity(
        dim=dim,
        evaluate=evaluate,
        known_mass=1.0,
        known_mean=np.zeros(dim),
        known_cov=(2.0 / (lam * lam)) * np.eye(dim),
        tail_bound=tb,
        name="laplace_product",
        params={"rate": lam, "dim": dim},
        center=np.zeros(dim),
    )


def sheared_gaussian(sigma: float, rho: float) -> ContinuousDensity:
    """d=2 Gaussian with covariance sigma^2 [[1, rho], [rho, 1]].

    Built by composing the isotropic evaluator with the inverse shear map, so
    the density is exactly the correlated Gaussian while the code path mirrors
    "base density composed with a linear map".
    """
    if not (-1.0 < rho < 1.0) or sigma <= 0:
        raise LceError("need sigma > 0 and -1 < rho < 1")
    sigma = float(sigma)
    rho = float(rho)
    base = gaussian(sigma, dim=2)
    # Sigma = L L^T with L = sigma * [[1, 0], [rho, sqrt(1-rho^2)]]; inverse map
    # sends the correlated Gaussian back to the isotropic base density.
    s = math.sqrt(1.0 - rho * rho)
    Linv = np.array([[1.0, 0.0], [-rho / s, 1.0 / s]])
    jac = 1.0 / s  # |det Linv|

    def evaluate(pts):
        pts = as_points(pts, 2)
        return jac * base.evaluate(pts @ Linv.T)

    cov = sigma * sigma * np.array([[1.0, rho], [rho, 1.0]])
    lam_max = sigma * sigma * (1.0 + abs(rho))
    r0 = 6.0 * math.sqrt(lam_max)
    tb = TailBound(
        amplitude=1.0 / (2.0 * math.pi * sigma * sigma * s),
        rate=r0 / (2.0 * lam_max),
        radius=r0,
    )
    return ContinuousDensity(
        dim=2,
        evaluate=evaluate,
        known_mass=1.0,
        known_mean=np.zeros(2),
        known_cov=cov,
        tail_bound=tb,
        name="sheared_gaussian",
        params={"sigma": sigma, "rho": rho},
        center=np.zeros(2),
        slice_argmax=lambda x: rho * np.asarray(x, dtype=np.float64),
    )


def asym_exponential(left_rate: float, right_rate: float) -> ContinuousDensity:
    """Centered asymmetric two-sided exponential on R (log-concave)."""
    l, r = float(left_rate), float(right_rate)
    if l <= 0 or r <= 0:
        raise LceError("rates must be positive")
    C = l * r / (l + r)
    mu = 1.0 / r - 1.0 / l  # mean of the uncentered density

    def evaluate(pts):
        pts = as_points(pts, 1)
        t = pts[..., 0] + mu
        return C * np.exp(np.where(t >= 0, -r * t, l * t))

    m2 = 2.0 * (l**3 + r**3) / ((l + r) * (l * r) ** 2)
    var = m2 - mu * mu
    rate = min(l, r)
    tb = TailBound(amplitude=C * math.exp(rate * abs(mu)), rate=rate, radius=0.0)
    return ContinuousDensity(
        dim=1,
        evaluate=evaluate,
        known_mass=1.0,
        known_mean=np.zeros(1),
        known_cov=np.array([[var]]),
        tail_bound=tb,
        name="asym_exponential",
        params={"left_rate": l, "right_rate": r},
        center=np.zeros(1),
    )


_FAMILIES = {
    "gaussian": gaussian,
    "laplace_product": laplace_product,
    "sheared_gaussian": sheared_gaussian,
    "asym_exponential": asym_exponential,
}

_SPEC_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\{(.*)\})?\s*$")


def parse_param_spec(text: str) -> tuple[str, dict]:
    """Parse ``name{key=value,...}`` with JSON-ish values."""
    m = _SPEC_RE.match(text)
    if not m:
        raise LceError(f"cannot parse spec string: {text!r}")
    name, body = m.group(1), m.group(2)
    params: dict = {}
    for item in _split_top_level(body or ""):
        if not item.strip():
            continue
        if "=" not in item:
            raise LceError(f"bad parameter {item!r} in {text!r}")
        key, val = item.split("=", 1)
        try:
            params[key.strip()] = json.loads(val.strip())
        except json.JSONDecodeError:
            params[key.strip()] = val.strip()
    return name, params


def _split_top_level(body: str) -> list[str]:
    """Split on commas outside brackets, so array values survive."""
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch in "[({":
            depth += 1
        elif ch in "])}":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return parts


def make_density(name: str, **params) -> ContinuousDensity:
    if name not in _FAMILIES:
        raise LceError(f"unknown density family {name!r}; known: {sorted(_FAMILIES)}")
    return _FAMILIES[name](**params)


def density_from_spec(text: str) -> ContinuousDensity:
    name, params = parse_param_spec(text)
    return make_density(name, **params)
