"""Dense probability mass functions on Z^d: construction and convolution.

A :class:`LatticePmf` stores nonnegative mass values over an inclusive
axis-aligned integer box in row-major order (last axis fastest), together with
a ``deficit``: an upper bound on the mass truncated outside the box.  Deficits
are tracked through every operation and never silently renormalized, so the
error budget of any downstream quantity remains auditable.

All values are immutable after construction and operations are pure, so
everything here is safe to share across threads.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np

from .densities import ContinuousDensity
from .errors import (
    BoxTooLargeError,
    DimensionMismatchError,
    LceError,
    NotNormalizedError,
    TailToleranceError,
)
from .numerics import next_pow2, stable_sum

# Hard cap on dense cells for any single array (memory guard).
CELL_CAP = 1 << 26

# Above this direct-convolution cost estimate, switch to the FFT path.
_DIRECT_COST_CAP = 1 << 22

DEFAULT_TAIL_TOLERANCE = 1e-12
DEFAULT_RADIUS_MULTIPLIER = 12.0

_FFT_CHECK_SAMPLES = 64
_FFT_CHECK_TOL = 1e-10


@dataclass(frozen=True)
class Box:
    """Inclusive integer box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or len(self.lo) == 0:
            raise LceError("box bounds must be nonempty and of equal length")
        if any(l > h for l, h in zip(self.lo, self.hi)):
            raise LceError(f"empty box: lo={self.lo} hi={self.hi}")

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def ncells(self) -> int:
        n = 1
        for s in self.shape:
            n *= s
        return n

    def contains(self, point) -> bool:
        return all(l <= int(x) <= h for l, x, h in zip(self.lo, point, self.hi))

    def axis_coords(self, axis: int) -> np.ndarray:
        return np.arange(self.lo[axis], self.hi[axis] + 1)

    def grid(self) -> np.ndarray:
        """Lattice coordinates of every cell, shape (*shape, dim)."""
        axes = [self.axis_coords(i) for i in range(self.dim)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).astype(np.float64)

    def translate(self, vec) -> "Box":
        v = tuple(int(x) for x in vec)
        return Box(tuple(l + x for l, x in zip(self.lo, v)), tuple(h + x for h, x in zip(self.hi, v)))

    def minkowski(self, other: "Box") -> "Box":
        if self.dim != other.dim:
            raise DimensionMismatchError("box dimensions differ")
        return Box(
            tuple(a + b for a, b in zip(self.lo, other.lo)),
            tuple(a + b for a, b in zip(self.hi, other.hi)),
        )


def _check_cells(box: Box):
    if box.ncells > CELL_CAP:
        raise BoxTooLargeError(f"box with {box.ncells} cells exceeds cap {CELL_CAP}")


@dataclass(frozen=True)
class LatticePmf:
    """Nonnegative mass values on a box, plus the truncated-mass deficit."""

    box: Box
    values: np.ndarray
    deficit: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != self.box.shape:
            raise LceError(f"values shape {vals.shape} != box shape {self.box.shape}")
        if not np.all(np.isfinite(vals)):
            raise LceError("p.m.f. values must be finite")
        if vals.size and float(vals.min()) < 0.0:
            raise LceError("p.m.f. values must be nonnegative")
        if not (0.0 <= self.deficit < 1.0):
            raise LceError("deficit must lie in [0, 1)")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return self.box.dim

    @cached_property
    def mass(self) -> float:
        return stable_sum(self.values)

    def value_at(self, point) -> float:
        if not self.box.contains(point):
            return 0.0
        idx = tuple(int(x) - l for x, l in zip(point, self.box.lo))
        return float(self.values[idx])

    def assert_normalized(self, tol: float = 1e-9):
        if abs(self.mass + self.deficit - 1.0) > tol:
            raise NotNormalizedError(
                f"mass {self.mass} + deficit {self.deficit} differs from 1 by more than {tol}"
            )

    def shifted(self, vec) -> "LatticePmf":
        return LatticePmf(self.box.translate(vec), self.values, self.deficit, dict(self.meta))


@dataclass(frozen=True)
class LatticeSet:
    """Finite set of integer points in Z^d."""

    dim: int
    points: frozenset

    def __post_init__(self):
        for p in self.points:
            if len(p) != self.dim:
                raise DimensionMismatchError(f"point {p} does not have dimension {self.dim}")

    @classmethod
    def from_iterable(cls, dim: int, pts) -> "LatticeSet":
        return cls(dim, frozenset(tuple(int(x) for x in p) for p in pts))

    def __len__(self) -> int:
        return len(self.points)

    def __contains__(self, p) -> bool:
        return tuple(int(x) for x in p) in self.points

    def sorted_points(self) -> list[tuple[int, ...]]:
        return sorted(self.points)

    def array(self) -> np.ndarray:
        if not self.points:
            return np.zeros((0, self.dim), dtype=np.int64)
        return np.array(self.sorted_points(), dtype=np.int64)

    def bounding_box(self) -> Box:
        if not self.points:
            raise LceError("empty set has no bounding box")
        arr = self.array()
        return Box(tuple(int(x) for x in arr.min(axis=0)), tuple(int(x) for x in arr.max(axis=0)))


def support_set(p: LatticePmf, threshold: float = 0.0) -> LatticeSet:
    idx = np.argwhere(p.values > threshold)
    pts = idx + np.array(p.box.lo, dtype=np.int64)
    return LatticeSet.from_iterable(p.dim, pts)


# ---------------------------------------------------------------------------
# constructors


def point_mass(point, dim: int | None = None) -> LatticePmf:
    pt = tuple(int(x) for x in (point if hasattr(point, "__len__") else [point]))
    if dim is not None and len(pt) != dim:
        raise DimensionMismatchError("point dimension mismatch")
    box = Box(pt, pt)
    return LatticePmf(box, np.ones(box.shape), 0.0, {"family": "point_mass"})


def make_uniform_on_set(S: LatticeSet) -> LatticePmf:
    """Uniform mass 1/|S| on each point of S; zero deficit."""
    if len(S) == 0:
        raise LceError("cannot build a uniform p.m.f. on the empty set")
    box = S.bounding_box()
    _check_cells(box)
    vals = np.zeros(box.shape)
    w = 1.0 / len(S)
    lo = np.array(box.lo, dtype=np.int64)
    for pt in S.sorted_points():
        vals[tuple(np.array(pt, dtype=np.int64) - lo)] = w
    return LatticePmf(box, vals, 0.0, {"family": "uniform_on_set", "support_size": len(S)})


def make_product(factors: list[LatticePmf]) -> LatticePmf:
    """Product p.m.f. of one-dimensional factors; deficit bounded by the sum."""
    if not factors:
        raise LceError("need at least one factor")
    for f in factors:
        if f.dim != 1:
            raise DimensionMismatchError("make_product expects 1-d factors")
        f.assert_normalized()
    lo = tuple(f.box.lo[0] for f in factors)
    hi = tuple(f.box.hi[0] for f in factors)
    box = Box(lo, hi)
    _check_cells(box)
    vals = reduce(np.multiply.outer, [f.values for f in factors])
    deficit = min(1.0 - 1e-15, math.fsum(f.deficit for f in factors))
    return LatticePmf(box, vals, deficit, {"family": "product"})


def lattice_tail_sum_bound(density: ContinuousDensity, center, inf_radius: int) -> float:
    """Upper bound on sum of f over lattice points at L-inf distance > inf_radius from center.

    Uses the declared exponential tail majorant over L-inf shells; valid because
    |k - c|_2 >= |k - c|_inf.  Requires the shells to start beyond the majorant's
    validity radius.
    """
    tb = density.tail_bound
    if tb is None:
        raise TailToleranceError("density has no tail bound; cannot certify truncation")
    m0 = int(inf_radius) + 1
    if m0 < tb.radius:
        raise TailToleranceError(
            f"truncation box (inradius {inf_radius}) lies inside the tail-bound radius {tb.radius}; "
            "increase radius_multiplier"
        )
    d = density.dim
    total = 0.0
    m = m0
    while True:
        shell = float((2 * m + 1) ** d - (2 * m - 1) ** d)
        term = shell * tb.amplitude * math.exp(-tb.rate * m)
        total += term
        if term < 1e-300 or term < 1e-18 * max(total, 1e-300):
            break
        m += 1
        if m > m0 + 10_000_000:
            raise TailToleranceError("tail bound sum did not converge")
    return total


def truncation_box(
    f: ContinuousDensity, center=None, radius_multiplier: float = DEFAULT_RADIUS_MULTIPLIER
) -> tuple[Box, tuple[int, ...]]:
    """Integer box [center +- ceil(radius_multiplier * axis scale)] and its center."""
    if radius_multiplier <= 0:
        raise LceError("radius_multiplier must be positive")
    d = f.dim
    if center is None:
        c = f.center if f.center is not None else np.zeros(d)
        center = tuple(int(round(x)) for x in c)
    else:
        center = tuple(int(x) for x in center)
        if len(center) != d:
            raise DimensionMismatchError("center dimension mismatch")
    scales = f.axis_scales()
    half = tuple(max(1, int(math.ceil(radius_multiplier * s))) for s in scales)
    box = Box(tuple(c - h for c, h in zip(center, half)), tuple(c + h for c, h in zip(center, half)))
    return box, center


def quantize_density(
    f: ContinuousDensity,
    center=None,
    radius_multiplier: float = DEFAULT_RADIUS_MULTIPLIER,
    tail_tolerance: float = DEFAULT_TAIL_TOLERANCE,
) -> LatticePmf:
    """Sample f at lattice points of [center +- radius_multiplier * scale] and normalize.

    The retained values are scaled so that retained mass plus the certified
    out-of-box bound equals one; the bound (divided by the same normalizer)
    becomes the deficit.  Mass ratios inside the box are those of f exactly.
    """
    box, center = truncation_box(f, center, radius_multiplier)
    _check_cells(box)
    vals = f.evaluate(box.grid())
    if not np.all(np.isfinite(vals)):
        raise LceError("density evaluated to a non-finite value on the box")
    if float(vals.min()) < 0:
        raise LceError("density evaluated to a negative value")
    retained = stable_sum(vals)
    if retained <= 0:
        raise LceError("density carries no mass on the box")
    inradius = min(min(h - c, c - l) for l, c, h in zip(box.lo, center, box.hi))
    outside = lattice_tail_sum_bound(f, center, inradius)
    normalizer = retained + outside
    deficit = outside / normalizer
    if deficit > tail_tolerance:
        raise TailToleranceError(
            f"deficit bound {deficit:.3e} exceeds tail tolerance {tail_tolerance:.3e}; "
            "increase radius_multiplier"
        )
    meta = {"family": f.name, "params": dict(f.params), "radius_multiplier": radius_multiplier}
    return LatticePmf(box, vals / normalizer, deficit, meta)


# ---------------------------------------------------------------------------
# convolution


def convolve(p: LatticePmf, q: LatticePmf, method: str = "auto") -> LatticePmf:
    """Convolution (p * q)(k) = sum_j p(j) q(k - j) on the Minkowski-sum box.

    ``method`` is ``direct``, ``fft`` or ``auto``.  The FFT path is verified
    against direct summation on a deterministic subsample of output cells on
    every call.
    """
    if p.dim != q.dim:
        raise DimensionMismatchError("convolution operands have different dimensions")
    out_box = p.box.minkowski(q.box)
    _check_cells(out_box)
    if method not in ("auto", "direct", "fft"):
        raise LceError(f"unknown convolution method {method!r}")
    if method == "auto":
        small_nnz = min(int(np.count_nonzero(p.values)), int(np.count_nonzero(q.values)))
        cost = small_nnz * max(p.box.ncells, q.box.ncells)
        method = "direct" if cost <= _DIRECT_COST_CAP else "fft"
    if method == "direct":
        out = _convolve_direct(p, q, out_box.shape)
    else:
        out = _convolve_fft(p, q, out_box.shape)
        _verify_fft_subsample(p, q, out)
        np.maximum(out, 0.0, out=out)
    deficit = p.deficit + q.deficit - p.deficit * q.deficit
    return LatticePmf(out_box, out, deficit, {"method": method})


def _convolve_direct(p: LatticePmf, q: LatticePmf, out_shape) -> np.ndarray:
    small, big = (q, p) if np.count_nonzero(q.values) <= np.count_nonzero(p.values) else (p, q)
    out = np.zeros(out_shape)
    big_shape = big.values.shape
    # np.argwhere returns row-major order, which fixes the accumulation order.
    for j in np.argwhere(small.values != 0.0):
        w = small.values[tuple(j)]
        sl = tuple(slice(int(a), int(a) + s) for a, s in zip(j, big_shape))
        out[sl] += w * big.values
    return out


def _convolve_fft(p: LatticePmf, q: LatticePmf, out_shape) -> np.ndarray:
    padded = tuple(next_pow2(s) for s in out_shape)
    axes = tuple(range(len(padded)))
    fp = np.fft.rfftn(p.values, s=padded, axes=axes)
    fq = np.fft.rfftn(q.values, s=padded, axes=axes)
    full = np.fft.irfftn(fp * fq, s=padded, axes=axes)
    out = np.ascontiguousarray(full[tuple(slice(0, s) for s in out_shape)])
    scale = max(1.0, float(np.sum(p.values)) * float(np.sum(q.values)))
    if float(out.min()) < -_FFT_CHECK_TOL * scale:
        raise ArithmeticError("FFT convolution produced a significantly negative value")
    return out


def _verify_fft_subsample(p: LatticePmf, q: LatticePmf, out: np.ndarray):
    small, big = (q, p) if np.count_nonzero(q.values) <= np.count_nonzero(p.values) else (p, q)
    n = out.size
    flat = np.unique(np.linspace(0, n - 1, num=min(_FFT_CHECK_SAMPLES, n)).astype(np.int64))
    positions = np.stack(np.unravel_index(flat, out.shape), axis=1)
    jidx = np.argwhere(small.values != 0.0)
    jvals = small.values[small.values != 0.0]
    big_shape = np.array(big.values.shape)
    scale = max(1.0, float(np.sum(p.values)) * float(np.sum(q.values)))
    worst = 0.0
    for pos, fft_val in zip(positions, out.ravel()[flat]):
        rel = pos[None, :] - jidx
        ok = np.all((rel >= 0) & (rel < big_shape[None, :]), axis=1)
        if ok.any():
            direct = math.fsum((jvals[ok] * big.values[tuple(rel[ok].T)]).tolist())
        else:
            direct = 0.0
        worst = max(worst, abs(direct - float(fft_val)))
    if worst > _FFT_CHECK_TOL * scale:
        raise ArithmeticError(
            f"FFT/direct subsample discrepancy {worst:.3e} exceeds {_FFT_CHECK_TOL * scale:.3e}"
        )


def self_convolve(p: LatticePmf, n: int, method: str = "auto") -> LatticePmf:
    """n-fold convolution power of p; n = 1 returns p unchanged."""
    if n < 1:
        raise LceError("n must be a positive integer")
    out = p
    for _ in range(n - 1):
        out = convolve(out, p, method=method)
    return out


# ---------------------------------------------------------------------------
# file formats (structured text, JSON encoding)


def pmf_to_doc(p: LatticePmf) -> dict:
    return {
        "dim": p.dim,
        "lo": list(p.box.lo),
        "hi": list(p.box.hi),
        "values": [float(v) for v in p.values.ravel(order="C")],
        "deficit": float(p.deficit),
        "meta": dict(p.meta),
    }


def pmf_from_doc(doc: dict) -> LatticePmf:
    box = Box(tuple(int(x) for x in doc["lo"]), tuple(int(x) for x in doc["hi"]))
    if box.dim != int(doc["dim"]):
        raise LceError("dim field inconsistent with bounds")
    vals = np.array(doc["values"], dtype=np.float64).reshape(box.shape, order="C")
    return LatticePmf(box, vals, float(doc.get("deficit", 0.0)), dict(doc.get("meta", {})))


def save_pmf(p: LatticePmf, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(pmf_to_doc(p), fh, indent=1)
        fh.write("\n")


def load_pmf(path) -> LatticePmf:
    with open(path, encoding="utf-8") as fh:
        return pmf_from_doc(json.load(fh))


def set_to_doc(s: LatticeSet) -> dict:
    return {"dim": s.dim, "points": [list(p) for p in s.sorted_points()]}


def set_from_doc(doc: dict) -> LatticeSet:
    return LatticeSet.from_iterable(int(doc["dim"]), doc["points"])


def save_set(s: LatticeSet, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(set_to_doc(s), fh, indent=1)
        fh.write("\n")


def load_set(path) -> LatticeSet:
    with open(path, encoding="utf-8") as fh:
        return set_from_doc(json.load(fh))
