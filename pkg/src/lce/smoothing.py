"""Tensor B-spline smoothing of lattice p.m.f.s and differential entropy.

The order-n cardinal B-spline is the density of the sum of n independent
uniforms on [0, 1); smoothing a p.m.f. with its tensor product yields the
density of S + U_1 + ... + U_n.  Differential entropy is integrated cell by
cell with tensor Gauss-Legendre rules, refined by order doubling per cell
until the contribution errors sum below the requested tolerance.  Only the
kernel makes the integrand non-smooth (at cells where the mass steps to
zero), so refinement touches a handful of cells in practice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .densities import as_points
from .errors import LceError, QuadratureError
from .lattice import Box, LatticePmf
from .numerics import gauss_legendre_01, neg_xlogx, stable_sum

DEFAULT_QUAD_ORDER = 8
DEFAULT_ENTROPY_TOL = 1e-8
ORDER_CAP = 2048
REFINE_CELL_CAP = 8192
TINY_CELL_FLOOR = 1e-30
MAX_KERNEL_ORDER = 12


def bspline_eval(n: int, x) -> np.ndarray:
    """Cardinal B-spline of order n (n-fold self-convolution of 1_[0,1)).

    Supported on [0, n]; evaluated by the two-term recursion
    B_n(x) = (x B_{n-1}(x) + (n - x) B_{n-1}(x - 1)) / (n - 1).
    """
    if n < 1:
        raise LceError("B-spline order must be >= 1")
    if n > MAX_KERNEL_ORDER:
        raise LceError(f"B-spline order capped at {MAX_KERNEL_ORDER}")
    xa = np.asarray(x, dtype=np.float64)
    out = _bspline_rec(n, xa)
    return out if out.shape else float(out)


def _bspline_rec(n: int, x: np.ndarray) -> np.ndarray:
    if n == 1:
        return ((x >= 0.0) & (x < 1.0)).astype(np.float64)
    prev = _bspline_rec(n - 1, x)
    prev_shift = _bspline_rec(n - 1, x - 1.0)
    return (x * prev + (n - x) * prev_shift) / (n - 1)


@dataclass(frozen=True)
class BSplineKernel:
    order: int

    def __call__(self, x):
        return bspline_eval(self.order, x)

    def peak(self) -> float:
        return float(bspline_eval(self.order, self.order / 2.0))


def smoothed_cell_box(p: LatticePmf, n: int) -> Box:
    """Cells on which the smoothed density of p can be nonzero."""
    return Box(p.box.lo, tuple(h + n - 1 for h in p.box.hi))


def smoothed_density_eval(p: LatticePmf, n: int, x) -> np.ndarray | float:
    """Density of S + U_1 + ... + U_n at x: sum_s p(s) prod_i B_n(x_i - s_i).

    For n = 1 this is exactly p(floor(x)).
    """
    if n < 1:
        raise LceError("n must be >= 1")
    pts = as_points(x, p.dim)
    scalar = pts.ndim == 1
    pts = np.atleast_2d(pts)
    k = np.floor(pts).astype(np.int64)
    t = pts - k
    lo = np.array(p.box.lo, dtype=np.int64)
    shape = np.array(p.values.shape, dtype=np.int64)
    out = np.zeros(pts.shape[0])
    for j in product(range(n), repeat=p.dim):
        coeff = np.ones(pts.shape[0])
        for axis, ji in enumerate(j):
            coeff *= bspline_eval(n, t[:, axis] + ji)
        idx = k - np.array(j, dtype=np.int64) - lo
        valid = np.all((idx >= 0) & (idx < shape), axis=1)
        if valid.any():
            gathered = np.zeros(pts.shape[0])
            gathered[valid] = p.values[tuple(idx[valid].T)]
            out += coeff * gathered
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class SmoothedDensity:
    """Density of S + U_1 + ... + U_n as a callable, with its base p.m.f."""

    base: LatticePmf
    order: int

    def __post_init__(self):
        if self.order < 1:
            raise LceError("order must be >= 1")

    def __call__(self, x):
        return smoothed_density_eval(self.base, self.order, x)

    def cell_box(self) -> Box:
        return smoothed_cell_box(self.base, self.order)


# ---------------------------------------------------------------------------
# differential entropy


@dataclass(frozen=True)
class SmoothedEntropyDetail:
    value: float
    cells: int
    refined_cells: int
    base_order: int
    error_estimate: float
    tiny_cell_count: int
    tiny_cell_bound: float


def _kernel_node_weights(n: int, nodes: np.ndarray) -> list[np.ndarray]:
    return [bspline_eval(n, nodes + j) for j in range(n)]


def _cell_integrals(p: LatticePmf, n: int, order: int) -> np.ndarray:
    """Per-cell integral of -f_n log f_n at a tensor Gauss-Legendre order.

    Every unit cell shares the same local nodes, so each node contributes one
    shifted multiply-add of the whole mass array; accumulation order is fixed.
    """
    d = p.dim
    nodes, weights = gauss_legendre_01(order)
    kernel = _kernel_node_weights(n, nodes)
    big_shape = tuple(s + n - 1 for s in p.values.shape)
    acc = np.zeros(big_shape)
    fbuf = np.empty(big_shape)
    gbuf = np.empty(big_shape)
    for node in product(range(order), repeat=d):
        w = 1.0
        for axis in range(d):
            w *= weights[node[axis]]
        fbuf.fill(0.0)
        for j in product(range(n), repeat=d):
            c = 1.0
            for axis in range(d):
                c *= kernel[j[axis]][node[axis]]
            if c <= 0.0:
                continue
            sl = tuple(slice(ji, ji + s) for ji, s in zip(j, p.values.shape))
            fbuf[sl] += c * p.values
        np.multiply(fbuf, _log_where_positive(fbuf, gbuf), out=gbuf)
        acc -= w * gbuf
    return acc


def _log_where_positive(a: np.ndarray, out: np.ndarray) -> np.ndarray:
    out.fill(0.0)
    np.log(a, out=out, where=a > 0.0)
    return out


def _stencil_values(p: LatticePmf, cell: tuple[int, ...], n: int) -> np.ndarray:
    """Masses p(cell - j) over the kernel stencil; ``cell`` in absolute coords."""
    sv = np.zeros((n,) * p.dim)
    for j in product(range(n), repeat=p.dim):
        sv[j] = p.value_at(tuple(c - ji for c, ji in zip(cell, j)))
    return sv


def _tensor_cell_integral(sv: np.ndarray, n: int, order: int, d: int) -> float:
    nodes, weights = gauss_legendre_01(order)
    K = np.stack([bspline_eval(n, nodes + j) for j in range(n)])  # (n, order)
    f = sv
    for _ in range(d):
        f = np.tensordot(f, K, axes=([0], [0]))
    val = neg_xlogx(f)
    for _ in range(d):
        val = np.tensordot(val, weights, axes=([0], [0]))
    return float(val)


def _refine_cell(p, n, cell, start_order, tol_cell, order_cap) -> float:
    sv = _stencil_values(p, cell, n)
    prev = None
    order = start_order
    while order <= order_cap:
        cur = _tensor_cell_integral(sv, n, order, p.dim)
        if prev is not None and abs(cur - prev) <= tol_cell:
            return cur
        prev = cur
        order *= 2
    raise QuadratureError(
        f"cell {cell} did not converge below {tol_cell:.2e} at order cap {order_cap}"
    )


def smoothed_entropy_detail(
    p: LatticePmf,
    n: int,
    quad_order: int = DEFAULT_QUAD_ORDER,
    tol: float = DEFAULT_ENTROPY_TOL,
    order_cap: int = ORDER_CAP,
) -> SmoothedEntropyDetail:
    if n < 1:
        raise LceError("n must be >= 1")
    if tol <= 0:
        raise LceError("tol must be positive")
    I1 = _cell_integrals(p, n, quad_order)
    I2 = _cell_integrals(p, n, 2 * quad_order)
    diff = np.abs(I2 - I1)
    ncells = I2.size
    final = I2.copy()
    lo = p.box.lo
    refined = 0
    err_accepted = stable_sum(diff)
    if err_accepted > 0.5 * tol:
        # Refine the smallest set of worst cells so that the error left in the
        # accepted cells stays below tol/2; each refined cell then gets an
        # equal share of the remaining budget.
        flat = diff.ravel()
        order_desc = np.argsort(-flat, kind="stable")
        cum = np.cumsum(flat[order_desc])
        total = float(cum[-1])
        # smallest k with total - cum[k-1] <= tol/2
        k = int(np.searchsorted(cum, total - 0.5 * tol, side="left")) + 1
        k = min(k, flat.size)
        if k > REFINE_CELL_CAP:
            raise QuadratureError(f"{k} cells need refinement, cap is {REFINE_CELL_CAP}")
        chosen = np.sort(order_desc[:k])  # lexicographic processing order
        tol_each = 0.5 * tol / k
        for flat_idx in chosen:
            idx = np.unravel_index(int(flat_idx), I2.shape)
            cell = tuple(int(a) + l for a, l in zip(idx, lo))
            final[idx] = _refine_cell(p, n, cell, 4 * quad_order, tol_each, order_cap)
        refined = k
        err_accepted = stable_sum(np.delete(flat, chosen)) + k * tol_each

    # Certified bound on the contribution of cells whose covering mass is tiny:
    # f_n <= sum of stencil masses (the kernel peaks below 1), and -x log x is
    # increasing there, so such cells are negligible regardless of quadrature.
    cover = np.zeros(I2.shape)
    for j in product(range(n), repeat=p.dim):
        sl = tuple(slice(ji, ji + s) for ji, s in zip(j, p.values.shape))
        cover[sl] += p.values
    tiny = (cover > 0.0) & (cover < TINY_CELL_FLOOR)
    tiny_bound = stable_sum(neg_xlogx(np.where(tiny, cover, 0.0)))
    value = stable_sum(final)
    return SmoothedEntropyDetail(
        value=value,
        cells=int(ncells),
        refined_cells=refined,
        base_order=quad_order,
        error_estimate=float(err_accepted),
        tiny_cell_count=int(tiny.sum()),
        tiny_cell_bound=float(tiny_bound),
    )


def differential_entropy(
    p: LatticePmf,
    n: int,
    quad_order: int = DEFAULT_QUAD_ORDER,
    tol: float = DEFAULT_ENTROPY_TOL,
) -> float:
    """h(S + U_1 + ... + U_n) in nats by adaptive cell-wise quadrature.

    For n = 1 the smoothed density is constant on every cell, so the value
    equals the Shannon entropy of p to rounding accuracy.
    """
    return smoothed_entropy_detail(p, n, quad_order=quad_order, tol=tol).value


# ---------------------------------------------------------------------------
# cell deviation


@dataclass(frozen=True)
class CellDeviationReport:
    cell_box: Box
    sup_values: np.ndarray
    total: float
    certified_exact: bool


def cell_deviation(p: LatticePmf, n: int) -> CellDeviationReport:
    """Per-cell sup of |f_n - p(k)| and its total.

    n = 1: identically zero.  n = 2: exact, since f_2 is multilinear on each
    cell and extrema sit at cell corners.  n >= 3: certified upper bound from
    corner values plus a per-cell Lipschitz pad; flagged as non-exact.
    """
    if n < 1:
        raise LceError("n must be >= 1")
    d = p.dim
    cbox = smoothed_cell_box(p, n)
    big_shape = tuple(s + n - 1 for s in p.values.shape)
    if n == 1:
        sup = np.zeros(big_shape)
        return CellDeviationReport(cbox, sup, 0.0, True)

    def embedded(j):
        arr = np.zeros(big_shape)
        sl = tuple(slice(ji, ji + s) for ji, s in zip(j, p.values.shape))
        arr[sl] = p.values
        return arr

    center = embedded((0,) * d)
    if n == 2:
        sup = np.zeros(big_shape)
        for j in product(range(2), repeat=d):
            np.maximum(sup, np.abs(embedded(j) - center), out=sup)
        return CellDeviationReport(cbox, sup, stable_sum(sup), True)

    # n >= 3: f_n at the integer corners, then a kernel-slope pad.
    kernel_at_int = bspline_eval(n, np.arange(n, dtype=np.float64))  # B_n(0..n-1)
    corner = np.zeros(tuple(s + n for s in p.values.shape))  # grid of corner points
    for j in product(range(n), repeat=d):
        c = 1.0
        for axis in range(d):
            c *= kernel_at_int[j[axis]]
        if c <= 0.0:
            continue
        sl = tuple(slice(ji + 1, ji + 1 + s) for ji, s in zip(j, p.values.shape))
        corner[sl] += c * p.values
    corner_dev = np.zeros(big_shape)
    for s_corner in product(range(2), repeat=d):
        sl = tuple(slice(si, si + bs) for si, bs in zip(s_corner, big_shape))
        np.maximum(corner_dev, np.abs(corner[sl] - center), out=corner_dev)
    cover = np.zeros(big_shape)
    for j in product(range(n), repeat=d):
        sl = tuple(slice(ji, ji + s) for ji, s in zip(j, p.values.shape))
        cover[sl] += p.values
    slope = float(bspline_eval(n - 1, (n - 1) / 2.0))  # max |B_n'| <= max B_(n-1)
    sup = corner_dev + 0.5 * d * slope * cover
    return CellDeviationReport(cbox, sup, stable_sum(sup), False)


# ---------------------------------------------------------------------------
# elementary Taylor-type estimate


def entropy_like(x: float, M: float) -> float:
    """G(x) = -x log x - x log M, with G(0) = 0."""
    if x < 0:
        raise LceError("x must be nonnegative")
    if x == 0.0:
        return 0.0
    return -x * math.log(x) - x * math.log(M)


def elementary_estimate(a: float, b: float, mu: float, D: float, M: float) -> float:
    """Bound (2 mu / M) log(1/mu) + |b - a| log(e D / mu) for |G(b) - G(a)|.

    Valid for D, M >= 1, 0 <= a, b <= D/M, 0 < mu < 1/e, where G is
    :func:`entropy_like`.
    """
    if D < 1 or M < 1:
        raise LceError("need D >= 1 and M >= 1")
    if not (0.0 < mu < 1.0 / math.e):
        raise LceError("need 0 < mu < 1/e")
    hi = D / M
    if not (0.0 <= a <= hi and 0.0 <= b <= hi):
        raise LceError("a and b must lie in [0, D/M]")
    return (2.0 * mu / M) * math.log(1.0 / mu) + abs(b - a) * math.log(math.e * D / mu)
