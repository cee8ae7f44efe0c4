import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lce import families
from lce.errors import LceError
from lce.lattice import Box, LatticePmf, make_product, point_mass
from lce.moments import discrete_moments, shannon_entropy
from lce.numerics import gauss_legendre_01, rate_envelope_ok
from lce.smoothing import (
    BSplineKernel,
    bspline_eval,
    cell_deviation,
    differential_entropy,
    elementary_estimate,
    entropy_like,
    smoothed_density_eval,
    smoothed_entropy_detail,
)


def pmf(masses, lo=(0,)):
    vals = np.asarray(masses, dtype=np.float64)
    hi = tuple(l + s - 1 for l, s in zip(lo, vals.shape))
    return LatticePmf(Box(tuple(lo), hi), vals / vals.sum())


# ---------------------------------------------------------------------------
# kernels


def test_tent_values():
    assert bspline_eval(2, 0.5) == 0.5
    assert bspline_eval(2, 1.0) == 1.0
    assert bspline_eval(2, 1.5) == 0.5
    assert bspline_eval(2, 2.0) == 0.0
    assert bspline_eval(2, -0.1) == 0.0


def test_order3_peak():
    assert bspline_eval(3, 1.5) == 0.75


def test_kernel_integrates_to_one():
    x, w = gauss_legendre_01(32)
    for n in range(1, 7):
        total = math.fsum(
            float(np.sum(w * bspline_eval(n, k + x))) for k in range(n)
        )
        assert total == pytest.approx(1.0, abs=1e-12)


def test_kernel_bounded_by_one():
    xs = np.linspace(-1, 7, 4001)
    for n in range(1, 7):
        vals = bspline_eval(n, xs)
        assert np.all(vals >= 0.0)
        assert vals.max() <= 1.0
    assert BSplineKernel(2).peak() == 1.0


def test_order_validation():
    with pytest.raises(LceError):
        bspline_eval(0, 0.5)


# ---------------------------------------------------------------------------
# smoothed density


def test_n1_is_floor_lookup():
    p = pmf([0.2, 0.5, 0.3])
    xs = np.array([[0.0], [0.3], [1.9], [2.5], [3.0], [-0.2]])
    expected = [0.2, 0.2, 0.5, 0.3, 0.0, 0.0]
    assert np.allclose(smoothed_density_eval(p, 1, xs), expected, atol=1e-15)


def test_point_mass_tent():
    p = point_mass((0,))
    for x, want in [(0.25, 0.25), (1.0, 1.0), (1.75, 0.25), (2.5, 0.0)]:
        assert smoothed_density_eval(p, 2, [x]) == pytest.approx(want, abs=1e-15)


def test_bilinear_cell_formula_d2():
    # on a unit cell, the twofold-smoothed density is the bilinear blend of
    # the four stencil masses; checked at the cell center
    rng = np.random.default_rng(3)
    p = pmf(rng.uniform(0.1, 1.0, (3, 3)), lo=(0, 0))
    k = (1, 1)
    x = np.array([k[0] + 0.5, k[1] + 0.5])
    t = (0.5, 0.5)
    expected = 0.0
    for s0 in (0, 1):
        for s1 in (0, 1):
            w = (t[0] if s0 == 0 else 1 - t[0]) * (t[1] if s1 == 0 else 1 - t[1])
            expected += w * p.value_at((k[0] - s0, k[1] - s1))
    assert smoothed_density_eval(p, 2, x) == pytest.approx(expected, abs=1e-14)


def test_smoothed_density_integrates_to_mass():
    from lce.numerics import adaptive_quad_1d

    p = pmf([0.3, 0.1, 0.6])
    for n in (1, 2, 3):
        val, _ = adaptive_quad_1d(
            lambda t: np.asarray(smoothed_density_eval(p, n, t[:, None])),
            -1.0, p.box.hi[0] + n + 1.0, rel_tol=1e-10,
        )
        assert val == pytest.approx(p.mass, abs=1e-8)


def test_kernel_cover_bound():
    rng = np.random.default_rng(4)
    p = pmf(rng.uniform(0.05, 1.0, (4, 4)), lo=(0, 0))
    pts = rng.uniform(-1, 6, size=(200, 2))
    f = smoothed_density_eval(p, 2, pts)
    for x, fv in zip(pts, f):
        k = np.floor(x).astype(int)
        cover = sum(
            p.value_at((k[0] - s0, k[1] - s1)) for s0 in (0, 1) for s1 in (0, 1)
        )
        assert fv <= cover + 1e-12


# ---------------------------------------------------------------------------
# differential entropy


def test_identity_n1_matches_shannon():
    for p in families.assorted_pmfs_1d(12):
        assert abs(differential_entropy(p, 1) - shannon_entropy(p)) < 1e-9


def test_point_mass_half_nat():
    assert differential_entropy(point_mass((0,)), 2) == pytest.approx(0.5, abs=1e-6)


def test_point_mass_one_nat_d2():
    assert differential_entropy(point_mass((0, 0)), 2) == pytest.approx(1.0, abs=1e-6)


def test_tensor_additivity_n3():
    h1 = differential_entropy(point_mass((0,)), 3, tol=1e-9)
    h2 = differential_entropy(point_mass((0, 0)), 3, tol=1e-9)
    assert h2 == pytest.approx(2 * h1, abs=1e-7)


def test_entropy_shift_invariance():
    p = families.binomial_pmf(5)
    h = differential_entropy(p, 2)
    assert differential_entropy(p.shifted((-3,)), 2) == pytest.approx(h, abs=1e-10)


def test_detail_reports_refinement():
    det = smoothed_entropy_detail(point_mass((0,)), 2)
    assert det.refined_cells >= 1 and det.cells == 2
    assert det.error_estimate <= 1e-8


def test_entropy_tolerance_honored():
    p = families.uniform_interval(3)
    coarse = differential_entropy(p, 2, tol=1e-6)
    fine = differential_entropy(p, 2, tol=1e-10)
    assert coarse == pytest.approx(fine, abs=1e-6)


# ---------------------------------------------------------------------------
# cell deviation


def test_cell_deviation_n1_zero():
    rep = cell_deviation(families.binomial_pmf(6), 1)
    assert rep.total == 0.0 and rep.certified_exact


def test_cell_deviation_uniform_two_over_m():
    for m in (2, 5, 10):
        rep = cell_deviation(families.uniform_interval(m), 2)
        assert rep.certified_exact
        assert rep.total == pytest.approx(2.0 / m, abs=1e-15)


def test_cell_deviation_upper_bounds_sampled_sup():
    rng = np.random.default_rng(9)
    p = pmf(rng.uniform(0.05, 1.0, 5))
    for n in (2, 3):
        rep = cell_deviation(p, n)
        lo = rep.cell_box.lo[0]
        for idx, bound in enumerate(rep.sup_values):
            k = lo + idx
            ts = np.linspace(0.0, 0.999, 41)
            f = smoothed_density_eval(p, n, (k + ts)[:, None])
            sampled = float(np.max(np.abs(np.asarray(f) - p.value_at((k,)))))
            assert sampled <= bound + 1e-12


def test_cell_deviation_rate_envelope():
    stats = []
    for sigma in (4.0, 8.0, 16.0, 32.0):
        p = families.quantized_gaussian(sigma, 2)
        s = discrete_moments(p)
        stats.append(cell_deviation(p, 2).total * s.sigma_hat)
    assert rate_envelope_ok(stats, rel_slack=1e-6)


# ---------------------------------------------------------------------------
# elementary estimate


def test_elementary_estimate_a_equals_b():
    bound = elementary_estimate(0.3, 0.3, 0.1, 2.0, 1.0)
    assert bound == pytest.approx(0.2 * math.log(10.0), abs=1e-12)


def test_elementary_estimate_worked_example():
    a, b, mu, D, M = 0.0, 1.0 / math.e, 0.1, 1.0, 1.0
    g = abs(entropy_like(b, M) - entropy_like(a, M))
    assert g == pytest.approx(1.0 / math.e, abs=1e-12)
    bound = elementary_estimate(a, b, mu, D, M)
    expected = 0.2 * math.log(10.0) + (1.0 / math.e) * math.log(10.0 * math.e)
    assert bound == pytest.approx(expected, abs=1e-12)
    assert g <= bound


def test_elementary_estimate_domain_checks():
    with pytest.raises(LceError):
        elementary_estimate(0.0, 0.1, 0.5, 1.0, 1.0)  # mu >= 1/e
    with pytest.raises(LceError):
        elementary_estimate(0.0, 2.0, 0.1, 1.0, 1.0)  # b > D/M
    with pytest.raises(LceError):
        elementary_estimate(0.0, 0.1, 0.1, 0.5, 1.0)  # D < 1


@settings(max_examples=300, deadline=None)
@given(
    st.integers(0, 10**9),
)
def test_elementary_estimate_random_samples(seed):
    rng = np.random.default_rng(seed)
    M = math.exp(rng.uniform(0, 8))
    D = math.exp(rng.uniform(0, 8))
    hi = D / M
    a, b = hi * rng.random(), hi * rng.random()
    mu = rng.uniform(1e-12, 1 / math.e - 1e-12)
    g = abs(entropy_like(b, M) - entropy_like(a, M))
    bound = elementary_estimate(a, b, mu, D, M)
    assert g <= bound * (1 + 1e-12) + 1e-15


def test_smoothed_density_wrapper():
    from lce.smoothing import SmoothedDensity

    sd = SmoothedDensity(point_mass((0,)), 2)
    assert sd([0.5]) == pytest.approx(0.5)
    assert sd.cell_box().lo == (0,) and sd.cell_box().hi == (1,)
    with pytest.raises(LceError):
        SmoothedDensity(point_mass((0,)), 0)
