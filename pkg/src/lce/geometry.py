"""Ball bodies of log-concave densities and convex-body moment inequalities.

Covers: radial functions of the bodies K_p(f) attached to a density f, the
Gamma/exponential inclusion constants between them, the second-moment
inequality chain h_K(u)^2/(d(d+2)) <= mean <x,u>^2 <= d h_K(u)^2/(d+2) for
centered bodies, per-direction radial-integral bounds, and inradius and
circumradius bounds in terms of covariance eigenvalues.

Convex bodies come from a small registry (cube, box, ball, ellipsoid,
simplex, h-polytope, v-polytope).  Closed-form bodies use exact moments;
h-polytopes fall back to seeded rejection-sampling Monte Carlo with reported
standard errors.
"""

from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .densities import ContinuousDensity, parse_param_spec
from .errors import LceError, SizeCapError
from .numerics import adaptive_quad_1d, jacobi_eigenvalues
from .simplex import OPTIMAL, hull_membership, solve_lp

MC_DEFAULT_SAMPLES = 200_000


# ---------------------------------------------------------------------------
# inclusion constants and per-dimension ball-body constants


@dataclass(frozen=True)
class InclusionConstants:
    p: float
    q: float
    lower: float  # Gamma(p+1)^(1/p) / Gamma(q+1)^(1/q)
    upper: float  # e^(d/p - d/q)


def inclusion_constants(d: int, p: float, q: float) -> InclusionConstants:
    if not (0 < p < q):
        raise LceError("need 0 < p < q")
    lower = math.gamma(p + 1.0) ** (1.0 / p) / math.gamma(q + 1.0) ** (1.0 / q)
    upper = math.exp(d / p - d / q)
    return InclusionConstants(p=p, q=q, lower=lower, upper=upper)


@dataclass(frozen=True)
class BallConstants:
    dim: int
    L_d: float
    c1: float
    c2: float
    radial_lower: float  # c1^(d+2) / (sqrt(2 pi) e^(3/2))
    radial_upper: float  # (d+1) c2^(d+2) L_d
    concentration: float  # 3^(1/d) * radial_upper


def ball_constants(d: int, L_d: float = 1.0) -> BallConstants:
    """Per-dimension constants from the (d, d+1) and (d+1, d+2) inclusions.

    The two universal inclusion constants are instantiated as the extreme
    Gamma/exponential values those inclusions produce.  L_d (the dimensional
    cap on the isotropic constant) is configurable; 1.0 is consistent with
    known small-dimension values.
    """
    inc1 = inclusion_constants(d, d, d + 1)
    inc2 = inclusion_constants(d, d + 1, d + 2)
    c1 = min(inc1.lower, inc2.lower)
    c2 = max(inc1.upper, inc2.upper)
    radial_lower = c1 ** (d + 2) / (math.sqrt(2.0 * math.pi) * math.e**1.5)
    radial_upper = (d + 1) * c2 ** (d + 2) * L_d
    return BallConstants(
        dim=d,
        L_d=L_d,
        c1=c1,
        c2=c2,
        radial_lower=radial_lower,
        radial_upper=radial_upper,
        concentration=3.0 ** (1.0 / d) * radial_upper,
    )


# ---------------------------------------------------------------------------
# radial functions of ball bodies


@dataclass(frozen=True)
class RadialProfile:
    directions: np.ndarray  # (m, d), unit vectors
    radii: np.ndarray  # (m,), positive

    def __post_init__(self):
        dirs = np.ascontiguousarray(self.directions, dtype=np.float64)
        rad = np.ascontiguousarray(self.radii, dtype=np.float64)
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-12):
            raise LceError("directions must be unit vectors")
        if np.any(rad <= 0.0):
            raise LceError("radii must be positive")
        dirs.flags.writeable = False
        rad.flags.writeable = False
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "radii", rad)


def _radial_moment(f: ContinuousDensity, theta: np.ndarray, p: float, rel_tol: float = 1e-10) -> float:
    """integral of p r^(p-1) f(r theta) dr over (0, inf) with certified tail cut."""
    tb = f.tail_bound
    if tb is None:
        raise LceError("density needs a tail bound for radial integration")
    R = max(tb.radius, 2.0 * (p + f.dim) / tb.rate, 1.0)
    # Grow R until the exponential remainder bound is negligible.
    for _ in range(200):
        rem = p * tb.amplitude * R ** (p - 1.0) * math.exp(-tb.rate * R) / (tb.rate * 0.5)
        if rem < 1e-30 + 1e-16 * tb.amplitude:
            break
        R *= 1.5
    theta = np.asarray(theta, dtype=np.float64)

    def integrand(r):
        pts = r[:, None] * theta[None, :]
        return p * r ** (p - 1.0) * f.evaluate(pts)

    val, _ = adaptive_quad_1d(integrand, 0.0, R, rel_tol=rel_tol)
    return val


def ball_body_radial(f: ContinuousDensity, p: float, dirs) -> RadialProfile:
    """Radial function of K_p(f): rho(theta)^p = (1/f(0)) int p r^(p-1) f(r theta) dr."""
    if p <= 0:
        raise LceError("p must be positive")
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    f0 = float(f(np.zeros(f.dim)))
    if f0 <= 0.0:
        raise LceError("f(0) must be positive")
    radii = np.array([(_radial_moment(f, th, p) / f0) ** (1.0 / p) for th in dirs])
    return RadialProfile(directions=dirs, radii=radii)


@dataclass(frozen=True)
class InclusionCheck:
    lower: float
    upper: float
    min_ratio: float
    max_ratio: float
    passed: bool


def check_inclusions(f: ContinuousDensity, p: float, q: float, dirs, tol: float = 1e-9) -> InclusionCheck:
    """Verify lower <= rho_{K_p}(theta)/rho_{K_q}(theta) <= upper on sampled directions."""
    consts = inclusion_constants(f.dim, p, q)
    prof_p = ball_body_radial(f, p, dirs)
    prof_q = ball_body_radial(f, q, dirs)
    ratios = prof_p.radii / prof_q.radii
    lo, hi = float(ratios.min()), float(ratios.max())
    passed = (lo >= consts.lower - tol) and (hi <= consts.upper + tol)
    return InclusionCheck(consts.lower, consts.upper, lo, hi, passed)


@dataclass(frozen=True)
class RadialBoundsReport:
    mode: str  # "isotropic" or "anisotropic"
    values: np.ndarray  # I(theta) = int d r^(d-1) f(r theta) dr per direction
    lower_const: float
    upper_const: float
    min_stat: float
    max_stat: float
    passed: bool


def radial_integral_bounds(
    f: ContinuousDensity, dirs, L_d: float = 1.0, mode: str | None = None, tol: float = 1e-9
) -> RadialBoundsReport:
    """Per-direction radial integrals against their dimensional envelopes.

    Isotropic mode checks lower <= I(theta)^(1/d) <= upper with the constants
    of :func:`ball_constants`.  Anisotropic mode reports the two normalized
    ratios I / (f(0) lambda_min^(d/2)) and I / (f(0) lambda_max^(d/2)); the
    caller asserts a stable envelope across a family sweep.
    """
    d = f.dim
    dirs = np.atleast_2d(np.asarray(dirs, dtype=np.float64))
    vals = np.array([_radial_moment(f, th, float(d)) for th in dirs])
    if mode is None:
        cov = f.known_cov
        iso = False
        if cov is not None:
            eig = jacobi_eigenvalues(np.asarray(cov, dtype=np.float64))
            iso = float(eig[-1] - eig[0]) <= 1e-9 * float(eig[-1])
        mode = "isotropic" if iso else "anisotropic"
    if mode == "isotropic":
        consts = ball_constants(d, L_d)
        stats = vals ** (1.0 / d)
        lo, hi = float(stats.min()), float(stats.max())
        passed = lo >= consts.radial_lower - tol and hi <= consts.radial_upper + tol
        return RadialBoundsReport("isotropic", vals, consts.radial_lower, consts.radial_upper, lo, hi, passed)
    if mode != "anisotropic":
        raise LceError(f"unknown mode {mode!r}")
    if f.known_cov is None:
        raise LceError("anisotropic mode needs covariance eigenvalues")
    eig = jacobi_eigenvalues(np.asarray(f.known_cov, dtype=np.float64))
    lam_min, lam_max = float(eig[0]), float(eig[-1])
    f0 = float(f(np.zeros(d)))
    lower_ref = f0 * lam_min ** (d / 2.0)
    upper_ref = f0 * lam_max ** (d / 2.0)
    stats_low = vals / lower_ref
    stats_high = vals / upper_ref
    return RadialBoundsReport(
        "anisotropic",
        vals,
        lower_ref,
        upper_ref,
        float(stats_high.min()),
        float(stats_low.max()),
        True,
    )


# ---------------------------------------------------------------------------
# convex bodies


@dataclass(frozen=True)
class ConvexBody:
    kind: str
    dim: int
    data: tuple  # kind-specific payload, hashable

    def label(self) -> str:
        return f"{self.kind}(d={self.dim})"


def make_box(lo, hi) -> ConvexBody:
    lo = tuple(float(x) for x in lo)
    hi = tuple(float(x) for x in hi)
    if len(lo) != len(hi) or any(h <= l for l, h in zip(lo, hi)):
        raise LceError("box needs hi > lo per axis")
    return ConvexBody("box", len(lo), (lo, hi))


def make_cube(d: int, side: float = 1.0) -> ConvexBody:
    h = side / 2.0
    return make_box([-h] * d, [h] * d)


def make_ball(d: int, radius: float = 1.0) -> ConvexBody:
    if radius <= 0:
        raise LceError("radius must be positive")
    return ConvexBody("ball", d, (float(radius),))


def make_ellipsoid(axes) -> ConvexBody:
    ax = tuple(float(a) for a in axes)
    if any(a <= 0 for a in ax):
        raise LceError("semi-axes must be positive")
    return ConvexBody("ellipsoid", len(ax), (ax,))


def make_simplex(d: int) -> ConvexBody:
    """Standard simplex translated so its barycenter is the origin."""
    verts = np.vstack([np.zeros(d), np.eye(d)])
    verts = verts - verts.mean(axis=0)
    return ConvexBody("simplex", d, (tuple(map(tuple, verts)),))


def make_hpoly(A, b) -> ConvexBody:
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if A.ndim != 2 or A.shape[0] != b.size:
        raise LceError("h-polytope needs A (m, d) and b (m,)")
    if np.any(b <= 0):
        raise LceError("origin must be interior: need b > 0")
    return ConvexBody("hpoly", A.shape[1], (tuple(map(tuple, A)), tuple(b)))


def make_vpoly(vertices) -> ConvexBody:
    V = np.asarray(vertices, dtype=np.float64)
    if V.ndim != 2 or V.shape[0] < V.shape[1] + 1:
        raise LceError("v-polytope needs at least d+1 vertices")
    if V.shape[0] > 64:
        raise SizeCapError("v-polytope capped at 64 vertices")
    return ConvexBody("vpoly", V.shape[1], (tuple(map(tuple, V)),))


def make_ball_body(density, p: float = 2.0) -> ConvexBody:
    """Star body K_p(f) of a log-concave density, stored by its radial function.

    ``density`` is a ContinuousDensity or a registry spec string.  Membership
    compares |x| with rho(x/|x|); convexity of the body holds for log-concave
    f, so the usual checks apply.
    """
    from .densities import density_from_spec

    f = density_from_spec(density) if isinstance(density, str) else density
    if p <= 0:
        raise LceError("p must be positive")
    return ConvexBody("ball_body", f.dim, (f, float(p)))


_BODY_FACTORIES = {
    "cube": make_cube,
    "box": make_box,
    "ball": make_ball,
    "ellipsoid": make_ellipsoid,
    "simplex": make_simplex,
    "hpoly": make_hpoly,
    "vpoly": make_vpoly,
    "ball_body": make_ball_body,
}


def make_body(name: str, **params) -> ConvexBody:
    if name not in _BODY_FACTORIES:
        raise LceError(f"unknown body {name!r}; known: {sorted(_BODY_FACTORIES)}")
    return _BODY_FACTORIES[name](**params)


def body_from_spec(text: str) -> ConvexBody:
    name, params = parse_param_spec(text)
    return make_body(name, **params)


def _body_seed(K: ConvexBody, purpose: str) -> int:
    blob = json.dumps([K.kind, K.dim, K.data, purpose], default=str).encode()
    return zlib.crc32(blob)


def _unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def body_volume(K: ConvexBody, mc_samples: int = MC_DEFAULT_SAMPLES) -> float:
    if K.kind == "box":
        lo, hi = K.data
        return float(np.prod(np.asarray(hi) - np.asarray(lo)))
    if K.kind == "ball":
        return _unit_ball_volume(K.dim) * K.data[0] ** K.dim
    if K.kind == "ellipsoid":
        return _unit_ball_volume(K.dim) * float(np.prod(K.data[0]))
    if K.kind == "simplex":
        return 1.0 / math.factorial(K.dim)
    if K.kind == "vpoly":
        return _vpoly_volume(K)
    if K.kind == "hpoly":
        vol, _ = _hpoly_mc(K, mc_samples)[:2]
        return vol
    if K.kind == "ball_body" and K.dim == 2:
        f, p = K.data
        # |K| = (1/2) integral of rho(theta)^2 over the circle
        def rho_sq(angles):
            dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)
            return np.array([ball_body_radial(f, p, th[None, :]).radii[0] ** 2 for th in dirs])

        val, _ = adaptive_quad_1d(rho_sq, 0.0, 2.0 * math.pi, rel_tol=1e-8, order=8, max_panels=256)
        return 0.5 * val
    raise LceError(f"volume not implemented for {K.kind}")


def body_contains(K: ConvexBody, pts) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return np.all((pts >= lo) & (pts <= hi), axis=1)
    if K.kind == "ball":
        return np.linalg.norm(pts, axis=1) <= K.data[0] + 1e-12
    if K.kind == "ellipsoid":
        ax = np.asarray(K.data[0])
        return np.sum((pts / ax) ** 2, axis=1) <= 1.0 + 1e-12
    if K.kind == "simplex":
        verts = np.asarray(K.data[0])
        shift = pts - verts[0]
        basis = (verts[1:] - verts[0]).T
        lam = np.linalg.solve(basis, shift.T).T
        return np.all(lam >= -1e-12, axis=1) & (lam.sum(axis=1) <= 1.0 + 1e-12)
    if K.kind == "hpoly":
        A, b = (np.asarray(a) for a in K.data)
        return np.all(pts @ A.T <= b + 1e-12, axis=1)
    if K.kind == "vpoly":
        verts = np.asarray(K.data[0])
        return np.array([hull_membership(verts, z) for z in pts])
    if K.kind == "ball_body":
        f, p = K.data
        out = np.zeros(len(pts), dtype=bool)
        for i, x in enumerate(pts):
            r = float(np.linalg.norm(x))
            if r == 0.0:
                out[i] = True
                continue
            rho = ball_body_radial(f, p, (x / r)[None, :]).radii[0]
            out[i] = r <= rho + 1e-12
        return out
    raise LceError(f"membership not implemented for {K.kind}")


def body_support(K: ConvexBody, u) -> float:
    """Support function h_K(u) = max over K of <x, u>."""
    u = np.asarray(u, dtype=np.float64).ravel()
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return float(np.sum(np.where(u >= 0, hi * u, lo * u)))
    if K.kind == "ball":
        return K.data[0] * float(np.linalg.norm(u))
    if K.kind == "ellipsoid":
        ax = np.asarray(K.data[0])
        return float(np.linalg.norm(ax * u))
    if K.kind in ("simplex", "vpoly"):
        verts = np.asarray(K.data[0])
        return float(np.max(verts @ u))
    if K.kind == "hpoly":
        return _hpoly_support(K, u)
    raise LceError(f"support not implemented for {K.kind}")


def _hpoly_support(K: ConvexBody, u: np.ndarray) -> float:
    A, b = (np.asarray(a, dtype=np.float64) for a in K.data)
    m, d = A.shape
    # max u.x st Ax <= b -> min -u.(xp - xm) st A(xp - xm) + s = b, all vars >= 0
    Astd = np.hstack([A, -A, np.eye(m)])
    c = np.concatenate([-u, u, np.zeros(m)])
    res = solve_lp(c, Astd, b)
    if res.status != OPTIMAL:
        raise LceError("h-polytope appears unbounded in this direction")
    return -res.objective


def body_barycenter(K: ConvexBody, mc_samples: int = MC_DEFAULT_SAMPLES) -> np.ndarray:
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return (lo + hi) / 2.0
    if K.kind in ("ball", "ellipsoid"):
        return np.zeros(K.dim)
    if K.kind == "simplex":
        return np.asarray(K.data[0]).mean(axis=0)
    if K.kind == "vpoly":
        _, centroid, _ = _vpoly_moments(K)
        return centroid
    if K.kind == "hpoly":
        if _hpoly_is_symmetric(K):
            return np.zeros(K.dim)
        _, mean, _, _ = _hpoly_mc(K, mc_samples)
        return mean
    raise LceError(f"barycenter not implemented for {K.kind}")


def body_second_moment(K: ConvexBody, mc_samples: int = MC_DEFAULT_SAMPLES):
    """Normalized second moment matrix M = (1/|K|) int_K x x^T dx.

    Returns (M, stderr_matrix); stderr is zero for closed-form bodies.
    """
    d = K.dim
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        c = (lo + hi) / 2.0
        w = hi - lo
        M = np.outer(c, c)
        M[np.diag_indices(d)] += w**2 / 12.0
        return M, np.zeros((d, d))
    if K.kind == "ball":
        return (K.data[0] ** 2 / (d + 2.0)) * np.eye(d), np.zeros((d, d))
    if K.kind == "ellipsoid":
        ax = np.asarray(K.data[0])
        return np.diag(ax**2 / (d + 2.0)), np.zeros((d, d))
    if K.kind == "simplex":
        # Dirichlet moments of the standard simplex, then recentered.
        raw = np.full((d, d), 1.0) + np.eye(d)
        raw *= math.factorial(d) / math.factorial(d + 2)
        b = np.full(d, 1.0 / (d + 1.0))
        M0 = raw - np.outer(b, b)  # centered moments of the standard simplex
        return M0, np.zeros((d, d))
    if K.kind == "vpoly":
        _, centroid, M = _vpoly_moments(K)
        return M, np.zeros((d, d))
    if K.kind == "hpoly":
        _, _, M, se = _hpoly_mc(K, mc_samples)
        return M, se
    raise LceError(f"second moment not implemented for {K.kind}")


def _hpoly_is_symmetric(K: ConvexBody) -> bool:
    A, b = (np.asarray(a) for a in K.data)
    rows = {(tuple(np.round(r / n, 12)), round(float(bb / n), 12)) for r, bb, n in
            zip(A, b, np.linalg.norm(A, axis=1))}
    return all((tuple(np.round(-np.asarray(r), 12)), bb) in rows for r, bb in rows)


def _hpoly_bounding_box(K: ConvexBody) -> tuple[np.ndarray, np.ndarray]:
    d = K.dim
    lo = np.array([-_hpoly_support(K, -e) for e in np.eye(d)])
    hi = np.array([_hpoly_support(K, e) for e in np.eye(d)])
    return lo, hi


def _hpoly_mc(K: ConvexBody, n: int):
    """Rejection-sampled volume, mean, normalized second moment, and moment SEs."""
    lo, hi = _hpoly_bounding_box(K)
    rng = np.random.default_rng(_body_seed(K, "mc"))
    pts = lo + (hi - lo) * rng.random((n, K.dim))
    inside = body_contains(K, pts)
    cnt = int(inside.sum())
    if cnt < 100:
        raise LceError("rejection sampling found too few interior points")
    boxvol = float(np.prod(hi - lo))
    vol = boxvol * cnt / n
    sel = pts[inside]
    mean = sel.mean(axis=0)
    prods = sel[:, :, None] * sel[:, None, :]
    M = prods.mean(axis=0)
    se = prods.std(axis=0, ddof=1) / math.sqrt(cnt)
    return vol, mean, M, se


# exact v-polytope volume and moments (d <= 3)


def _vpoly_volume(K: ConvexBody) -> float:
    return _vpoly_moments(K)[0]


def _vpoly_moments(K: ConvexBody):
    """Exact (volume, centroid, normalized second moment) for d <= 3."""
    V = np.asarray(K.data[0])
    d = K.dim
    if d == 1:
        lo, hi = float(V.min()), float(V.max())
        vol = hi - lo
        c = (lo + hi) / 2.0
        m2 = (hi**3 - lo**3) / 3.0 / vol
        return vol, np.array([c]), np.array([[m2]])
    if d == 2:
        hull = _hull2d(V)
        c0 = hull.mean(axis=0)
        vol = 0.0
        cent = np.zeros(2)
        M = np.zeros((2, 2))
        for i in range(len(hull)):
            tri = np.array([c0, hull[i], hull[(i + 1) % len(hull)]])
            a = abs(_tri_area(tri))
            if a == 0.0:
                continue
            vol += a
            cent += a * tri.mean(axis=0)
            # edge-midpoint rule is exact for quadratics on triangles
            mids = np.array([(tri[0] + tri[1]) / 2, (tri[1] + tri[2]) / 2, (tri[0] + tri[2]) / 2])
            M += a * np.mean(mids[:, :, None] * mids[:, None, :], axis=0)
        return vol, cent / vol, M / vol
    if d == 3:
        facets = _vpoly3_facets(V)
        c0 = V.mean(axis=0)
        vol = 0.0
        cent = np.zeros(3)
        M = np.zeros((3, 3))
        for poly in facets:
            for i in range(1, len(poly) - 1):
                tet = np.array([c0, poly[0], poly[i], poly[i + 1]])
                v = abs(np.linalg.det(tet[1:] - tet[0])) / 6.0
                if v == 0.0:
                    continue
                vol += v
                cent += v * tet.mean(axis=0)
                M += v * _tet_second_moment(tet)
        if vol <= 0:
            raise LceError("degenerate v-polytope")
        return vol, cent / vol, M / vol
    raise LceError("exact v-polytope moments implemented for d <= 3 only")


def _tri_area(tri: np.ndarray) -> float:
    u = tri[1] - tri[0]
    v = tri[2] - tri[0]
    return 0.5 * float(u[0] * v[1] - u[1] * v[0])


def _tet_second_moment(tet: np.ndarray) -> np.ndarray:
    """Unnormalized int over the tetrahedron of x x^T, exact for quadratics."""
    # Degree-2 rule: 4 points at barycentric (a, b, b, b), weight 1/4 each.
    a = (5.0 + 3.0 * math.sqrt(5.0)) / 20.0
    b = (5.0 - math.sqrt(5.0)) / 20.0
    vol = abs(np.linalg.det(tet[1:] - tet[0])) / 6.0
    M = np.zeros((3, 3))
    for i in range(4):
        lam = np.full(4, b)
        lam[i] = a
        x = lam @ tet
        M += 0.25 * np.outer(x, x)
    return M


def _hull2d(points: np.ndarray) -> np.ndarray:
    """Convex hull vertices in counterclockwise order (monotone chain)."""
    pts = sorted(map(tuple, points))
    if len(pts) <= 2:
        return np.asarray(pts, dtype=np.float64)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return np.asarray(lower[:-1] + upper[:-1], dtype=np.float64)


def _vpoly3_facets(V: np.ndarray) -> list[np.ndarray]:
    """Facet polygons (ordered vertex loops) of a 3-d v-polytope by brute-force
    supporting-plane enumeration; adequate for the small bodies used here."""
    n = len(V)
    scale = float(np.abs(V).max()) + 1.0
    tol = 1e-9 * scale
    c0 = V.mean(axis=0)
    seen = set()
    facets = []
    for i, j, k in combinations(range(n), 3):
        nrm = np.cross(V[j] - V[i], V[k] - V[i])
        ln = np.linalg.norm(nrm)
        if ln < 1e-12 * scale * scale:
            continue
        nrm = nrm / ln
        if nrm @ (c0 - V[i]) > 0:
            nrm = -nrm
        s = (V - V[i]) @ nrm
        if s.max() > tol:
            continue  # not a supporting plane
        members = tuple(sorted(np.nonzero(s > -tol)[0].tolist()))
        if members in seen or len(members) < 3:
            continue
        seen.add(members)
        pts = V[list(members)]
        # order the facet polygon around its centroid
        b1 = pts[1] - pts[0]
        b1 = b1 / np.linalg.norm(b1)
        b2 = np.cross(nrm, b1)
        rel = pts - pts.mean(axis=0)
        ang = np.arctan2(rel @ b2, rel @ b1)
        facets.append(pts[np.argsort(ang)])
    if not facets:
        raise LceError("v-polytope has no facets; vertices may be degenerate")
    return facets


def scale_body(K: ConvexBody, t: float) -> ConvexBody:
    if t <= 0:
        raise LceError("scale factor must be positive")
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return make_box(t * lo, t * hi)
    if K.kind == "ball":
        return make_ball(K.dim, t * K.data[0])
    if K.kind == "ellipsoid":
        return make_ellipsoid(t * np.asarray(K.data[0]))
    if K.kind == "simplex":
        return ConvexBody("simplex", K.dim, (tuple(map(tuple, t * np.asarray(K.data[0]))),))
    if K.kind == "vpoly":
        return make_vpoly(t * np.asarray(K.data[0]))
    if K.kind == "hpoly":
        A, b = (np.asarray(a) for a in K.data)
        return make_hpoly(A, t * b)
    raise LceError(f"scaling not implemented for {K.kind}")


def scale_to_unit_volume(K: ConvexBody) -> ConvexBody:
    vol = body_volume(K)
    return scale_body(K, vol ** (-1.0 / K.dim))


# ---------------------------------------------------------------------------
# second-moment chain and radius bounds


@dataclass(frozen=True)
class KlsReport:
    lhs: float  # h_K(u)^2 / (d (d+2))
    mid: float  # (1/|K|) int_K <x,u>^2 dx
    rhs: float  # d h_K(u)^2 / (d+2)
    mid_stderr: float

    def chain_holds(self, tol: float = 1e-9, se_mult: float = 3.0) -> bool:
        # The chain admits equality cases (e.g. simplices along vertex
        # directions), so allow a relative epsilon plus the MC error band.
        widen = se_mult * max(self.mid_stderr, 0.0) + tol * max(self.lhs, self.mid, self.rhs)
        return self.lhs <= self.mid + widen and self.mid - widen <= self.rhs


def kls_second_moment_check(K: ConvexBody, u, mc_samples: int = MC_DEFAULT_SAMPLES) -> KlsReport:
    """Second-moment chain for a centered convex body along direction u."""
    u = np.asarray(u, dtype=np.float64).ravel()
    u = u / np.linalg.norm(u)
    d = K.dim
    scale = 1.0 + body_support(K, u)
    if K.kind == "hpoly":
        if not _hpoly_is_symmetric(K):
            raise LceError("h-polytope must be origin-symmetric for the centered chain")
    else:
        bary = body_barycenter(K, mc_samples)
        if float(np.linalg.norm(bary)) > 1e-9 * scale:
            raise LceError(f"body is not centered: barycenter {bary}")
    M, se = body_second_moment(K, mc_samples)
    h = body_support(K, u)
    mid = float(u @ M @ u)
    mid_se = float(np.sqrt(u**2 @ se**2 @ u**2))
    return KlsReport(lhs=h * h / (d * (d + 2.0)), mid=mid, rhs=d / (d + 2.0) * h * h, mid_stderr=mid_se)


@dataclass(frozen=True)
class RadiusReport:
    inradius: float
    circumradius: float
    lambda_min: float
    lambda_max: float
    circum_margin: float  # (d+1) sqrt(lambda_max) - R  (>= 0 expected)
    inradius_margin: float  # r - sqrt((d+2)/d) sqrt(lambda_min)  (>= 0 expected)

    def holds(self) -> bool:
        return self.circum_margin >= -1e-9 and self.inradius_margin >= -1e-9


def body_inradius(K: ConvexBody) -> float:
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return float(np.min((hi - lo) / 2.0))
    if K.kind == "ball":
        return K.data[0]
    if K.kind == "ellipsoid":
        return float(np.min(K.data[0]))
    if K.kind == "hpoly":
        A, b = (np.asarray(a) for a in K.data)
        return float(np.min(b / np.linalg.norm(A, axis=1)))
    if K.kind == "vpoly" and K.dim == 2:
        hull = _hull2d(np.asarray(K.data[0]))
        dists = []
        for i in range(len(hull)):
            a, bb = hull[i], hull[(i + 1) % len(hull)]
            e = bb - a
            nrm = np.array([e[1], -e[0]]) / np.linalg.norm(e)
            dists.append(abs(nrm @ a))
        return float(min(dists))
    raise LceError(f"inradius not implemented for {K.kind} in dimension {K.dim}")


def body_circumradius(K: ConvexBody) -> float:
    if K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))
    if K.kind == "ball":
        return K.data[0]
    if K.kind == "ellipsoid":
        return float(np.max(K.data[0]))
    if K.kind in ("simplex", "vpoly"):
        return float(np.max(np.linalg.norm(np.asarray(K.data[0]), axis=1)))
    raise LceError(f"circumradius not implemented for {K.kind}")


def radius_bounds_check(K: ConvexBody) -> RadiusReport:
    """Inradius/circumradius bounds via covariance eigenvalues; requires |K| = 1
    and the origin in the interior."""
    vol = body_volume(K)
    if abs(vol - 1.0) > 1e-9:
        raise LceError(f"body must have unit volume (got {vol}); rescale first")
    if not bool(body_contains(K, np.zeros((1, K.dim)))[0]):
        raise LceError("origin must lie in the interior")
    d = K.dim
    M, _ = body_second_moment(K)  # |K| = 1: matrix of int_K y_i y_j dy
    eig = jacobi_eigenvalues(M)
    lam_min, lam_max = float(eig[0]), float(eig[-1])
    r = body_inradius(K)
    R = body_circumradius(K)
    return RadiusReport(
        inradius=r,
        circumradius=R,
        lambda_min=lam_min,
        lambda_max=lam_max,
        circum_margin=(d + 1.0) * math.sqrt(lam_max) - R,
        inradius_margin=r - math.sqrt((d + 2.0) / d) * math.sqrt(lam_min),
    )


def lattice_point_count(K: ConvexBody, cell_cap: int = 20_000_000) -> int:
    """Number of lattice points in K, by enumeration over its bounding box."""
    if K.kind == "hpoly":
        lo, hi = _hpoly_bounding_box(K)
    elif K.kind in ("vpoly", "simplex"):
        V = np.asarray(K.data[0])
        lo, hi = V.min(axis=0), V.max(axis=0)
    elif K.kind == "box":
        lo, hi = (np.asarray(a) for a in K.data)
    elif K.kind == "ball":
        r = K.data[0]
        lo, hi = np.full(K.dim, -r), np.full(K.dim, r)
    elif K.kind == "ellipsoid":
        ax = np.asarray(K.data[0])
        lo, hi = -ax, ax
    else:
        raise LceError(f"bounding box not implemented for {K.kind}")
    los = np.floor(lo).astype(np.int64)
    his = np.ceil(hi).astype(np.int64)
    shape = his - los + 1
    if int(np.prod(shape)) > cell_cap:
        raise SizeCapError("bounding box too large for lattice enumeration")
    axes = [np.arange(l, h + 1) for l, h in zip(los, his)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, K.dim)
    if K.kind == "vpoly":
        # LP membership per point is slow; chunk but keep exactness.
        return int(sum(bool(x) for x in body_contains(K, grid.astype(np.float64))))
    return int(np.count_nonzero(body_contains(K, grid.astype(np.float64))))
