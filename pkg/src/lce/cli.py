"""Command-line front end.

Subcommands: gen, convolve, entropy, moments, check, smooth-entropy, geom,
bridge, verify, sweep.  P.m.f.s, lattice sets, configs and reports are JSON
documents; results print to stdout as JSON.  Exit code is nonzero iff a
verification run contains a failing check.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bridge as bridge_mod
from . import convexity, families, geometry, harness, moments, smoothing
from .densities import density_from_spec, parse_param_spec
from .errors import LceError
from .lattice import convolve, load_pmf, point_mass, save_pmf
from .numerics import unit_directions


def _emit(doc: dict):
    json.dump(doc, sys.stdout, indent=1, sort_keys=True, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _gen(args) -> int:
    name, params = parse_param_spec(args.family)
    if name == "gaussian":
        p = families.quantized_gaussian(
            params.get("sigma", 4.0), int(params.get("dim", 1)),
            params.get("radius_multiplier", 12.0),
        )
    elif name == "uniform":
        p = families.uniform_interval(int(params.get("m", 5)), int(params.get("lo", 0)))
    elif name == "binomial":
        p = families.binomial_pmf(int(params.get("n", 10)), params.get("prob", 0.5))
    elif name == "geometric":
        p = families.one_sided_geometric(params.get("q", 0.5))
    elif name == "two_sided_geometric":
        p = families.two_sided_geometric(params.get("q", 0.5))
    elif name == "point_mass":
        p = point_mass(tuple(params.get("at", [0])))
    else:
        raise LceError(f"unknown generator family {name!r}")
    save_pmf(p, args.out)
    _emit({"written": args.out, "dim": p.dim, "cells": p.box.ncells, "deficit": p.deficit})
    return 0


def _convolve(args) -> int:
    p = load_pmf(args.pmf[0])
    q = load_pmf(args.pmf[1])
    r = convolve(p, q, method=args.method)
    save_pmf(r, args.out)
    _emit({"written": args.out, "method": r.meta.get("method"), "deficit": r.deficit})
    return 0


def _entropy(args) -> int:
    p = load_pmf(args.pmf)
    _emit({"entropy_nats": moments.shannon_entropy(p), "deficit": p.deficit})
    return 0


def _moments(args) -> int:
    p = load_pmf(args.pmf)
    s = moments.discrete_moments(p)
    doc = {
        "mass": s.mass,
        "mean": s.mean,
        "cov": s.cov.entries,
        "max_value": s.max_value,
        "argmax": list(s.argmax),
        "sigma_hat": s.sigma_hat,
    }
    try:
        score = moments.isotropy_score(s)
        doc["isotropy"] = {"op_norm_deviation": score.op_norm_deviation, "normalized": score.normalized}
    except LceError:
        doc["isotropy"] = None
    _emit(doc)
    return 0


def _check(args) -> int:
    p = load_pmf(args.pmf)
    from .lattice import support_set

    if args.mode == "zconvex":
        rep = convexity.is_zd_convex(support_set(p), exact=args.exact)
        _emit({"is_convex": rep.is_convex, "witnesses": [list(w) for w in rep.witnesses]})
        return 0
    if args.mode == "extensible":
        rep = convexity.is_log_concave_extensible(p, tol=args.tol, mode="exact" if args.exact else "float")
        _emit(
            {
                "is_extensible": rep.is_extensible,
                "support_convex": rep.support_convex,
                "tolerance_used": rep.tolerance_used,
                "max_gap": rep.max_gap(),
                "envelope_gaps": {str(list(k)): v for k, v in sorted(rep.envelope_gaps.items())},
            }
        )
        return 0
    if args.mode == "selfsum":
        reports = convexity.check_self_sum_convexity(support_set(p), args.nmax)
        _emit(
            {
                "n_max": args.nmax,
                "all_convex": all(r.is_convex for r in reports),
                "reports": [
                    {"n": n, "is_convex": r.is_convex, "witnesses": [list(w) for w in r.witnesses]}
                    for n, r in enumerate(reports, start=2)
                ],
            }
        )
        return 0
    raise LceError(f"unknown check mode {args.mode!r}")


def _smooth_entropy(args) -> int:
    p = load_pmf(args.pmf)
    det = smoothing.smoothed_entropy_detail(p, args.n, tol=args.tol)
    _emit(
        {
            "differential_entropy_nats": det.value,
            "n": args.n,
            "cells": det.cells,
            "refined_cells": det.refined_cells,
            "error_estimate": det.error_estimate,
            "tiny_cell_bound": det.tiny_cell_bound,
        }
    )
    return 0


def _geom(args) -> int:
    K = geometry.body_from_spec(args.body)
    if args.check == "kls":
        u = np.ones(K.dim)
        rep = geometry.kls_second_moment_check(K, u)
        _emit({"lhs": rep.lhs, "mid": rep.mid, "rhs": rep.rhs, "mid_stderr": rep.mid_stderr,
               "chain_holds": rep.chain_holds(tol=1e-9)})
        return 0
    if args.check == "radius":
        rep = geometry.radius_bounds_check(geometry.scale_to_unit_volume(K))
        _emit(
            {
                "inradius": rep.inradius,
                "circumradius": rep.circumradius,
                "lambda_min": rep.lambda_min,
                "lambda_max": rep.lambda_max,
                "holds": rep.holds(),
            }
        )
        return 0
    if args.check in ("ballbody", "inclusions"):
        f = density_from_spec(args.density)
        dirs = unit_directions(f.dim, args.dirs)
        if args.check == "ballbody":
            prof = geometry.ball_body_radial(f, args.p, dirs)
            _emit({"p": args.p, "radii": prof.radii})
            return 0
        chk = geometry.check_inclusions(f, args.p, args.q, dirs)
        _emit(
            {
                "p": args.p,
                "q": args.q,
                "lower": chk.lower,
                "upper": chk.upper,
                "min_ratio": chk.min_ratio,
                "max_ratio": chk.max_ratio,
                "passed": chk.passed,
            }
        )
        return 0
    raise LceError(f"unknown geom check {args.check!r}")


def _bridge(args) -> int:
    from .densities import make_density

    name, params = parse_param_spec(args.density)
    out = []
    for sigma in [float(s) for s in args.sweep.split(",")] if args.sweep else [None]:
        if sigma is not None:
            try:
                g = make_density(name, **{**params, "sigma": sigma})
            except TypeError as exc:
                raise LceError(f"family {name!r} does not take a sigma sweep: {exc}") from exc
        else:
            g = make_density(name, **params)
        rep = bridge_mod.lattice_vs_integral_gaps(g)
        out.append(
            {
                "sigma": rep.sigma,
                "mass_gap": rep.mass_gap,
                "mean_gap": rep.mean_gap,
                "second_moment_gap": rep.second_moment_gap,
                "cross_moment": {str(list(k)): v for k, v in rep.cross_moment.items()},
                "det_gap": rep.det_gap,
            }
        )
    _emit({"density": args.density, "gaps": out})
    return 0


def _verify(args) -> int:
    cfg = harness.load_config(args.config)
    doc = harness.run_config(cfg)
    if args.out or cfg.output:
        base = args.out or cfg.output
        harness.emit_report(doc, base, base.rsplit(".", 1)[0] + ".csv")
    _emit(doc.to_doc())
    return doc.exit_code()


def _sweep(args) -> int:
    cfg = harness.default_config(output=args.out)
    if args.checks:
        cfg.checks = args.checks.split(",")
    doc = harness.run_config(cfg)
    if args.out:
        harness.emit_report(doc, args.out, args.out.rsplit(".", 1)[0] + ".csv")
    else:
        _emit(doc.to_doc())
    print(f"pass={doc.summary['pass']} fail={doc.summary['fail']} flagged={doc.summary['flagged']}",
          file=sys.stderr)
    return doc.exit_code()


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lce", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a p.m.f. file from a named family")
    g.add_argument("--family", required=True, help="e.g. gaussian{sigma=4,dim=2}")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=_gen)

    c = sub.add_parser("convolve", help="convolve two p.m.f. files")
    c.add_argument("--pmf", action="append", required=True, help="input file (give twice)")
    c.add_argument("--out", required=True)
    c.add_argument("--method", default="auto", choices=["auto", "direct", "fft"])
    c.set_defaults(fn=_convolve)

    e = sub.add_parser("entropy", help="Shannon entropy of a p.m.f. file")
    e.add_argument("--pmf", required=True)
    e.set_defaults(fn=_entropy)

    m = sub.add_parser("moments", help="moment summary of a p.m.f. file")
    m.add_argument("--pmf", required=True)
    m.set_defaults(fn=_moments)

    k = sub.add_parser("check", help="convexity / extensibility decisions")
    k.add_argument("--pmf", required=True)
    k.add_argument("--mode", required=True, choices=["zconvex", "extensible", "selfsum"])
    k.add_argument("--tol", type=float, default=1e-9)
    k.add_argument("--exact", action="store_true")
    k.add_argument("--nmax", type=int, default=3)
    k.set_defaults(fn=_check)

    s = sub.add_parser("smooth-entropy", help="differential entropy of p.m.f. + n uniforms")
    s.add_argument("--pmf", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(fn=_smooth_entropy)

    ge = sub.add_parser("geom", help="convex-geometry checks")
    ge.add_argument("--body", default="cube{d=2}", help="e.g. cube{d=2}, ball{d=3,radius=1}")
    ge.add_argument("--check", required=True, choices=["kls", "radius", "ballbody", "inclusions"])
    ge.add_argument("--density", default="gaussian{sigma=1,dim=2}")
    ge.add_argument("--p", type=float, default=2.0)
    ge.add_argument("--q", type=float, default=3.0)
    ge.add_argument("--dirs", type=int, default=64)
    ge.set_defaults(fn=_geom)

    b = sub.add_parser("bridge", help="lattice-vs-integral gap reports")
    b.add_argument("--density", required=True, help="e.g. gaussian{sigma=4,dim=2}")
    b.add_argument("--sweep", default=None, help="comma-separated sigmas")
    b.set_defaults(fn=_bridge)

    v = sub.add_parser("verify", help="run a verification config file")
    v.add_argument("--config", required=True)
    v.add_argument("--out", default=None, help="report JSON path (CSV written alongside)")
    v.set_defaults(fn=_verify)

    w = sub.add_parser("sweep", help="run the default verification sweep")
    w.add_argument("--out", default=None)
    w.add_argument("--checks", default=None, help="comma-separated subset of check ids")
    w.set_defaults(fn=_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except LceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
