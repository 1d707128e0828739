"""Command-line driver: certify, geodesic, logmap, probe, report."""

import argparse
import sys

import numpy as np

from . import __version__
from .convexity import certify_ball, containment_probe, position_inequality_probe
from .distance import (
    DistanceGeometry,
    PerturbationFamily,
    distance_ball_convexity_probe,
    gauss_probe,
    lorentzian_two_point_probe,
    maximization_probe,
    minimization_probe,
    radial_flow_probe,
    spacelike_level_probe,
    strong_convexity_probe_riemannian,
)
from .errors import DomainViolation, InvalidParams, LipsprayError, UnknownGeometry
from .expmap import log_p, strong_differential_probe
from .gallery import build_gallery, load_geometry
from .report import (
    ProbeReport,
    RunReport,
    Stopwatch,
    digest_geometry,
    read_report,
    write_report,
    write_trajectory_csv,
)
from .solver import dependence_probe, picard_geodesic, reference_geodesic
from .spray import check_homogeneity

SUITES = (
    "gauss",
    "convexity",
    "lorentz-two-point",
    "spacelike-level",
    "minmax",
    "position",
    "strongdiff",
    "dependence",
    "homogeneity",
)


def _entry(name):
    if name.endswith(".json"):
        return load_geometry(name)
    return build_gallery(name)


def _vec(text):
    return np.array([float(x) for x in text.split(",")], dtype=float)


def _certificate(entry, density=None, safety=0.9):
    return certify_ball(
        entry.spray,
        entry.box.center,
        entry.box.radius,
        grid_density=density or entry.grid_density,
        safety=safety,
    )


def _geometry_bundle(entry, cert):
    return DistanceGeometry(
        entry.spray, entry.tensor, cert.constants,
        orientation=entry.time_orientation,
    )


def _sample_pairs(rng, center, delta, n, spread=0.8):
    dim = center.size
    pts = rng.normal(size=(2 * n, dim))
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    pts = center + pts * (spread * delta * rng.uniform(size=(2 * n, 1)) ** (1 / dim))
    vels = rng.normal(size=(2 * n, dim))
    vels /= np.linalg.norm(vels, axis=-1, keepdims=True)
    vels *= spread * delta * rng.uniform(size=(2 * n, 1)) ** (1 / dim)
    states = list(zip(pts, vels))
    return list(zip(states[:n], states[n:]))


def _run_suite(suite, entry, seed):
    reports = []
    certificates = []
    if suite == "homogeneity":
        rng = np.random.default_rng(seed)
        c, r = entry.box.center, entry.box.radius
        samples = []
        for _ in range(32):
            u = rng.normal(size=c.size)
            samples.append(
                (c + 0.8 * r * rng.uniform() * u / np.linalg.norm(u),
                 rng.normal(size=c.size))
            )
        reports.append(check_homogeneity(entry.spray, samples))
        return reports, certificates

    cert = _certificate(entry)
    certificates.append(cert.to_dict())
    if cert.status != "certified-sampled":
        reports.append(
            ProbeReport(name=f"{suite}-certificate", passed=False, worst=np.inf,
                        threshold=0.0, count=0, failures=1,
                        details={"diagnostic": cert.diagnostic})
        )
        return reports, certificates
    geom = _geometry_bundle(entry, cert)
    center, delta = cert.center, cert.delta_ball

    if suite == "dependence":
        rng = np.random.default_rng(seed)
        pairs = _sample_pairs(rng, center, delta, 20)
        reports.append(dependence_probe(entry.spray, cert.constants, pairs))
    elif suite == "strongdiff":
        radii = [0.8 * delta, 0.4 * delta, 0.2 * delta, 0.1 * delta]
        reports.append(
            strong_differential_probe(entry.spray, cert.constants, center, radii,
                                      n_pairs=40, seed=seed)
        )
    elif suite == "gauss":
        reports.append(
            gauss_probe(geom, center, 0.5 * delta, n_samples=50, seed=seed)
        )
        level = (0.45 * delta) ** 2
        if entry.signature == "lorentzian":
            level = -level
        reports.append(
            radial_flow_probe(geom, center, level=level, t=0.5, seed=seed)
        )
    elif suite == "convexity":
        reports.append(containment_probe(cert, entry.spray, n_pairs=200, seed=seed))
        reports.append(
            containment_probe(cert, entry.spray.reverse(), n_pairs=50, seed=seed + 1)
        )
        # the two-point strong convexity statement is for velocity-independent
        # (Riemannian) metrics only
        if entry.signature == "riemannian" and entry.tensor is not None and not entry.tensor.velocity_dependent:
            reports.append(
                strong_convexity_probe_riemannian(
                    geom, center, 0.5 * delta, epsilon=0.2, n_samples=30, seed=seed
                )
            )
            reports.append(
                distance_ball_convexity_probe(geom, center, 0.4 * delta,
                                              n_pairs=50, seed=seed)
            )
    elif suite == "position":
        reports.append(
            position_inequality_probe(cert, entry.spray, epsilon=0.1,
                                      n_samples=15, seed=seed)
        )
    elif suite == "lorentz-two-point":
        if entry.signature != "lorentzian":
            raise DomainViolation(f"{entry.name} is not Lorentzian")
        eps = 1e-12 if entry.name == "minkowski" else 0.3
        reports.append(
            lorentzian_two_point_probe(geom, center, 0.5 * delta, epsilon=eps,
                                       n_samples=25, seed=seed)
        )
    elif suite == "spacelike-level":
        if entry.signature != "lorentzian":
            raise DomainViolation(f"{entry.name} is not Lorentzian")
        e0 = np.zeros(center.size)
        e0[0] = 1.0
        q = center - 0.45 * delta * e0
        o_center = center + 0.35 * delta * e0
        reports.append(
            spacelike_level_probe(geom, q, o_center, 0.15 * delta, epsilon=0.3,
                                  n_samples=12, seed=seed)
        )
    elif suite == "minmax":
        u = np.ones(center.size)
        if entry.signature == "lorentzian":
            u[1:] *= 0.2  # mostly timelike displacement
        u /= np.linalg.norm(u)
        p = center - 0.35 * delta * u
        q = center + 0.35 * delta * u
        for mode in ("smooth-bump", "piecewise-geodesic"):
            fam = PerturbationFamily(mode, (0.05 * delta, 0.1 * delta),
                                     causal=entry.signature == "lorentzian")
            if entry.signature == "lorentzian":
                reports.append(
                    maximization_probe(geom, p, q, fam, n_directions=25, seed=seed)
                )
            else:
                reports.append(
                    minimization_probe(geom, p, q, fam, n_directions=25, seed=seed)
                )
    else:
        raise DomainViolation(f"unknown suite {suite!r}")
    return reports, certificates


def cmd_certify(args):
    entry = _entry(args.geometry)
    center = _vec(args.center) if args.center else entry.box.center
    radius = args.radius if args.radius is not None else entry.box.radius
    with Stopwatch() as sw:
        cert = certify_ball(
            entry.spray, center, radius,
            grid_density=args.density or entry.grid_density,
            safety=args.safety,
        )
    report = RunReport(
        tool_version=__version__,
        input_digest=digest_geometry(entry.spec()),
        seed=args.seed,
        certificates=[cert.to_dict()],
        timing_s=sw.elapsed,
    )
    if args.out:
        write_report(report, args.out)
    status = cert.status
    print(f"certify {entry.name}: {status}"
          + (f" (delta = {cert.delta_ball:.6g})" if cert.constants else
             f" [{cert.diagnostic}]"))
    return 0 if status == "certified-sampled" else 1


def cmd_geodesic(args):
    entry = _entry(args.geometry)
    x0 = _vec(args.x0)
    v0 = _vec(args.v0)
    if args.method == "picard":
        cert = _certificate(entry)
        if cert.status != "certified-sampled":
            print(f"cannot solve: {cert.diagnostic}", file=sys.stderr)
            return 1
        sol = picard_geodesic(entry.spray, x0, v0, cert.constants, tol=args.tol)
    else:
        sol = reference_geodesic(entry.spray, x0, v0, T=args.T, steps=args.steps)
    if args.csv:
        write_trajectory_csv(args.csv, sol.ts, sol.xs, sol.vs)
    end = ", ".join(f"{c:.12g}" for c in sol.endpoint)
    print(f"geodesic {entry.name} [{args.method}]: endpoint ({end}), "
          f"iterations {sol.picard_iterations}, tail {sol.tail_bound:.3g}, "
          f"quadrature {sol.quadrature_error_estimate:.3g}")
    return 0


def cmd_logmap(args):
    entry = _entry(args.geometry)
    cert = _certificate(entry)
    if cert.status != "certified-sampled":
        print(f"cannot invert: {cert.diagnostic}", file=sys.stderr)
        return 1
    res = log_p(entry.spray, cert.constants, _vec(args.p), _vec(args.q),
                tol=args.tol, radius=2.0 * cert.constants.delta)
    v = ", ".join(f"{c:.12g}" for c in res.velocity)
    print(f"logmap {entry.name}: v = ({v}), defect = {res.defect:.3g}, "
          f"iterations = {res.iterations}")
    return 0


def cmd_probe(args):
    entry = _entry(args.geometry)
    with Stopwatch() as sw:
        reports, certificates = _run_suite(args.suite, entry, args.seed)
    run = RunReport(
        tool_version=__version__,
        input_digest=digest_geometry(entry.spec()),
        seed=args.seed,
        probes=reports,
        certificates=certificates,
        timing_s=sw.elapsed,
    )
    if args.out:
        write_report(run, args.out)
    ok = True
    for rep in reports:
        flag = "PASS" if rep.passed else "FAIL"
        ok &= rep.passed
        print(f"[{flag}] {rep.name}: worst {rep.worst:.3g} vs {rep.threshold:.3g} "
              f"({rep.count} samples, {rep.failures} failures)")
    for cert in certificates:
        if cert.get("status") != "certified-sampled":
            ok = False
            print(f"[FAIL] certificate: {cert.get('diagnostic')}")
    return 0 if ok else 1


def cmd_report(args):
    all_ok = True
    for path in args.inputs:
        data = read_report(path)
        probes = data.get("probes", [])
        certs = data.get("certificates", [])
        n_pass = sum(1 for p in probes if p["passed"])
        cert_ok = all(c.get("status") == "certified-sampled" for c in certs)
        ok = n_pass == len(probes) and cert_ok
        all_ok &= ok
        print(f"{path}: {'PASS' if ok else 'FAIL'} "
              f"({n_pass}/{len(probes)} probes, {len(certs)} certificates)")
        if args.summary:
            for p in probes:
                print(f"    [{'PASS' if p['passed'] else 'FAIL'}] {p['name']}: "
                      f"worst {p['worst']:.3g} vs {p['threshold']:.3g}")
    return 0 if all_ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lipspray",
        description="Geodesics, exponential maps and convex-ball certificates "
                    "for Lipschitz sprays and C1,1 pseudo-Finsler metrics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="run the convexity certificate pipeline")
    c.add_argument("--geometry", required=True)
    c.add_argument("--center", default=None, help="comma-separated chart point")
    c.add_argument("--radius", type=float, default=None)
    c.add_argument("--density", type=int, default=None)
    c.add_argument("--safety", type=float, default=0.9)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out", default=None)
    c.set_defaults(fn=cmd_certify)

    g = sub.add_parser("geodesic", help="solve one geodesic and dump a CSV")
    g.add_argument("--geometry", required=True)
    g.add_argument("--x0", required=True)
    g.add_argument("--v0", required=True)
    g.add_argument("--method", choices=("picard", "reference"), default="picard")
    g.add_argument("--T", type=float, default=1.0)
    g.add_argument("--steps", type=int, default=1000)
    g.add_argument("--tol", type=float, default=1e-9)
    g.add_argument("--csv", default=None)
    g.set_defaults(fn=cmd_geodesic)

    l = sub.add_parser("logmap", help="invert the exponential map")
    l.add_argument("--geometry", required=True)
    l.add_argument("--p", required=True)
    l.add_argument("--q", required=True)
    l.add_argument("--tol", type=float, default=1e-9)
    l.set_defaults(fn=cmd_logmap)

    p = sub.add_parser("probe", help="run an inequality probe suite")
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--geometry", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_probe)

    r = sub.add_parser("report", help="summarize stored JSON reports")
    r.add_argument("--in", dest="inputs", nargs="+", required=True)
    r.add_argument("--summary", action="store_true")
    r.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    try:
        return args.fn(args)
    except (UnknownGeometry, InvalidParams, DomainViolation, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LipsprayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
