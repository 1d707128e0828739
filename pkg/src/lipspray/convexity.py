"""Certification of reversible strictly convex normal coordinate balls via the
z+- positivity criterion, chart normalization, and position-vector probes."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chart import ChartBox, quadratic_chart_map
from .errors import ConvergenceFailure, DegenerateMetric, DomainViolation, UnboundedEstimate
from .expmap import log_p
from .finsler import levi_civita_christoffels
from .numerics import ball_mask, cube_grid, parallel_map, unit_directions
from .report import ProbeReport
from .solver import compute_constants
from .spray import estimate_constants


@dataclass(frozen=True)
class NormalizedChart:
    """Chart change achieving g(p) = model (identity or eta) and Gamma(p) = 0."""

    base: np.ndarray
    map: object  # ChartMap
    model: np.ndarray
    epsilon: Optional[float] = None


@dataclass
class ConvexityCertificate:
    """Sampled certificate that the coordinate ball B(p, delta) is reversible
    strictly convex normal.

    `certified-sampled` status requires positive sampled minima of both
    z+ and z- on B(p, delta) x S^{n-1} and 1 - delta M > 0; the grid densities
    are recorded because positivity is sampled, never proven.
    """

    box: ChartBox
    constants: object  # ConvexityConstants or None when refused
    estimate: object  # LipschitzEstimate or None
    delta_ball: float
    z_min_plus: float
    z_min_minus: float
    grid_density: int
    directions: int
    status: str  # certified-sampled | failed
    diagnostic: Optional[str] = None

    @property
    def center(self):
        return self.box.center

    def to_dict(self):
        d = {
            "center": [float(c) for c in self.box.center],
            "radius": float(self.box.radius),
            "delta_ball": float(self.delta_ball),
            "z_min_plus": float(self.z_min_plus),
            "z_min_minus": float(self.z_min_minus),
            "grid_density": int(self.grid_density),
            "directions": int(self.directions),
            "status": self.status,
            "diagnostic": self.diagnostic,
        }
        if self.constants is not None:
            c = self.constants
            d["constants"] = {
                "r": c.r, "M": c.M, "alpha": c.alpha, "beta": c.beta,
                "delta": c.delta, "V": c.V, "A": c.A, "B": c.B, "D": c.D,
                "safety": c.safety,
            }
        if self.estimate is not None:
            d["estimate"] = {
                "alpha": self.estimate.alpha,
                "beta": self.estimate.beta,
                "M": self.estimate.M,
                "grid_density": self.estimate.grid_density,
                "certified": bool(self.estimate.certified),
            }
        return d


def z_functional(spray, x, e, sign=1, center=None):
    """z(x, e) = 1 + (x - center) . H(x, sign*e) for unit chart vectors e."""
    x = np.asarray(x, dtype=float)
    e = np.asarray(e, dtype=float)
    off = x if center is None else x - np.asarray(center, dtype=float)
    H = spray(x, sign * e)
    return 1.0 + np.einsum("...i,...i->...", off, H)


def _christoffels_at(p, tensor=None, christoffel=None):
    if christoffel is not None:
        return christoffel(p)
    return levi_civita_christoffels(tensor)(p)


def normalize_chart_at(p, tensor=None, christoffel=None):
    """Chart change with g(p) = identity (or eta) and Gamma(p) = 0.

    The linear part diagonalizes g(p) by congruence (omitted when only
    Christoffel data is given); the quadratic part x~ = z + Gamma_z(p)(z, z)/2
    kills the transformed symbols at p.
    """
    if tensor is None and christoffel is None:
        raise ValueError("need a metric tensor or a Christoffel field")
    p = np.asarray(p, dtype=float)
    n = p.size
    if tensor is not None:
        probe_v = np.eye(n)[0]
        g = tensor(p, probe_v)
        lam, Q = np.linalg.eigh(g)
        if np.min(np.abs(lam)) < 1e-12:
            raise DegenerateMetric("metric is singular at the base point")
        order = np.argsort(lam)  # negative eigenvalues first -> eta convention
        lam, Q = lam[order], Q[:, order]
        W = np.diag(np.sqrt(np.abs(lam))) @ Q.T
        model = np.diag(np.sign(lam))
    else:
        W = np.eye(n)
        model = np.eye(n)
    gam_p = _christoffels_at(p, tensor, christoffel)
    Winv = np.linalg.inv(W)
    gam_z = np.einsum("mn,nab,ag,bd->mgd", W, gam_p, Winv, Winv)
    cmap = quadratic_chart_map(gam_z, linear=W, offset=p)
    return NormalizedChart(base=p, map=cmap, model=model)


def certify_ball(
    spray,
    p,
    r,
    grid_density=16,
    safety=0.9,
    directions=32,
    z_density=8,
    estimate=None,
):
    """Estimate constants, derive delta, and sample z+- positivity.

    Sprays whose constants keep growing under refinement (Hölder case) are
    refused with the unbounded-estimate diagnostic instead of certified.
    """
    p = np.asarray(p, dtype=float)
    box = ChartBox(p.size, p, float(r))
    try:
        est = estimate or estimate_constants(spray, box, grid_density=grid_density)
    except UnboundedEstimate as exc:
        return ConvexityCertificate(
            box=box, constants=None, estimate=None, delta_ball=0.0,
            z_min_plus=np.nan, z_min_minus=np.nan, grid_density=grid_density,
            directions=directions, status="failed",
            diagnostic=f"unbounded-estimate: {exc}",
        )
    constants = compute_constants(est.alpha, est.beta, est.M, box.radius,
                                  safety=safety, center=p)
    delta = constants.delta
    level = max(1, int(np.ceil(np.log2(max(z_density - 1, 1)))))
    pts = cube_grid(p, delta, level)
    pts = pts[ball_mask(pts, p, delta)]
    dirs = unit_directions(p.size, directions)
    zplus = np.inf
    zminus = np.inf
    for e in dirs:
        ee = np.broadcast_to(e, pts.shape)
        zplus = min(zplus, float(np.min(z_functional(spray, pts, ee, +1, center=p))))
        zminus = min(zminus, float(np.min(z_functional(spray, pts, ee, -1, center=p))))
    ok = zplus > 0.0 and zminus > 0.0 and 1.0 - delta * constants.M > 0.0
    return ConvexityCertificate(
        box=box,
        constants=constants,
        estimate=est,
        delta_ball=delta,
        z_min_plus=zplus,
        z_min_minus=zminus,
        grid_density=grid_density,
        directions=len(dirs),
        status="certified-sampled" if ok else "failed",
        diagnostic=None if ok else "z-positivity violated on samples",
    )


def _sample_ball(rng, center, radius, m):
    n = center.size
    u = rng.normal(size=(m, n))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return center + u * (radius * rng.uniform(size=(m, 1)) ** (1.0 / n))


def containment_probe(cert, spray, n_pairs=200, seed=0, tol=1e-8, pairs=None):
    """Solve connecting geodesics between ball pairs and check they stay inside.

    Along every solved geodesic the chart radius must peak at an endpoint and
    the second difference of |x - p|^2 must stay above -tol (strict convexity
    of the radius function). Shooting failures are recorded per pair.
    """
    if cert.status != "certified-sampled":
        raise DomainViolation(f"certificate status is {cert.status!r}")
    p = cert.center
    constants = cert.constants
    rng = np.random.default_rng(seed)
    if pairs is None:
        pairs = list(
            zip(_sample_ball(rng, p, cert.delta_ball, n_pairs),
                _sample_ball(rng, p, cert.delta_ball, n_pairs))
        )

    def check_pair(pair):
        q1, q2 = pair
        try:
            lr = log_p(spray, constants, q1, q2, tol=max(tol / 10, 1e-12),
                       radius=2.0 * constants.delta)
        except (ConvergenceFailure, DomainViolation):
            return None
        bound = max(np.linalg.norm(q1 - p), np.linalg.norm(q2 - p)) + tol
        margin = -np.inf
        convex_ok = True
        for seg in lr.exp_result.segments:
            radii = np.linalg.norm(seg.xs - p, axis=-1)
            margin = max(margin, float(np.max(radii) - bound))
            r2 = radii**2
            second = r2[2:] - 2.0 * r2[1:-1] + r2[:-2]
            if second.size and float(np.min(second)) < -tol:
                convex_ok = False
        return margin, convex_ok

    worst = -np.inf
    violations = 0
    shooting_failures = 0
    for result in parallel_map(check_pair, pairs):
        if result is None:
            shooting_failures += 1
            continue
        margin, convex_ok = result
        worst = max(worst, margin)
        if margin > 0 or not convex_ok:
            violations += 1
    return ProbeReport(
        name="containment",
        passed=violations == 0 and shooting_failures == 0,
        worst=float(worst),
        threshold=tol,
        count=len(pairs),
        failures=violations + shooting_failures,
        details={"violations": violations, "shooting_failures": shooting_failures},
    )


def position_inequality_probe(
    cert,
    spray,
    epsilon,
    n_samples=20,
    seed=0,
    chart_normalized=True,
    tol=1e-10,
    max_halvings=4,
):
    """Check the affine-structure position-vector inequalities on sample sets.

    Verifies the 4-point inequality, the common-base difference bound, the
    chord bound |P(q1,q2) - (q2-q1)| <= eps |q2-q1|, the smallness bound
    |P| <= eps, and (for connections on a chart normalized at p) the
    quadratic reversal bound |P(q1,q2) + P(q2,q1)| <= eps |q2-q1|^2. The ball
    is halved until every inequality passes; the largest passing radius is
    reported.
    """
    if cert.status != "certified-sampled":
        raise DomainViolation(f"certificate status is {cert.status!r}")
    p = cert.center
    constants = cert.constants
    include_reversal = chart_normalized and spray.kind == "connection"

    def pos(a, b):
        lr = log_p(spray, constants, a, b, tol=tol, radius=2.0 * constants.delta)
        return lr.exp_result.terminal_velocity

    radius = cert.delta_ball
    last = None
    for _ in range(max_halvings + 1):
        rng = np.random.default_rng(seed)
        qs = _sample_ball(rng, p, radius, 4 * n_samples).reshape(n_samples, 4, -1)
        worst = {"four_point": 0.0, "base_diff": 0.0, "chord": 0.0,
                 "smallness": 0.0, "reversal": 0.0}
        failures = 0
        for q1, q2, q1p, q2p in qs:
            try:
                p12 = pos(q1, q2)
                p12p = pos(q1p, q2p)
                pq1 = pos(q1p, q1)
                pq2 = pos(q1p, q2)
            except (ConvergenceFailure, DomainViolation):
                failures += 1
                continue
            den4 = max(np.linalg.norm(q1p - q1), np.linalg.norm(q2p - q2))
            if den4 > 1e-9:
                lhs = np.linalg.norm((p12p - (q2p - q1p)) - (p12 - (q2 - q1)))
                worst["four_point"] = max(worst["four_point"], lhs / den4)
            d12 = np.linalg.norm(q2 - q1)
            if d12 > 1e-9:
                lhs = np.linalg.norm(pq2 - pq1 - (q2 - q1))
                worst["base_diff"] = max(worst["base_diff"], lhs / d12)
                lhs = np.linalg.norm(p12 - (q2 - q1))
                worst["chord"] = max(worst["chord"], lhs / d12)
            worst["smallness"] = max(worst["smallness"], float(np.linalg.norm(p12)))
            if include_reversal and d12 > 1e-9:
                p21 = pos(q2, q1)
                worst["reversal"] = max(
                    worst["reversal"], float(np.linalg.norm(p12 + p21)) / d12**2
                )
        overall = max(worst.values())
        passed = overall <= epsilon and failures == 0
        last = ProbeReport(
            name="position-inequalities",
            passed=passed,
            worst=overall,
            threshold=epsilon,
            count=n_samples,
            failures=failures,
            details={"radius": radius, "ratios": dict(worst),
                     "reversal_included": include_reversal},
        )
        if passed:
            return last
        radius *= 0.5
    return last
