"""Squared-distance fields, the Gauss-lemma gradient, convexity/concavity
probes for Riemannian and Lorentzian signatures, and min/max length probes."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, DomainViolation, NoncausalTangent
from .expmap import exp_p, log_p
from .finsler import classify_vector, curve_length, lagrangian
from .report import ProbeReport


@dataclass
class ConnectingGeodesic:
    """The unique geodesic from q1 to q2 in affine parametrization on [0, 1]."""

    ts: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    initial_velocity: np.ndarray
    terminal_velocity: np.ndarray
    squared_length: float  # g_v(v, v) along the geodesic; signed in Lorentzian signature

    def node_at(self, t):
        """Nearest grid node to affine time t: returns (t_node, x_node).

        Grids of chained solves are only piecewise uniform, so convexity
        inequalities must be evaluated at the node's own parameter.
        """
        i = int(np.argmin(np.abs(self.ts - t)))
        return float(self.ts[i]), self.xs[i]


@dataclass
class DistanceField:
    """D^2_p(q) = 2 L(p, exp_p^{-1}(q)) and its Gauss-lemma gradient."""

    spray: object
    tensor: object
    constants: object
    base: np.ndarray
    tol: float = 1e-10
    log_radius: Optional[float] = None

    def _log(self, q):
        radius = self.log_radius
        if radius is None:
            radius = 2.0 * self.constants.delta
        return log_p(self.spray, self.constants, self.base, q, tol=self.tol,
                     radius=radius)

    def squared(self, q):
        lr = self._log(np.asarray(q, dtype=float))
        return 2.0 * lagrangian(self.tensor, self.base, lr.velocity)

    def position(self, q):
        return self._log(np.asarray(q, dtype=float)).exp_result.terminal_velocity

    def gradient(self, q):
        """The covector w -> 2 g_(q, P)(P, w) as a chart array."""
        q = np.asarray(q, dtype=float)
        P = self.position(q)
        g = self.tensor(q, P)
        return 2.0 * g @ P


@dataclass
class DistanceGeometry:
    """Bundle of spray, tensor and certified constants driving the probes."""

    spray: object
    tensor: object
    constants: object
    orientation: object = None
    tol: float = 1e-10

    def field(self, base, log_radius=None):
        return DistanceField(self.spray, self.tensor, self.constants,
                             np.asarray(base, dtype=float), tol=self.tol,
                             log_radius=log_radius)

    def connect(self, q1, q2):
        lr = log_p(self.spray, self.constants, np.asarray(q1, float),
                   np.asarray(q2, float), tol=self.tol,
                   radius=2.0 * self.constants.delta)
        ts, xs, vs = lr.exp_result.path()
        return ConnectingGeodesic(
            ts=ts, xs=xs, vs=vs,
            initial_velocity=lr.velocity,
            terminal_velocity=lr.exp_result.terminal_velocity,
            squared_length=2.0 * lagrangian(self.tensor, q1, lr.velocity),
        )

    def exp(self, p, v):
        return exp_p(self.spray, self.constants, p, v, tol=self.tol)


class OracleDistanceGeometry:
    """Closed-form stand-in for DistanceGeometry (used to probe regimes the
    certified solver does not reach, e.g. curvature-scale balls)."""

    def __init__(self, oracle, tensor, nodes=64):
        self.oracle = oracle
        self.tensor = tensor
        self.nodes = nodes

    def field(self, base, log_radius=None):
        return _OracleField(self.oracle, self.tensor, np.asarray(base, float))

    def connect(self, q1, q2):
        ts, xs, vs = self.oracle.connect(q1, q2, nodes=self.nodes)
        v0 = self.oracle.log(q1, q2)
        return ConnectingGeodesic(
            ts=ts, xs=xs, vs=vs,
            initial_velocity=v0,
            terminal_velocity=self.oracle.position(q1, q2),
            squared_length=2.0 * lagrangian(self.tensor, q1, v0),
        )


@dataclass
class _OracleField:
    oracle: object
    tensor: object
    base: np.ndarray

    def squared(self, q):
        return self.oracle.squared_distance(self.base, q)

    def position(self, q):
        return self.oracle.position(self.base, q)

    def gradient(self, q):
        q = np.asarray(q, dtype=float)
        P = self.position(q)
        return 2.0 * (self.tensor(q, P) @ P)


def squared_distance(field, q):
    return field.squared(q)


def gauss_gradient(field, q):
    return field.gradient(q)


def gauss_check(field, q, directions, h=1e-4):
    """Worst |central difference of D^2 - gradient . w| over the directions."""
    q = np.asarray(q, dtype=float)
    grad = field.gradient(q)
    worst = 0.0
    for w in directions:
        w = np.asarray(w, dtype=float)
        num = (field.squared(q + h * w) - field.squared(q - h * w)) / (2.0 * h)
        worst = max(worst, abs(num - float(grad @ w)))
    return worst


def gauss_probe(geom, center, radius, n_samples=50, h=1e-4, tol=1e-5,
                n_directions=2, seed=0):
    """Sweep gauss_check over random targets and directions in the ball.

    The recorded constant C = worst/h makes the residual <= C h contract
    checkable across step sizes.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    n = center.size
    fld = geom.field(center)
    worst = 0.0
    count = 0
    for _ in range(n_samples):
        u = rng.normal(size=n)
        u *= rng.uniform(0.2, 1.0) * radius / np.linalg.norm(u)
        q = center + u
        dirs = rng.normal(size=(n_directions, n))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        worst = max(worst, gauss_check(fld, q, dirs, h=h))
        count += 1
    return ProbeReport(
        name="gauss-lemma",
        passed=worst <= tol,
        worst=worst,
        threshold=tol,
        count=count,
        details={"h": h, "radius": radius, "C": worst / h},
    )


def radial_flow_probe(geom, center, level, t, n_points=6, steps=12, tol=1e-5,
                      seed=0):
    """Integrate the position-vector field backwards and check the level decay.

    Points on (D^2)^{-1}(level) flow under -P(p, .) for time t onto the level
    level * e^{-2t}.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    n = center.size
    fld = geom.field(center)
    worst = 0.0
    target = level * math.exp(-2.0 * t)
    for _ in range(n_points):
        L0 = 0.0
        u = None
        for _ in range(128):
            u = rng.normal(size=n)
            if level < 0 and geom.orientation is not None:
                # stay well inside the cone so the shot lands near the center
                u = geom.orientation(center) + 0.35 * u / np.linalg.norm(u)
            u /= np.linalg.norm(u)
            L0 = lagrangian(geom.tensor, center, u)
            if L0 * level > 0:  # direction must match the level's causal sign
                break
        else:
            raise ConvergenceFailure("no direction matches the level sign")
        v = u * math.sqrt(level / (2.0 * L0))
        q = geom.exp(center, v).endpoint
        h = t / steps
        guess = v  # warm start; the flow moves the log velocity slowly
        flow_tol = max(geom.tol, tol / 1e3)  # P enters the level only via O(t) transport

        def pos(point, guess=None):
            lr = log_p(geom.spray, geom.constants, center, point, tol=flow_tol,
                       radius=2.0 * geom.constants.delta, initial=guess)
            return lr.velocity, lr.exp_result.terminal_velocity

        for _ in range(steps if t > 0 else 0):
            guess, P1 = pos(q, guess)
            k1 = -P1
            _, P2 = pos(q + 0.5 * h * k1, guess)
            k2 = -P2
            _, P3 = pos(q + 0.5 * h * k2, guess)
            k3 = -P3
            _, P4 = pos(q + h * k3, guess)
            k4 = -P4
            q = q + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        worst = max(worst, abs(fld.squared(q) - target))
    return ProbeReport(
        name="radial-flow",
        passed=worst <= tol,
        worst=worst,
        threshold=tol,
        count=n_points,
        details={"level": level, "t": t, "target": target},
    )


def _unit_speed_grad(field, point, velocity, speed):
    return float(field.gradient(point) @ (velocity / speed))


def strong_convexity_probe_riemannian(
    geom, center, radius, epsilon, n_samples=30, seed=0, midpoint_only=False
):
    """Two-point strong convexity of D^2_q on a normalized chart ball.

    Verifies the affine form |[dD^2_q(q2) - dD^2_q(q1)].(q2-q1) - 2|q2-q1|^2|
    <= eps |q2-q1|^2, the arc-length geodesic form with 2 D(x(a), x(b)), and
    the midpoint inequality with parameter lambda = 2 - eps.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    n = center.size

    def ball(m):
        u = rng.normal(size=(m, n))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        return center + u * (radius * rng.uniform(size=(m, 1)) ** (1.0 / n))

    worst_affine = 0.0
    worst_geodesic = 0.0
    worst_midpoint = -np.inf
    failures = 0
    for _ in range(n_samples):
        q, q1, q2 = ball(3)
        if np.linalg.norm(q2 - q1) < 1e-6:
            continue
        try:
            fld = geom.field(q)
            conn = geom.connect(q1, q2)
            d2_1 = fld.squared(q1)
            d2_2 = fld.squared(q2)
            dd = q2 - q1
            if not midpoint_only:
                lhs = float((fld.gradient(q2) - fld.gradient(q1)) @ dd) - 2.0 * float(dd @ dd)
                worst_affine = max(worst_affine, abs(lhs) / float(dd @ dd))
            dist = math.sqrt(max(conn.squared_length, 0.0))
            if dist > 1e-9 and not midpoint_only:
                ga = _unit_speed_grad(fld, q1, conn.initial_velocity, dist)
                gb = _unit_speed_grad(fld, q2, conn.terminal_velocity, dist)
                worst_geodesic = max(
                    worst_geodesic, abs(gb - ga - 2.0 * dist) / dist
                )
            tm, mid = conn.node_at(0.5)
            gap = fld.squared(mid) - (
                (1.0 - tm) * d2_1 + tm * d2_2
                - (1.0 - epsilon / 2.0) * tm * (1.0 - tm) * dist**2
            )
            worst_midpoint = max(worst_midpoint, gap)
        except (ConvergenceFailure, DomainViolation):
            failures += 1
    worst = max(worst_affine, worst_geodesic)
    passed = worst <= epsilon and worst_midpoint <= 1e-9 and failures == 0
    return ProbeReport(
        name="strong-convexity-riemannian",
        passed=passed,
        worst=worst,
        threshold=epsilon,
        count=n_samples,
        failures=failures,
        details={
            "radius": radius,
            "affine": worst_affine,
            "geodesic": worst_geodesic,
            "midpoint_margin": worst_midpoint,
            "lambda": 2.0 - epsilon,
        },
    )


def distance_ball_convexity_probe(geom, center, ball_radius, n_pairs=200, seed=0,
                                  tol=1e-8):
    """Geodesics between points of a small metric ball stay inside it."""
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    n = center.size
    fld = geom.field(center)
    violations = 0
    failures = 0
    worst = -np.inf
    for _ in range(n_pairs):
        pts = []
        for _ in range(2):
            u = rng.normal(size=n)
            u /= np.linalg.norm(u)
            L0 = lagrangian(geom.tensor, center, u)
            rr = ball_radius * rng.uniform() ** (1.0 / n)
            pts.append(geom.exp(center, u * rr / math.sqrt(2.0 * L0)).endpoint)
        try:
            conn = geom.connect(pts[0], pts[1])
            bound = max(math.sqrt(max(fld.squared(p), 0.0)) for p in pts)
            stride = max(1, (conn.ts.size - 1) // 8)
            inner = [
                math.sqrt(max(fld.squared(x), 0.0))
                for x in conn.xs[stride:-1:stride]
            ]
            margin = max(inner) - bound - tol if inner else -tol
            worst = max(worst, margin)
            if margin > 0:
                violations += 1
        except (ConvergenceFailure, DomainViolation):
            failures += 1
    return ProbeReport(
        name="distance-ball-convexity",
        passed=violations == 0 and failures == 0,
        worst=float(worst),
        threshold=tol,
        count=n_pairs,
        failures=violations + failures,
        details={"ball_radius": ball_radius},
    )


def lorentzian_two_point_probe(geom, center, radius, epsilon, n_samples=30,
                               seed=0):
    """Two-point concavity control of Lorentzian D^2 on a normalized
    chart, plus positive definiteness of the auxiliary metric g + 2 dt x dt.

    |d/dt D^2_q(x(t))|_1 - d/dt D^2_q(x(t))|_0 - 2 D^2(x(0), x(1))|
    <= eps |x(1) - x(0)|^2 over affine geodesics x and bases q in the ball,
    where the right-hand side uses the chart's Euclidean norm.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    n = center.size

    def ball(m):
        u = rng.normal(size=(m, n))
        u /= np.linalg.norm(u, axis=-1, keepdims=True)
        return center + u * (radius * rng.uniform(size=(m, 1)) ** (1.0 / n))

    worst = 0.0
    min_eig = np.inf
    failures = 0
    probe_v = np.eye(n)[0]
    for _ in range(n_samples):
        q, q1, q2 = ball(3)
        dd = q2 - q1
        if np.linalg.norm(dd) < 1e-6:
            continue
        try:
            fld = geom.field(q)
            conn = geom.connect(q1, q2)
            da = float(fld.gradient(q1) @ conn.initial_velocity)
            db = float(fld.gradient(q2) @ conn.terminal_velocity)
            lhs = abs(db - da - 2.0 * conn.squared_length)
            worst = max(worst, lhs / float(dd @ dd))
        except (ConvergenceFailure, DomainViolation):
            failures += 1
            continue
        g = geom.tensor(q, probe_v)
        aux = g + 2.0 * np.outer(np.eye(n)[0], np.eye(n)[0])
        min_eig = min(min_eig, float(np.linalg.eigvalsh(aux)[0]))
    passed = worst <= epsilon and min_eig > 0.0 and failures == 0
    return ProbeReport(
        name="lorentzian-two-point",
        passed=passed,
        worst=worst,
        threshold=epsilon,
        count=n_samples,
        failures=failures,
        details={"radius": radius, "aux_metric_min_eig": min_eig},
    )


def spacelike_level_probe(
    geom, q, o_center, o_radius, epsilon, n_samples=20, seed=0, level=None,
    level_tol=1e-9,
):
    """Strong convexity of D^2_q along spacelike geodesics between points of a
    common negative level set inside the sub-ball O.

    Asserts connecting geodesics are spacelike; checks the arc-length
    monotone-gradient inequality with parameter 2 - eps, the midpoint
    inequality, and strict sublevel containment of interior points.
    The chronology precondition (O inside the chronological future or past of
    q) is checked on samples and reported when it fails.
    """
    rng = np.random.default_rng(seed)
    q = np.asarray(q, dtype=float)
    o_center = np.asarray(o_center, dtype=float)
    n = q.size
    fld = geom.field(q)
    # chronology precondition on sampled points of O
    for _ in range(8):
        u = rng.normal(size=n)
        u *= o_radius * rng.uniform() / np.linalg.norm(u)
        v = log_p(geom.spray, geom.constants, q, o_center + u, tol=geom.tol,
                  radius=2.0 * geom.constants.delta).velocity
        c = classify_vector(geom.tensor, geom.orientation, q, v)
        if c.kind != "timelike":
            return ProbeReport(
                name="spacelike-level",
                passed=False,
                worst=np.inf,
                threshold=epsilon,
                count=0,
                failures=1,
                details={"precondition": f"O sample not chronological: {c.kind}"},
            )
    if level is None:
        level = fld.squared(o_center)
    if not level < 0:
        raise DomainViolation("level sets of the probe must be negative")

    def level_point():
        for _ in range(64):
            w = rng.normal(size=n)
            v0 = geom.orientation(q) + 0.35 * w / np.linalg.norm(w)
            L0 = lagrangian(geom.tensor, q, v0)
            if L0 >= 0:
                continue
            v = v0 * math.sqrt(level / (2.0 * L0))
            try:
                pt = geom.exp(q, v).endpoint
            except DomainViolation:
                continue
            if np.linalg.norm(pt - o_center) <= o_radius:
                return pt
        raise ConvergenceFailure("could not sample the level set inside O")

    worst_grad = 0.0
    worst_midpoint = -np.inf
    sublevel_margin = -np.inf
    rejected = 0
    failures = 0
    count = 0
    for _ in range(n_samples):
        try:
            a, b = level_point(), level_point()
        except ConvergenceFailure:
            failures += 1
            continue
        if np.linalg.norm(b - a) < 1e-6:
            continue
        ca, cb = fld.squared(a), fld.squared(b)
        if abs(ca - level) > level_tol or abs(cb - level) > level_tol:
            rejected += 1
            continue
        try:
            conn = geom.connect(a, b)
        except (ConvergenceFailure, DomainViolation):
            failures += 1
            continue
        mid_v = conn.vs[conn.vs.shape[0] // 2]
        tm, mid_x = conn.node_at(0.5)
        cls = classify_vector(geom.tensor, geom.orientation, mid_x, mid_v)
        if cls.kind != "spacelike":
            failures += 1
            continue
        count += 1
        dist = math.sqrt(conn.squared_length)
        ga = _unit_speed_grad(fld, a, conn.initial_velocity, dist)
        gb = _unit_speed_grad(fld, b, conn.terminal_velocity, dist)
        worst_grad = max(worst_grad, abs(gb - ga - 2.0 * dist) / dist)
        mid_val = fld.squared(mid_x)
        worst_midpoint = max(
            worst_midpoint,
            mid_val - ((1.0 - tm) * ca + tm * cb
                       - (1.0 - epsilon / 2.0) * tm * (1.0 - tm) * dist**2),
        )
        # strict sublevel containment of interior nodes
        for frac in (0.25, 0.5, 0.75):
            sublevel_margin = max(
                sublevel_margin, fld.squared(conn.node_at(frac)[1]) - level
            )
    passed = (
        count > 0
        and worst_grad <= epsilon
        and worst_midpoint <= 1e-9
        and sublevel_margin < 0.0
        and failures == 0
    )
    return ProbeReport(
        name="spacelike-level",
        passed=passed,
        worst=worst_grad,
        threshold=epsilon,
        count=count,
        failures=failures + rejected,
        details={
            "level": level,
            "midpoint_margin": worst_midpoint,
            "sublevel_margin": sublevel_margin,
            "rejected_pairs": rejected,
        },
    )


@dataclass(frozen=True)
class PerturbationFamily:
    """Endpoint-fixed perturbations of a base geodesic."""

    mode: str = "smooth-bump"  # smooth-bump | piecewise-geodesic
    amplitudes: tuple = (0.02, 0.05, 0.1)
    causal: bool = False

    def __post_init__(self):
        if self.mode not in ("smooth-bump", "piecewise-geodesic"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")


def _bump_curve(conn, amp, w):
    bump = np.sin(np.pi * conn.ts)[:, None] * w
    dbump = (np.pi * np.cos(np.pi * conn.ts))[:, None] * w
    return conn.xs + amp * bump, conn.vs + amp * dbump


def minimization_probe(geom, p, q, family, n_directions=10, seed=0, tol=1e-9):
    """Every perturbed curve is at least as long as the connecting geodesic.

    For non-reversible metrics the reversed base curve's forward length is
    also reported, witnessing the asymmetry of the length structure.
    """
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    conn = geom.connect(p, q)
    base_len = math.sqrt(max(conn.squared_length, 0.0))
    worst = -np.inf
    violations = 0
    count = 0
    strict_gaps = []
    for _ in range(n_directions):
        w = rng.normal(size=p.size)
        w /= np.linalg.norm(w)
        for amp in family.amplitudes:
            if family.mode == "smooth-bump":
                xs, vs = _bump_curve(conn, amp, w)
                length = curve_length(geom.tensor, (conn.ts, xs, vs), kind="finsler")
            else:
                mid = conn.node_at(0.5)[1] + amp * w
                l1 = geom.connect(p, mid).squared_length
                l2 = geom.connect(mid, q).squared_length
                length = math.sqrt(max(l1, 0.0)) + math.sqrt(max(l2, 0.0))
            gap = length - base_len
            worst = max(worst, -gap)
            count += 1
            if gap < -tol:
                violations += 1
            if amp == max(family.amplitudes):
                strict_gaps.append(gap)
    rev_len = curve_length(
        geom.tensor, (conn.ts, conn.xs[::-1], -conn.vs[::-1]), kind="finsler"
    )
    strict = min(strict_gaps) > 10 * tol if strict_gaps else False
    return ProbeReport(
        name="length-minimization",
        passed=violations == 0 and strict,
        worst=float(worst),
        threshold=tol,
        count=count,
        failures=violations,
        details={
            "geodesic_length": base_len,
            "reversed_length": rev_len,
            "strict_excess": min(strict_gaps) if strict_gaps else None,
        },
    )


def maximization_probe(geom, p, q, family, n_directions=10, seed=0, tol=1e-9):
    """Proper time of causal perturbed curves never exceeds the geodesic's.

    Perturbations whose tangents leave the future causal cone are rejected
    (counted, not asserted). Also verifies that exp_p^{-1} of points along
    each accepted perturbed curve stays future causal.
    """
    rng = np.random.default_rng(seed)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    conn = geom.connect(p, q)
    base_cls = classify_vector(geom.tensor, geom.orientation, p,
                               conn.initial_velocity)
    if base_cls.kind != "timelike" or base_cls.orientation != "future":
        raise DomainViolation("maximization probe requires q << p chronologically")
    proper = math.sqrt(max(-conn.squared_length, 0.0))
    worst = -np.inf
    violations = 0
    rejected = 0
    count = 0
    log_causal_ok = True
    for _ in range(n_directions):
        w = rng.normal(size=p.size)
        w[0] = 0.0  # spatial bump keeps endpoint tangents causal for small amps
        if np.linalg.norm(w) == 0.0:
            continue
        w /= np.linalg.norm(w)
        for amp in family.amplitudes:
            if family.mode == "smooth-bump":
                xs, vs = _bump_curve(conn, amp, w)
                try:
                    length = curve_length(geom.tensor, (conn.ts, xs, vs),
                                          kind="lorentzian")
                except NoncausalTangent:
                    rejected += 1
                    continue
                samples = xs[:: max(1, (xs.shape[0] - 1) // 4)][1:]
            else:
                mid = conn.node_at(0.5)[1] + amp * w
                try:
                    c1 = geom.connect(p, mid)
                    c2 = geom.connect(mid, q)
                except (ConvergenceFailure, DomainViolation):
                    rejected += 1
                    continue
                cls1 = classify_vector(geom.tensor, geom.orientation, p,
                                       c1.initial_velocity)
                cls2 = classify_vector(geom.tensor, geom.orientation, mid,
                                       c2.initial_velocity)
                if not all(
                    c.kind in ("timelike", "lightlike") and c.orientation == "future"
                    for c in (cls1, cls2)
                ):
                    rejected += 1
                    continue
                length = math.sqrt(max(-c1.squared_length, 0.0)) + math.sqrt(
                    max(-c2.squared_length, 0.0)
                )
                samples = [mid]
            gap = proper - length
            worst = max(worst, -gap)
            count += 1
            if gap < -tol:
                violations += 1
            for s in samples:
                v = log_p(geom.spray, geom.constants, p, np.asarray(s, float),
                          tol=geom.tol, radius=2.0 * geom.constants.delta).velocity
                c = classify_vector(geom.tensor, geom.orientation, p, v)
                if c.kind not in ("timelike", "lightlike") or c.orientation != "future":
                    log_causal_ok = False
    return ProbeReport(
        name="proper-time-maximization",
        passed=violations == 0 and count > 0 and log_causal_ok,
        worst=float(worst),
        threshold=tol,
        count=count,
        failures=violations,
        details={
            "proper_time": proper,
            "rejected": rejected,
            "log_causal_ok": log_causal_ok,
        },
    )
