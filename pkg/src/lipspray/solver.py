"""Picard geodesic iteration with explicit convergence constants, a 4th-order
reference integrator as oracle, the flow map, and the constant pipeline."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, DomainViolation, EscapeFromBall
from .numerics import cumulative_integral, exp_tail, phi1
from .report import ProbeReport


@dataclass(frozen=True)
class ConvexityConstants:
    """The constants (r, M, alpha, beta, delta, V, A, B, D) of the certified
    geodesic domain.

    delta bounds admissible initial data max(|x0 - center|, |v0|) < delta;
    V = delta/(1 - delta M) bounds every iterate's chart speed; A = V^2 alpha,
    B = beta V, and D solves A/D + B = D with D <= 1.
    """

    r: float
    M: float
    alpha: float
    beta: float
    delta: float
    V: float
    A: float
    B: float
    D: float
    safety: float = 1.0
    center: Optional[np.ndarray] = None

    def tail(self, k):
        """A-priori Picard tail sum_{j>k} D^j / j!."""
        return exp_tail(self.D, k)

    def env_position(self, t=1.0):
        """(e^{Dt} - 1)/D - t, the position strong-differentiability envelope."""
        return t * (phi1(self.D * t) - 1.0)

    def env_velocity(self, t=1.0):
        """e^{Dt} - 1, the velocity strong-differentiability envelope."""
        return float(np.expm1(self.D * t))

    def contraction(self):
        """Deviation of exp_p from the chart identity, (e^D - 1)/D - 1."""
        return self.env_position(1.0)

    def center_for(self, x0):
        return np.zeros_like(x0) if self.center is None else self.center


def admissible_delta_bounds(alpha, beta, M, r):
    """The three closed-form delta bounds solved as equalities.

    bound 1: delta = (1 - e^{-M r/2})/M  (limit r/2 as M -> 0)
    bound 2: delta/(1 - delta M) = 1
    bound 3: (beta delta / (2(1 - delta M)))(1 + sqrt(1 + 4 alpha/beta^2)) = 1,
             with the beta -> 0 limit sqrt(alpha) delta/(1 - delta M) = 1.
    """
    # (1 - e^{-Mr/2})/M = (r/2) phi1(-Mr/2); the phi1 form is stable as M -> 0
    b1 = (r / 2.0) * float(phi1(-M * r / 2.0))
    b2 = 1.0 / (1.0 + M)
    c = 0.5 * (beta + math.sqrt(beta * beta + 4.0 * alpha))
    b3 = math.inf if c == 0.0 else 1.0 / (c + M)
    return b1, b2, b3


def constants_from_delta(alpha, beta, M, r, delta, safety=1.0, center=None):
    """Derive (V, A, B, D) from a given admissible delta."""
    if min(alpha, beta, M) < 0 or r <= 0:
        raise ValueError("alpha, beta, M must be >= 0 and r > 0")
    b1, b2, b3 = admissible_delta_bounds(alpha, beta, M, r)
    slack = 1.0 + 1e-12
    if not (0 < delta <= min(b1, b2, b3) * slack):
        raise DomainViolation(
            f"delta = {delta} violates the admissibility bounds "
            f"({b1:.6g}, {b2:.6g}, {b3:.6g})"
        )
    V = delta / (1.0 - delta * M)
    A = V * V * alpha
    B = beta * V
    D = 0.5 * (B + math.sqrt(B * B + 4.0 * A))
    cc = ConvexityConstants(
        r=r, M=M, alpha=alpha, beta=beta, delta=delta, V=V, A=A, B=B, D=D,
        safety=safety,
        center=None if center is None else np.asarray(center, dtype=float),
    )
    if D > 0 and abs(cc.A / cc.D + cc.B - cc.D) > 1e-12:
        raise ConvergenceFailure("constant identity A/D + B = D failed")
    if D > 1.0 + 1e-12:
        raise DomainViolation(f"D = {D} exceeds 1; delta too large")
    return cc


def compute_constants(alpha, beta, M, r, safety=0.9, center=None):
    """delta = safety * min of the three closed-form bounds, then V, A, B, D.

    The degenerate case alpha = beta = M = 0 yields delta = safety*r/2, D = 0,
    for which every envelope is read in its algebraic limit.
    """
    if not (0 < safety):
        raise ValueError("safety must be positive")
    b1, b2, b3 = admissible_delta_bounds(alpha, beta, M, r)
    delta = safety * min(b1, b2, b3)
    return constants_from_delta(alpha, beta, M, r, delta, safety=safety, center=center)


@dataclass
class GeodesicSolution:
    """Sampled trajectory (x(t), v(t)) on a uniform grid with certified tail."""

    ts: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    picard_iterations: int
    tail_bound: float
    quadrature_error_estimate: float
    diff_history: list = field(default_factory=list)  # (|dx|_inf, |dv|_inf) per iterate

    @property
    def endpoint(self):
        return self.xs[-1]

    @property
    def terminal_velocity(self):
        return self.vs[-1]

    def integral_residual(self, spray, x0, v0):
        """Max residual of the integral fixed-point equations on the grid."""
        dt = self.ts[1] - self.ts[0]
        rx = self.xs - (x0 + cumulative_integral(self.vs, dt))
        rv = self.vs - (v0 + cumulative_integral(spray(self.xs, self.vs), dt))
        return float(max(np.max(np.abs(rx)), np.max(np.abs(rv))))


def _picard_on_grid(spray, x0, v0, constants, tol, nodes, max_iter=80):
    center = constants.center_for(x0)
    dt = 1.0 / nodes
    xs = np.tile(x0, (nodes + 1, 1))
    vs = np.zeros_like(xs)
    diffs = []
    tail = constants.tail(0)
    for it in range(1, max_iter + 1):
        acc = spray(xs, vs)
        new_xs = x0 + cumulative_integral(vs, dt)
        new_vs = v0 + cumulative_integral(acc, dt)
        dx = float(np.max(np.abs(new_xs - xs)))
        dv = float(np.max(np.abs(new_vs - vs)))
        diffs.append((dx, dv))
        xs, vs = new_xs, new_vs
        if np.max(np.linalg.norm(xs - center, axis=-1)) > constants.r + 1e-12:
            raise EscapeFromBall(
                "Picard iterate left the chart ball; constants do not bound the spray"
            )
        k = it - 1  # xs now holds the k-th Picard iterate
        tail = constants.tail(k)
        if it >= 3 and tail <= tol and max(dx, dv) <= tol:
            return xs, vs, it, tail, diffs
    raise ConvergenceFailure(
        f"Picard iteration did not reach tol={tol} within {max_iter} iterates"
    )


def picard_geodesic(spray, x0, v0, constants, tol=1e-9, base_nodes=16, max_nodes=1024):
    """Solve the geodesic integral equations on [0, 1] by Picard iteration.

    Starts from x_{-1} = x0, v_{-1} = 0 and iterates until the a-priori tail
    sum_{j>k} D^j/j! and the a-posteriori successive difference both fall below
    tol. The quadrature grid is halved until the solution moves by < tol/10;
    the final change is reported as the quadrature error estimate.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    center = constants.center_for(x0)
    start = max(float(np.linalg.norm(x0 - center)), float(np.linalg.norm(v0)))
    if not start < constants.delta:
        raise DomainViolation(
            f"initial condition norm {start:.6g} outside delta = {constants.delta:.6g}"
        )
    nodes = base_nodes
    prev = None
    while True:
        xs, vs, iters, tail, diffs = _picard_on_grid(spray, x0, v0, constants, tol, nodes)
        if prev is not None:
            pxs, pvs = prev
            change = max(
                float(np.max(np.abs(xs[::2] - pxs))),
                float(np.max(np.abs(vs[::2] - pvs))),
            )
            if change < tol / 10.0 or nodes >= max_nodes:
                return GeodesicSolution(
                    ts=np.linspace(0.0, 1.0, nodes + 1),
                    xs=xs,
                    vs=vs,
                    picard_iterations=iters,
                    tail_bound=tail,
                    quadrature_error_estimate=change,
                    diff_history=diffs,
                )
        prev = (xs, vs)
        nodes *= 2


def reference_geodesic(spray, x0, v0, T=1.0, steps=1000, box=None):
    """Classical RK4 integration of the geodesic ODE, used as an oracle.

    A Richardson estimate of the global error (from a half-resolution run) is
    attached as the error estimate; tail_bound is zero since no Picard
    envelope applies.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)

    def rhs(x, v):
        return v, spray(x, v)

    def integrate(m):
        h = T / m
        xs = np.empty((m + 1, x0.size))
        vs = np.empty_like(xs)
        xs[0], vs[0] = x0, v0
        x, v = x0.copy(), v0.copy()
        for i in range(m):
            k1x, k1v = rhs(x, v)
            k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
            k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
            k4x, k4v = rhs(x + h * k3x, v + h * k3v)
            x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
            v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
            if box is not None and not box.contains(x):
                raise EscapeFromBall("reference integration left the chart box")
            xs[i + 1], vs[i + 1] = x, v
        return xs, vs

    coarse_m = max(2, steps // 2)
    cxs, cvs = integrate(coarse_m)
    xs, vs = integrate(steps)
    err = max(
        float(np.max(np.abs(xs[-1] - cxs[-1]))),
        float(np.max(np.abs(vs[-1] - cvs[-1]))),
    ) / 15.0
    return GeodesicSolution(
        ts=np.linspace(0.0, T, steps + 1),
        xs=xs,
        vs=vs,
        picard_iterations=0,
        tail_bound=0.0,
        quadrature_error_estimate=err,
    )


def flow(spray, constants, t, x0, v0, tol=1e-9):
    """Geodesic flow phi(t, (x0, v0)) -> (x(t), v(t)).

    Times in [0, 1] use the homogeneity rescaling gamma_v(t) = gamma_{t v}(1);
    longer times are reached by restart chaining in unit steps.
    """
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if t < 0:
        raise DomainViolation("flow times must be nonnegative; use the reverse spray")
    if t == 0.0:
        return x0.copy(), v0.copy()
    if t <= 1.0:
        sol = picard_geodesic(spray, x0, t * v0, constants, tol=tol)
        return sol.endpoint, sol.terminal_velocity / t
    n_seg = int(math.ceil(t))
    h = t / n_seg
    x, v = x0, v0
    for _ in range(n_seg):
        x, v = flow(spray, constants, h, x, v, tol=tol)
    return x, v


def dependence_probe(spray, constants, pairs, tol=1e-9, slack_factor=10.0):
    """Verify Lipschitz dependence on initial data against the e^{Dt}/D envelope.

    For each pair of initial conditions inside the delta-domain checks, on all
    grid times, |x - y| <= |dx0| + C (e^{Dt}-1)/D and |v - w| <= C e^{Dt} with
    C = max(D |dx0|, |dv0|); for D = 0 the degenerate envelope is linear in t.
    The coarser max-norm form (max norm) <= |init|_max e^{Dt}/D is implied.
    """
    D = constants.D
    worst = -np.inf
    count = 0
    failures = 0
    for (xa, va), (xb, vb) in pairs:
        sa = picard_geodesic(spray, np.asarray(xa, float), np.asarray(va, float),
                             constants, tol=tol)
        sb = picard_geodesic(spray, np.asarray(xb, float), np.asarray(vb, float),
                             constants, tol=tol)
        m = min(sa.ts.size, sb.ts.size)
        stride_a = (sa.ts.size - 1) // (m - 1)
        stride_b = (sb.ts.size - 1) // (m - 1)
        ts = sa.ts[::stride_a]
        dx = np.linalg.norm(sa.xs[::stride_a] - sb.xs[::stride_b], axis=-1)
        dv = np.linalg.norm(sa.vs[::stride_a] - sb.vs[::stride_b], axis=-1)
        dx0 = float(np.linalg.norm(np.asarray(xa, float) - np.asarray(xb, float)))
        dv0 = float(np.linalg.norm(np.asarray(va, float) - np.asarray(vb, float)))
        C = max(D * dx0, dv0)
        if D > 0:
            env_x = dx0 + C * np.expm1(D * ts) / D
            env_v = C * np.exp(D * ts)
        else:
            env_x = dx0 + dv0 * ts
            env_v = np.full_like(ts, dv0)
        slack = slack_factor * (
            tol + sa.quadrature_error_estimate + sb.quadrature_error_estimate
        )
        margin = max(float(np.max(dx - env_x)), float(np.max(dv - env_v)))
        worst = max(worst, margin)
        count += 1
        if margin > slack:
            failures += 1
    threshold = slack_factor * tol
    return ProbeReport(
        name="initial-condition-dependence",
        passed=failures == 0,
        worst=float(worst),
        threshold=threshold,
        count=count,
        failures=failures,
        details={"D": D},
    )
