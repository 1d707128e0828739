"""Sprays and connections on a coordinate chart: algebra checks and constants.

A spray is a second-order ODE field H(x, v), positively homogeneous of degree
two in v; a torsionless connection is the special case H = -Gamma(x)(v, v).
All evaluators are pure and vectorized over leading axes: x and v have shape
(..., n) and H returns (..., n).
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .chart import ChartBox
from .errors import UnboundedEstimate
from .numerics import (
    ball_mask,
    cube_grid,
    dyadic_axis,
    level_for_density,
    unit_directions,
)
from .report import ProbeReport


@dataclass(frozen=True)
class SprayField:
    """Acceleration field H(x, v) of a second-order ODE on a chart."""

    dimension: int
    func: Callable
    reversible: bool = False
    kind: str = "generic-spray"  # generic-spray | connection | finsler-derived
    box: Optional[ChartBox] = None

    def __call__(self, x, v):
        return self.func(np.asarray(x, dtype=float), np.asarray(v, dtype=float))

    def reverse(self):
        """The reverse spray H~(x, v) = H(x, -v); same Lipschitz constants."""
        if self.reversible:
            return self
        f = self.func
        return replace(self, func=lambda x, v: f(x, -v))


@dataclass(frozen=True)
class ChristoffelField:
    """Connection coefficients Gamma(x)[mu, a, b], symmetric in (a, b)."""

    dimension: int
    func: Callable

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class LipschitzEstimate:
    """Sampled (never certified) Lipschitz data of a spray on a chart box.

    alpha bounds position differences, beta velocity differences, both taken
    on the slab B(p, r) x {|v| <= 1}; M is the sampled sup of |H(x, e)| over
    unit velocities.
    """

    alpha: float
    beta: float
    M: float
    grid_density: int
    certified: bool = False
    refinement_ratios: dict = None


def eval_spray(spray, x, v, box=None):
    """Evaluate H(x, v), enforcing the chart-box domain when one is known."""
    box = box or spray.box
    x = np.asarray(x, dtype=float)
    if box is not None:
        box.require(x)
    v = np.asarray(v, dtype=float)
    if np.all(v == 0.0):
        return np.zeros_like(np.broadcast_arrays(x, v)[0])
    return spray(x, v)


def connection_to_spray(christoffel, box=None):
    """H(x, v) = -Gamma(x)(v, v); exactly even in v, hence reversible."""
    gam = christoffel

    def func(x, v):
        G = gam(x)
        return -np.einsum("...mab,...a,...b->...m", G, v, v)

    return SprayField(
        dimension=christoffel.dimension,
        func=func,
        reversible=True,
        kind="connection",
        box=box,
    )


def check_homogeneity(spray, samples, scales=(0.5, 2.0, 10.0), floor=1e-30, tol=1e-8):
    """Probe |H(x, s v) - s^2 H(x, v)| / (s^2 |H(x, v)| + floor) over samples.

    `samples` is an iterable of (x, v) pairs; all scales must be positive.
    """
    scales = [float(s) for s in scales]
    if any(s <= 0 for s in scales):
        raise ValueError("homogeneity scales must be positive")
    worst = 0.0
    count = 0
    for x, v in samples:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        base = spray(x, v)
        for s in scales:
            lhs = spray(x, s * v)
            num = float(np.linalg.norm(lhs - s * s * base))
            den = s * s * float(np.linalg.norm(base)) + floor
            worst = max(worst, num / max(den, floor))
            count += 1
    return ProbeReport(
        name="homogeneity",
        passed=worst <= tol,
        worst=worst,
        threshold=tol,
        count=count,
    )


def _axis_quotients(values, coords, in_ball):
    """Max difference quotient of `values` along one grid axis, all dyadic lags.

    values: (..., m, n) with the varied axis second-to-last; coords: (m,) node
    positions; in_ball: broadcastable mask of admissible nodes.
    """
    m = coords.shape[0]
    worst = 0.0
    lag = 1
    while lag < m:
        dv = values[..., lag:, :] - values[..., :-lag, :]
        dx = coords[lag:] - coords[:-lag]
        ok = in_ball[..., lag:] & in_ball[..., :-lag]
        if np.any(ok):
            q = np.linalg.norm(dv, axis=-1) / dx
            worst = max(worst, float(np.max(np.where(ok, q, 0.0))))
        lag *= 2
    return worst


def _alpha_at_level(spray, box, level, dirs):
    n = box.dimension
    axes = [dyadic_axis(c - box.radius, c + box.radius, level) for c in box.center]
    shape = tuple(a.size for a in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    mask = ball_mask(pts, box.center, box.radius).reshape(shape)
    worst = 0.0
    for e in dirs:
        H = spray(pts, np.broadcast_to(e, pts.shape)).reshape(shape + (n,))
        for k in range(n):
            Hk = np.moveaxis(H, k, -2)
            mk = np.moveaxis(mask, k, -1)
            worst = max(worst, _axis_quotients(Hk, axes[k], mk))
    return worst


def _beta_at_level(spray, box, level, x_subgrid):
    n = box.dimension
    axes = [dyadic_axis(-1.0, 1.0, level) for _ in range(n)]
    shape = tuple(a.size for a in axes)
    mesh = np.meshgrid(*axes, indexing="ij")
    vel = np.stack([m.ravel() for m in mesh], axis=-1)
    mask = (np.linalg.norm(vel, axis=-1) <= 1.0 + 1e-12).reshape(shape)
    worst = 0.0
    for x in x_subgrid:
        H = spray(np.broadcast_to(x, vel.shape), vel).reshape(shape + (n,))
        for k in range(n):
            Hk = np.moveaxis(H, k, -2)
            mk = np.moveaxis(mask, k, -1)
            worst = max(worst, _axis_quotients(Hk, axes[k], mk))
    return worst


def _sup_M(spray, box, level, dirs):
    pts = cube_grid(box.center, box.radius, level)
    pts = pts[ball_mask(pts, box.center, box.radius)]
    worst = 0.0
    for e in dirs:
        H = spray(pts, np.broadcast_to(e, pts.shape))
        worst = max(worst, float(np.max(np.linalg.norm(H, axis=-1))))
    return worst


def estimate_constants(
    spray, box, grid_density=16, directions=32, refinements=2, growth_limit=2.0
):
    """Sample alpha, beta, M on B(p, r) x {|v| <= 1} with refinement checks.

    The grid is refined `refinements` times; if the alpha or beta quotient has
    grown by >= `growth_limit` across the full refinement, the spray is flagged
    as Hölder-but-not-Lipschitz and UnboundedEstimate is raised.
    """
    if grid_density < 2:
        raise ValueError("grid density must be >= 2 points per axis")
    n = box.dimension
    level = level_for_density(grid_density)
    dirs = unit_directions(n, directions)
    sub_level = max(1, level - 2)
    x_sub = cube_grid(box.center, box.radius, sub_level)
    x_sub = x_sub[ball_mask(x_sub, box.center, box.radius)]

    alphas, betas = [], []
    for lv in range(level, level + refinements + 1):
        alphas.append(_alpha_at_level(spray, box, lv, dirs))
        betas.append(_beta_at_level(spray, box, lv, x_sub))
    M = _sup_M(spray, box, level + refinements, dirs)

    ratios = {}
    for name, seq in (("alpha", alphas), ("beta", betas)):
        if seq[0] > 1e-12:
            ratios[name] = seq[-1] / seq[0]
            if ratios[name] >= growth_limit:
                raise UnboundedEstimate(name, ratios[name])
        else:
            ratios[name] = 1.0

    return LipschitzEstimate(
        alpha=alphas[-1],
        beta=betas[-1],
        M=M,
        grid_density=grid_density,
        certified=False,
        refinement_ratios=ratios,
    )


def transform_spray(spray, chart_map):
    """Push a spray through a chart change.

    H~(y, w) = Hess(x)(v, v) + J(x) H(x, v) with x the preimage of y and
    v = J(x)^{-1} w; for a connection input the result is again a quadratic
    form in the velocities.
    """
    n = spray.dimension

    def func(y, w):
        y = np.asarray(y, dtype=float)
        w = np.asarray(w, dtype=float)
        x = chart_map.inverse(y)
        J = chart_map.jacobian(x)
        v = np.linalg.solve(J, np.broadcast_to(w, y.shape)[..., None])[..., 0]
        S = chart_map.hessian(x)
        hess_term = np.einsum("...mab,...a,...b->...m", S, v, v)
        return hess_term + np.einsum("...mn,...n->...m", J, spray(x, v))

    new_box = None
    if spray.box is not None:
        # The image of a Euclidean ball is not a ball; keep the center only.
        center = chart_map.forward(spray.box.center)
        new_box = ChartBox(n, center, spray.box.radius)
    return SprayField(
        dimension=n,
        func=func,
        reversible=spray.reversible,
        kind=spray.kind,
        box=new_box,
    )
