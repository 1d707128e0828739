"""Pseudo-Finsler fundamental tensors, the energy Lagrangian and derived spray,
causal classification, and curve lengths."""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import AmbiguousClassification, NoncausalTangent, SingularTensor
from .numerics import cumulative_integral
from .report import ProbeReport
from .spray import SprayField


@dataclass(frozen=True)
class FundamentalTensor:
    """Velocity-dependent symmetric non-singular matrix g_(x,v).

    The evaluator takes x, v of shape (..., n) and returns (..., n, n); it must
    be zero-degree homogeneous in v. `dg_dx`, when provided, returns the
    analytic derivative with layout dg[..., k, i, j] = d g_ij / d x^k and is
    preferred over central differences by the spray construction.
    """

    dimension: int
    func: Callable
    signature: str = "riemannian"  # riemannian | lorentzian
    reversible: bool = True
    dg_dx: Optional[Callable] = None
    dg_dv: Optional[Callable] = None
    velocity_dependent: bool = True

    def __call__(self, x, v):
        return self.func(np.asarray(x, dtype=float), np.asarray(v, dtype=float))


@dataclass(frozen=True)
class TimeOrientation:
    """Continuous timelike field T(x) fixing the future cone."""

    func: Callable

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))


def constant_time_orientation(n, axis=0):
    e = np.zeros(n)
    e[axis] = 1.0
    return TimeOrientation(lambda x: np.broadcast_to(e, np.shape(x)).copy())


@dataclass(frozen=True)
class CausalClass:
    kind: str  # timelike | lightlike | spacelike | zero
    orientation: str = "none"  # future | past | none
    value: float = 0.0  # g_v(v, v)


def lagrangian(tensor, x, v):
    """Energy L(x, v) = g_(x,v)(v, v) / 2, with L(x, 0) = 0 by definition."""
    v = np.asarray(v, dtype=float)
    if np.linalg.norm(v) == 0.0:
        return 0.0
    g = tensor(x, v)
    return 0.5 * float(np.einsum("...ij,...i,...j->...", g, v, v))


def _dg_dv_fd(tensor, x, v, h):
    n = tensor.dimension
    out = np.empty((n, n, n))
    for a in range(n):
        e = np.zeros(n)
        e[a] = h
        out[a] = (tensor(x, v + e) - tensor(x, v - e)) / (2 * h)
    return out


def check_fundamental_identities(tensor, samples, h=1e-5, tol=1e-6):
    """Residuals of the vertical-contraction, gradient and Hessian identities.

    Checks, by central differences at the given samples (v != 0):
    the two contractions (dg/dv^a) v = 0; dL/dv = g v; d2L/dv2 = g; and
    zero-degree homogeneity g(x, s v) = g(x, v).
    """
    n = tensor.dimension
    worst = {"contraction_v_nu": 0.0, "contraction_v_alpha": 0.0,
             "gradient": 0.0, "hessian": 0.0, "homogeneity": 0.0}
    count = 0
    for x, v in samples:
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.linalg.norm(v) == 0.0:
            continue
        count += 1
        g = tensor(x, v)
        dgdv = tensor.dg_dv(x, v) if tensor.dg_dv else _dg_dv_fd(tensor, x, v, h)
        worst["contraction_v_nu"] = max(
            worst["contraction_v_nu"],
            float(np.max(np.abs(np.einsum("amn,n->am", dgdv, v)))),
        )
        worst["contraction_v_alpha"] = max(
            worst["contraction_v_alpha"],
            float(np.max(np.abs(np.einsum("amn,a->mn", dgdv, v)))),
        )
        grad = np.empty(n)
        hess = np.empty((n, n))
        for mu in range(n):
            e = np.zeros(n)
            e[mu] = h
            grad[mu] = (lagrangian(tensor, x, v + e) - lagrangian(tensor, x, v - e)) / (2 * h)
            # d2L/dv2 equals the derivative of v -> g_(x,v) v (the dg/dv
            # contraction drops out), which differences without cancellation
            hess[:, mu] = (tensor(x, v + e) @ (v + e) - tensor(x, v - e) @ (v - e)) / (2 * h)
        worst["gradient"] = max(worst["gradient"], float(np.max(np.abs(grad - g @ v))))
        worst["hessian"] = max(worst["hessian"], float(np.max(np.abs(hess - g))))
        for s in (0.5, 3.0):
            worst["homogeneity"] = max(
                worst["homogeneity"], float(np.max(np.abs(tensor(x, s * v) - g)))
            )
    overall = max(worst.values())
    return ProbeReport(
        name="fundamental-identities",
        passed=overall <= tol,
        worst=overall,
        threshold=tol,
        count=count,
        details=worst,
    )


def _dg_dx_fd(tensor, x, v, base_step=1e-5):
    n = tensor.dimension
    x = np.asarray(x, dtype=float)
    h = max(base_step, base_step * float(np.max(np.linalg.norm(x, axis=-1))))
    out = np.empty(x.shape[:-1] + (n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        out[..., k, :, :] = (tensor(x + e, v) - tensor(x - e, v)) / (2 * h)
    return out


def finsler_spray(tensor, box=None):
    """Geodesic spray of a pseudo-Finsler metric.

    H(x, v) = -1/2 g^{-1} (2 (dg_{na}/dx^b) - (dg_{ab}/dx^n)) v^a v^b, using the
    analytic dg/dx when the tensor provides one and central differences
    otherwise; H(x, 0) = 0 by definition.
    """

    def func(x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        x, v = np.broadcast_arrays(x, v)
        flat_x = x.reshape(-1, tensor.dimension)
        flat_v = v.reshape(-1, tensor.dimension)
        speeds = np.linalg.norm(flat_v, axis=-1)
        zero = speeds == 0.0
        safe_v = flat_v.copy()
        if np.any(zero):
            safe_v[zero] = np.eye(tensor.dimension)[0]
        g = tensor(flat_x, safe_v)
        if tensor.dg_dx is not None:
            dg = tensor.dg_dx(flat_x, safe_v)
        else:
            dg = _dg_dx_fd(tensor, flat_x, safe_v)
        rhs = 2.0 * np.einsum("...bna,...a,...b->...n", dg, flat_v, flat_v)
        rhs -= np.einsum("...nab,...a,...b->...n", dg, flat_v, flat_v)
        try:
            H = -0.5 * np.linalg.solve(g, rhs[..., None])[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularTensor(str(exc)) from None
        H[zero] = 0.0
        return H.reshape(x.shape)

    return SprayField(
        dimension=tensor.dimension,
        func=func,
        reversible=tensor.reversible,
        kind="finsler-derived",
        box=box,
    )


def levi_civita_christoffels(tensor):
    """Christoffel symbols of a velocity-independent metric tensor."""
    from .spray import ChristoffelField

    n = tensor.dimension
    probe_v = np.eye(n)[0]

    def func(x):
        x = np.asarray(x, dtype=float)
        v = np.broadcast_to(probe_v, x.shape)
        g = tensor(x, v)
        if tensor.dg_dx is not None:
            dg = tensor.dg_dx(x, v)
        else:
            dg = _dg_dx_fd(tensor, x, v)
        term = (
            np.einsum("...anb->...nab", dg)
            + np.einsum("...bna->...nab", dg)
            - dg
        )
        try:
            ginv = np.linalg.inv(g)
        except np.linalg.LinAlgError as exc:
            raise SingularTensor(str(exc)) from None
        return 0.5 * np.einsum("...mn,...nab->...mab", ginv, term)

    return ChristoffelField(dimension=n, func=func)


def classify_vector(tensor, orientation, x, v, tol_light=1e-9, strict=False):
    """Causal class of v at x by the sign of g_v(v, v) with a light band.

    The band is relative: |g_v(v,v)| <= tol_light * |v|_chart^2 classifies as
    lightlike. Orientation (future/past) is only attached in Lorentzian
    signature, by the sign of g_v(v, T(x)).
    """
    v = np.asarray(v, dtype=float)
    nv2 = float(v @ v)
    if nv2 == 0.0:
        return CausalClass("zero", "none", 0.0)
    g = tensor(x, v)
    q = float(v @ g @ v)
    band = tol_light * nv2
    if abs(q) <= band:
        kind = "lightlike"
        if strict:
            raise AmbiguousClassification(
                f"g_v(v,v) = {q:.3e} within light band {band:.3e}"
            )
    elif q < 0:
        kind = "timelike"
    else:
        kind = "spacelike"
    orient = "none"
    if tensor.signature == "lorentzian" and kind in ("timelike", "lightlike"):
        T = orientation(np.asarray(x, dtype=float))
        orient = "future" if float(v @ g @ T) < 0 else "past"
    return CausalClass(kind, orient, q)


def _length_integrand(tensor, xs, vs, kind, tol_light=1e-9):
    g = tensor(xs, vs)
    q = np.einsum("...ij,...i,...j->...", g, vs, vs)
    if kind == "lorentzian":
        band = tol_light * np.einsum("...i,...i->...", vs, vs)
        if np.any(q > band):
            raise NoncausalTangent(
                f"{int(np.sum(q > band))} tangent samples are not causal"
            )
        return np.sqrt(np.maximum(-q, 0.0))
    if np.any(q < 0):
        raise ValueError("negative g(v,v) in a Finsler length integrand")
    return np.sqrt(q)


def curve_length(tensor, curve, kind="finsler", tol=1e-10, max_nodes=4097):
    """Composite-Simpson length of a sampled or callable curve.

    `curve` is either a triple (ts, xs, vs) of uniformly spaced samples or a
    callable ts -> (xs, vs); callables are refined by grid doubling until the
    integral changes by less than `tol`.
    """
    if callable(curve):
        nodes = 65
        prev = None
        while True:
            ts = np.linspace(0.0, 1.0, nodes)
            xs, vs = curve(ts)
            f = _length_integrand(tensor, xs, vs, kind)
            total = float(cumulative_integral(f[:, None], ts[1] - ts[0])[-1, 0])
            if prev is not None and (abs(total - prev) < tol or nodes >= max_nodes):
                return total
            prev = total
            nodes = 2 * nodes - 1
    ts, xs, vs = curve
    ts = np.asarray(ts, dtype=float)
    f = _length_integrand(tensor, np.asarray(xs, float), np.asarray(vs, float), kind)
    return float(cumulative_integral(f[:, None], ts[1] - ts[0])[-1, 0])


def reverse_cauchy_schwarz_check(
    tensor, orientation, x, v1, v2, tol=1e-12, proportional_tol=1e-9
):
    """-g_{v1}(v1, v2) >= sqrt(-g_{v1}(v1,v1)) sqrt(-g_{v2}(v2,v2)) for future
    causal v1, v2, with equality iff the vectors are proportional."""
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    for v in (v1, v2):
        c = classify_vector(tensor, orientation, x, v)
        if c.kind not in ("timelike", "lightlike") or c.orientation != "future":
            return ProbeReport(
                name="reverse-cauchy-schwarz",
                passed=False,
                worst=np.inf,
                threshold=tol,
                count=1,
                failures=1,
                details={"precondition": f"vector is {c.kind}/{c.orientation}"},
            )
    g1 = tensor(x, v1)
    g2 = tensor(x, v2)
    lhs = -float(v1 @ g1 @ v2)
    rhs = np.sqrt(max(-float(v1 @ g1 @ v1), 0.0)) * np.sqrt(max(-float(v2 @ g2 @ v2), 0.0))
    residual = max(0.0, rhs - lhs)
    cross = v2 - (float(v2 @ v1) / float(v1 @ v1)) * v1
    proportional = float(np.linalg.norm(cross)) <= proportional_tol * float(
        np.linalg.norm(v2)
    )
    equality = abs(lhs - rhs) <= max(tol, 1e-12 * abs(lhs))
    return ProbeReport(
        name="reverse-cauchy-schwarz",
        passed=residual <= tol and (equality if proportional else True),
        worst=residual,
        threshold=tol,
        count=1,
        details={"lhs": lhs, "rhs": rhs, "proportional": proportional,
                 "equality": equality},
    )
