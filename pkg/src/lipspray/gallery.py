"""Example geometries with closed-form oracles where available.

Entries: euclidean(n), sphere(radius), minkowski(n), capped_cylinder(radius),
hartman_wintner(alpha), randers(drift, swirl), product_lorentz(radius).
The capped cylinder is the intrinsic metric of a cylinder closed by a
hemispherical cap, in a single polar chart crossing the joint circle; it is
C^{1,1} but not C^2 there. hartman_wintner is the Hölder (non-Lipschitz)
counterexample and gets refused by the constant estimator.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chart import ChartBox
from .errors import InvalidParams, UnknownGeometry
from .finsler import (
    FundamentalTensor,
    TimeOrientation,
    constant_time_orientation,
    finsler_spray,
)
from .spray import ChristoffelField, SprayField, connection_to_spray


@dataclass(frozen=True)
class GalleryEntry:
    name: str
    params: dict
    kind: str  # spray | christoffel | finsler-tensor
    spray: SprayField
    box: ChartBox
    christoffel: Optional[ChristoffelField] = None
    tensor: Optional[FundamentalTensor] = None
    signature: Optional[str] = None
    time_orientation: Optional[TimeOrientation] = None
    has_oracle: bool = False
    oracle: object = None
    grid_density: int = 16

    def spec(self):
        return {"kind": self.kind, "dimension": self.spray.dimension,
                "gallery": self.name, "params": self.params}


class FlatOracle:
    """Straight-line geodesics of a constant metric."""

    def __init__(self, metric):
        self.metric = np.asarray(metric, dtype=float)

    def geodesic(self, x0, v0, t):
        x0 = np.asarray(x0, float)
        v0 = np.asarray(v0, float)
        return x0 + t * v0, v0.copy()

    def log(self, p, q):
        return np.asarray(q, float) - np.asarray(p, float)

    def position(self, p, q):
        return self.log(p, q)

    def squared_distance(self, p, q):
        d = self.log(p, q)
        return float(d @ self.metric @ d)

    def distance(self, p, q):
        return math.sqrt(max(self.squared_distance(p, q), 0.0))

    def connect(self, p, q, nodes=64):
        ts = np.linspace(0.0, 1.0, nodes + 1)
        d = self.log(p, q)
        xs = np.asarray(p, float) + ts[:, None] * d
        vs = np.tile(d, (nodes + 1, 1))
        return ts, xs, vs


class SphereOracle:
    """Great-circle geodesics of the round sphere in the polar chart."""

    def __init__(self, radius=1.0):
        self.R = float(radius)

    def embed(self, x):
        th, ph = x[..., 0], x[..., 1]
        return self.R * np.stack(
            [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
        )

    def push_velocity(self, x, v):
        th, ph = x[..., 0], x[..., 1]
        e_th = np.stack(
            [np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)], axis=-1
        )
        e_ph = np.stack([-np.sin(th) * np.sin(ph), np.sin(th) * np.cos(ph),
                         np.zeros_like(th)], axis=-1)
        return self.R * (v[..., :1] * e_th + v[..., 1:] * e_ph)

    def chart(self, point3):
        z = np.clip(point3[..., 2] / self.R, -1.0, 1.0)
        th = np.arccos(z)
        ph = np.arctan2(point3[..., 1], point3[..., 0])
        return np.stack([th, ph], axis=-1)

    def chart_velocity(self, point3, vel3):
        x, y, z = point3[..., 0], point3[..., 1], point3[..., 2]
        th = np.arccos(np.clip(z / self.R, -1.0, 1.0))
        dth = -vel3[..., 2] / (self.R * np.sin(th))
        dph = (x * vel3[..., 1] - y * vel3[..., 0]) / (x * x + y * y)
        return np.stack([dth, dph], axis=-1)

    def geodesic(self, x0, v0, t):
        x0 = np.asarray(x0, float)
        v0 = np.asarray(v0, float)
        p3 = self.embed(x0)
        v3 = self.push_velocity(x0, v0)
        speed = np.linalg.norm(v3, axis=-1)
        if np.all(speed == 0.0):
            return x0.copy(), v0.copy()
        om = speed / self.R
        pos3 = np.cos(om * t) * p3 + (np.sin(om * t) / om) * v3
        vel3 = -om * np.sin(om * t) * p3 + np.cos(om * t) * v3
        return self.chart(pos3), self.chart_velocity(pos3, vel3)

    def distance(self, p, q):
        a = self.embed(np.asarray(p, float)) / self.R
        b = self.embed(np.asarray(q, float)) / self.R
        return self.R * math.acos(float(np.clip(a @ b, -1.0, 1.0)))

    def squared_distance(self, p, q):
        return self.distance(p, q) ** 2

    def log(self, p, q):
        p = np.asarray(p, float)
        p3 = self.embed(p)
        q3 = self.embed(np.asarray(q, float))
        ang = self.distance(p, q) / self.R
        if ang == 0.0:
            return np.zeros_like(p)
        w3 = q3 - (q3 @ p3 / (self.R * self.R)) * p3
        w3 *= ang * self.R / np.linalg.norm(w3)
        return self.chart_velocity(p3, w3)

    def position(self, p, q):
        v0 = self.log(p, q)
        _, vel = self.geodesic(np.asarray(p, float), v0, 1.0)
        return vel

    def connect(self, p, q, nodes=64):
        v0 = self.log(p, q)
        ts = np.linspace(0.0, 1.0, nodes + 1)
        xs = np.empty((nodes + 1, 2))
        vs = np.empty((nodes + 1, 2))
        for i, t in enumerate(ts):
            xs[i], vs[i] = self.geodesic(np.asarray(p, float), v0, t)
        return ts, xs, vs


def _constant_tensor(n, matrix, signature):
    mat = np.asarray(matrix, dtype=float)

    def func(x, v):
        return np.broadcast_to(mat, np.shape(x) + (n,)).copy()

    def dg(x, v):
        return np.zeros(np.shape(x) + (n, n))

    return FundamentalTensor(
        dimension=n, func=func, signature=signature, reversible=True,
        dg_dx=dg, velocity_dependent=False,
    )


def _zero_spray(n, box):
    return SprayField(
        dimension=n,
        func=lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v))),
        reversible=True,
        kind="connection",
        box=box,
    )


def _euclidean(n=2):
    n = int(n)
    box = ChartBox(n, np.zeros(n), 1.0)
    return GalleryEntry(
        name="euclidean",
        params={"n": n},
        kind="christoffel",
        spray=_zero_spray(n, box),
        christoffel=ChristoffelField(n, lambda x: np.zeros(np.shape(x) + (n, n))),
        tensor=_constant_tensor(n, np.eye(n), "riemannian"),
        box=box,
        signature="riemannian",
        has_oracle=True,
        oracle=FlatOracle(np.eye(n)),
    )


def _minkowski(n=2):
    n = int(n)
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    box = ChartBox(n, np.zeros(n), 1.0)
    return GalleryEntry(
        name="minkowski",
        params={"n": n},
        kind="christoffel",
        spray=_zero_spray(n, box),
        christoffel=ChristoffelField(n, lambda x: np.zeros(np.shape(x) + (n, n))),
        tensor=_constant_tensor(n, eta, "lorentzian"),
        box=box,
        signature="lorentzian",
        time_orientation=constant_time_orientation(n),
        has_oracle=True,
        oracle=FlatOracle(eta),
    )


def _sphere(radius=1.0):
    R = float(radius)
    if R <= 0:
        raise InvalidParams("sphere radius must be positive")

    def christoffels(x):
        th = x[..., 0]
        G = np.zeros(np.shape(x) + (2, 2))
        G[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = np.cos(th) / np.sin(th)
        return G

    def metric(x, v):
        th = x[..., 0]
        g = np.zeros(np.shape(x) + (2,))
        g[..., 0, 0] = R * R
        g[..., 1, 1] = (R * np.sin(th)) ** 2
        return g

    def dmetric(x, v):
        th = x[..., 0]
        dg = np.zeros(np.shape(x) + (2, 2))
        dg[..., 0, 1, 1] = R * R * np.sin(2.0 * th)
        return dg

    gamma = ChristoffelField(2, christoffels)
    box = ChartBox(2, np.array([np.pi / 2, 0.0]), 0.6)
    return GalleryEntry(
        name="sphere",
        params={"radius": R},
        kind="christoffel",
        spray=connection_to_spray(gamma, box=box),
        christoffel=gamma,
        tensor=FundamentalTensor(2, metric, "riemannian", True, dg_dx=dmetric,
                                 velocity_dependent=False),
        box=box,
        signature="riemannian",
        has_oracle=True,
        oracle=SphereOracle(R),
    )


def _cap_profile(R):
    joint = R * np.pi / 2.0

    def f(rho):
        return np.where(rho <= joint, R * np.sin(rho / R), R)

    def fp(rho):
        return np.where(rho <= joint, np.cos(rho / R), 0.0)

    return f, fp


def _capped_cylinder(radius=1.0):
    R = float(radius)
    if R <= 0:
        raise InvalidParams("capped cylinder radius must be positive")
    f, fp = _cap_profile(R)

    def christoffels(x):
        rho = x[..., 0]
        G = np.zeros(np.shape(x) + (2, 2))
        G[..., 0, 1, 1] = -f(rho) * fp(rho)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = fp(rho) / f(rho)
        return G

    def metric(x, v):
        rho = x[..., 0]
        g = np.zeros(np.shape(x) + (2,))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = f(rho) ** 2
        return g

    def dmetric(x, v):
        rho = x[..., 0]
        dg = np.zeros(np.shape(x) + (2, 2))
        dg[..., 0, 1, 1] = 2.0 * f(rho) * fp(rho)
        return dg

    gamma = ChristoffelField(2, christoffels)
    box = ChartBox(2, np.array([R * np.pi / 2.0, 0.0]), 0.5 * R)
    return GalleryEntry(
        name="capped_cylinder",
        params={"radius": R},
        kind="christoffel",
        spray=connection_to_spray(gamma, box=box),
        christoffel=gamma,
        tensor=FundamentalTensor(2, metric, "riemannian", True, dg_dx=dmetric,
                                 velocity_dependent=False),
        box=box,
        signature="riemannian",
    )


def _hartman_wintner(alpha=0.5):
    a = float(alpha)
    if not (0.0 < a < 1.0):
        raise InvalidParams("hartman_wintner exponent must lie in (0, 1)")

    def sigma2(x):
        """d(log sqrt(lambda))/dx2 for lambda = 1 + |x2|^(1+a); Hölder(a) at 0."""
        y = x[..., 1]
        lam = 1.0 + np.abs(y) ** (1.0 + a)
        return (1.0 + a) * np.abs(y) ** a * np.sign(y) / (2.0 * lam)

    def christoffels(x):
        s2 = sigma2(x)
        G = np.zeros(np.shape(x) + (2, 2))
        G[..., 0, 0, 1] = G[..., 0, 1, 0] = s2
        G[..., 1, 0, 0] = -s2
        G[..., 1, 1, 1] = s2
        return G

    def metric(x, v):
        y = x[..., 1]
        lam = 1.0 + np.abs(y) ** (1.0 + a)
        return lam[..., None, None] * np.eye(2)

    gamma = ChristoffelField(2, christoffels)
    box = ChartBox(2, np.zeros(2), 0.5)
    return GalleryEntry(
        name="hartman_wintner",
        params={"alpha": a},
        kind="christoffel",
        spray=connection_to_spray(gamma, box=box),
        christoffel=gamma,
        tensor=FundamentalTensor(2, metric, "riemannian", True,
                                 velocity_dependent=False),
        box=box,
        signature="riemannian",
    )


def _randers(drift=0.3, swirl=1.0):
    b0 = float(drift)
    w = float(swirl)
    if not abs(b0) < 1.0:
        raise InvalidParams("randers drift must have Euclidean norm < 1")

    def bfield(x):
        ang = w * x[..., 1]
        return b0 * np.stack([np.cos(ang), np.sin(ang)], axis=-1)

    def dbfield(x):
        """db[..., k, i] = d b_i / d x^k; only the x2-derivative is nonzero."""
        ang = w * x[..., 1]
        db = np.zeros(np.shape(x) + (2,))
        db[..., 1, 0] = -b0 * w * np.sin(ang)
        db[..., 1, 1] = b0 * w * np.cos(ang)
        return db

    def metric(x, v):
        v = np.asarray(v, dtype=float)
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        vhat = v / rho
        b = bfield(x)
        F = rho[..., 0] + np.einsum("...i,...i->...", b, v)
        ell = vhat + b
        eye = np.eye(2)
        proj = eye - vhat[..., :, None] * vhat[..., None, :]
        return (F / rho[..., 0])[..., None, None] * proj + ell[..., :, None] * ell[..., None, :]

    def dmetric(x, v):
        v = np.asarray(v, dtype=float)
        rho = np.linalg.norm(v, axis=-1, keepdims=True)
        vhat = v / rho
        b = bfield(x)
        db = dbfield(x)
        eye = np.eye(2)
        proj = eye - vhat[..., :, None] * vhat[..., None, :]
        ell = vhat + b
        dF = np.einsum("...ki,...i->...k", db, v)
        out = (dF / rho[..., 0, None])[..., None, None] * proj[..., None, :, :]
        out += db[..., :, :, None] * ell[..., None, None, :]
        out += db[..., :, None, :] * ell[..., None, :, None]
        return out

    tensor = FundamentalTensor(2, metric, "riemannian", reversible=False,
                               dg_dx=dmetric, velocity_dependent=True)
    box = ChartBox(2, np.zeros(2), 1.0)
    return GalleryEntry(
        name="randers",
        params={"drift": b0, "swirl": w},
        kind="finsler-tensor",
        spray=finsler_spray(tensor, box=box),
        tensor=tensor,
        box=box,
        signature="riemannian",
    )


def _product_lorentz(radius=1.0):
    R = float(radius)
    if R <= 0:
        raise InvalidParams("product_lorentz radius must be positive")
    f, fp = _cap_profile(R)

    def christoffels(x):
        rho = x[..., 1]
        G = np.zeros(np.shape(x) + (3, 3))
        G[..., 1, 2, 2] = -f(rho) * fp(rho)
        G[..., 2, 1, 2] = G[..., 2, 2, 1] = fp(rho) / f(rho)
        return G

    def metric(x, v):
        rho = x[..., 1]
        g = np.zeros(np.shape(x) + (3,))
        g[..., 0, 0] = -1.0
        g[..., 1, 1] = 1.0
        g[..., 2, 2] = f(rho) ** 2
        return g

    def dmetric(x, v):
        rho = x[..., 1]
        dg = np.zeros(np.shape(x) + (3, 3))
        dg[..., 1, 2, 2] = 2.0 * f(rho) * fp(rho)
        return dg

    gamma = ChristoffelField(3, christoffels)
    box = ChartBox(3, np.array([0.0, R * np.pi / 2.0, 0.0]), 0.5 * R)
    return GalleryEntry(
        name="product_lorentz",
        params={"radius": R},
        kind="christoffel",
        spray=connection_to_spray(gamma, box=box),
        christoffel=gamma,
        tensor=FundamentalTensor(3, metric, "lorentzian", True, dg_dx=dmetric,
                                 velocity_dependent=False),
        box=box,
        signature="lorentzian",
        time_orientation=constant_time_orientation(3),
        grid_density=6,
    )


_REGISTRY = {
    "euclidean": _euclidean,
    "sphere": _sphere,
    "minkowski": _minkowski,
    "capped_cylinder": _capped_cylinder,
    "hartman_wintner": _hartman_wintner,
    "randers": _randers,
    "product_lorentz": _product_lorentz,
}


def gallery_names():
    return sorted(_REGISTRY)


def build_gallery(name, params=None):
    try:
        ctor = _REGISTRY[name]
    except KeyError:
        raise UnknownGeometry(
            f"unknown gallery entry {name!r}; known: {', '.join(gallery_names())}"
        ) from None
    try:
        return ctor(**(params or {}))
    except TypeError as exc:
        raise InvalidParams(str(exc)) from None


def load_geometry(spec):
    """Build a gallery entry from a declarative JSON spec (dict or path).

    Format: {"kind": "christoffel"|"spray"|"finsler", "dimension": n,
    "gallery": name, "params": {...}}; kind/dimension are validated when given.
    """
    if isinstance(spec, str):
        with open(spec) as fh:
            spec = json.load(fh)
    entry = build_gallery(spec["gallery"], spec.get("params"))
    kind = spec.get("kind")
    aliases = {"finsler": "finsler-tensor"}
    if kind and aliases.get(kind, kind) != entry.kind:
        raise InvalidParams(f"spec kind {kind!r} does not match entry {entry.kind!r}")
    dim = spec.get("dimension")
    if dim and int(dim) != entry.spray.dimension:
        raise InvalidParams("spec dimension does not match the gallery entry")
    return entry
