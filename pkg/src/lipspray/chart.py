"""Coordinate chart boxes and chart-to-chart maps."""

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainViolation, SingularJacobian


@dataclass(frozen=True)
class ChartBox:
    """Closed coordinate ball B(center, radius) in the Euclidean chart norm."""

    dimension: int
    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(self.dimension)
        object.__setattr__(self, "center", c)
        if not self.radius > 0:
            raise ValueError("chart box radius must be positive")

    def contains(self, x, slack=1e-12):
        x = np.asarray(x, dtype=float)
        return np.linalg.norm(x - self.center, axis=-1) <= self.radius + slack

    def require(self, x):
        if not np.all(self.contains(x)):
            raise DomainViolation(
                f"point outside chart ball of radius {self.radius} around {self.center}"
            )

    def shrunk(self, radius):
        return ChartBox(self.dimension, self.center, radius)


@dataclass(frozen=True)
class ChartMap:
    """Invertible coordinate change x -> x~ with evaluable derivatives.

    forward:  (..., n) -> (..., n)
    jacobian: (..., n) -> (..., n, n) of d x~ / d x
    hessian:  (..., n) -> (..., n, n, n), hessian[..., mu, a, b] = d^2 x~^mu / dx^a dx^b,
              symmetric in the last two slots
    inverse:  (..., n) -> (..., n), exact inverse of forward
    """

    dimension: int
    forward: Callable
    jacobian: Callable
    hessian: Callable
    inverse: Callable

    def inverse_jacobian(self, y):
        """d x / d x~ evaluated at chart point y of the new chart."""
        x = self.inverse(np.asarray(y, dtype=float))
        J = self.jacobian(x)
        try:
            return np.linalg.inv(J)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc)) from None

    def pull_velocity(self, y, v_new):
        """Map a velocity in the new chart back to the old chart."""
        Jinv = self.inverse_jacobian(y)
        return np.einsum("...ij,...j->...i", Jinv, v_new)


def identity_chart_map(n):
    zero_hess = lambda x: np.zeros(np.shape(x) + (n, n))
    eye = np.eye(n)
    return ChartMap(
        dimension=n,
        forward=lambda x: np.asarray(x, dtype=float).copy(),
        jacobian=lambda x: np.broadcast_to(eye, np.shape(x) + (n,)).copy(),
        hessian=zero_hess,
        inverse=lambda y: np.asarray(y, dtype=float).copy(),
    )


def linear_chart_map(matrix, offset=None):
    """x~ = A (x - offset); affine chart change with constant Jacobian A."""
    A = np.asarray(matrix, dtype=float)
    n = A.shape[0]
    if abs(np.linalg.det(A)) < 1e-14:
        raise SingularJacobian("linear chart map matrix is singular")
    Ainv = np.linalg.inv(A)
    b = np.zeros(n) if offset is None else np.asarray(offset, dtype=float)

    return ChartMap(
        dimension=n,
        forward=lambda x: np.einsum("ij,...j->...i", A, np.asarray(x, float) - b),
        jacobian=lambda x: np.broadcast_to(A, np.shape(x) + (n,)).copy(),
        hessian=lambda x: np.zeros(np.shape(x) + (n, n)),
        inverse=lambda y: np.einsum("ij,...j->...i", Ainv, np.asarray(y, float)) + b,
    )


def quadratic_chart_map(quad, linear=None, offset=None, newton_tol=1e-14):
    """x~ = Q(z, z)/2 + z with z = A (x - offset).

    `quad` is the constant symmetric array Q[mu, a, b]; the inverse is computed
    by Newton iteration, which converges on the balls used here because the
    quadratic correction is small compared to the identity.
    """
    Q = np.asarray(quad, dtype=float)
    n = Q.shape[0]
    A = np.eye(n) if linear is None else np.asarray(linear, dtype=float)
    pre = linear_chart_map(A, offset)

    def fwd_z(z):
        return z + 0.5 * np.einsum("mab,...a,...b->...m", Q, z, z)

    def jac_z(z):
        return np.eye(n) + np.einsum("mab,...b->...ma", Q, z)

    def forward(x):
        return fwd_z(pre.forward(x))

    def jacobian(x):
        z = pre.forward(x)
        return np.einsum("...ma,ab->...mb", jac_z(z), A)

    def hessian(x):
        # d^2/dx^2 of Q(Ax', Ax')/2 + Ax' is the constant pullback of Q by A.
        H = np.einsum("mab,ac,bd->mcd", Q, A, A)
        return np.broadcast_to(H, np.shape(x) + (n, n)).copy()

    def inverse(y):
        y = np.asarray(y, dtype=float)
        z = y.copy()
        for _ in range(60):
            res = fwd_z(z) - y
            if np.max(np.abs(res)) < newton_tol:
                break
            try:
                step = np.linalg.solve(jac_z(z), res[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise SingularJacobian(str(exc)) from None
            z = z - step
        return pre.inverse(z)

    return ChartMap(n, forward, jacobian, hessian, inverse)


def compose_chart_maps(first, second):
    """Chart map applying `first` then `second`."""
    n = first.dimension

    def forward(x):
        return second.forward(first.forward(x))

    def jacobian(x):
        y = first.forward(x)
        return np.einsum("...ij,...jk->...ik", second.jacobian(y), first.jacobian(x))

    def hessian(x):
        y = first.forward(x)
        J1 = first.jacobian(x)
        H1 = first.hessian(x)
        J2 = second.jacobian(y)
        H2 = second.hessian(y)
        term1 = np.einsum("...mcd,...ca,...db->...mab", H2, J1, J1)
        term2 = np.einsum("...mc,...cab->...mab", J2, H1)
        return term1 + term2

    def inverse(z):
        return first.inverse(second.inverse(z))

    return ChartMap(n, forward, jacobian, hessian, inverse)
