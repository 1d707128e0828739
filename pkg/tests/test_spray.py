import numpy as np
import pytest

from lipspray.chart import ChartBox, identity_chart_map, linear_chart_map, quadratic_chart_map
from lipspray.errors import DomainViolation, UnboundedEstimate
from lipspray.gallery import build_gallery
from lipspray.solver import reference_geodesic
from lipspray.spray import (
    SprayField,
    check_homogeneity,
    connection_to_spray,
    estimate_constants,
    eval_spray,
    transform_spray,
)

from conftest import ball_points


def test_eval_spray_flat_is_zero(entries):
    eu = entries["euclidean"]
    x = np.array([0.3, -0.2])
    assert np.all(eval_spray(eu.spray, x, np.array([1.0, 2.0])) == 0.0)
    assert np.all(eval_spray(eu.spray, x, np.zeros(2)) == 0.0)


def test_eval_spray_domain_violation(entries):
    eu = entries["euclidean"]
    with pytest.raises(DomainViolation):
        eval_spray(eu.spray, np.array([5.0, 0.0]), np.array([1.0, 0.0]))


def test_sphere_spray_hand_values(entries):
    # standard sphere Christoffels at the equator: H vanishes for v = (0, 1)
    sph = entries["sphere"]
    H = eval_spray(sph.spray, np.array([np.pi / 2, 0.0]), np.array([0.0, 1.0]))
    assert np.allclose(H, 0.0, atol=1e-14)
    # generic point: H^theta = sin(t)cos(t) vphi^2, H^phi = -2 cot(t) vth vphi
    th = 1.2
    H = eval_spray(sph.spray, np.array([th, 0.3]), np.array([0.4, 0.7]))
    assert H[0] == pytest.approx(np.sin(th) * np.cos(th) * 0.49, abs=1e-14)
    assert H[1] == pytest.approx(-2 * np.cos(th) / np.sin(th) * 0.28, abs=1e-14)


def test_hartman_wintner_axis_symmetry():
    hw = build_gallery("hartman_wintner")
    H = eval_spray(hw.spray, np.zeros(2), np.array([1.0, 0.0]))
    assert np.allclose(H, 0.0)


def test_connection_spray_even_and_quadratic(entries, rng):
    sph = entries["sphere"]
    assert sph.spray.kind == "connection"
    assert sph.spray.reversible
    for _ in range(20):
        x = ball_points(rng, sph.box.center, sph.box.radius, 1)[0]
        v = rng.normal(size=2)
        Hv = sph.spray(x, v)
        assert np.array_equal(sph.spray(x, -v), Hv)  # exactly even
        assert np.allclose(sph.spray(x, 2 * v), 4 * Hv, rtol=1e-12, atol=1e-15)


def test_homogeneity_probe_passes_on_gallery(entries, rng):
    for name in ("sphere", "randers", "capped_cylinder", "product_lorentz"):
        entry = entries[name]
        samples = [
            (x, rng.normal(size=entry.spray.dimension))
            for x in ball_points(rng, entry.box.center, 0.8 * entry.box.radius, 12)
        ]
        rep = check_homogeneity(entry.spray, samples)
        tol = 1e-12 if entry.spray.kind == "connection" else 1e-8
        assert rep.worst <= tol, name
        assert rep.passed


def test_homogeneity_probe_catches_degree_mismatch():
    broken = SprayField(dimension=2, func=lambda x, v: v)  # degree 1, not 2
    samples = [(np.zeros(2), np.array([1.0, 0.5]))]
    rep = check_homogeneity(broken, samples, scales=(2.0,))
    assert not rep.passed
    assert rep.worst > 0.1


def test_estimate_constants_flat_zero(entries):
    est = estimate_constants(entries["euclidean"].spray, entries["euclidean"].box,
                             grid_density=4)
    assert (est.alpha, est.beta, est.M) == (0.0, 0.0, 0.0)
    assert not est.certified


def test_estimate_constants_sphere_stable(entries):
    est = estimate_constants(entries["sphere"].spray, entries["sphere"].box,
                             grid_density=16)
    assert est.alpha > 0 and est.beta > 0 and est.M > 0
    for ratio in est.refinement_ratios.values():
        assert ratio <= 1.1


def test_estimate_constants_monotone_under_refinement(entries):
    sph = entries["sphere"]
    coarse = estimate_constants(sph.spray, sph.box, grid_density=8)
    fine = estimate_constants(sph.spray, sph.box, grid_density=16)
    assert fine.alpha >= coarse.alpha - 1e-12
    assert fine.beta >= coarse.beta - 1e-12
    assert fine.M >= coarse.M - 1e-12


def test_estimate_constants_hartman_wintner_unbounded():
    hw = build_gallery("hartman_wintner")
    with pytest.raises(UnboundedEstimate) as err:
        estimate_constants(hw.spray, hw.box, grid_density=16)
    assert err.value.ratio >= 2.0


def test_transform_spray_identity(entries, rng):
    sph = entries["sphere"]
    moved = transform_spray(sph.spray, identity_chart_map(2))
    for _ in range(10):
        x = ball_points(rng, sph.box.center, 0.5, 1)[0]
        v = rng.normal(size=2)
        assert np.allclose(moved(x, v), sph.spray(x, v), atol=1e-12)


def test_transform_spray_linear_map(entries, rng):
    sph = entries["sphere"]
    A = np.array([[2.0, 0.5], [0.0, 1.0]])
    moved = transform_spray(sph.spray, linear_chart_map(A))
    for _ in range(10):
        x = ball_points(rng, sph.box.center, 0.5, 1)[0]
        v = rng.normal(size=2)
        expected = A @ sph.spray(x, v)
        assert np.allclose(moved(A @ x, A @ v), expected, atol=1e-12)


def test_transform_flat_quadratic_map_straight_line_images():
    # geodesics of the transformed flat spray are images of straight lines
    n = 2
    flat = SprayField(n, lambda x, v: np.zeros(np.broadcast_shapes(np.shape(x), np.shape(v))))
    Q = np.zeros((n, n, n))
    Q[0, 0, 1] = Q[0, 1, 0] = 0.3
    Q[1, 1, 1] = -0.2
    cmap = quadratic_chart_map(Q)
    moved = transform_spray(flat, cmap)
    x0 = np.array([0.05, -0.1])
    w = np.array([0.12, 0.2])
    sol = reference_geodesic(moved, cmap.forward(x0), cmap.jacobian(x0) @ w,
                             T=1.0, steps=400)
    line = x0 + sol.ts[:, None] * w
    assert np.max(np.abs(sol.xs - cmap.forward(line))) < 1e-6
    # the transform of H == 0 is the pure Hessian term
    y = cmap.forward(x0)
    vtil = cmap.jacobian(x0) @ w
    expected = np.einsum("mab,a,b->m", Q, w, w)
    assert np.allclose(moved(y, vtil), expected, atol=1e-12)


def test_chart_covariance_of_geodesics(entries):
    # mapped sphere geodesics solve the transformed spray
    sph = entries["sphere"]
    A = np.array([[1.5, 0.2], [-0.1, 0.8]])
    cmap = linear_chart_map(A, offset=sph.box.center)
    moved = transform_spray(sph.spray, cmap)
    x0 = sph.box.center + np.array([0.05, -0.04])
    v0 = np.array([0.11, 0.13])
    direct = reference_geodesic(sph.spray, x0, v0, steps=800)
    mapped = reference_geodesic(moved, cmap.forward(x0), A @ v0, steps=800)
    assert np.max(np.abs(mapped.xs - cmap.forward(direct.xs))) < 1e-6
