import math

import numpy as np
import pytest

from lipspray.distance import (
    OracleDistanceGeometry,
    PerturbationFamily,
    distance_ball_convexity_probe,
    gauss_check,
    gauss_probe,
    lorentzian_two_point_probe,
    maximization_probe,
    minimization_probe,
    radial_flow_probe,
    spacelike_level_probe,
    strong_convexity_probe_riemannian,
)
from lipspray.finsler import classify_vector


def test_squared_distance_flat(geoms):
    fld = geoms["euclidean"].field(np.zeros(2))
    q = np.array([0.06, -0.03])
    assert fld.squared(q) == pytest.approx(float(q @ q), abs=1e-12)
    # flat Lorentzian plane: D^2((0,0),(t,x)) = -t^2 + x^2, scaled inside the ball
    fld = geoms["minkowski"].field(np.zeros(2))
    q = np.array([0.2, 0.1])
    assert fld.squared(q) == pytest.approx(-0.03, abs=1e-12)


def test_squared_distance_sphere_arc(entries, geoms):
    sph = entries["sphere"]
    fld = geoms["sphere"].field(sph.box.center)
    q = sph.box.center + np.array([0.0, 0.095])
    # equatorial arc: distance is exactly the phi-offset
    assert fld.squared(q) == pytest.approx(0.095**2, abs=1e-7)


def test_gauss_gradient_flat(geoms):
    fld = geoms["euclidean"].field(np.zeros(2))
    q = np.array([0.08, 0.02])
    assert np.allclose(fld.gradient(q), 2 * q, atol=1e-9)
    fld = geoms["minkowski"].field(np.zeros(2))
    grad = fld.gradient(q)
    assert np.allclose(grad, [-2 * q[0], 2 * q[1]], atol=1e-9)


def test_gauss_gradient_annihilates_level_tangent(entries, geoms):
    # orthogonality of level circles: tangent from the oracle rotation
    sph = entries["sphere"]
    p = sph.box.center
    fld = geoms["sphere"].field(p)
    v0 = np.array([0.05, 0.06])
    q = sph.oracle.geodesic(p, v0, 1.0)[0]
    h = 1e-5
    rot = lambda s: sph.oracle.geodesic(
        p, np.array([v0[0] * np.cos(s) - v0[1] * np.sin(s),
                     v0[0] * np.sin(s) + v0[1] * np.cos(s)]), 1.0)[0]
    tangent = (rot(h) - rot(-h)) / (2 * h)
    assert abs(fld.gradient(q) @ tangent) < 1e-6


def test_gauss_check_and_radial_eigenvalue(geoms, entries):
    for name in ("euclidean", "sphere"):
        entry = entries[name]
        g = geoms[name]
        fld = g.field(entry.box.center)
        q = entry.box.center + np.array([0.05, 0.03])
        worst = gauss_check(fld, q, np.eye(2), h=1e-4)
        assert worst <= 1e-5 if name == "sphere" else worst <= 1e-10
        # Euler homogeneity: dD^2(P) = 2 D^2
        P = fld.position(q)
        assert fld.gradient(q) @ P == pytest.approx(2 * fld.squared(q), abs=1e-6)


def test_gauss_probe_sweeps(geoms, entries, certificates):
    for name in ("sphere", "randers"):
        cert = certificates[name]
        rep = gauss_probe(geoms[name], entries[name].box.center,
                          0.5 * cert.delta_ball, n_samples=12, seed=2)
        assert rep.passed, name


def test_radial_flow_euclid_exact_decay(geoms):
    rep = radial_flow_probe(geoms["euclidean"], np.zeros(2), level=0.04,
                            t=math.log(2.0), n_points=3, steps=16, seed=1)
    assert rep.passed
    assert rep.details["target"] == pytest.approx(0.01)
    rep = radial_flow_probe(geoms["euclidean"], np.zeros(2), level=0.04,
                            t=0.0, n_points=2, steps=4, seed=1)
    assert rep.passed and rep.worst < 1e-9


def test_radial_flow_sphere(geoms, entries):
    rep = radial_flow_probe(geoms["sphere"], entries["sphere"].box.center,
                            level=0.01, t=0.5, n_points=3, steps=12, seed=4)
    assert rep.passed


def test_strong_convexity_sphere_pass_and_curvature_fail(entries, geoms, certificates):
    cert = certificates["sphere"]
    rep = strong_convexity_probe_riemannian(
        geoms["sphere"], cert.center, 0.5 * cert.delta_ball, epsilon=0.2,
        n_samples=15, seed=3)
    assert rep.passed, rep.details
    sph = entries["sphere"]
    oracle_geom = OracleDistanceGeometry(sph.oracle, sph.tensor)
    rep = strong_convexity_probe_riemannian(
        oracle_geom, sph.box.center, 1.2, epsilon=0.2, n_samples=25, seed=3)
    assert not rep.passed
    assert rep.worst > 0.2


def test_distance_ball_convexity(geoms, entries, certificates):
    cert = certificates["sphere"]
    rep = distance_ball_convexity_probe(geoms["sphere"], cert.center,
                                        0.4 * cert.delta_ball, n_pairs=40, seed=5)
    assert rep.passed and rep.failures == 0


def test_lorentzian_two_point(geoms, certificates):
    cert = certificates["minkowski"]
    rep = lorentzian_two_point_probe(geoms["minkowski"], cert.center,
                                     0.5 * cert.delta_ball, epsilon=1e-12,
                                     n_samples=10, seed=6)
    assert rep.passed
    assert rep.details["aux_metric_min_eig"] > 0
    cert = certificates["product_lorentz"]
    rep = lorentzian_two_point_probe(geoms["product_lorentz"], cert.center,
                                     0.5 * cert.delta_ball, epsilon=0.3,
                                     n_samples=10, seed=6)
    assert rep.passed, rep.details


def test_minkowski_hyperboloid_chord_midpoint():
    # points (cosh a, +-sinh a) on the level -1; their chord midpoint lies
    # strictly below the level: D^2 = -cosh(a)^2 < -1
    a = 0.4
    end1 = np.array([math.cosh(a), math.sinh(a)])
    end2 = np.array([math.cosh(a), -math.sinh(a)])
    mid = 0.5 * (end1 + end2)
    d2 = -mid[0] ** 2 + mid[1] ** 2
    assert d2 == pytest.approx(-math.cosh(a) ** 2)
    assert d2 < -1.0
    # the connecting straight segment is spacelike
    seg = end2 - end1
    assert -seg[0] ** 2 + seg[1] ** 2 > 0


def test_spacelike_level_probe_minkowski(geoms, certificates):
    cert = certificates["minkowski"]
    delta = cert.delta_ball
    q = cert.center - np.array([0.45 * delta, 0.0])
    o_center = cert.center + np.array([0.35 * delta, 0.0])
    rep = spacelike_level_probe(geoms["minkowski"], q, o_center, 0.15 * delta,
                                epsilon=1e-9, n_samples=8, seed=7)
    assert rep.passed, rep.details
    assert rep.details["sublevel_margin"] < 0


def test_spacelike_level_probe_product(geoms, certificates):
    cert = certificates["product_lorentz"]
    delta = cert.delta_ball
    e0 = np.array([1.0, 0.0, 0.0])
    q = cert.center - 0.45 * delta * e0
    o_center = cert.center + 0.35 * delta * e0
    rep = spacelike_level_probe(geoms["product_lorentz"], q, o_center,
                                0.15 * delta, epsilon=0.3, n_samples=8, seed=8)
    assert rep.passed, rep.details


def test_spacelike_level_rejects_nonchronological(geoms, certificates):
    cert = certificates["minkowski"]
    q = cert.center  # O around a spacelike-displaced center
    o_center = cert.center + np.array([0.0, 0.3 * cert.delta_ball])
    rep = spacelike_level_probe(geoms["minkowski"], q, o_center,
                                0.1 * cert.delta_ball, epsilon=0.3, seed=9)
    assert not rep.passed
    assert "precondition" in rep.details


def test_minimization_probes(geoms, entries, certificates):
    for name in ("euclidean", "sphere", "randers"):
        cert = certificates[name]
        u = np.ones(2) / math.sqrt(2.0)
        p = cert.center - 0.3 * cert.delta_ball * u
        q = cert.center + 0.3 * cert.delta_ball * u
        for mode in ("smooth-bump", "piecewise-geodesic"):
            fam = PerturbationFamily(mode, (0.01, 0.02))
            rep = minimization_probe(geoms[name], p, q, fam, n_directions=8,
                                     seed=10)
            assert rep.passed, (name, mode, rep.details)
    # non-reversibility: forward and reversed lengths differ on randers
    rep = minimization_probe(geoms["randers"],
                             certificates["randers"].center - [0.1, 0.0],
                             certificates["randers"].center + [0.1, 0.0],
                             PerturbationFamily("smooth-bump", (0.02,)),
                             n_directions=4, seed=11)
    assert abs(rep.details["reversed_length"] - rep.details["geodesic_length"]) > 1e-6


def test_twin_paradox_kink(geoms, certificates):
    # flat spacetime: the kinked traveler ages less
    cert = certificates["minkowski"]
    T = 0.3
    p = cert.center - np.array([T / 2, 0.0])
    q = cert.center + np.array([T / 2, 0.0])
    fam = PerturbationFamily("piecewise-geodesic", (0.05,), causal=True)
    rep = maximization_probe(geoms["minkowski"], p, q, fam, n_directions=6,
                             seed=12)
    assert rep.passed
    assert rep.details["proper_time"] == pytest.approx(T, abs=1e-9)
    a = 0.05
    expected_kink = 2 * math.sqrt((T / 2) ** 2 - a**2)
    assert expected_kink < T  # the hand inequality the probe generalizes


def test_maximization_probes(geoms, certificates):
    for name in ("minkowski", "product_lorentz"):
        cert = certificates[name]
        n = cert.center.size
        e0 = np.zeros(n)
        e0[0] = 1.0
        p = cert.center - 0.35 * cert.delta_ball * e0
        q = cert.center + 0.35 * cert.delta_ball * e0
        for mode in ("smooth-bump", "piecewise-geodesic"):
            fam = PerturbationFamily(mode, (0.01, 0.02), causal=True)
            rep = maximization_probe(geoms[name], p, q, fam, n_directions=8,
                                     seed=13)
            assert rep.passed, (name, mode, rep.details)
            assert rep.details["log_causal_ok"]


def test_causal_monotonicity_along_timelike_curves(geoms, certificates):
    # D^2_p strictly decreases along future timelike curves from p's future
    cert = certificates["minkowski"]
    fld = geoms["minkowski"].field(cert.center - np.array([0.2, 0.0]))
    ts = np.linspace(0.05, 0.2, 6)
    values = [fld.squared(cert.center + np.array([t, 0.3 * t])) for t in ts]
    assert all(b < a for a, b in zip(values, values[1:]))


def test_classification_of_connecting_velocity(geoms, certificates):
    # timelike-related endpoints produce future timelike log velocities
    cert = certificates["minkowski"]
    g = geoms["minkowski"]
    conn = g.connect(cert.center - [0.2, 0.0], cert.center + [0.2, 0.05])
    c = classify_vector(g.tensor, g.orientation, cert.center - [0.2, 0.0],
                        conn.initial_velocity)
    assert c.kind == "timelike" and c.orientation == "future"


def test_gradient_constant_stable_across_steps(geoms, entries, certificates):
    # residual <= C h with C stable between h = 1e-3 and h = 1e-4
    cert = certificates["sphere"]
    reps = {
        h: gauss_probe(geoms["sphere"], cert.center, 0.5 * cert.delta_ball,
                       n_samples=8, h=h, seed=14)
        for h in (1e-3, 1e-4)
    }
    c3 = reps[1e-3].details["C"]
    c4 = reps[1e-4].details["C"]
    assert c4 <= 10 * c3 + 1e-6
    assert all(r.passed for r in reps.values())


def test_strong_convexity_flat_exact(geoms, certificates):
    cert = certificates["euclidean"]
    rep = strong_convexity_probe_riemannian(
        geoms["euclidean"], cert.center, 0.5 * cert.delta_ball, epsilon=1e-7,
        n_samples=10, seed=15)
    assert rep.passed
    assert rep.worst <= 1e-8


def test_minimization_bump_excess_is_quadratic(geoms, certificates):
    # flat space: excess length of a sine bump scales like amplitude^2
    cert = certificates["euclidean"]
    p = cert.center - np.array([0.15, 0.0])
    q = cert.center + np.array([0.15, 0.0])
    excesses = {}
    for amp in (0.02, 0.04):
        rep = minimization_probe(geoms["euclidean"], p, q,
                                 PerturbationFamily("smooth-bump", (amp,)),
                                 n_directions=1, seed=16)
        excesses[amp] = rep.details["strict_excess"]
    assert excesses[0.04] / excesses[0.02] == pytest.approx(4.0, rel=0.05)
    assert excesses[0.02] > 0
