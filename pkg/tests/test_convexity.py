import numpy as np
import pytest

from lipspray.convexity import (
    certify_ball,
    containment_probe,
    normalize_chart_at,
    position_inequality_probe,
    z_functional,
)
from lipspray.errors import DegenerateMetric
from lipspray.finsler import FundamentalTensor
from lipspray.gallery import build_gallery
from lipspray.spray import transform_spray


def _constant_tensor(mat, signature):
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    return FundamentalTensor(
        n, lambda x, v: np.broadcast_to(mat, np.shape(x) + (n,)).copy(),
        signature, dg_dx=lambda x, v: np.zeros(np.shape(x) + (n, n)),
        velocity_dependent=False,
    )


def test_z_functional_flat_and_center(entries):
    eu = entries["euclidean"]
    x = np.array([0.3, 0.1])
    e = np.array([1.0, 0.0])
    assert z_functional(eu.spray, x, e) == 1.0
    sph = entries["sphere"]
    assert z_functional(sph.spray, sph.box.center, e,
                        center=sph.box.center) == pytest.approx(1.0)


def test_certified_z_minimum_bound(entries, certificates):
    for name in ("sphere", "randers", "product_lorentz"):
        cert = certificates[name]
        c = cert.constants
        floor = 1.0 - c.delta * c.M
        assert floor > 0
        assert cert.z_min_plus >= floor - 1e-9
        assert cert.z_min_minus >= floor - 1e-9


def test_certify_euclidean_delta(certificates):
    cert = certificates["euclidean"]
    assert cert.delta_ball == pytest.approx(0.45)
    assert cert.z_min_plus == 1.0 and cert.z_min_minus == 1.0


def test_certify_hartman_wintner_refused():
    hw = build_gallery("hartman_wintner")
    cert = certify_ball(hw.spray, hw.box.center, hw.box.radius)
    assert cert.status == "failed"
    assert "unbounded-estimate" in cert.diagnostic
    assert cert.constants is None


def test_certificate_serialization(certificates):
    d = certificates["sphere"].to_dict()
    assert d["status"] == "certified-sampled"
    assert {"r", "M", "alpha", "beta", "delta", "V", "A", "B", "D"} <= set(d["constants"])
    assert d["estimate"]["certified"] is False


def test_containment_sphere_and_reverse_randers(entries, certificates):
    rep = containment_probe(certificates["sphere"], entries["sphere"].spray,
                            n_pairs=50, seed=11)
    assert rep.passed and rep.failures == 0
    rep = containment_probe(certificates["randers"],
                            entries["randers"].spray.reverse(),
                            n_pairs=50, seed=12)
    assert rep.passed and rep.failures == 0


def test_normalize_scaled_lorentz_metric():
    tensor = _constant_tensor(np.diag([-4.0, 1.0]), "lorentzian")
    nc = normalize_chart_at(np.zeros(2), tensor=tensor)
    assert np.allclose(nc.model, np.diag([-1.0, 1.0]))
    Jinv = np.linalg.inv(nc.map.jacobian(np.zeros(2)))
    assert np.allclose(np.abs(Jinv), np.diag([0.5, 1.0]), atol=1e-12)
    # congruence recovers eta
    recovered = Jinv.T @ np.diag([-4.0, 1.0]) @ Jinv
    assert np.allclose(recovered, np.diag([-1.0, 1.0]), atol=1e-12)


def test_normalize_rejects_degenerate():
    tensor = _constant_tensor(np.diag([1.0, 0.0]), "riemannian")
    with pytest.raises(DegenerateMetric):
        normalize_chart_at(np.zeros(2), tensor=tensor)


def test_normalize_kills_christoffels_off_equator(entries):
    # sphere at a non-equator point: transformed quadratic form vanishes at p
    sph = entries["sphere"]
    p = np.array([np.pi / 2 - 0.3, 0.1])
    nc = normalize_chart_at(p, tensor=sph.tensor, christoffel=sph.christoffel)
    moved = transform_spray(sph.spray, nc.map)
    origin = nc.map.forward(p)
    assert np.allclose(origin, 0.0, atol=1e-12)
    eye = np.eye(2)
    # polarization of H~ at the image of p: quadratic form must vanish
    for a in range(2):
        for b in range(2):
            gamma_ab = -0.5 * (
                moved(origin, eye[a] + eye[b])
                - moved(origin, eye[a])
                - moved(origin, eye[b])
            )
            assert np.max(np.abs(gamma_ab)) < 1e-10


def test_normalized_chart_metric_is_model(entries):
    sph = entries["sphere"]
    p = np.array([np.pi / 2 - 0.3, 0.1])
    nc = normalize_chart_at(p, tensor=sph.tensor, christoffel=sph.christoffel)
    Jinv = np.linalg.inv(nc.map.jacobian(p))
    g = sph.tensor(p, np.eye(2)[0])
    assert np.allclose(Jinv.T @ g @ Jinv, nc.model, atol=1e-12)


def test_position_inequalities_flat(entries, certificates):
    # every deviation quantity vanishes; |P| itself equals the chord length
    rep = position_inequality_probe(certificates["euclidean"],
                                    entries["euclidean"].spray,
                                    epsilon=10.0, n_samples=8, seed=4,
                                    max_halvings=0)
    ratios = rep.details["ratios"]
    for key in ("four_point", "base_diff", "chord", "reversal"):
        assert ratios[key] <= 1e-9, key


def test_position_inequalities_sphere_and_shrinking(entries, certificates):
    cert = certificates["sphere"]
    rep = position_inequality_probe(cert, entries["sphere"].spray, epsilon=0.1,
                                    n_samples=10, seed=5)
    assert rep.passed
    # shrinking the ball improves the worst chord ratio
    big = position_inequality_probe(cert, entries["sphere"].spray, epsilon=10.0,
                                    n_samples=10, seed=5, max_halvings=0)
    small_cert = certify_ball(entries["sphere"].spray, cert.center,
                              cert.box.radius, safety=0.45)
    small = position_inequality_probe(small_cert, entries["sphere"].spray,
                                      epsilon=10.0, n_samples=10, seed=5,
                                      max_halvings=0)
    assert small.details["ratios"]["chord"] <= big.details["ratios"]["chord"] + 1e-9


def test_position_reversal_quadratic_smallness(entries, certificates):
    # connection on a Gamma(p)=0 chart: |P(q1,q2)+P(q2,q1)| = O(|q2-q1|^2)
    cert = certificates["sphere"]
    rep = position_inequality_probe(cert, entries["sphere"].spray, epsilon=0.1,
                                    n_samples=10, seed=6)
    assert rep.details["reversal_included"]
    assert rep.details["ratios"]["reversal"] <= 0.1


def test_reverse_spray_certifies_with_identical_delta(entries, certificates):
    # z- sampling already covers the reverse spray; the constants agree because
    # the sampled slabs are symmetric under v -> -v
    rd = entries["randers"]
    reverse_cert = certify_ball(rd.spray.reverse(), rd.box.center, rd.box.radius)
    assert reverse_cert.status == "certified-sampled"
    assert reverse_cert.delta_ball == pytest.approx(
        certificates["randers"].delta_ball, rel=1e-12)


def test_normalize_already_normalized_is_identity(entries):
    eu = entries["euclidean"]
    nc = normalize_chart_at(np.zeros(2), tensor=eu.tensor,
                            christoffel=eu.christoffel)
    x = np.array([0.3, -0.4])
    assert np.allclose(nc.map.forward(x), x, atol=1e-14)
    assert np.allclose(nc.map.jacobian(x), np.eye(2), atol=1e-14)
