import numpy as np
import pytest

from lipspray.convexity import certify_ball
from lipspray.distance import DistanceGeometry
from lipspray.gallery import build_gallery

GEOMETRIES = (
    "euclidean",
    "sphere",
    "minkowski",
    "capped_cylinder",
    "randers",
    "product_lorentz",
)


@pytest.fixture(scope="session")
def entries():
    return {name: build_gallery(name) for name in GEOMETRIES}


@pytest.fixture(scope="session")
def certificates(entries):
    """Shared certificates; estimating constants is the expensive step."""
    out = {}
    for name, entry in entries.items():
        out[name] = certify_ball(
            entry.spray, entry.box.center, entry.box.radius,
            grid_density=entry.grid_density,
        )
        assert out[name].status == "certified-sampled", name
    return out


@pytest.fixture(scope="session")
def geoms(entries, certificates):
    return {
        name: DistanceGeometry(
            entries[name].spray,
            entries[name].tensor,
            certificates[name].constants,
            orientation=entries[name].time_orientation,
        )
        for name in GEOMETRIES
    }


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def ball_points(rng, center, radius, m):
    center = np.asarray(center, dtype=float)
    n = center.size
    u = rng.normal(size=(m, n))
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    return center + u * (radius * rng.uniform(size=(m, 1)) ** (1.0 / n))
