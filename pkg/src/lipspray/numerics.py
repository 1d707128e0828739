"""Small numerical helpers: dyadic grids, quadrature, stable envelopes."""

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import cumulative_simpson


def dyadic_axis(lo, hi, level):
    """Nodes of the dyadic bisection grid on [lo, hi] with 2**level + 1 points.

    Refining by one level inserts exact midpoints, so the coarser nodes are
    reproduced bit-for-bit; estimates built on these grids are monotone under
    refinement by construction.
    """
    pts = np.array([lo, hi], dtype=float)
    for _ in range(level):
        mids = 0.5 * (pts[:-1] + pts[1:])
        out = np.empty(pts.size + mids.size)
        out[0::2] = pts
        out[1::2] = mids
        pts = out
    return pts


def level_for_density(density):
    """Smallest dyadic level whose grid has at least `density` points per axis."""
    if density < 2:
        raise ValueError("grid density must be >= 2 points per axis")
    return max(1, math.ceil(math.log2(density - 1)))


def cube_grid(center, radius, level):
    """All nodes of the dyadic product grid on the coordinate cube, shape (m, n)."""
    center = np.asarray(center, dtype=float)
    axes = [dyadic_axis(c - radius, c + radius, level) for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def ball_mask(points, center, radius):
    return np.linalg.norm(points - np.asarray(center), axis=-1) <= radius + 1e-12


def unit_directions(n, count):
    """Deterministic unit vectors covering S^{n-1}.

    n=1 gives {+1,-1}; n=2 equally spaced angles; n>=3 a product grid in
    spherical angles trimmed to `count` vectors.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        ang = np.arange(count) * (2.0 * np.pi / count)
        return np.stack([np.cos(ang), np.sin(ang)], axis=-1)
    m_phi = max(4, int(math.sqrt(2 * count)))
    m_theta = max(2, count // m_phi + 1)
    theta = (np.arange(1, m_theta + 1) - 0.5) * (np.pi / m_theta)
    phi = np.arange(m_phi) * (2.0 * np.pi / m_phi)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    dirs = np.stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1
    ).reshape(-1, 3)
    if n > 3:
        extra = np.zeros((dirs.shape[0], n - 3))
        dirs = np.concatenate([dirs, extra], axis=-1)
        dirs = np.concatenate([dirs, np.eye(n), -np.eye(n)], axis=0)
    return dirs


def phi1(z):
    """(e^z - 1)/z with the removable singularity filled in."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-6
    safe = np.where(small, 1.0, z)
    out = np.where(small, 1.0 + z / 2.0 + z * z / 6.0, np.expm1(safe) / safe)
    return out if out.ndim else float(out)


def exp_tail(D, k, terms=80):
    """Tail sum_{j>k} D^j / j! of the exponential series (k >= 0, D >= 0)."""
    if D == 0.0:
        return 0.0
    term = D ** (k + 1) / math.factorial(k + 1)
    total = 0.0
    for j in range(k + 1, k + 1 + terms):
        total += term
        term *= D / (j + 1)
        if term < 1e-300 or term < 1e-18 * total:
            total += term
            break
    return total


def cumulative_integral(values, dx):
    """Cumulative composite-Simpson integral along axis 0, zero at the first node."""
    return cumulative_simpson(values, dx=dx, axis=0, initial=0.0)


def thread_count():
    raw = os.environ.get("LIPSPRAY_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def parallel_map(fn, items):
    """Map honoring the LIPSPRAY_THREADS worker cap; order-preserving."""
    items = list(items)
    workers = thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
