"""Deterministic low-discrepancy point sets on complex spheres and balls.

Points in C^n are drawn through a seeded scrambled Sobol sequence on
R^(2n); the same (count, seed) pair always returns the same points, which
is what makes reports reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, qmc


def _sobol(dim: int, count: int, seed: int) -> np.ndarray:
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    m = max(1, math.ceil(math.log2(max(count, 1))))
    pts = sampler.random_base2(m)
    while pts.shape[0] < count:  # pragma: no cover - base2 already covers
        pts = np.vstack([pts, sampler.random_base2(m)])
    return pts[:count]

def _gaussian_directions(n: int, count: int, seed: int) -> np.ndarray:
    u = _sobol(2 * n, count, seed)
    eps = 1e-12
    g = norm.ppf(np.clip(u, eps, 1.0 - eps))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return g / norms


def sphere_points(n: int, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` points on the Euclidean sphere of ``radius`` in C^n,
    returned as a complex array of shape (count, n)."""
    if count <= 0:
        return np.zeros((0, n), dtype=complex)
    g = _gaussian_directions(n, count, seed)
    return radius * (g[:, 0::2] + 1j * g[:, 1::2])


def ball_points(n: int, radius: float, count: int, seed: int = 0) -> np.ndarray:
    """``count`` points distributed uniformly in the Euclidean ball of
    ``radius`` in C^n (shape (count, n), complex)."""
    if count <= 0:
        return np.zeros((0, n), dtype=complex)
    u = _sobol(2 * n + 1, count, seed)
    eps = 1e-12
    g = norm.ppf(np.clip(u[:, : 2 * n], eps, 1.0 - eps))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    g = g / norms
    r = radius * u[:, 2 * n :] ** (1.0 / (2 * n))
    g = g * r
    return g[:, 0::2] + 1j * g[:, 1::2]
