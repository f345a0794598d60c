"""Spectral geometry of the linear part.

Poincare test (origin outside the convex hull of the eigenvalues),
selection of the time-rotation direction for the integration ray,
resonance enumeration, flatness thresholds, and the transversality
radius of the field with respect to Euclidean spheres.

Sign convention: the rotation ``c`` (|c| = 1) is chosen so that every
``Re(c * lambda_j) < 0``; ``alpha`` and ``beta`` are the smallest and
largest of the distances ``-Re(c * lambda_j)`` from the separating line,
both positive.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .algebra import PolyVectorField, evaluate_many, iter_multiindices, total_degree
from .errors import NotPoincareError
from .sampling import sphere_points

#: sampled_estimate value meaning "transversal to every sphere"
UNBOUNDED = math.inf


@dataclass(frozen=True)
class PoincareCheck:
    """Outcome of the convex-hull test.

    On success ``direction`` is a unit complex number with
    ``Re(direction * lambda_j) < 0`` for all j; on failure ``witness``
    holds convex-combination weights placing 0 in the hull.
    """

    is_poincare: bool
    direction: complex | None = None
    witness: tuple[float, ...] | None = None

    def __bool__(self) -> bool:
        return self.is_poincare


@dataclass(frozen=True)
class SpectrumInfo:
    """Separating direction and margins of a Poincare spectrum."""

    eigenvalues: tuple[complex, ...]
    epsilon: float
    direction: complex
    alpha: float
    beta: float

    @property
    def margin(self) -> float:
        return self.alpha

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class ResonanceSet:
    """All (component, multi-index) pairs with vanishing divisor."""

    entries: tuple[tuple[int, tuple[int, ...]], ...]
    degree_bound: int
    tol: float

    def __contains__(self, item) -> bool:
        return tuple(item) in {(j, m) for j, m in self.entries}

    def max_degree(self) -> int:
        return max((total_degree(m) for _, m in self.entries), default=1)


@dataclass(frozen=True)
class RadiusReport:
    """Transversality radius estimates.

    ``certified_lower`` comes from the triangle-inequality bound and is a
    rigorous lower bound; ``sampled_estimate`` is the bisection root of
    the sampled sphere supremum (``math.inf`` when the field is
    transversal to every sphere, e.g. linear fields).
    """

    certified_lower: float
    sampled_estimate: float
    samples_per_sphere: int
    bisection_tol: float
    seed: int


def _margin_of(direction: complex, eigenvalues: np.ndarray) -> float:
    return float(np.min(-np.real(direction * eigenvalues)))


def _best_direction(eigenvalues: np.ndarray, grid: int = 4096, tol: float = 1e-12) -> tuple[complex, float]:
    """Maximize min_j(-Re(c*lambda_j)) over the unit circle: dense grid
    plus golden-section refinement (objective is piecewise smooth with at
    most n kinks)."""
    angles = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    dirs = np.exp(1j * angles)
    margins = np.min(-np.real(np.outer(dirs, eigenvalues)), axis=1)
    k = int(np.argmax(margins))
    lo = angles[k] - 2.0 * math.pi / grid
    hi = angles[k] + 2.0 * math.pi / grid

    def f(phi: float) -> float:
        return _margin_of(complex(np.exp(1j * phi)), eigenvalues)

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    phi = 0.5 * (a + b)
    c = complex(np.exp(1j * phi))
    return c, _margin_of(c, eigenvalues)


def check_poincare(eigenvalues) -> PoincareCheck:
    """Test whether 0 is strictly outside the convex hull of the
    eigenvalues; return a separating direction or a hull witness."""
    lam = np.asarray([complex(v) for v in eigenvalues], dtype=complex)
    if lam.size < 1:
        raise ValueError("need at least one eigenvalue")
    if not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite")
    c, margin = _best_direction(lam)
    if margin > 0.0:
        return PoincareCheck(True, direction=c)
    # 0 in the hull: find weights theta >= 0, sum 1, sum theta*lambda = 0
    n = lam.size
    a_eq = np.vstack([lam.real, lam.imag, np.ones(n)])
    res = linprog(c=np.zeros(n), A_eq=a_eq, b_eq=[0.0, 0.0, 1.0], bounds=[(0.0, None)] * n, method="highs")
    witness = tuple(float(t) for t in res.x) if res.success else None
    return PoincareCheck(False, witness=witness)


def select_direction(eigenvalues, epsilon: float = 0.0) -> SpectrumInfo:
    """Pick the rotation ``c`` maximizing the smallest distance of the
    rotated spectrum from the separating line, and fill in alpha, beta."""
    lam = np.asarray([complex(v) for v in eigenvalues], dtype=complex)
    c, margin = _best_direction(lam)
    if margin <= 0.0:
        raise NotPoincareError("origin lies in the convex hull of the eigenvalues")
    dists = -np.real(c * lam)
    return SpectrumInfo(
        eigenvalues=tuple(complex(v) for v in lam),
        epsilon=float(epsilon),
        direction=c,
        alpha=float(np.min(dists)),
        beta=float(np.max(dists)),
    )


def resonances(eigenvalues, degree_bound: int, tol: float = 1e-9) -> ResonanceSet:
    """All (j, m) with 2 <= |m| <= degree_bound and
    |<lambda, m> - lambda_j| <= tol.

    For a Poincare spectrum the enumeration is complete once
    ``degree_bound >= ceil(beta/alpha) + 1``.
    """
    if degree_bound < 2:
        raise ValueError("degree_bound must be >= 2")
    lam = np.asarray([complex(v) for v in eigenvalues], dtype=complex)
    n = lam.size
    entries = []
    for d in range(2, degree_bound + 1):
        for m in iter_multiindices(n, d):
            inner = complex(np.dot(lam, m))
            for j in range(n):
                if abs(inner - lam[j]) <= tol:
                    entries.append((j, m))
    entries.sort(key=lambda e: (total_degree(e[1]), e[1], e[0]))
    return ResonanceSet(tuple(entries), degree_bound, tol)


def min_flatness_flow(info: SpectrumInfo, deg_x0: int, q: float) -> int:
    """Smallest integer strictly greater than
    ``max(deg_x0, q (beta + eps) / (alpha + eps))``."""
    if q <= 1.0:
        raise ValueError("q must be > 1")
    bound = max(float(deg_x0), q * (info.beta + info.epsilon) / (info.alpha + info.epsilon))
    return int(math.floor(bound)) + 1


def transversality_radius(
    field: PolyVectorField,
    info: SpectrumInfo,
    *,
    samples_per_sphere: int = 4096,
    bisection_tol: float = 1e-4,
    radius_cap: float = 1e6,
    seed: int = 0,
) -> RadiusReport:
    """Estimate the largest R such that the rotated field points strictly
    inward on every sphere of radius < R.

    The sampled estimate bisects ``sup_{|z|=R} Re<c X(z), z>`` over R; the
    certified lower bound solves the triangle inequality
    ``margin * R^2 > sum |c_mj| R^(|m|+1)`` where ``margin`` discounts the
    nilpotent coupling (``alpha - epsilon``).
    """
    def report(cert: float, samp: float) -> RadiusReport:
        return RadiusReport(cert, samp, samples_per_sphere, bisection_tol, seed)

    if info.alpha <= 0.0:
        raise NotPoincareError("spectrum information carries no positive margin")
    nl_coeffs = field.coefficients
    margin = info.alpha - (info.epsilon if field.nilpotent_pattern else 0.0)
    if not nl_coeffs:
        return report(UNBOUNDED if margin > 0.0 else 0.0, UNBOUNDED if margin > 0.0 else 0.0)
    # certified: sum |c| R^(|m|-1) = margin, monotone in R
    if margin <= 0.0:
        certified = 0.0
    else:

        def excess(r: float) -> float:
            return sum(abs(c) * r ** (total_degree(m) - 1) for (_, m), c in nl_coeffs.items()) - margin

        hi = 1.0
        while excess(hi) < 0.0 and hi < radius_cap:
            hi *= 2.0
        lo = 0.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if excess(mid) < 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, hi):
                break
        certified = lo

    directions = sphere_points(field.n, 1.0, samples_per_sphere, seed)
    c = info.direction

    def sampled_sup(r: float) -> float:
        pts = r * directions
        vals = evaluate_many(field, pts)
        return float(np.max(np.real(np.sum(c * vals * np.conj(pts), axis=1))))

    hi = max(certified, bisection_tol)
    if sampled_sup(hi) >= 0.0:
        lo, found = 0.0, hi
    else:
        lo, found = hi, None
        while lo < radius_cap:
            trial = 2.0 * lo
            if sampled_sup(trial) >= 0.0:
                found = trial
                break
            lo = trial
    if found is None:
        return report(certified, UNBOUNDED)
    hi = found
    while hi - lo > bisection_tol:
        mid = 0.5 * (lo + hi)
        if sampled_sup(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    sampled = 0.5 * (lo + hi)
    return report(min(certified, sampled), sampled)
