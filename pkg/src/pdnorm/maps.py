"""Linearization of contracting biholomorphisms by the one-step series.

The linearizer is accumulated as ``L(z) = z + sum_l Delta_l(z)`` with
``Delta_l = A^(-l) f1(F^l(z))`` and ``f1 = A^(-1) F1``; the iterates of F
are produced by direct polynomial evaluation (never by composing maps),
and ``A^(-l)`` is applied by repeated back-substitution against the fixed
bidiagonal Jordan factors.  For a diagonal linear part the repeated solve
collapses to ``exp(-l log mu)``, which is used instead because it keeps
intermediates scaled (no overflow on the way to a tiny product).

The classical Koenigs recursion is implemented independently in 1D as a
cross-validation oracle for the series construction.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .algebra import CoeffTable, evaluate, total_degree, iter_multiindices
from .errors import (
    ContractionImpossibleError,
    EscapeError,
    MixedSpectrumError,
    NoConvergenceError,
    NonInvertibleError,
)
from .normal_form import PreparedMap, _map_flatness_bound
from .normalizer import LinearizationSample
from .spectrum import ResonanceSet

#: r_delta value meaning "the contraction bound holds on every ball"
UNBOUNDED = math.inf


@dataclass(frozen=True)
class MapPoincareCheck:
    """Contraction test outcome; ``hint`` explains the expanding case."""

    is_contracting: bool
    hint: str | None = None

    def __bool__(self) -> bool:
        return self.is_contracting


@dataclass(frozen=True)
class MapSpec:
    """Contracting-map data: Jordan linear part plus the nonlinear table.

    ``f1`` is the derived table of ``A^(-1) F1`` and rho_star/rho_sup the
    extreme eigenvalue moduli.
    """

    n: int
    eigenvalues: tuple[complex, ...]
    epsilon: float
    nilpotent_pattern: frozenset[int]
    f1_table: CoeffTable

    def __post_init__(self):
        mods = [abs(v) for v in self.eigenvalues]
        if any(m == 0.0 for m in mods):
            raise NonInvertibleError("zero eigenvalue: the map is not invertible")
        if max(mods) >= 1.0:
            raise MixedSpectrumError("MapSpec requires sup |mu_j| < 1")

    @classmethod
    def from_prepared(cls, prep: PreparedMap) -> "MapSpec":
        return cls(prep.n, prep.eigenvalues, prep.epsilon, prep.nilpotent_pattern, prep.f1.coefficients)

    @property
    def rho_star(self) -> float:
        return min(abs(v) for v in self.eigenvalues)

    @property
    def rho_sup(self) -> float:
        return max(abs(v) for v in self.eigenvalues)

    def solve_linear(self, b: np.ndarray) -> np.ndarray:
        """x with (S + eps N) x = b by bidiagonal back-substitution."""
        n = self.n
        x = np.zeros(n, dtype=complex)
        for i in range(n - 1, -1, -1):
            v = b[i]
            if self.epsilon and i in self.nilpotent_pattern:
                v = v - self.epsilon * x[i + 1]
            x[i] = v / self.eigenvalues[i]
        return x

    def derived_f1(self) -> CoeffTable:
        """Coefficient table of ``A^(-1) F1``."""
        by_index: dict[tuple[int, ...], np.ndarray] = {}
        for (j, m), c in self.f1_table.items():
            vec = by_index.setdefault(m, np.zeros(self.n, dtype=complex))
            vec[j] += c
        out: CoeffTable = {}
        for m, vec in by_index.items():
            x = self.solve_linear(vec)
            for j in range(self.n):
                if abs(x[j]) > 0.0:
                    out[(j, m)] = x[j]
        return out


@dataclass(frozen=True)
class MapSeriesState:
    """One term of the series: index, partial sum, term norm, the
    contraction data (theta, R_delta), and the geometric tail bound on
    everything not yet summed."""

    l: int
    partial: np.ndarray
    delta_norm: float
    theta: float
    R_delta: float
    tail_bound: float


def check_poincare_map(eigenvalues) -> MapPoincareCheck:
    """True iff max |mu_j| < 1; expanding spectra come back False with an
    inversion hint, mixed ones raise."""
    mu = [complex(v) for v in eigenvalues]
    mods = [abs(v) for v in mu]
    if any(m == 0.0 for m in mods):
        raise NonInvertibleError("zero eigenvalue: the map is not invertible")
    if max(mods) < 1.0:
        return MapPoincareCheck(True)
    if min(mods) > 1.0:
        return MapPoincareCheck(False, hint="all |mu_j| > 1: linearize the inverse map")
    raise MixedSpectrumError("eigenvalue moduli straddle the unit circle")


def default_delta(spec: MapSpec) -> float:
    return (1.0 - spec.rho_sup - spec.epsilon) / 10.0


def r_delta(spec: MapSpec, delta: float, *, radius_cap: float = UNBOUNDED) -> float:
    """Largest R such that the triangle-inequality bound certifies
    ``||F(z)|| <= (rho_sup + eps + delta) ||z||`` on ``||z|| <= R``."""
    if spec.rho_sup + spec.epsilon + delta >= 1.0:
        raise ContractionImpossibleError(
            f"rho_sup + epsilon + delta = {spec.rho_sup + spec.epsilon + delta:g} >= 1"
        )
    if not spec.f1_table:
        return radius_cap

    def excess(r: float) -> float:
        return coefficient_norm_table(spec.f1_table, r) - delta

    hi = 1.0
    while excess(hi) < 0.0 and hi < radius_cap:
        hi *= 2.0
    if excess(hi) < 0.0:
        return radius_cap
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, hi):
            break
    return lo


def coefficient_norm_table(table: CoeffTable, radius: float, flat_order: int = 1) -> float:
    """``sum |c| radius^(|m| - flat_order)`` over a raw coefficient table."""
    return float(sum(abs(c) * radius ** (total_degree(m) - flat_order) for (_, m), c in table.items()))


def _theta(spec: MapSpec, m: int, delta: float) -> float:
    return (spec.rho_sup + spec.epsilon + delta) ** m / spec.rho_star


def _apply_inverse_power(spec: MapSpec, u: np.ndarray, l: int) -> np.ndarray:
    """A^(-l) u; log-scaled closed form for diagonal A (the separate
    factors mu^-l and u would overflow/underflow long before their
    product does), repeated back-substitution otherwise."""
    if l == 0 or not u.any():
        return u
    if spec.epsilon == 0.0 or not spec.nilpotent_pattern:
        out = np.zeros_like(u)
        for j, uj in enumerate(u):
            if uj == 0.0:
                continue
            lm = cmath.log(spec.eigenvalues[j])
            mag = math.log(abs(uj)) - l * lm.real
            if mag < -745.0:
                continue
            out[j] = cmath.exp(complex(mag, cmath.phase(uj) - l * lm.imag))
        return out
    out = u
    for _ in range(l):
        out = spec.solve_linear(out)
    return out


def series_states(
    prep: PreparedMap,
    z,
    tol: float,
    *,
    delta: float | None = None,
    l_max: int = 10_000,
) -> Iterator[MapSeriesState]:
    """Yield partial sums of the one-step series until the geometric tail
    bound ``C ||z||^m theta^(l+1) / (1 - theta)`` drops below ``tol``."""
    if prep.f0.coefficients:
        raise ValueError(
            "normal part is not linear (resonant terms below the flatness "
            "order); the one-step series linearizes only non-resonant maps"
        )
    spec = MapSpec.from_prepared(prep)
    z = np.asarray(z, dtype=complex)
    delta = default_delta(spec) if delta is None else delta
    theta = _theta(spec, prep.m, delta)
    if theta >= 1.0:
        raise ContractionImpossibleError(
            f"theta = {theta:g} >= 1 for m={prep.m}, delta={delta:g}; "
            "the flatness order is too small for this spectrum"
        )
    radius = r_delta(spec, delta)
    r = float(np.linalg.norm(z))
    if r >= radius:
        raise EscapeError(f"||z|| = {r:g} is outside the contraction radius {radius:g}")
    f1 = spec.derived_f1()
    if not f1:
        return
    c_const = coefficient_norm_table(f1, r, prep.m) * r**prep.m
    full = prep.full_map()
    partial = z.copy()
    w = z.copy()
    for l in range(l_max + 1):
        u = np.zeros(spec.n, dtype=complex)
        for (j, m), c in f1.items():
            term = c
            for k, e in enumerate(m):
                if e:
                    term *= w[k] ** e
            u[j] += term
        delta_l = _apply_inverse_power(spec, u, l)
        partial = partial + delta_l
        tail = c_const * theta ** (l + 1) / (1.0 - theta)
        yield MapSeriesState(l, partial.copy(), float(np.linalg.norm(delta_l)), theta, radius, tail)
        if tail < tol:
            return
        w = evaluate(full, w)
        if float(np.linalg.norm(w)) > radius:
            raise EscapeError("an iterate left the contraction radius")
    raise NoConvergenceError(f"series tail above tol after {l_max} terms")


def linearize_map_point(
    prep: PreparedMap,
    z,
    tol: float,
    *,
    delta: float | None = None,
    l_max: int = 10_000,
) -> LinearizationSample:
    """Sum the one-step series at ``z`` to tolerance ``tol``; the
    ``t_reached``/``steps`` fields carry the number of terms summed."""
    z = np.asarray(z, dtype=complex)
    last: MapSeriesState | None = None
    for last in series_states(prep, z, tol, delta=delta, l_max=l_max):
        pass
    if last is None:
        return LinearizationSample(z, z.copy(), 0.0, 0.0, 0)
    return LinearizationSample(z, last.partial, last.tail_bound, float(last.l + 1), last.l + 1)


def koenigs_coefficients(mu: complex, f1_coefficients, degree: int) -> list[complex]:
    """Taylor coefficients (index = degree, [0] = 0, [1] = 1) of the
    unique tangent-to-identity series with ``mu L(z) = L(F(z))`` for the
    1D map ``F(z) = mu z + sum_d a_d z^d``.

    Degree-by-degree recursion: ``c_d = (convolution of lower orders) /
    (mu - mu^d)``; non-resonance is automatic for 0 < |mu| < 1.
    """
    mu = complex(mu)
    if not 0.0 < abs(mu) < 1.0:
        raise ValueError("Koenigs recursion requires 0 < |mu| < 1")
    a = list(f1_coefficients)
    f = [0.0, mu] + [complex(v) for v in a]
    f += [0.0] * max(0, degree + 1 - len(f))
    f = f[: degree + 1]
    c: list[complex] = [0.0, 1.0] + [0.0] * max(0, degree - 1)
    for d in range(2, degree + 1):
        # [z^d] L(F(z)) with the c_d mu^d term isolated on the left
        rhs = f[d]
        f_pow = f
        for k in range(2, d):
            f_pow = _convolve_trunc(f_pow, f, degree)
            rhs += c[k] * f_pow[d]
        c[d] = rhs / (mu - mu**d)
    return c


def _convolve_trunc(a, b, degree):
    out = [0.0] * (degree + 1)
    for i, ai in enumerate(a):
        if ai == 0.0:
            continue
        for j, bj in enumerate(b):
            if i + j > degree:
                break
            if bj != 0.0:
                out[i + j] += ai * bj
    return out


def map_conjugacy_residual(prep: PreparedMap, samples, tol: float, *, delta: float | None = None) -> float:
    """max over samples of ``|| A L(z) - L(F(z)) ||``."""
    a = prep.f0.linear
    full = prep.full_map()
    worst = 0.0
    for z in samples:
        z = np.asarray(z, dtype=complex)
        lz = linearize_map_point(prep, z, tol / 10.0, delta=delta).value
        fz = evaluate(full, z)
        lfz = linearize_map_point(prep, fz, tol / 10.0, delta=delta).value
        worst = max(worst, float(np.linalg.norm(a @ lz - lfz)))
    return worst


def min_flatness_map(spec: MapSpec, q: float) -> int:
    """Smallest integer strictly above
    ``q |log rho_star| / |log(rho_sup + eps)|``."""
    if q <= 1.0:
        raise ValueError("q must be > 1")
    bound = _map_flatness_bound(spec.eigenvalues, spec.epsilon, q)
    return int(math.floor(bound)) + 1


def resonances_map(eigenvalues, degree_bound: int, tol: float = 1e-9) -> ResonanceSet:
    """All (j, m) with 2 <= |m| <= degree_bound and
    |mu^m - mu_j| <= tol."""
    if degree_bound < 2:
        raise ValueError("degree_bound must be >= 2")
    mu = np.asarray([complex(v) for v in eigenvalues])
    n = mu.size
    entries = []
    for d in range(2, degree_bound + 1):
        for m in iter_multiindices(n, d):
            power = complex(np.prod(mu**np.asarray(m)))
            for j in range(n):
                if abs(power - mu[j]) <= tol:
                    entries.append((j, m))
    entries.sort(key=lambda e: (total_degree(e[1]), e[1], e[0]))
    return ResonanceSet(tuple(entries), degree_bound, tol)
