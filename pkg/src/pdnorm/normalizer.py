"""The continuous-time normalizer L(z) = lim_{t->inf} (z + I(t)).

Evaluates the limit of the finite-time transformations produced by
:mod:`pdnorm.flow`, extracts Taylor coefficients of L by circle sampling
and multidimensional DFT, verifies the flow-conjugacy identity, checks
the finite-time pushforward coefficient law, and reports behaviour on a
sphere near the transversality radius.

Stopping rule: integration proceeds in checkpoints of width 1/alpha and
stops once the analytic tail bound ``C ||z||^m e^(-kappa t) / kappa``
falls below tolerance AND the last three checkpoint increments of I do
too.  The decay/growth exponents entering ``kappa`` are the prepared
margins with slack ``delta`` (default alpha/10); positivity of kappa is
asserted up front and failure points at the flatness order m.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DROP_TOL,
    CoeffTable,
    PolyMap,
    flatness_order,
    iter_multiindices,
    pushforward_truncate,
    total_degree,
)
from .errors import NumericalError, NoConvergenceError
from .flow import continue_integration, initial_state, integrate_to, make_engine, matrix_exp
from .normal_form import PreparedForm
from .sampling import sphere_points
from .spectrum import RadiusReport, SpectrumInfo


@dataclass(frozen=True)
class LinearizationSample:
    """One evaluation of the normalizer at a point."""

    z: np.ndarray
    value: np.ndarray
    tail_bound: float
    t_reached: float
    steps: int


@dataclass(frozen=True)
class TaylorTable:
    """Taylor coefficients of L recovered from circle samples; the
    degree-1 block is expected to be the identity."""

    coefficients: CoeffTable
    sample_radius: float
    degree: int
    aliasing_estimate: float


@dataclass(frozen=True)
class DomainReport:
    """Behaviour of L on a sphere of 0.95 times the estimated radius."""

    radius: float
    n_points: int
    n_converged: int
    success_rate: float
    max_tail_bound: float
    min_abs_jacobian_det: float | None
    fd_step: float


def tail_rate(info: SpectrumInfo, m: int, delta: float) -> float:
    """Decay exponent of the integrand tail:
    ``m (alpha - eps - delta) - (beta - eps + delta)``."""
    a, b, e = info.alpha, info.beta, info.epsilon
    return m * (a - e - delta) - (b - e + delta)


def _kappa_or_raise(info: SpectrumInfo, m: int, delta: float) -> float:
    kappa = tail_rate(info, m, delta)
    if kappa <= 0.0:
        raise ValueError(
            f"tail rate kappa = {kappa:.3g} is not positive for m={m}, "
            f"delta={delta:g}; increase the flatness order m"
        )
    return kappa


def normalize_point(
    prep: PreparedForm,
    info: SpectrumInfo,
    z,
    tol: float,
    *,
    delta: float | None = None,
    t_max: float | None = None,
    checkpoint_dt: float | None = None,
    escape_radius: float = 10.0,
) -> LinearizationSample:
    """Evaluate L(z) to tolerance ``tol`` for the prepared field."""
    z = np.asarray(z, dtype=complex)
    if not prep.x1.coefficients:
        return LinearizationSample(z, z.copy(), 0.0, 0.0, 0)
    r = float(np.linalg.norm(z))
    if r == 0.0:
        return LinearizationSample(z, z.copy(), 0.0, 0.0, 0)
    delta = info.alpha / 10.0 if delta is None else delta
    kappa = _kappa_or_raise(info, prep.m, delta)
    dt = (1.0 / info.alpha) if checkpoint_dt is None else checkpoint_dt
    t_cap = (50.0 / info.alpha) if t_max is None else t_max
    c_const = prep.flatness_constant(r) * r**prep.m

    system, stepper = make_engine(
        prep.full_field(), prep.x0, info.direction, tol, escape_radius=escape_radius, x1=prep.x1
    )
    state = initial_state(z)
    last_i = state.I.copy()
    recent: list[float] = []
    while True:
        t_next = min(state.t + dt, t_cap)
        state = continue_integration(system, stepper, state, t_next)
        inc = float(np.linalg.norm(state.I - last_i))
        last_i = state.I.copy()
        recent.append(inc)
        if len(recent) > 3:
            recent.pop(0)
        tail = c_const * math.exp(-kappa * state.t) / kappa
        if tail < tol and len(recent) == 3 and all(v < tol for v in recent):
            return LinearizationSample(z, z + state.I, tail, state.t, state.steps)
        if state.t >= t_cap:
            raise NoConvergenceError(
                f"tail bound {tail:.3e} still above tol {tol:g} at t={state.t:g}"
            )


def checkpoint_increments(
    prep: PreparedForm,
    info: SpectrumInfo,
    z,
    n_checkpoints: int,
    tol: float,
    *,
    escape_radius: float = 10.0,
) -> list[float]:
    """Norms of the checkpoint increments of I (spacing 1/alpha); their
    measured decay ratio is the executable form of the analytic tail
    estimate."""
    dt = 1.0 / info.alpha
    system, stepper = make_engine(
        prep.full_field(), prep.x0, info.direction, tol, escape_radius=escape_radius, x1=prep.x1
    )
    state = initial_state(np.asarray(z, dtype=complex))
    out = []
    last = state.I.copy()
    for k in range(1, n_checkpoints + 1):
        state = continue_integration(system, stepper, state, k * dt)
        out.append(float(np.linalg.norm(state.I - last)))
        last = state.I.copy()
    return out


# ---------------------------------------------------------------------------
# Taylor recovery by circle sampling


def extract_taylor(func, n: int, radius: float, degree: int, *, min_points: int = 0) -> CoeffTable:
    """Taylor coefficients (degrees 0..degree) of a holomorphic map
    sampled on a tensor grid of circles, inverted by multidimensional
    FFT.  ``func`` maps a complex n-vector to a complex n-vector."""
    m_pts = max(2 * (degree + 1), min_points)
    angles = 2.0 * math.pi * np.arange(m_pts) / m_pts
    ring = radius * np.exp(1j * angles)
    shape = (m_pts,) * n
    values = np.empty(shape + (n,), dtype=complex)
    for idx in itertools.product(range(m_pts), repeat=n):
        point = np.array([ring[i] for i in idx], dtype=complex)
        values[idx] = func(point)
    table: CoeffTable = {}
    for j in range(n):
        spec = np.fft.fftn(values[..., j]) / (m_pts**n)
        for d in range(0, degree + 1):
            for exps in iter_multiindices(n, d):
                if any(e >= m_pts for e in exps):
                    continue
                c = spec[exps] / radius**d
                if abs(c) > DROP_TOL:
                    table[(j, exps)] = complex(c)
    return table


def taylor_coefficients(
    prep: PreparedForm,
    info: SpectrumInfo,
    radius: float,
    degree: int,
    tol: float,
    *,
    check_aliasing: bool = True,
    point_tol: float | None = None,
    min_points: int = 0,
    escape_radius: float = 10.0,
) -> TaylorTable:
    """Taylor table of L on the polydisc of ``radius``.

    Aliasing is estimated by doubling the per-circle sample count and
    comparing; the estimate is reported, never silently accepted.
    """
    if degree < 1:
        raise ValueError("degree must be >= 1")
    if point_tol is None:
        point_tol = max(1e-13, tol * radius**degree / 10.0)

    def func(point):
        return normalize_point(prep, info, point, point_tol, escape_radius=escape_radius).value

    base_points = max(2 * (degree + 1), min_points)
    base = extract_taylor(func, prep.x0.n, radius, degree, min_points=base_points)
    aliasing = 0.0
    if check_aliasing:
        doubled = extract_taylor(func, prep.x0.n, radius, degree, min_points=2 * base_points)
        keys = {k for k in set(base) | set(doubled) if total_degree(k[1]) >= 1}
        aliasing = max(
            (abs(base.get(k, 0.0) - doubled.get(k, 0.0)) for k in keys), default=0.0
        )
    table = {k: v for k, v in base.items() if 1 <= total_degree(k[1]) <= degree}
    return TaylorTable(table, radius, degree, aliasing)


# ---------------------------------------------------------------------------
# conjugacy and pushforward diagnostics


def flow_of_field(prep: PreparedForm, info: SpectrumInfo, z, tau: float, tol: float, *, escape_radius: float = 10.0):
    """Time-tau point of the rotated full field from z."""
    state = integrate_to(
        prep.full_field(), prep.x0, info.direction, z, tau, tol,
        escape_radius=escape_radius, x1=prep.x1,
    )
    return state.w


def flow_of_normal_part(prep: PreparedForm, info: SpectrumInfo, z, tau: float, tol: float, *, escape_radius: float = 10.0):
    """Time-tau point of the rotated normal part from z; closed form when
    the normal part is linear."""
    z = np.asarray(z, dtype=complex)
    if prep.normal_part_is_linear:
        x0 = prep.x0
        return matrix_exp(x0.eigenvalues, x0.epsilon, x0.nilpotent_pattern, tau * info.direction) @ z
    state = integrate_to(
        prep.x0, prep.x0, info.direction, z, tau, tol, escape_radius=escape_radius
    )
    return state.w


def conjugacy_residual(
    prep: PreparedForm,
    info: SpectrumInfo,
    samples,
    tau: float,
    tol: float,
    *,
    escape_radius: float = 10.0,
) -> float:
    """max over samples of ``|| L(Phi_X^tau z) - Phi_X0^tau (L z) ||``,
    each piece computed to tol/10."""
    piece = tol / 10.0
    worst = 0.0
    for z in samples:
        z = np.asarray(z, dtype=complex)
        fz = flow_of_field(prep, info, z, tau, piece, escape_radius=escape_radius)
        lhs = normalize_point(prep, info, fz, piece, escape_radius=escape_radius).value
        lz = normalize_point(prep, info, z, piece, escape_radius=escape_radius).value
        rhs = flow_of_normal_part(prep, info, lz, tau, piece, escape_radius=escape_radius)
        worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    return worst


def pushforward_order_check(
    prep: PreparedForm,
    info: SpectrumInfo,
    t: float,
    exponents,
    component: int,
    tol: float,
    *,
    radius: float = 0.2,
    min_points: int = 16,
    escape_radius: float = 10.0,
) -> tuple[complex, complex]:
    """Finite-time coefficient law of the transported field.

    predicted: ``exp(t (<lambda,k> - lambda_j)) X1[k,j]``.
    measured: the same coefficient extracted numerically by Taylor-sampling
    the finite-time transformation L_t and pushing the field through it.
    """
    exponents = tuple(int(e) for e in exponents)
    if not prep.normal_part_is_linear:
        raise ValueError("the coefficient law applies to a linear normal part")
    order = flatness_order(prep.x1)
    if total_degree(exponents) != order:
        raise ValueError(f"|exponents| = {total_degree(exponents)} but the remainder is {order}-flat")
    lam = np.asarray(prep.x0.eigenvalues)
    div = complex(np.dot(lam, exponents) - lam[component])
    coeff = prep.x1.coefficients.get((component, exponents), 0.0)
    predicted = complex(np.exp(t * div) * coeff)

    point_tol = max(1e-13, tol * radius ** total_degree(exponents) / 100.0)

    def l_t(point):
        state = integrate_to(
            prep.full_field(), prep.x0, info.direction, point, t, point_tol,
            escape_radius=escape_radius, x1=prep.x1,
        )
        return point + state.I

    table = extract_taylor(l_t, prep.x0.n, radius, total_degree(exponents), min_points=min_points)
    n = prep.x0.n
    linear = np.zeros((n, n), dtype=complex)
    nonlinear: CoeffTable = {}
    for (j, m), c in table.items():
        d = total_degree(m)
        if d == 0:
            continue
        if d == 1:
            linear[j, m.index(1)] = c
        else:
            nonlinear[(j, m)] = c
    if float(np.max(np.abs(linear - np.eye(n)))) > 1e-6:
        raise NumericalError("extracted finite-time map is not tangent to the identity")
    lt_map = PolyMap(n, np.eye(n, dtype=complex), nonlinear, max(total_degree(exponents), 2))
    pushed = pushforward_truncate(lt_map, prep.full_field(), total_degree(exponents))
    measured = complex(pushed.coefficients.get((component, exponents), 0.0))
    return predicted, measured


def domain_report(
    prep: PreparedForm,
    info: SpectrumInfo,
    radius_report: RadiusReport,
    grid: int,
    tol: float,
    *,
    radius_cap: float = 10.0,
    fd_step: float = 1e-3,
    seed: int = 0,
) -> DomainReport:
    """Evaluate L on a deterministic grid on the sphere of radius
    0.95 R0; failures are counted, not raised.  The minimum |det dL|
    (central finite differences) is the numerical injectivity surrogate.
    """
    r0 = radius_report.sampled_estimate
    if not math.isfinite(r0):
        r0 = radius_cap
    radius = 0.95 * r0
    escape = 2.0 * r0
    n = prep.x0.n
    if grid <= 0:
        return DomainReport(radius, 0, 0, 1.0, 0.0, None, fd_step)
    points = sphere_points(n, radius, grid, seed)
    h = fd_step * radius
    converged = 0
    max_tail = 0.0
    min_det: float | None = None
    for z in points:
        try:
            sample = normalize_point(prep, info, z, tol, escape_radius=escape)
            jac = np.empty((n, n), dtype=complex)
            for k in range(n):
                ek = np.zeros(n, dtype=complex)
                ek[k] = h
                plus = normalize_point(prep, info, z + ek, tol / 10.0, escape_radius=escape)
                minus = normalize_point(prep, info, z - ek, tol / 10.0, escape_radius=escape)
                jac[:, k] = (plus.value - minus.value) / (2.0 * h)
        except NumericalError:
            continue
        converged += 1
        max_tail = max(max_tail, sample.tail_bound)
        det = abs(np.linalg.det(jac))
        min_det = det if min_det is None else min(min_det, det)
    return DomainReport(radius, grid, converged, converged / grid, max_tail, min_det, fd_step)
