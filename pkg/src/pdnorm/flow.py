"""Integration of the rotated system dz/dt = c X(z) with its variational
matrix and the accumulating normalizer integral.

The augmented system is

    w' = c X(w)
    W' = -c (dX0/dw)(w) W          (variational factor)
    I' = c W X1(w)                 (normalizer increment)

so that ``z + I(t)`` is the finite-time transformation L_t(z).  When the
normal part X0 is linear the closed form ``W(t) = exp(-t c A)`` replaces
the W block of the ODE; the integrated-W path remains for polynomial X0
and for cross-checks.

The stepper is an embedded Dormand-Prince 5(4) pair with PI step-size
control, keeping the local error per unit step at or below ``tol`` in the
max norm over all augmented components.  The hot loop works on plain
Python complex lists: at desk-scale dimensions interpreter-level list
arithmetic beats tiny-array numpy by an order of magnitude, and these
trajectories are evaluated thousands of times per report.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .algebra import PolyVectorField, subtract_normal_part
from .errors import EscapeError, NoConvergenceError, StepUnderflowError

MIN_STEP = 1e-14
MAX_STEPS = 10_000_000

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_ERR = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


@dataclass(frozen=True)
class FlowState:
    """Augmented state along the integration ray.

    ``w`` is the phase point, ``W`` the variational matrix, ``I`` the
    accumulated normalizer integral (``L_t(z) = z + I``), ``err_estimate``
    the summed local error estimates of the accepted steps.
    """

    t: float
    w: np.ndarray
    W: np.ndarray
    I: np.ndarray
    err_estimate: float = 0.0
    steps: int = 0


def initial_state(z) -> FlowState:
    z = np.asarray(z, dtype=complex)
    n = z.shape[0]
    return FlowState(0.0, z.copy(), np.eye(n, dtype=complex), np.zeros(n, dtype=complex))


def matrix_exp(eigenvalues, epsilon: float, nilpotent_pattern, tau: complex) -> np.ndarray:
    """``exp(tau (S + epsilon N))`` via the commuting factorization
    ``exp(tau S) exp(tau epsilon N)`` with the nilpotent factor summed as
    an exact finite polynomial."""
    lam = np.asarray([complex(v) for v in eigenvalues])
    n = lam.shape[0]
    out = np.diag(np.exp(tau * lam))
    if epsilon and nilpotent_pattern:
        nil = np.zeros((n, n), dtype=complex)
        for i in nilpotent_pattern:
            nil[i, i + 1] = 1.0
        factor = np.eye(n, dtype=complex)
        power = np.eye(n, dtype=complex)
        k = 1
        while True:
            power = power @ nil * (tau * epsilon) / k
            if not power.any():
                break
            factor += power
            k += 1
        out = out @ factor
    return out


def _term_lists(coefficients, n):
    """[(j, [(k, e), ...], c)] with only the active exponents kept."""
    return [
        (j, tuple((k, e) for k, e in enumerate(m) if e), complex(c))
        for (j, m), c in sorted(coefficients.items())
    ]


def _eval_terms(terms, w, out):
    for j, mono, coeff in terms:
        v = coeff
        for k, e in mono:
            wk = w[k]
            if e == 1:
                v *= wk
            elif e == 2:
                v *= wk * wk
            else:
                v *= wk**e
        out[j] += v


class _System:
    """Pack/unpack of the augmented state plus a list-based right side.

    ``integrate_w=None`` picks the closed-form W automatically for linear
    normal parts; ``integrate_w=True`` forces the variational ODE even
    then (cross-check path).
    """

    def __init__(self, field: PolyVectorField, x0: PolyVectorField, c: complex,
                 x1: PolyVectorField | None = None, integrate_w: bool | None = None):
        if field.n != x0.n:
            raise ValueError("field and normal part dimensions differ")
        self.field = field
        self.x0 = x0
        self.c = complex(c)
        n = self.n = field.n
        self.x1 = x1 if x1 is not None else subtract_normal_part(field, x0)
        self.x0_linear = not x0.coefficients
        self.flat = not self.x1.coefficients
        self.closed_w = self.x0_linear if integrate_w is None else not integrate_w
        if self.closed_w and not self.x0_linear:
            raise ValueError("closed-form W requires a linear normal part")

        a = field.linear_matrix()
        self._a_rows = [
            tuple((k, complex(a[j, k])) for k in range(n) if a[j, k] != 0) for j in range(n)
        ]
        self._field_terms = _term_lists(field.coefficients, n)
        self._x1_terms = _term_lists(self.x1.coefficients, n)
        self._lam = [complex(v) for v in x0.eigenvalues]
        self._eps = x0.epsilon
        self._pattern = x0.nilpotent_pattern
        a0 = x0.linear_matrix()
        self._x0_rows = [
            tuple((k, complex(a0[j, k])) for k in range(n) if a0[j, k] != 0) for j in range(n)
        ]
        # derivative monomials of the x0 nonlinearity, for the W equation
        jac_terms = []
        for (j, m), coeff in sorted(x0.coefficients.items()):
            for k, e in enumerate(m):
                if e:
                    reduced = list(m)
                    reduced[k] -= 1
                    jac_terms.append(
                        (j, k, coeff * e, tuple((kk, ee) for kk, ee in enumerate(reduced) if ee))
                    )
        self._x0_jac_terms = tuple(jac_terms)
        self.dim = n + n if self.closed_w else n + n * n + n

    # -- state conversion ---------------------------------------------------

    def pack(self, state: FlowState) -> list[complex]:
        w = [complex(v) for v in state.w]
        i_acc = [complex(v) for v in state.I]
        if self.closed_w:
            return w + i_acc
        big_w = [complex(v) for v in np.asarray(state.W).ravel()]
        return w + big_w + i_acc

    def unpack(self, t: float, y: list[complex], err: float, steps: int) -> FlowState:
        n = self.n
        w = np.array(y[:n], dtype=complex)
        if self.closed_w:
            big_w = matrix_exp(self._lam, self._eps, self._pattern, -t * self.c)
            i_acc = np.array(y[n:], dtype=complex)
        else:
            big_w = np.array(y[n : n + n * n], dtype=complex).reshape(n, n)
            i_acc = np.array(y[n + n * n :], dtype=complex)
        return FlowState(t, w, big_w, i_acc, err, steps)

    # -- right side ---------------------------------------------------------

    def _closed_w_rows(self, t: float) -> list[list[complex]]:
        n = self.n
        c = self.c
        x = -t * c * self._eps
        rows = [[0j] * n for _ in range(n)]
        for i in range(n):
            diag = cmath.exp(-t * c * self._lam[i])
            rows[i][i] = diag
            acc = 1.0 + 0j
            j = i
            while j in self._pattern:
                acc *= x / (j + 1 - i)
                rows[i][j + 1] = diag * acc
                j += 1
        return rows

    def rhs(self, t: float, y: list[complex]) -> list[complex]:
        n = self.n
        c = self.c
        w = y[:n]
        out = [0j] * self.dim
        for j in range(n):
            acc = 0j
            for k, a in self._a_rows[j]:
                acc += a * w[k]
            out[j] = acc
        _eval_terms(self._field_terms, w, out)
        for j in range(n):
            out[j] *= c
        if self.flat:
            if not self.closed_w:
                self._w_block_rhs(w, y, out)
            return out
        x1v = [0j] * n
        _eval_terms(self._x1_terms, w, x1v)
        if self.closed_w:
            if self._eps and self._pattern:
                rows = self._closed_w_rows(t)
                for j in range(n):
                    acc = 0j
                    row = rows[j]
                    for k in range(n):
                        acc += row[k] * x1v[k]
                    out[n + j] = c * acc
            else:
                for j in range(n):
                    out[n + j] = c * cmath.exp(-t * c * self._lam[j]) * x1v[j]
            return out
        self._w_block_rhs(w, y, out)
        base = n + n * n
        for j in range(n):
            acc = 0j
            for k in range(n):
                acc += y[n + j * n + k] * x1v[k]
            out[base + j] = c * acc
        return out

    def _w_block_rhs(self, w, y, out) -> None:
        n = self.n
        c = self.c
        jac = [[0j] * n for _ in range(n)]
        for j in range(n):
            for k, a in self._x0_rows[j]:
                jac[j][k] = a
        for j, k, coeff, mono in self._x0_jac_terms:
            v = coeff
            for kk, e in mono:
                wk = w[kk]
                if e == 1:
                    v *= wk
                elif e == 2:
                    v *= wk * wk
                else:
                    v *= wk**e
            jac[j][k] += v
        for j in range(n):
            jrow = jac[j]
            for k in range(n):
                acc = 0j
                for l in range(n):
                    acc += jrow[l] * y[n + l * n + k]
                out[n + j * n + k] = -c * acc


def _dp45_step(fun, t: float, y: list[complex], h: float):
    """One Dormand-Prince step on list state; returns (y5, err_maxnorm)."""
    dim = len(y)
    ks = [fun(t, y)]
    for i in range(1, 7):
        yi = list(y)
        for s, a in enumerate(_A[i]):
            if a == 0.0:
                continue
            f = h * a
            ksrc = ks[s]
            for mth in range(dim):
                yi[mth] += f * ksrc[mth]
        ks.append(fun(t + _C[i] * h, yi))
    y5 = list(y)
    for s, b in enumerate(_B5):
        if b == 0.0:
            continue
        f = h * b
        ksrc = ks[s]
        for mth in range(dim):
            y5[mth] += f * ksrc[mth]
    err_acc = [0j] * dim
    for s, e in enumerate(_ERR):
        if e == 0.0:
            continue
        f = h * e
        ksrc = ks[s]
        for mth in range(dim):
            err_acc[mth] += f * ksrc[mth]
    return y5, max(abs(v) for v in err_acc)


class _Stepper:
    """Adaptive driver with PI control and escape/underflow guards."""

    def __init__(self, system: _System, tol: float, escape_radius: float):
        if tol <= 0:
            raise ValueError("tol must be positive")
        self.system = system
        self.tol = tol
        self.escape_radius = escape_radius
        self.h: float | None = None
        self.prev_ratio = 1.0

    def _initial_step(self, t: float, y: list[complex]) -> float:
        f0 = self.system.rhs(t, y)
        scale = 1.0 + max(abs(v) for v in y)
        rate = max(abs(v) for v in f0) / scale
        return float(min(0.01 / max(rate, 1e-3), 1.0))

    def advance_raw(self, t: float, y: list[complex], err_acc: float, steps: int,
                    t_limit: float | None = None):
        """One accepted step on raw state; lands exactly on ``t_limit``
        when the proposed step would cross it."""
        sys_ = self.system
        if self.h is None:
            self.h = self._initial_step(t, y)
        while True:
            h = self.h
            clipped = False
            if t_limit is not None and t + h >= t_limit:
                h = t_limit - t
                clipped = True
                if h <= 0:
                    return t, y, err_acc, steps
            if h < MIN_STEP and not clipped:
                raise StepUnderflowError(f"step size {h:.3e} below {MIN_STEP:g} at t={t:g}")
            y_new, err = _dp45_step(sys_.rhs, t, y, h)
            tol_step = self.tol * h
            ratio = err / tol_step if tol_step > 0 else math.inf
            if ratio <= 1.0 or h <= MIN_STEP * 2:
                factor = 0.9 * (max(ratio, 1e-10) ** -0.14) * (max(self.prev_ratio, 1e-10) ** 0.08)
                factor = min(5.0, max(0.2, factor))
                if clipped:
                    self.h = max(self.h, h)
                else:
                    self.h = h * factor
                self.prev_ratio = max(ratio, 1e-10)
                t_new = t_limit if clipped else t + h
                wnorm = math.sqrt(sum((v.real * v.real + v.imag * v.imag) for v in y_new[: sys_.n]))
                if wnorm > self.escape_radius:
                    raise EscapeError(
                        f"trajectory norm {wnorm:.3g} exceeded escape radius "
                        f"{self.escape_radius:g} at t={t_new:g}"
                    )
                return t_new, y_new, err_acc + err, steps + 1
            self.h = h * max(0.1, 0.9 * ratio**-0.2)

    def advance(self, state: FlowState, t_limit: float | None = None) -> FlowState:
        y = self.system.pack(state)
        t, y, err, steps = self.advance_raw(state.t, y, state.err_estimate, state.steps, t_limit)
        return self.system.unpack(t, y, err, steps)


def step(
    field: PolyVectorField,
    x0: PolyVectorField,
    c: complex,
    state: FlowState,
    tol: float,
    *,
    escape_radius: float = 10.0,
) -> FlowState:
    """Advance the augmented system by one adaptive step."""
    stepper = _Stepper(_System(field, x0, c), tol, escape_radius)
    return stepper.advance(state)


def integrate_to(
    field: PolyVectorField,
    x0: PolyVectorField,
    c: complex,
    z,
    t_end: float,
    tol: float,
    *,
    escape_radius: float = 10.0,
    max_steps: int = MAX_STEPS,
    observer=None,
    fixed_step: float | None = None,
    x1: PolyVectorField | None = None,
    integrate_w: bool | None = None,
) -> FlowState:
    """Integrate from ``z`` at t=0 to ``t_end``.

    ``observer(state)`` is called after every accepted step (trajectory
    dumps); ``fixed_step`` disables adaptivity and marches with a constant
    step, which is only meant for convergence diagnostics.
    """
    system = _System(field, x0, c, x1=x1, integrate_w=integrate_w)
    state = initial_state(z)
    if t_end == 0.0:
        return state
    if t_end < 0:
        raise ValueError("t_end must be >= 0 (the ray parameter is one-sided)")
    if fixed_step is not None:
        y = system.pack(state)
        t = 0.0
        nsteps = max(1, round(t_end / fixed_step))
        h = t_end / nsteps
        acc = 0.0
        for k in range(nsteps):
            y, err = _dp45_step(system.rhs, t, y, h)
            acc += err
            t = (k + 1) * h
            if observer is not None:
                observer(system.unpack(t, y, acc, k + 1))
        return system.unpack(t_end, y, acc, nsteps)
    stepper = _Stepper(system, tol, escape_radius)
    return continue_integration(system, stepper, state, t_end, max_steps=max_steps, observer=observer)


def continue_integration(
    system: _System,
    stepper: _Stepper,
    state: FlowState,
    t_end: float,
    *,
    max_steps: int = MAX_STEPS,
    observer=None,
) -> FlowState:
    """Resume integration of an existing (system, stepper) pair; used by
    the normalizer to march checkpoint to checkpoint without resetting
    the step-size controller."""
    t, y, err, steps = state.t, system.pack(state), state.err_estimate, state.steps
    while t < t_end:
        if steps >= max_steps:
            raise NoConvergenceError(f"exceeded {max_steps} steps before t={t_end:g}")
        t, y, err, steps = stepper.advance_raw(t, y, err, steps, t_limit=t_end)
        if observer is not None:
            observer(system.unpack(t, y, err, steps))
    return system.unpack(t_end, y, err, steps)


def make_engine(field, x0, c, tol, *, escape_radius=10.0, x1=None, integrate_w=None):
    """(system, stepper) pair for checkpointed integration."""
    system = _System(field, x0, c, x1=x1, integrate_w=integrate_w)
    return system, _Stepper(system, tol, escape_radius)
