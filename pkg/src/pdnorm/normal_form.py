"""Reduction to prepared form: normal part plus an m-flat remainder.

For flows the degree-d homological step solves

    (Dh . Az - A h) = c        (divisor <lambda, m> - lambda_j)

and for maps

    (h o Az - A h) = c         (divisor mu^m - mu_j)

where the parameterization ``z_old = w + h(w)`` removes the non-resonant
degree-d terms.  With ``epsilon > 0`` the nilpotent coupling makes the
operator block-triangular; it is solved exactly by a finite fixed-point
iteration because the coupling strictly shifts monomial weight and never
mixes divisor values.

Conventions: ``change`` maps original coordinates to prepared coordinates
(so pushing the field forward through ``change`` yields the normal part),
while ``change_inverse`` is the classical parameterization carrying the
``c / divisor`` coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DROP_TOL,
    CoeffTable,
    Poly,
    PolyMap,
    PolyVectorField,
    _components,
    _pclean,
    _pcompose,
    _pdiff,
    _pmul,
    _padd_into,
    _split_components,
    _PowerCache,
    compose_truncate,
    coefficient_norm,
    invert_truncate,
    total_degree,
)
from .errors import (
    DivisorTooSmallError,
    InputError,
    MixedSpectrumError,
    NearlyDefectiveError,
    NonInvertibleError,
    NotPoincareError,
)
from .spectrum import SpectrumInfo, check_poincare, min_flatness_flow, resonances, select_direction


@dataclass(frozen=True)
class PreparedForm:
    """Prepared flow: ``X = X0 + X1`` in the coordinates ``w = change(z)``.

    ``X0`` holds the linear part plus resonant monomials below degree
    ``m``; ``X1`` is the m-flat remainder (zero linear part).  ``C`` is the
    certified flatness constant ``||X1(w)|| <= C ||w||^m`` on the ball of
    radius ``r_work``.
    """

    change: PolyMap
    change_inverse: PolyMap
    x0: PolyVectorField
    x1: PolyVectorField
    m: int
    q: float
    C: float
    r_work: float
    info: SpectrumInfo

    @property
    def normal_part_is_linear(self) -> bool:
        return not self.x0.coefficients

    def full_field(self) -> PolyVectorField:
        """The prepared field ``X0 + X1`` as a single vector field."""
        table = dict(self.x0.coefficients)
        for key, c in self.x1.coefficients.items():
            table[key] = table.get(key, 0.0) + c
        return self.x0.with_coefficients(table, max(self.x0.truncation_degree, self.x1.truncation_degree))

    def flatness_constant(self, radius: float) -> float:
        """``sum |c| radius^(|m|-m)`` over the remainder, valid on that ball."""
        return coefficient_norm(self.x1, radius, self.m)


@dataclass(frozen=True)
class PreparedMap:
    """Prepared map: ``F = F0 + F1`` with ``F1`` m-flat, same conventions
    as :class:`PreparedForm`."""

    change: PolyMap
    change_inverse: PolyMap
    f0: PolyMap
    f1: PolyMap
    m: int
    q: float
    C: float
    r_work: float
    eigenvalues: tuple[complex, ...]
    epsilon: float
    nilpotent_pattern: frozenset[int]

    @property
    def n(self) -> int:
        return self.f0.n

    @property
    def normal_part_is_linear(self) -> bool:
        return not self.f0.coefficients

    def full_map(self) -> PolyMap:
        table = dict(self.f0.coefficients)
        for key, c in self.f1.coefficients.items():
            table[key] = table.get(key, 0.0) + c
        return PolyMap(
            self.f0.n,
            self.f0.linear,
            table,
            max(self.f0.truncation_degree, self.f1.truncation_degree),
        )

    def flatness_constant(self, radius: float) -> float:
        return coefficient_norm(self.f1, radius, self.m)


@dataclass(frozen=True)
class JordanData:
    """Jordan structure of a linear part plus the similarity used to
    reach it (columns are eigenvectors; original = similarity @ jordan)."""

    eigenvalues: tuple[complex, ...]
    epsilon: float
    nilpotent_pattern: frozenset[int]
    similarity: PolyMap


# ---------------------------------------------------------------------------
# homological solves


def _add(table: CoeffTable, key, value) -> None:
    table[key] = table.get(key, 0.0) + value


def _apply_flow_operator(h: CoeffTable, lam, eps, pattern, n) -> CoeffTable:
    """L h = Dh . (Az) - A h for homogeneous h."""
    out: CoeffTable = {}
    for (j, m), c in h.items():
        for k in range(n):
            if m[k] == 0:
                continue
            _add(out, (j, m), c * m[k] * lam[k])
            if eps and k in pattern:
                m2 = list(m)
                m2[k] -= 1
                m2[k + 1] += 1
                _add(out, (j, tuple(m2)), c * m[k] * eps)
        _add(out, (j, m), -c * lam[j])
        if eps and j >= 1 and (j - 1) in pattern:
            _add(out, (j - 1, m), -c * eps)
    return {k: v for k, v in out.items() if abs(v) > DROP_TOL}


def _apply_map_operator(h: CoeffTable, mu, eps, pattern, n) -> CoeffTable:
    """M h = h o (Az) - A h for homogeneous h."""
    # component polynomials of the linear map Az
    az: list[Poly] = []
    for k in range(n):
        p: Poly = {}
        mk = [0] * n
        mk[k] = 1
        p[tuple(mk)] = mu[k]
        if eps and k in pattern:
            mk1 = [0] * n
            mk1[k + 1] = 1
            p[tuple(mk1)] = eps
        az.append(p)
    degree = max((total_degree(m) for (_, m) in h), default=0)
    cache = _PowerCache(az, degree)
    out: CoeffTable = {}
    polys: list[Poly] = [{} for _ in range(n)]
    for (j, m), c in h.items():
        polys[j][m] = polys[j].get(m, 0.0) + c
    for j in range(n):
        if not polys[j]:
            continue
        comp = _pcompose(polys[j], cache, degree)
        for m, c in comp.items():
            _add(out, (j, m), c)
    for (j, m), c in h.items():
        _add(out, (j, m), -c * mu[j])
        if eps and j >= 1 and (j - 1) in pattern:
            _add(out, (j - 1, m), -c * eps)
    return {k: v for k, v in out.items() if abs(v) > DROP_TOL}


def _solve_homological(rhs: CoeffTable, divisor_fn, apply_fn, *, n: int, degree: int) -> CoeffTable:
    """Solve (operator) h = rhs on the non-resonant subspace.

    The operator is divisor-diagonal plus a weight-raising nilpotent
    coupling, so the iteration h <- D^-1 (rhs - (L - D) h) terminates
    exactly; we cap it and verify the residual.
    """
    h = {key: c / divisor_fn(*key) for key, c in rhs.items()}
    max_iter = n * degree + 4
    for _ in range(max_iter):
        lh = apply_fn(h)
        residual: CoeffTable = {}
        for key in set(lh) | set(h):
            residual[key] = lh.get(key, 0.0) - divisor_fn(*key) * h.get(key, 0.0)
        new_h: CoeffTable = {}
        keys = set(rhs) | set(residual)
        for key in keys:
            val = rhs.get(key, 0.0) - residual.get(key, 0.0)
            if abs(val) > DROP_TOL:
                new_h[key] = val / divisor_fn(*key)
        delta = max(
            (abs(new_h.get(k, 0.0) - h.get(k, 0.0)) for k in set(h) | set(new_h)),
            default=0.0,
        )
        h = new_h
        if delta <= 1e-15 * max(1.0, max(map(abs, h.values()), default=0.0)):
            break
    lh = apply_fn(h)
    scale = max(map(abs, rhs.values()), default=1.0)
    err = max(
        (abs(lh.get(k, 0.0) - rhs.get(k, 0.0)) for k in set(lh) | set(rhs)),
        default=0.0,
    )
    if err > 1e-9 * max(1.0, scale):
        raise ArithmeticError(f"homological solve residual {err:.3e}")
    return h


def _classify_degree(
    coeffs: CoeffTable, divisor_fn, resonance_tol: float, divisor_floor: float
) -> tuple[CoeffTable, CoeffTable]:
    resonant: CoeffTable = {}
    nonresonant: CoeffTable = {}
    for key, c in coeffs.items():
        d = abs(divisor_fn(*key))
        if d <= resonance_tol:
            resonant[key] = c
        elif d < divisor_floor:
            raise DivisorTooSmallError(
                f"divisor {d:.3e} for term {key} sits between the resonance "
                f"tolerance {resonance_tol:g} and the safety floor {divisor_floor:g}; "
                "the spectrum looks mis-specified"
            )
        else:
            nonresonant[key] = c
    return resonant, nonresonant


# ---------------------------------------------------------------------------
# pullback of a field through a parameterization z = Q(w)


def _pullback_field(param: PolyMap, fld: PolyVectorField, degree: int) -> PolyVectorField:
    """Field in the coordinates w defined by ``z = param(w)``:
    ``(DQ(w))^-1 X(Q(w))``, truncated at ``degree``.

    Equivalent to pushing forward through ``param^-1`` but avoids the
    series inversion; the Neumann series for ``(I + Dh)^-1`` is finite at
    any truncation order.
    """
    n = fld.n
    if not param.is_tangent_to_identity(tol=0.0):
        raise NonInvertibleError("parameterization must be tangent to the identity")
    param_polys = _components(param)
    cache = _PowerCache(param_polys, degree)
    field_polys = _components(fld)
    field_at_q = [_pcompose(p, cache, degree) for p in field_polys]
    # Dh matrix (nonlinear part only)
    h_polys: list[Poly] = [{} for _ in range(n)]
    for (j, exps), c in param.coefficients.items():
        h_polys[j][exps] = c
    dh = [[_pdiff(h_polys[j], k) for k in range(n)] for j in range(n)]
    # rows of (I + Dh)^-1 applied to field_at_q: y = sum_k (-Dh)^k x
    out_polys: list[Poly] = []
    for j in range(n):
        out_polys.append(dict(field_at_q[j]))
    current = field_at_q
    while True:
        nxt: list[Poly] = []
        nonzero = False
        for j in range(n):
            acc: Poly = {}
            for k in range(n):
                if dh[j][k] and current[k]:
                    _padd_into(acc, _pmul(dh[j][k], current[k], degree), -1.0)
            acc = _pclean(acc)
            if acc:
                nonzero = True
            nxt.append(acc)
        if not nonzero:
            break
        for j in range(n):
            _padd_into(out_polys[j], nxt[j])
        current = nxt
    out_polys = [_pclean(p) for p in out_polys]
    linear, table = _split_components(out_polys, n)
    drift = np.max(np.abs(linear - fld.linear_matrix()))
    if drift > 1e-9:
        raise ValueError(f"pullback perturbed the linear part by {drift:.3e}")
    return fld.with_coefficients(table, max(degree, 2))


# ---------------------------------------------------------------------------
# prepared forms


def _snap_degree(table: CoeffTable, degree: int, keep: set) -> CoeffTable:
    """Remove eliminated degree-``degree`` entries, asserting they are
    numerically dead; keeps the resonant ones listed in ``keep``."""
    out: CoeffTable = {}
    for key, c in table.items():
        j, m = key
        if total_degree(m) == degree and key not in keep:
            if abs(c) > 1e-9:
                raise ArithmeticError(f"uneliminated coefficient {c:.3e} at {key}")
            continue
        out[key] = c
    return out


def prepare_flow(
    field: PolyVectorField,
    m: int | None = None,
    *,
    q: float = 1.1,
    resonance_tol: float = 1e-9,
    divisor_floor: float = 1e-6,
    r_work: float = 1.0,
    out_degree: int | None = None,
    info: SpectrumInfo | None = None,
) -> PreparedForm:
    """Degree-by-degree elimination of non-resonant terms below ``m``.

    ``m`` defaults to the flatness threshold derived from the spectrum and
    can only be overridden upward.  The prepared field is carried to
    ``out_degree`` (default ``max(truncation_degree, 2 m)``); terms the
    transformation creates beyond that are discarded, as documented.
    """
    if info is None:
        if not check_poincare(field.eigenvalues):
            raise NotPoincareError("field linear part is not of Poincare type")
        info = select_direction(field.eigenvalues, field.epsilon)
    res_bound = max(2, math.ceil(info.beta / info.alpha) + 1)
    res = resonances(field.eigenvalues, res_bound, resonance_tol)
    deg_x0 = res.max_degree()
    m_auto = min_flatness_flow(info, deg_x0, q)
    m = m_auto if m is None else max(int(m), m_auto)
    work_degree = out_degree if out_degree is not None else max(field.truncation_degree, 2 * m)

    lam = np.asarray(field.eigenvalues, dtype=complex)
    eps = field.epsilon
    pattern = field.nilpotent_pattern
    n = field.n

    def divisor(j: int, exps) -> complex:
        return complex(np.dot(lam, exps) - lam[j])

    def apply_op(h: CoeffTable) -> CoeffTable:
        return _apply_flow_operator(h, lam, eps, pattern, n)

    current = field.with_coefficients(field.coefficients, work_degree)
    change_inverse = PolyMap.identity(n, max(m - 1, 1))
    for d in range(2, m):
        cs_d = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) == d}
        if not cs_d:
            continue
        resonant, nonres = _classify_degree(cs_d, divisor, resonance_tol, divisor_floor)
        if not nonres:
            continue
        h = _solve_homological(nonres, divisor, apply_op, n=n, degree=d)
        param = PolyMap(n, np.eye(n, dtype=complex), h, d)
        current = _pullback_field(param, current, work_degree)
        current = current.with_coefficients(
            _snap_degree(current.coefficients, d, set(resonant)), work_degree
        )
        change_inverse = compose_truncate(change_inverse, param, max(m - 1, 1))
    change = invert_truncate(change_inverse, max(m - 1, 1))
    _verify_inverse_pair(change, change_inverse, max(m - 1, 1))

    x0_table = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) < m}
    x1_table = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) >= m}
    x0 = PolyVectorField(n, field.eigenvalues, eps, pattern, x0_table, max(m - 1, 1))
    x1 = PolyVectorField(n, (0.0,) * n, 0.0, frozenset(), x1_table, work_degree)
    c_const = coefficient_norm(x1, r_work, m)
    return PreparedForm(change, change_inverse, x0, x1, m, q, c_const, r_work, info)


def _map_flatness_bound(mu, eps: float, q: float) -> float:
    rho_star = min(abs(v) for v in mu)
    rho_sup = max(abs(v) for v in mu)
    if rho_sup + eps >= 1.0:
        from .errors import ContractionImpossibleError

        raise ContractionImpossibleError(
            f"max |mu| + epsilon = {rho_sup + eps:g} >= 1: no contraction"
        )
    return q * abs(math.log(rho_star)) / abs(math.log(rho_sup + eps))


def _extract_bidiagonal(linear: np.ndarray, n: int):
    mu = np.diag(linear).copy()
    pattern = set()
    eps_vals = []
    off = linear - np.diag(mu)
    for i in range(n - 1):
        v = off[i, i + 1]
        if v != 0:
            pattern.add(i)
            eps_vals.append(v)
        off[i, i + 1] = 0.0
    if np.any(off != 0):
        raise InputError("map linear part must be bidiagonal Jordan form S + epsilon*N")
    eps = 0.0
    if eps_vals:
        first = eps_vals[0]
        if any(abs(v - first) > 1e-14 for v in eps_vals):
            raise InputError("superdiagonal entries must share a single epsilon")
        if abs(first.imag) > 1e-14 or first.real <= 0:
            raise InputError("epsilon must be a positive real number")
        eps = float(first.real)
    return mu, eps, frozenset(pattern)


def prepare_map(
    mp: PolyMap,
    m: int | None = None,
    *,
    q: float = 1.1,
    resonance_tol: float = 1e-9,
    divisor_floor: float = 1e-6,
    r_work: float = 0.5,
    out_degree: int | None = None,
) -> PreparedMap:
    """Prepared form of a contracting map, divisors ``mu^m - mu_j``."""
    n = mp.n
    mu, eps, pattern = _extract_bidiagonal(np.array(mp.linear), n)
    mods = np.abs(mu)
    if np.any(mods == 0.0):
        raise NonInvertibleError("zero eigenvalue: the map is not invertible")
    if np.max(mods) >= 1.0:
        if np.min(mods) > 1.0:
            raise InputError(
                "all |mu_j| > 1: the map expands; linearize the inverse map instead"
            )
        raise MixedSpectrumError("eigenvalue moduli straddle the unit circle")
    m_auto = int(math.floor(_map_flatness_bound(mu, eps, q))) + 1
    m = m_auto if m is None else max(int(m), m_auto)
    work_degree = out_degree if out_degree is not None else max(mp.truncation_degree, 2 * m)

    def divisor(j: int, exps) -> complex:
        return complex(np.prod(mu**np.asarray(exps)) - mu[j])

    def apply_op(h: CoeffTable) -> CoeffTable:
        return _apply_map_operator(h, mu, eps, pattern, n)

    current = PolyMap(n, mp.linear, mp.coefficients, work_degree)
    change_inverse = PolyMap.identity(n, max(m - 1, 1))
    for d in range(2, m):
        cs_d = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) == d}
        if not cs_d:
            continue
        resonant, nonres = _classify_degree(cs_d, divisor, resonance_tol, divisor_floor)
        if not nonres:
            continue
        h = _solve_homological(nonres, divisor, apply_op, n=n, degree=d)
        param = PolyMap(n, np.eye(n, dtype=complex), h, d)
        param_inv = invert_truncate(param, work_degree)
        current = compose_truncate(param_inv, compose_truncate(current, param, work_degree), work_degree)
        drift = float(np.max(np.abs(current.linear - mp.linear)))
        if drift > 1e-9:
            raise ArithmeticError(f"conjugation perturbed the linear part by {drift:.3e}")
        current = PolyMap(
            n, mp.linear, _snap_degree(current.coefficients, d, set(resonant)), work_degree
        )
        change_inverse = compose_truncate(change_inverse, param, max(m - 1, 1))
    change = invert_truncate(change_inverse, max(m - 1, 1))
    _verify_inverse_pair(change, change_inverse, max(m - 1, 1))

    f0_table = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) < m}
    f1_table = {key: c for key, c in current.coefficients.items() if total_degree(key[1]) >= m}
    f0 = PolyMap(n, mp.linear, f0_table, max(m - 1, 1))
    f1 = PolyMap(n, np.zeros((n, n), dtype=complex), f1_table, work_degree)
    c_const = coefficient_norm(f1, r_work, m)
    return PreparedMap(
        change,
        change_inverse,
        f0,
        f1,
        m,
        q,
        c_const,
        r_work,
        tuple(complex(v) for v in mu),
        eps,
        pattern,
    )


def _verify_inverse_pair(change: PolyMap, change_inverse: PolyMap, degree: int) -> None:
    composed = compose_truncate(change, change_inverse, degree)
    err = float(np.max(np.abs(composed.linear - np.eye(change.n))))
    for (_, m), c in composed.coefficients.items():
        err = max(err, abs(c))
    if err > 1e-12:
        raise ArithmeticError(f"change o change_inverse differs from identity by {err:.3e}")


# ---------------------------------------------------------------------------
# Jordan helper


def to_jordan(matrix, *, separation_tol: float = 1e-8) -> JordanData:
    """Jordan data for a linear part.

    Exact upper-bidiagonal input with a constant superdiagonal passes
    through unchanged; otherwise the matrix must be diagonalizable with
    eigenvalue separation above ``separation_tol``.
    """
    a = np.asarray(matrix, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    strict_lower = np.tril(a, -1)
    beyond_super = np.triu(a, 2)
    if not strict_lower.any() and not beyond_super.any():
        super_vals = [a[i, i + 1] for i in range(n - 1) if a[i, i + 1] != 0]
        if super_vals:
            first = super_vals[0]
            ok = all(v == first for v in super_vals) and abs(first.imag) <= 1e-14 and first.real > 0
            pattern = frozenset(i for i in range(n - 1) if a[i, i + 1] != 0)
            coupled_ok = all(a[i, i] == a[i + 1, i + 1] for i in pattern)
            if ok and coupled_ok:
                return JordanData(
                    tuple(complex(a[i, i]) for i in range(n)),
                    float(first.real),
                    pattern,
                    PolyMap.identity(n),
                )
        else:
            return JordanData(
                tuple(complex(a[i, i]) for i in range(n)), 0.0, frozenset(), PolyMap.identity(n)
            )
    w, v = np.linalg.eig(a)
    order = np.lexsort((w.imag, -w.real))
    w = w[order]
    v = v[:, order]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) <= separation_tol:
                raise NearlyDefectiveError(
                    f"eigenvalues {w[i]} and {w[j]} are within {separation_tol:g}; "
                    "supply the matrix in explicit bidiagonal Jordan form"
                )
    for k in range(n):
        col = v[:, k]
        big = np.max(np.abs(col))
        pivot = next(i for i in range(n) if abs(col[i]) > 1e-8 * big)
        v[:, k] = col / col[pivot]
    return JordanData(tuple(complex(x) for x in w), 0.0, frozenset(), PolyMap(n, v, {}, 1))
