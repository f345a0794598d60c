"""Sparse truncated polynomial vector fields and self-maps over C^n.

Representation
--------------

A monomial is keyed by its exponent tuple, one non-negative integer per
variable::

    MultiIndex = tuple[int, ...]        # z1^m1 * ... * zn^mn
    CoeffTable = dict[(j, MultiIndex), complex]

where ``j`` is the 0-based component the monomial feeds.  Only nonlinear
terms (total degree >= 2) live in the table; the linear part of a
:class:`PolyVectorField` is always the bidiagonal Jordan matrix
``S + epsilon*N`` reconstructed from ``eigenvalues``, ``epsilon`` and
``nilpotent_pattern``, while a :class:`PolyMap` carries an explicit dense
linear matrix.

Canonical form: coefficients with modulus <= ``DROP_TOL`` are never
stored, so the zero polynomial is the empty table and identity of tables
is a meaningful equality test.

All values are immutable after construction and safe to share between
threads; every operation returns fresh objects.  Truncation is explicit:
each operation that can create new degrees takes the output degree as an
argument and documents it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NonInvertibleError

#: coefficients at or below this modulus are dropped after arithmetic
DROP_TOL = 1e-15

MultiIndex = tuple[int, ...]
CoeffTable = dict[tuple[int, MultiIndex], complex]

# component polynomials used internally: exponent tuple -> coefficient,
# degree-1 terms included
Poly = dict[MultiIndex, complex]


def total_degree(exponents: MultiIndex) -> int:
    """Total degree |m| = m1 + ... + mn of a multi-index."""
    return sum(exponents)


def iter_multiindices(n: int, degree: int):
    """Yield every multi-index of length ``n`` with total degree exactly
    ``degree``, in lexicographic order (stars and bars)."""
    if n == 1:
        yield (degree,)
        return
    for bars in combinations(range(degree + n - 1), n - 1):
        prev = -1
        out = []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(degree + n - 2 - prev)
        yield tuple(out)


def _canonical_table(coefficients, n: int, min_degree: int, max_degree: int) -> CoeffTable:
    table: CoeffTable = {}
    for (j, exps), value in coefficients.items():
        exps = tuple(int(e) for e in exps)
        if len(exps) != n:
            raise ValueError(f"exponent tuple {exps} has length {len(exps)}, expected {n}")
        if any(e < 0 for e in exps):
            raise ValueError(f"negative exponent in {exps}")
        if not 0 <= j < n:
            raise ValueError(f"component index {j} out of range for n={n}")
        d = total_degree(exps)
        if not min_degree <= d <= max_degree:
            raise ValueError(
                f"monomial {exps} has degree {d}, outside [{min_degree}, {max_degree}]"
            )
        value = complex(value)
        if abs(value) > DROP_TOL:
            table[(int(j), exps)] = value
    return table


def _check_jordan_data(n, eigenvalues, epsilon, nilpotent_pattern):
    if len(eigenvalues) != n:
        raise ValueError(f"{len(eigenvalues)} eigenvalues for dimension {n}")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    for i in nilpotent_pattern:
        if not 0 <= i < n - 1:
            raise ValueError(f"nilpotent position {i} out of range for n={n}")
        if epsilon > 0 and abs(eigenvalues[i] - eigenvalues[i + 1]) > 1e-12:
            # S and N must commute for the Jordan splitting to make sense
            raise ValueError(
                f"nilpotent position {i} couples distinct eigenvalues "
                f"{eigenvalues[i]} and {eigenvalues[i + 1]}"
            )


@dataclass(frozen=True)
class PolyVectorField:
    """Polynomial vector field ``X(z) = (S + epsilon*N) z + nonlinear``.

    ``nilpotent_pattern`` holds the 0-based superdiagonal positions ``i``
    where ``N[i, i+1] = 1``; those positions must couple equal eigenvalues.
    """

    n: int
    eigenvalues: tuple[complex, ...]
    epsilon: float
    nilpotent_pattern: frozenset[int]
    coefficients: CoeffTable
    truncation_degree: int

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(complex(v) for v in self.eigenvalues))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "nilpotent_pattern", frozenset(int(i) for i in self.nilpotent_pattern))
        _check_jordan_data(self.n, self.eigenvalues, self.epsilon, self.nilpotent_pattern)
        if self.truncation_degree < 1:
            raise ValueError("truncation_degree must be >= 1")
        table = _canonical_table(self.coefficients, self.n, 2, self.truncation_degree)
        object.__setattr__(self, "coefficients", table)

    def linear_matrix(self) -> np.ndarray:
        """The matrix ``S + epsilon*N``."""
        a = np.diag(np.asarray(self.eigenvalues, dtype=complex))
        for i in self.nilpotent_pattern:
            a[i, i + 1] = self.epsilon
        return a

    def with_coefficients(self, coefficients: CoeffTable, truncation_degree: int | None = None) -> "PolyVectorField":
        return PolyVectorField(
            self.n,
            self.eigenvalues,
            self.epsilon,
            self.nilpotent_pattern,
            coefficients,
            self.truncation_degree if truncation_degree is None else truncation_degree,
        )


@dataclass(frozen=True)
class PolyMap:
    """Polynomial self-map ``F(z) = B z + nonlinear`` fixing the origin."""

    n: int
    linear: np.ndarray
    coefficients: CoeffTable
    truncation_degree: int

    def __post_init__(self):
        b = np.array(self.linear, dtype=complex)
        if b.shape != (self.n, self.n):
            raise ValueError(f"linear part has shape {b.shape}, expected ({self.n}, {self.n})")
        b.setflags(write=False)
        object.__setattr__(self, "linear", b)
        if self.truncation_degree < 1:
            raise ValueError("truncation_degree must be >= 1")
        table = _canonical_table(self.coefficients, self.n, 2, self.truncation_degree)
        object.__setattr__(self, "coefficients", table)

    @classmethod
    def identity(cls, n: int, truncation_degree: int = 1) -> "PolyMap":
        return cls(n, np.eye(n, dtype=complex), {}, truncation_degree)

    def is_tangent_to_identity(self, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.linear - np.eye(self.n))) <= tol)


# ---------------------------------------------------------------------------
# evaluation


def _linear_of(obj) -> np.ndarray:
    if isinstance(obj, PolyVectorField):
        return obj.linear_matrix()
    return obj.linear


def evaluate(obj: PolyVectorField | PolyMap, z) -> np.ndarray:
    """Evaluate a field or map at the point ``z``."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (obj.n,):
        raise ValueError(f"point has shape {z.shape}, expected ({obj.n},)")
    out = _linear_of(obj) @ z
    for (j, exps), c in obj.coefficients.items():
        term = c
        for k, e in enumerate(exps):
            if e:
                term *= z[k] ** e
        out[j] += term
    return out


def evaluate_many(obj: PolyVectorField | PolyMap, points: np.ndarray) -> np.ndarray:
    """Vectorized :func:`evaluate` over ``points`` of shape (count, n)."""
    points = np.asarray(points, dtype=complex)
    out = points @ _linear_of(obj).T
    for (j, exps), c in obj.coefficients.items():
        term = np.full(points.shape[0], c, dtype=complex)
        for k, e in enumerate(exps):
            if e:
                term *= points[:, k] ** e
        out[:, j] += term
    return out


def jacobian(obj: PolyVectorField | PolyMap, z) -> np.ndarray:
    """Jacobian matrix, entry (j, k) = d component_j / d z_k at ``z``."""
    z = np.asarray(z, dtype=complex)
    if z.shape != (obj.n,):
        raise ValueError(f"point has shape {z.shape}, expected ({obj.n},)")
    out = _linear_of(obj).copy()
    for (j, exps), c in obj.coefficients.items():
        for k, e in enumerate(exps):
            if e == 0:
                continue
            term = c * e
            for kk, ee in enumerate(exps):
                p = ee - 1 if kk == k else ee
                if p:
                    term *= z[kk] ** p
            out[j, k] += term
    return out


def flatness_order(obj: PolyVectorField | PolyMap) -> int | float:
    """Smallest total degree >= 2 carrying a nonzero coefficient,
    ``math.inf`` when there are no nonlinear terms."""
    if not obj.coefficients:
        return math.inf
    return min(total_degree(exps) for (_, exps) in obj.coefficients)


def coefficient_norm(obj: PolyVectorField | PolyMap, radius: float, flat_order: int = 0) -> float:
    """Triangle-inequality majorant ``sum |c| * radius^(|m| - flat_order)``.

    With ``flat_order = m`` this is the constant C in the flatness bound
    ``||nonlinear(w)|| <= C ||w||^m`` valid for ``||w|| <= radius``.
    """
    return float(
        sum(abs(c) * radius ** (total_degree(exps) - flat_order) for (_, exps), c in obj.coefficients.items())
    )


# ---------------------------------------------------------------------------
# sparse component-polynomial arithmetic (internal)


def _pclean(p: Poly) -> Poly:
    return {m: c for m, c in p.items() if abs(c) > DROP_TOL}


def _padd_into(acc: Poly, p: Poly, scale: complex = 1.0) -> None:
    for m, c in p.items():
        acc[m] = acc.get(m, 0.0) + scale * c


def _pmul(a: Poly, b: Poly, degree: int) -> Poly:
    out: Poly = {}
    for ma, ca in a.items():
        da = total_degree(ma)
        for mb, cb in b.items():
            if da + total_degree(mb) > degree:
                continue
            key = tuple(x + y for x, y in zip(ma, mb))
            out[key] = out.get(key, 0.0) + ca * cb
    return _pclean(out)


def _pdiff(p: Poly, k: int) -> Poly:
    out: Poly = {}
    for m, c in p.items():
        if m[k] == 0:
            continue
        dm = list(m)
        dm[k] -= 1
        out[tuple(dm)] = out.get(tuple(dm), 0.0) + c * m[k]
    return _pclean(out)


class _PowerCache:
    """Caches truncated powers of the inner components of a composition."""

    def __init__(self, inner: list[Poly], degree: int):
        self.inner = [
            {m: c for m, c in p.items() if total_degree(m) <= degree} for p in inner
        ]
        self.degree = degree
        self._cache: dict[tuple[int, int], Poly] = {}

    def power(self, k: int, e: int) -> Poly:
        if e < 1:
            raise ValueError("powers of exponent 0 are never composed")
        key = (k, e)
        if key not in self._cache:
            if e == 1:
                self._cache[key] = self.inner[k]
            else:
                self._cache[key] = _pmul(self.power(k, e - 1), self.inner[k], self.degree)
        return self._cache[key]


def _pcompose(p: Poly, cache: _PowerCache, degree: int) -> Poly:
    """p composed with the (origin-fixing) inner components, truncated."""
    out: Poly = {}
    for m, c in p.items():
        # inner components have valuation >= 1, so this monomial cannot
        # contribute below total degree |m|
        if total_degree(m) > degree:
            continue
        prod: Poly | None = None
        for k, e in enumerate(m):
            if e == 0:
                continue
            pw = cache.power(k, e)
            prod = pw if prod is None else _pmul(prod, pw, degree)
        if prod is None:
            prod = {m: 1.0}  # constant monomial, degree 0 never occurs here
        _padd_into(out, prod, c)
    return _pclean(out)


def _components(obj: PolyVectorField | PolyMap) -> list[Poly]:
    """Component polynomials including the linear part."""
    n = obj.n
    lin = _linear_of(obj)
    polys: list[Poly] = [{} for _ in range(n)]
    for j in range(n):
        for k in range(n):
            if abs(lin[j, k]) > DROP_TOL:
                m = [0] * n
                m[k] = 1
                polys[j][tuple(m)] = complex(lin[j, k])
    for (j, exps), c in obj.coefficients.items():
        polys[j][exps] = polys[j].get(exps, 0.0) + c
    return polys


def _split_components(polys: list[Poly], n: int) -> tuple[np.ndarray, CoeffTable]:
    linear = np.zeros((n, n), dtype=complex)
    table: CoeffTable = {}
    for j, p in enumerate(polys):
        for m, c in p.items():
            d = total_degree(m)
            if d == 0:
                if abs(c) > 1e-12:
                    raise ValueError(f"composition produced constant term {c} in component {j}")
                continue
            if d == 1:
                linear[j, m.index(1)] += c
            elif abs(c) > DROP_TOL:
                table[(j, m)] = table.get((j, m), 0.0) + c
    return linear, table


# ---------------------------------------------------------------------------
# composition, inversion, pushforward


def compose_truncate(outer: PolyMap, inner: PolyMap, degree: int) -> PolyMap:
    """Taylor expansion of ``outer(inner(z))`` with all terms of total
    degree > ``degree`` discarded."""
    if outer.n != inner.n:
        raise ValueError(f"dimension mismatch: outer n={outer.n}, inner n={inner.n}")
    inner_polys = _components(inner)
    cache = _PowerCache(inner_polys, degree)
    outer_polys = _components(outer)
    out_polys = [_pcompose(p, cache, degree) for p in outer_polys]
    linear, table = _split_components(out_polys, outer.n)
    return PolyMap(outer.n, linear, table, max(degree, 1))


def invert_truncate(mp: PolyMap, degree: int) -> PolyMap:
    """Truncated series inverse: ``compose_truncate(mp, result, degree)``
    is the identity up to degree ``degree``.

    Computed by the degree-by-degree fixed-point iteration of the
    composition identity ``Q = id - h o Q`` after factoring out the linear
    part, which is exact at each truncation order.
    """
    n = mp.n
    try:
        b_inv = np.linalg.inv(mp.linear)
    except np.linalg.LinAlgError as exc:
        raise NonInvertibleError("linear part of the change is singular") from exc
    # mp = L_B o (id + h) with h = B^{-1} (nonlinear part)
    h: list[Poly] = [{} for _ in range(n)]
    for (j, exps), c in mp.coefficients.items():
        for i in range(n):
            if abs(b_inv[i, j] * c) > DROP_TOL:
                h[i][exps] = h[i].get(exps, 0.0) + b_inv[i, j] * c
    identity_polys: list[Poly] = []
    for k in range(n):
        m = [0] * n
        m[k] = 1
        identity_polys.append({tuple(m): 1.0})
    q = [dict(p) for p in identity_polys]
    if any(h):
        for _ in range(max(degree - 1, 0)):
            cache = _PowerCache(q, degree)
            q_new = []
            for k in range(n):
                comp = _pcompose(h[k], cache, degree)
                p = dict(identity_polys[k])
                _padd_into(p, comp, -1.0)
                q_new.append(_pclean(p))
            if q_new == q:
                break
            q = q_new
    # full inverse is Q o L_{B^{-1}}
    if np.max(np.abs(mp.linear - np.eye(n))) == 0.0:
        linear, table = _split_components(q, n)
        return PolyMap(n, linear, table, max(degree, 1))
    binv_map = PolyMap(n, b_inv, {}, 1)
    linear, table = _split_components(q, n)
    q_map = PolyMap(n, linear, table, max(degree, 1))
    return compose_truncate(q_map, binv_map, degree)


def pushforward_truncate(change: PolyMap, fld: PolyVectorField, degree: int) -> PolyVectorField:
    """Field in the coordinates ``w = change(z)``:
    ``X_*(w) = d(change) . X(change^{-1}(w))``, truncated at ``degree``.

    ``change`` must be tangent to the identity, which keeps the Jordan
    linear part of the result equal to the input's.
    """
    if change.n != fld.n:
        raise ValueError(f"dimension mismatch: change n={change.n}, field n={fld.n}")
    if not change.is_tangent_to_identity():
        raise NonInvertibleError("change must be tangent to the identity")
    n = fld.n
    inverse = invert_truncate(change, degree)
    inv_polys = _components(inverse)
    cache = _PowerCache(inv_polys, degree)
    change_polys = _components(change)
    field_polys = _components(fld)
    field_at_inv = [_pcompose(p, cache, degree) for p in field_polys]
    out_polys: list[Poly] = []
    for j in range(n):
        acc: Poly = {}
        for k in range(n):
            djk = _pdiff(change_polys[j], k)
            if not djk:
                continue
            djk_at_inv = _pcompose(djk, cache, degree)
            _padd_into(acc, _pmul(djk_at_inv, field_at_inv[k], degree))
        out_polys.append(_pclean(acc))
    linear, table = _split_components(out_polys, n)
    drift = np.max(np.abs(linear - fld.linear_matrix()))
    if drift > 1e-9:
        raise ValueError(f"pushforward perturbed the linear part by {drift:.3e}")
    return fld.with_coefficients(table, max(degree, 2))


def subtract_normal_part(fld: PolyVectorField, normal: PolyVectorField) -> PolyVectorField:
    """Remainder ``fld - normal`` as a field with zero linear part."""
    if fld.n != normal.n:
        raise ValueError("dimension mismatch")
    table = dict(fld.coefficients)
    for key, c in normal.coefficients.items():
        table[key] = table.get(key, 0.0) - c
    return PolyVectorField(
        fld.n,
        (0.0,) * fld.n,
        0.0,
        frozenset(),
        {k: v for k, v in table.items() if abs(v) > DROP_TOL},
        max(fld.truncation_degree, normal.truncation_degree),
    )
