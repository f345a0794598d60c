import math

import numpy as np
import pytest

from pdnorm.algebra import (
    PolyMap,
    PolyVectorField,
    compose_truncate,
    evaluate,
    flatness_order,
    invert_truncate,
    jacobian,
    pushforward_truncate,
)
from pdnorm.errors import NonInvertibleError


def _field(n, lam, coeffs, degree=3, eps=0.0, pattern=frozenset()):
    return PolyVectorField(n, lam, eps, pattern, coeffs, degree)


class TestEvaluate:
    def test_1d_quadratic(self, field_1d):
        assert evaluate(field_1d, [0.1])[0] == pytest.approx(-0.09)

    def test_origin_is_singular(self, field_2d_nonres):
        assert np.all(evaluate(field_2d_nonres, [0.0, 0.0]) == 0.0)

    def test_2d_mixed(self):
        f = _field(2, (-1, -2), {(1, (2, 0)): 1.0})
        out = evaluate(f, [0.2, 0.1])
        assert out == pytest.approx(np.array([-0.2, -0.16]))

    def test_dimension_mismatch(self, field_1d):
        with pytest.raises(ValueError):
            evaluate(field_1d, [0.1, 0.2])


class TestJacobian:
    def test_linearization_at_origin(self):
        f = _field(2, (-1, -1), {(0, (0, 2)): 0.5}, eps=0.25, pattern=frozenset({0}))
        expected = np.array([[-1, 0.25], [0, -1]], dtype=complex)
        assert np.allclose(jacobian(f, [0, 0]), expected)

    def test_1d(self, field_1d):
        assert jacobian(field_1d, [0.1])[0, 0] == pytest.approx(-0.8)

    def test_2d(self):
        f = _field(2, (-1, -2), {(1, (2, 0)): 1.0})
        assert np.allclose(jacobian(f, [0.2, 0.1]), [[-1, 0], [0.4, -2]])

    @pytest.mark.parametrize("trial", range(10))
    def test_matches_finite_differences(self, trial):
        rng = np.random.default_rng(100 + trial)
        n = int(rng.integers(1, 4))
        lam = -rng.uniform(0.5, 2.0, n) + 1j * rng.uniform(-0.5, 0.5, n)
        coeffs = {}
        for _ in range(4):
            m = tuple(int(v) for v in rng.integers(0, 3, n))
            if sum(m) < 2:
                continue
            coeffs[(int(rng.integers(0, n)), m)] = complex(*rng.uniform(-1, 1, 2))
        f = _field(n, tuple(lam), coeffs, degree=6)
        z = rng.uniform(-0.3, 0.3, n) + 1j * rng.uniform(-0.3, 0.3, n)
        z *= 0.5 / max(np.linalg.norm(z), 0.5)
        jac = jacobian(f, z)
        h = 1e-6
        for k in range(n):
            ek = np.zeros(n, dtype=complex)
            ek[k] = h
            fd = (evaluate(f, z + ek) - evaluate(f, z - ek)) / (2 * h)
            denom = np.maximum(np.abs(jac[:, k]), 1.0)
            assert np.max(np.abs(fd - jac[:, k]) / denom) < 1e-6


class TestComposeTruncate:
    def test_identity_outer(self):
        inner = PolyMap(1, np.eye(1), {(0, (2,)): 1.0, (0, (4,)): 2.0}, 4)
        out = compose_truncate(PolyMap.identity(1), inner, 3)
        assert out.coefficients == {(0, (2,)): 1.0}

    def test_linear_inner(self):
        outer = PolyMap(1, np.eye(1), {(0, (2,)): 1.0}, 2)
        inner = PolyMap(1, 2 * np.eye(1), {}, 1)
        out = compose_truncate(outer, inner, 2)
        assert out.linear[0, 0] == 2.0
        assert out.coefficients == {(0, (2,)): 4.0}

    def test_quadratic_self_composition(self):
        f = PolyMap(1, np.eye(1), {(0, (2,)): 1.0}, 2)
        out = compose_truncate(f, f, 3)
        assert out.coefficients == {(0, (2,)): 2.0, (0, (3,)): 2.0}

    def test_associative_up_to_truncation(self):
        # integer coefficients keep the float arithmetic exact, so the
        # two association orders must give identical tables
        rng = np.random.default_rng(7)
        n = 2
        maps = []
        for _ in range(3):
            coeffs = {}
            for _ in range(3):
                m = tuple(int(v) for v in rng.integers(0, 3, n))
                if sum(m) < 2:
                    continue
                coeffs[(int(rng.integers(0, n)), m)] = float(rng.integers(-3, 4))
            maps.append(PolyMap(n, np.eye(n), coeffs, 4))
        a, b, c = maps
        left = compose_truncate(compose_truncate(a, b, 5), c, 5)
        right = compose_truncate(a, compose_truncate(b, c, 5), 5)
        assert left.coefficients == right.coefficients

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            compose_truncate(PolyMap.identity(1), PolyMap.identity(2), 3)


class TestPushforward:
    def test_identity_change(self, field_2d_nonres):
        out = pushforward_truncate(PolyMap.identity(2), field_2d_nonres, 3)
        assert out.coefficients == field_2d_nonres.coefficients

    def test_linear_part_invariant(self):
        f = _field(2, (-1, -2), {})
        change = PolyMap(2, np.eye(2), {(0, (0, 2)): 0.7}, 2)
        out = pushforward_truncate(change, f, 1)
        assert out.coefficients == {}
        assert np.allclose(out.linear_matrix(), f.linear_matrix())

    def test_1d_quadratic_change(self, field_1d):
        # symbolic oracle (computed before build): df . X(f^{-1}) for
        # f = z + z^2 and X = -z + z^2 is -z + 0 z^2 + 2 z^3 + ...
        change = PolyMap(1, np.eye(1), {(0, (2,)): 1.0}, 2)
        deg2 = pushforward_truncate(change, field_1d, 2)
        assert deg2.coefficients == {}
        deg3 = pushforward_truncate(change, field_1d, 3)
        assert deg3.coefficients[(0, (3,))] == pytest.approx(2.0)

    def test_round_trip_through_inverse(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            n = int(rng.integers(1, 4))
            lam = tuple(-rng.uniform(0.5, 2.0, n))
            coeffs = {}
            for _ in range(3):
                m = tuple(int(v) for v in rng.integers(0, 3, n))
                if not 2 <= sum(m) <= 4:
                    continue
                coeffs[(int(rng.integers(0, n)), m)] = complex(*rng.uniform(-0.8, 0.8, 2))
            f = _field(n, lam, coeffs, degree=4)
            change_coeffs = {}
            for _ in range(2):
                m = tuple(int(v) for v in rng.integers(0, 3, n))
                if not 2 <= sum(m) <= 4:
                    continue
                change_coeffs[(int(rng.integers(0, n)), m)] = complex(*rng.uniform(-0.5, 0.5, 2))
            change = PolyMap(n, np.eye(n), change_coeffs, 4)
            pushed = pushforward_truncate(change, f, 4)
            back = pushforward_truncate(invert_truncate(change, 4), pushed, 4)
            keys = set(back.coefficients) | set(f.coefficients)
            for key in keys:
                assert abs(back.coefficients.get(key, 0) - f.coefficients.get(key, 0)) < 1e-12

    def test_rejects_non_tangent_change(self, field_1d):
        change = PolyMap(1, 2 * np.eye(1), {}, 1)
        with pytest.raises(NonInvertibleError):
            pushforward_truncate(change, field_1d, 2)


class TestInvert:
    def test_inverse_of_quadratic(self):
        f = PolyMap(1, np.eye(1), {(0, (2,)): 1.0}, 2)
        inv = invert_truncate(f, 4)
        # series inverse of z + z^2: z - z^2 + 2 z^3 - 5 z^4
        assert inv.coefficients[(0, (2,))] == pytest.approx(-1.0)
        assert inv.coefficients[(0, (3,))] == pytest.approx(2.0)
        assert inv.coefficients[(0, (4,))] == pytest.approx(-5.0)
        assert compose_truncate(f, inv, 4).coefficients == {}

    def test_singular_linear_part(self):
        f = PolyMap(1, np.zeros((1, 1)), {(0, (2,)): 1.0}, 2)
        with pytest.raises(NonInvertibleError):
            invert_truncate(f, 3)


class TestFlatness:
    def test_cubic(self):
        f = _field(2, (-1, -2), {(0, (2, 1)): 1.0})
        assert flatness_order(f) == 3

    def test_linear_is_infinite(self):
        assert flatness_order(_field(1, (-1,), {})) == math.inf

    def test_lowest_degree_wins(self):
        f = _field(1, (-1,), {(0, (2,)): 1.0, (0, (5,)): 1.0}, degree=5)
        assert flatness_order(f) == 2


class TestCanonicalForm:
    def test_no_stored_zeros(self):
        f = _field(1, (-1,), {(0, (2,)): 1e-16, (0, (3,)): 1.0})
        assert (0, (2,)) not in f.coefficients

    def test_operations_never_emit_zeros(self):
        a = PolyMap(1, np.eye(1), {(0, (2,)): 1.0}, 2)
        b = PolyMap(1, np.eye(1), {(0, (2,)): -1.0}, 2)
        # (z + z^2) o (z - z^2) = z - 2 z^3 + z^4: the degree-2 term cancels
        out = compose_truncate(a, b, 3)
        for _, c in out.coefficients.items():
            assert c != 0.0
        assert (0, (2,)) not in out.coefficients
