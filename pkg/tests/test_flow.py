import math

import numpy as np
import pytest

from conftest import W_AT_1_FROM_01, closed_flow_1d
from pdnorm.algebra import PolyVectorField, coefficient_norm
from pdnorm.errors import EscapeError
from pdnorm.flow import initial_state, integrate_to, matrix_exp, step
from pdnorm.spectrum import select_direction


class TestMatrixExp:
    def test_diagonal(self):
        out = matrix_exp((-1, -2), 0.0, frozenset(), 1.0)
        assert np.allclose(out, np.diag([math.exp(-1), math.exp(-2)]))

    def test_jordan_block(self):
        out = matrix_exp((-1, -1), 0.5, frozenset({0}), 2.0)
        assert np.allclose(out, math.exp(-2) * np.array([[1, 1], [0, 1]]))

    def test_zero_time_identity(self):
        assert np.allclose(matrix_exp((-1, 3j), 0.0, frozenset(), 0.0), np.eye(2))

    def test_three_chain(self):
        tau = 0.7 - 0.2j
        eps = 0.3
        out = matrix_exp((-1, -1, -1), eps, frozenset({0, 1}), tau)
        nil = np.array([[0, 1, 0], [0, 0, 1], [0, 0, 0]], dtype=complex)
        a = -np.eye(3) + eps * nil
        # reference by scaling-and-squaring on a tiny matrix
        from scipy.linalg import expm

        assert np.allclose(out, expm(tau * a), atol=1e-12)


class TestStep:
    def test_linear_field_keeps_integral_zero(self, x0_1d):
        st = step(x0_1d, x0_1d, 1.0 + 0j, initial_state([0.3]), 1e-9)
        assert st.I[0] == 0.0
        assert st.t > 0

    def test_variational_matches_exp(self, field_1d, x0_1d):
        tol = 1e-9
        st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.2], 2.0, tol, integrate_w=True)
        ref = matrix_exp((-1,), 0.0, frozenset(), -2.0)
        assert np.max(np.abs(st.W - ref)) < 10 * tol * max(1.0, np.max(np.abs(ref)))

    def test_escape_raises(self):
        f = PolyVectorField(1, (1.0,), 0.0, frozenset(), {}, 1)  # expanding
        x0 = f
        with pytest.raises(EscapeError):
            integrate_to(f, x0, 1.0 + 0j, [1.0], 10.0, 1e-8, escape_radius=3.0)


class TestIntegrateTo:
    def test_zero_time(self, field_1d, x0_1d):
        st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.1], 0.0, 1e-9)
        assert st.t == 0.0 and st.steps == 0
        assert st.w[0] == 0.1

    def test_linear_field_identity_transform(self, x0_1d):
        st = integrate_to(x0_1d, x0_1d, 1.0 + 0j, [0.4], 5.0, 1e-10)
        assert st.I[0] == 0.0

    def test_1d_closed_form_point(self, field_1d, x0_1d):
        st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.1], 1.0, 1e-10)
        assert abs(st.w[0] - W_AT_1_FROM_01) < 1e-9

    def test_long_time_linearizer_value(self, field_1d, x0_1d):
        st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.1], 20.0, 1e-12)
        assert abs((0.1 + st.I[0]) - 1 / 9) < 1e-9

    def test_closed_form_matches_along_trajectory(self, field_1d, x0_1d):
        for z0 in (0.3, -0.25, 0.2 + 0.1j):
            st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [z0], 2.5, 1e-11)
            assert abs(st.w[0] - closed_flow_1d(z0, 2.5)) < 1e-9


class TestEstimates:
    def test_decay_rate_inside_certified_ball(self, field_1d, x0_1d):
        # the exponential decay estimate holds once the nonlinearity is
        # dominated: sum |c| r^(|m|-1) <= delta at the starting radius
        info = select_direction((-1,))
        delta = info.alpha / 10
        r = delta / coefficient_norm(field_1d, 1.0, 1)  # single z^2 term: r = delta
        rate = -(info.alpha - info.epsilon - delta)
        for t_end in (0.5, 1.0, 2.0, 4.0):
            st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [r], t_end, 1e-11)
            assert abs(st.w[0]) <= r * math.exp(rate * t_end) * (1 + 1e-6)

    def test_variational_growth_bound(self, field_2d_resonant):
        # polynomial normal part: ||W(t)|| <= (1+slack) e^((beta+eps+delta) t)
        info = select_direction((-1, -2))
        delta = info.alpha / 10
        z = np.array([0.02, 0.02])
        for t_end in (0.5, 1.0, 2.0):
            st = integrate_to(field_2d_resonant, field_2d_resonant, info.direction, z, t_end, 1e-11)
            bound = (1 + 0.1) * math.exp((info.beta + info.epsilon + delta) * t_end)
            assert np.linalg.norm(st.W, 2) <= bound

    def test_norm_nonincreasing_inside_radius(self, field_1d, x0_1d):
        norms = []
        integrate_to(
            field_1d, x0_1d, 1.0 + 0j, [0.45], 3.0, 1e-10,
            observer=lambda st: norms.append(abs(st.w[0])),
        )
        assert all(b <= a * (1 + 1e-9) for a, b in zip(norms, norms[1:]))

    def test_fixed_step_order(self, field_1d, x0_1d):
        # halving a fixed step must cut the end-point error by >= 8x
        # (the pair is order 5, so ~32x is expected)
        exact = closed_flow_1d(0.4, 1.0)
        errs = []
        for h in (0.1, 0.05):
            st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.4], 1.0, 1e-3, fixed_step=h)
            errs.append(abs(st.w[0] - exact))
        assert errs[0] / errs[1] >= 8.0

    def test_tolerance_scaling(self, field_1d, x0_1d):
        errs = []
        for tol in (1e-6, 1e-9):
            st = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.4], 2.0, tol)
            errs.append(abs(st.w[0] - closed_flow_1d(0.4, 2.0)))
        assert errs[1] < errs[0]

    def test_i_paths_consistent(self, field_1d, x0_1d):
        # closed-form W in the integrand vs the integrated variational
        # matrix: the two computations of I agree to 10 tol
        tol = 1e-10
        a = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.2], 6.0, tol)
        b = integrate_to(field_1d, x0_1d, 1.0 + 0j, [0.2], 6.0, tol, integrate_w=True)
        assert abs(a.I[0] - b.I[0]) < 10 * tol
