import itertools
import math

import numpy as np
import pytest

from conftest import R0_2D_ORACLE
from pdnorm.algebra import PolyVectorField
from pdnorm.errors import NotPoincareError
from pdnorm.spectrum import (
    check_poincare,
    min_flatness_flow,
    resonances,
    select_direction,
    transversality_radius,
)


class TestCheckPoincare:
    def test_left_half_plane(self):
        assert check_poincare((-1, -2)).is_poincare

    def test_straddling_pair_with_witness(self):
        out = check_poincare((1, -1))
        assert not out.is_poincare
        assert out.witness == pytest.approx((0.5, 0.5), abs=1e-9)

    def test_imaginary_segment(self):
        assert check_poincare((1j, 2j)).is_poincare

    def test_zero_eigenvalue_rejected(self):
        assert not check_poincare((0.0, -1.0)).is_poincare

    @pytest.mark.parametrize("trial", range(20))
    def test_projective_in_time_scale(self, trial):
        # the hull condition is invariant under multiplying the field by
        # a nonzero complex constant
        rng = np.random.default_rng(trial)
        n = int(rng.integers(1, 4))
        lam = rng.normal(size=n) + 1j * rng.normal(size=n)
        g = complex(*rng.normal(size=2))
        if abs(g) < 1e-3:
            g = 1.0 + 1j
        assert check_poincare(lam).is_poincare == check_poincare(g * lam).is_poincare


class TestSelectDirection:
    def test_real_stable_pair(self):
        info = select_direction((-1, -2))
        assert info.direction == pytest.approx(1.0, abs=1e-6)
        assert info.alpha == pytest.approx(1.0, abs=1e-12)
        assert info.beta == pytest.approx(2.0, abs=1e-12)

    def test_imaginary_pair_rotates(self):
        info = select_direction((1j, 2j))
        assert info.direction == pytest.approx(1j, abs=1e-6)
        assert info.alpha == pytest.approx(1.0, abs=1e-10)
        assert info.beta == pytest.approx(2.0, abs=1e-10)

    def test_not_poincare_raises(self):
        with pytest.raises(NotPoincareError):
            select_direction((1, -1))

    @pytest.mark.parametrize("trial", range(15))
    def test_margin_is_tight(self, trial):
        rng = np.random.default_rng(50 + trial)
        n = int(rng.integers(1, 4))
        lam = -rng.uniform(0.5, 3.0, n) + 1j * rng.uniform(-1.0, 1.0, n)
        info = select_direction(lam)
        dists = -np.real(info.direction * lam)
        assert np.all(dists >= info.alpha - 1e-10)
        assert np.min(dists) == pytest.approx(info.alpha, abs=1e-10)
        assert abs(abs(info.direction) - 1.0) < 1e-14


def _brute_force_flow(lam, bound, tol):
    n = len(lam)
    found = set()
    for exps in itertools.product(range(bound + 1), repeat=n):
        if not 2 <= sum(exps) <= bound:
            continue
        inner = sum(l * e for l, e in zip(lam, exps))
        for j in range(n):
            if abs(inner - lam[j]) <= tol:
                found.add((j, exps))
    return found


class TestResonances:
    def test_classic_2d(self):
        out = resonances((-1, -2), 3)
        assert out.entries == ((1, (2, 0)),)

    def test_irrational_ratio_empty(self):
        assert resonances((-1, -math.pi), 5).entries == ()

    def test_1d_empty(self):
        assert resonances((-1,), 6).entries == ()

    @pytest.mark.parametrize("trial", range(30))
    def test_agrees_with_brute_force(self, trial):
        rng = np.random.default_rng(200 + trial)
        n = int(rng.integers(1, 4))
        if rng.random() < 0.5:
            # integer-ratio spectra generate genuine resonances
            lam = tuple(-float(v) for v in rng.integers(1, 4, n))
        else:
            lam = tuple(-rng.uniform(0.5, 3.0, n) + 1j * rng.uniform(-0.5, 0.5, n))
        out = resonances(lam, 6)
        assert set(out.entries) == _brute_force_flow(lam, 6, out.tol)


class TestMinFlatness:
    def test_mixed_bound(self):
        info = select_direction((-1, -2), epsilon=0.1)
        assert min_flatness_flow(info, 2, 1.1) == 3

    def test_scalar_case(self):
        info = select_direction((-1,))
        assert min_flatness_flow(info, 1, 1.0 + 1e-9) == 2

    def test_wide_spectrum(self):
        info = select_direction((-1, -5))
        assert min_flatness_flow(info, 2, 1.5) == 8


class TestTransversalityRadius:
    def test_linear_field_unbounded(self):
        f = PolyVectorField(2, (-1, -2), 0.0, frozenset(), {}, 2)
        info = select_direction((-1, -2))
        out = transversality_radius(f, info)
        assert math.isinf(out.sampled_estimate)

    def test_1d_quadratic_radius_one(self, field_1d):
        info = select_direction((-1,))
        out = transversality_radius(field_1d, info)
        assert out.sampled_estimate == pytest.approx(1.0, abs=1e-3)
        assert out.certified_lower <= out.sampled_estimate

    def test_2d_against_phase_aligned_oracle(self):
        f = PolyVectorField(2, (-1, -2), 0.0, frozenset(), {(1, (2, 0)): 1.0}, 2)
        info = select_direction((-1, -2))
        out = transversality_radius(f, info, samples_per_sphere=32768, bisection_tol=1e-4)
        assert 2.5 <= out.sampled_estimate <= 4.0
        assert out.sampled_estimate == pytest.approx(R0_2D_ORACLE, abs=2e-2)

    @pytest.mark.parametrize("trial", range(5))
    def test_certified_below_sampled(self, trial):
        rng = np.random.default_rng(300 + trial)
        n = int(rng.integers(1, 3))
        lam = tuple(-rng.uniform(0.5, 2.0, n))
        coeffs = {}
        for _ in range(2):
            m = tuple(int(v) for v in rng.integers(0, 3, n))
            if sum(m) < 2:
                continue
            coeffs[(int(rng.integers(0, n)), m)] = complex(*rng.uniform(-1, 1, 2))
        if not coeffs:
            coeffs = {(0, (2,) + (0,) * (n - 1)): 1.0}
        f = PolyVectorField(n, lam, 0.0, frozenset(), coeffs, 4)
        info = select_direction(lam)
        out = transversality_radius(f, info, samples_per_sphere=2048)
        if math.isfinite(out.sampled_estimate):
            assert out.certified_lower <= out.sampled_estimate
