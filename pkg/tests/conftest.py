"""Shared fixtures and frozen oracle values.

Every numeric oracle here was computed independently of the library
before the implementation: closed-form solutions of separable ODEs, the
Koenigs recursion by hand/script, symbolic pushforwards, and a
phase-aligned reduction of the 2D transversality supremum to a 1D root.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from pdnorm.algebra import PolyMap, PolyVectorField
from pdnorm.normal_form import prepare_flow, prepare_map

# dz/dt = -z + z^2: w(t) = z e^-t / (1 - z + z e^-t), linearizer z/(1-z)
W_AT_1_FROM_01 = 0.03927030055005057
L20_FROM_01 = 0.11111111108566478  # z/(1 - z (1 - e^-20)) at z = 0.1

# phase-aligned sphere supremum root for X = (-z1, -2 z2 + z1^2)
R0_2D_ORACLE = 3.33019067683267

# Koenigs recursion for F = z/2 + z^2, degrees 2..8
KOENIGS_HALF = [
    4.0,
    10.666666666666666,
    27.428571428571427,
    63.39047619047619,
    147.85867895545314,
    328.7745836685929,
    726.6408688161291,
]

# min |L'| on the circle |z| = 0.95 for L = z/(1-z): 1/1.95^2
MIN_LPRIME_095 = 0.26298487836949375


def closed_flow_1d(z: complex, t: float) -> complex:
    """Closed-form trajectory of dz/dt = -z + z^2 (separable ODE)."""
    return z * math.exp(-t) / (1 - z + z * math.exp(-t))


def closed_linearizer_1d(z: complex) -> complex:
    return z / (1 - z)


@pytest.fixture(scope="session")
def field_1d() -> PolyVectorField:
    return PolyVectorField(1, (-1,), 0.0, frozenset(), {(0, (2,)): 1.0}, 2)


@pytest.fixture(scope="session")
def x0_1d() -> PolyVectorField:
    return PolyVectorField(1, (-1,), 0.0, frozenset(), {}, 1)


@pytest.fixture(scope="session")
def prep_1d(field_1d):
    return prepare_flow(field_1d, 2)


@pytest.fixture(scope="session")
def field_2d_resonant() -> PolyVectorField:
    # lambda = (-1, -2): z1^2 in component 2 is resonant, X1 vanishes
    return PolyVectorField(2, (-1, -2), 0.0, frozenset(), {(1, (2, 0)): 1.0}, 2)


@pytest.fixture(scope="session")
def prep_2d_resonant(field_2d_resonant):
    return prepare_flow(field_2d_resonant, 3)


@pytest.fixture(scope="session")
def field_2d_nonres() -> PolyVectorField:
    # non-resonant 2D field whose prepared remainder X1 is nonzero;
    # m = 4 keeps the stopping rate kappa comfortably positive
    return PolyVectorField(
        2, (-1, -2.5), 0.0, frozenset(), {(0, (0, 2)): 1.0, (0, (2, 0)): 1.0}, 2
    )


@pytest.fixture(scope="session")
def prep_2d_nonres(field_2d_nonres):
    return prepare_flow(field_2d_nonres, 4)


@pytest.fixture(scope="session")
def map_half() -> PolyMap:
    return PolyMap(1, np.array([[0.5]]), {(0, (2,)): 1.0}, 2)


@pytest.fixture(scope="session")
def prep_map_half(map_half):
    return prepare_map(map_half, 2)
