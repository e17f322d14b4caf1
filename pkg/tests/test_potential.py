import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ring_dynamics.errors import SingularPointError, SourceCollisionError
from ring_dynamics.potential import (TWO_PI, EulerSystem, RingSystem, agm, ellipke, euler_force,
                                     euler_potential, evaluate, kepler_deviation,
                                     mass_scale_check, measure_wire_constant,
                                     perturbation_residual, quadrature_force,
                                     quadrature_potential, ring_force, ring_potential,
                                     scale_check, translate, translated_near_system, wire_force)

# independent oracle values (mpmath adaptive quadrature at 30 digits)
V_2_0_0_M2PI = -3.3715007096251920857
F_15_0_05_M2PI = (-2.5483019088177557166, 0.0, -1.7026897563098001763)

unit = RingSystem()
coord = st.floats(-4.0, 4.0, allow_nan=False)


def off_circle(p, sys=unit, margin=1e-3):
    return sys.distance_to_source(p) > margin * sys.radius


# --------------------------------------------------------------------------
# elliptic integrals
# --------------------------------------------------------------------------

def test_agm_known_value():
    # Gauss's constant: 1 / agm(1, sqrt 2)
    assert_allclose(1.0 / agm(1.0, math.sqrt(2.0)), 0.83462684167407318628, rtol=1e-15)


def test_ellipke_legendre_relation():
    # E K' + E' K - K K' = pi / 2
    for m in (0.1, 0.3, 0.5, 0.77, 0.95):
        k, e = ellipke(m)
        k1, e1 = ellipke(1.0 - m)
        assert_allclose(e * k1 + e1 * k - k * k1, math.pi / 2, rtol=1e-14)


def test_ellipke_at_zero():
    k, e = ellipke(0.0)
    assert_allclose((k, e), (math.pi / 2, math.pi / 2), rtol=1e-15)


# --------------------------------------------------------------------------
# potential and force examples
# --------------------------------------------------------------------------

def test_potential_on_axis_point():
    assert_allclose(ring_potential(unit, (0, 0, 1)), -1 / math.sqrt(2), rtol=1e-15)


def test_potential_at_center():
    assert_allclose(ring_potential(unit, (0, 0, 0)), -1.0, rtol=1e-15)


def test_potential_matches_oracle_value():
    sys = RingSystem(1.0, TWO_PI)
    assert_allclose(ring_potential(sys, (2, 0, 0)), V_2_0_0_M2PI, rtol=1e-13)
    assert_allclose(quadrature_potential(sys, (2, 0, 0), nodes=10 ** 6), V_2_0_0_M2PI, rtol=1e-13)


def test_force_at_center_vanishes():
    assert_allclose(ring_force(unit, (0, 0, 0)), (0, 0, 0), atol=1e-16)


def test_force_on_axis():
    assert_allclose(ring_force(unit, (0, 0, 1)), (0, 0, -1 / (2 * math.sqrt(2))), rtol=1e-14, atol=1e-16)


def test_force_matches_oracle_value():
    sys = RingSystem(1.0, TWO_PI)
    assert_allclose(ring_force(sys, (1.5, 0, 0.5)), F_15_0_05_M2PI, rtol=1e-12, atol=1e-15)
    assert_allclose(quadrature_force(sys, (1.5, 0, 0.5)), F_15_0_05_M2PI, rtol=1e-12, atol=1e-15)


def test_on_circle_raises():
    with pytest.raises(SourceCollisionError):
        ring_potential(unit, (1, 0, 0))
    with pytest.raises(SourceCollisionError):
        ring_force(unit, (0, 1, 1e-10))


def test_near_source_flag():
    assert evaluate(unit, (1 + 1e-7, 0, 0)).near_source
    assert not evaluate(unit, (1.5, 0, 0)).near_source


def test_density_round_trip():
    sys = RingSystem.from_density(0.7, 2.5)
    assert_allclose(sys.density, 0.7, rtol=1e-15)
    assert_allclose(sys.mass, 0.7 * TWO_PI * 2.5, rtol=1e-15)


def test_agm_matches_quadrature_on_grid():
    sys = RingSystem(1.3, 2.0)
    worst = 0.0
    for r in np.linspace(0.0, 3.0, 20):
        for z in np.linspace(-1.5, 1.5, 20):
            p = (r, 0.0, z)
            if sys.distance_to_source(p) <= 100 * sys.band:
                continue
            worst = max(worst, abs(ring_potential(sys, p) / quadrature_potential(sys, p) - 1))
    assert worst <= 1e-10


def test_on_axis_closed_form():
    sys = RingSystem(0.8, 3.0)
    for z in np.linspace(-5, 5, 41):
        assert_allclose(ring_potential(sys, (0, 0, z)), -3.0 / math.sqrt(0.64 + z * z), rtol=1e-13)


@settings(max_examples=60, deadline=None)
@given(coord, coord, coord)
def test_force_is_negative_gradient(x, y, z):
    p = np.array([x, y, z])
    if not off_circle(p, margin=0.05):
        return
    h = 1e-3
    grad = np.zeros(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        vals = [ring_potential(unit, p + c * e) for c in (-2, -1, 1, 2)]
        grad[i] = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    f = ring_force(unit, p)
    assert np.max(np.abs(f + grad)) <= 1e-7 * max(np.max(np.abs(f)), 1e-3)


@settings(max_examples=100, deadline=None)
@given(coord, coord, st.floats(1e-3, 4.0))
def test_vertical_force_opposes_height(x, y, z):
    for zz in (z, -z):
        p = (x, y, zz)
        if off_circle(p):
            fz = ring_force(unit, p)[2]
            assert fz * zz < 0


@settings(max_examples=100, deadline=None)
@given(coord, coord, coord, st.floats(0.0, TWO_PI))
def test_reflection_and_rotation_invariance(x, y, z, ang):
    p = (x, y, z)
    if not off_circle(p):
        return
    v = ring_potential(unit, p)
    assert_allclose(ring_potential(unit, (x, y, -z)), v, rtol=1e-15)
    c, s = math.cos(ang), math.sin(ang)
    assert_allclose(ring_potential(unit, (c * x - s * y, s * x + c * y, z)), v, rtol=1e-13)
    assert v < 0


# --------------------------------------------------------------------------
# scaling and translation identities
# --------------------------------------------------------------------------

def test_scale_identity_unit_factor():
    assert scale_check(unit, (3, 0, 1), 1.0).worst == 0.0


def test_scale_identity_example():
    assert scale_check(unit, (3, 0, 1), 2.0).worst <= 1e-12


@settings(max_examples=200, deadline=None)
@given(coord, coord, coord, st.floats(0.05, 20.0), st.floats(0.1, 10.0), st.floats(0.1, 5.0))
def test_scale_identities_fuzz(x, y, z, c, mass, radius):
    sys = RingSystem(radius, mass)
    p = (x * radius, y * radius, z * radius)
    if not off_circle(p, sys):
        return
    assert scale_check(sys, p, c).worst <= 1e-12
    assert mass_scale_check(sys, p, c).worst <= 1e-12


def test_translate_zero_is_identity():
    assert translate(unit, (0, 0, 0)) == unit


def test_translated_configuration_passes_through_origin():
    sys = translated_near_system(0.1, 1.0)
    assert sys.center == (10.0, 0.0, 0.0)
    assert sys.radius == 10.0
    assert sys.distance_to_source((0, 0, 0)) < 1e-12


def test_translate_relation():
    rng = np.random.default_rng(7)
    q = np.array([0.3, -1.2, 0.5])
    moved = translate(unit, q)
    for p in rng.uniform(-3, 3, size=(100, 3)):
        if not off_circle(p):
            continue
        assert ring_potential(moved, p + q) == pytest.approx(ring_potential(unit, p), rel=1e-14)


# --------------------------------------------------------------------------
# wire limit
# --------------------------------------------------------------------------

def test_wire_force_declared_examples():
    assert_allclose(wire_force(1.0, (1, 0)), (64, 0))
    assert_allclose(wire_force(1.0, (0, 2)), (0, 32))


def test_wire_force_origin_raises():
    with pytest.raises(SingularPointError):
        wire_force(1.0, (0, 0))


def test_wire_constant_measurement():
    w = measure_wire_constant()
    assert_allclose(w.constant, 2.0, rtol=1e-4)
    assert not w.agrees
    assert "DISAGREES" in w.summary()
    assert "2.000" in w.summary()
    # the limit field is radial: the tangential part vanishes with eps
    assert abs(w.tangential[-1]) < abs(w.tangential[0])
    assert abs(w.tangential[-1]) < 1e-3


def test_wire_constant_ladder_validation():
    with pytest.raises(ValueError):
        measure_wire_constant(epsilons=(1e-2, 3e-3, 1e-4))


# --------------------------------------------------------------------------
# Euler and Kepler comparisons
# --------------------------------------------------------------------------

def test_euler_examples():
    sys = EulerSystem(1.0, 1.0)
    assert_allclose(euler_potential(sys, (0, 0)), -2.0)
    assert_allclose(euler_force(sys, (0, 0)), (0, 0), atol=1e-16)
    assert_allclose(euler_potential(sys, (0, 1)), -2 / math.sqrt(2), rtol=1e-15)


def test_euler_center_raises():
    with pytest.raises(SourceCollisionError):
        euler_potential(EulerSystem(1.0, 1.0), (1.0, 0.0))


def test_euler_single_center_circular_speed():
    # near one center, the circular speed at distance d is sqrt(M/d); at d = 1 it is sqrt(M)
    m = 2.5
    sys = EulerSystem(m, 1e6)
    fx, _ = sys.planar_force(1e6 + 1.0, 0.0)
    assert_allclose(math.sqrt(-fx * 1.0), math.sqrt(m), rtol=1e-6)


@settings(max_examples=50, deadline=None)
@given(coord, coord, st.floats(0.1, 10.0))
def test_euler_scaling(x, y, c):
    sys = EulerSystem(1.0, 1.0)
    if sys.planar_distance(x, y) < 1e-3:
        return
    big = EulerSystem(1.0, c)
    assert_allclose(euler_potential(big, (c * x, c * y)), euler_potential(sys, (x, y)) / c, rtol=1e-13)
    assert_allclose(euler_force(big, (c * x, c * y)), euler_force(sys, (x, y)) / c ** 2,
                    rtol=1e-12, atol=1e-300)


def test_perturbation_residual_zero_eps():
    assert perturbation_residual((2, 0, 0), 0.0) == 0.0
    assert kepler_deviation((2, 0, 0), 0.0) == 0.0


def test_perturbation_residual_converges():
    # eps^2 term of the multipole expansion in the plane: M / (4 |p|^3) = 1/32 at |p| = 2
    vals = [perturbation_residual((2, 0, 0), e) for e in (1e-1, 1e-2, 1e-3)]
    errs = [abs(v - 1 / 32) for v in vals]
    assert errs[1] < errs[0] and errs[2] < 1e-6


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 3.0), st.floats(-1.0, 1.0), st.floats(0.01, 0.5))
def test_potential_even_in_eps(x, z, eps):
    # a circle of radius -eps is the same set traversed from the opposite side
    sys = RingSystem(eps, 1.0)
    p = (x, 0.0, z)
    assert_allclose(quadrature_potential(sys, p, nodes=4096, signed_radius=-eps),
                    ring_potential(sys, p), rtol=1e-13)
