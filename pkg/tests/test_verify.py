import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from ring_dynamics.dynamics import (OrbitTrace, PlanarState, PointMassSystem, Until,
                                    integrate_planar)
from ring_dynamics.errors import PreconditionError, ResolutionError, UnboundedRegionError
from ring_dynamics.potential import TWO_PI, EulerSystem, RingSystem
from ring_dynamics.search import system_from_description
from ring_dynamics.verify import (Interval, check_field_pointing, check_injective,
                                  check_return_time, check_trajectory_pointing,
                                  default_pointing_grid, harmonic_first_zero, hill_radius,
                                  pointing_arc, pointing_h, points_to, polyline_self_intersection,
                                  random_launches, return_time_bound, reversed_trace,
                                  scalar_ode_lemmas, upper_half_arcs)

# independent oracle: mpmath findroot of V(x, 0, 0) = delta at 30 digits, ring M = 2 pi
HILL_RING_2PI = {-1.0: 6.32303663423970703, -0.5: 12.5862728436812921}

unit = RingSystem()
ring2pi = RingSystem(1.0, TWO_PI)
I11 = Interval.bounded(-1.0, 1.0)


# --------------------------------------------------------------------------
# intervals and the pointing predicate
# --------------------------------------------------------------------------

def test_interval_validation():
    with pytest.raises(ValueError):
        Interval.bounded(1.0, -1.0)
    with pytest.raises(ValueError):
        Interval("left", 0.0, 1.0)
    with pytest.raises(ValueError):
        Interval("open", 0.0, 1.0)
    assert Interval.left(0.0).mirrored() == Interval.right(-0.0)


def test_points_to_examples():
    left = Interval.left(0.0)
    assert points_to((1, 1), (0, 0), left)
    assert points_to((1, 1), (-1, -1), left)
    assert not points_to((1, 1), (1, -1), left)
    assert not points_to((1, 1), (0, 1), left)


def test_points_to_on_axis():
    assert points_to((0.5, 0.0), (3.0, 1.0), I11)
    assert not points_to((2.0, 0.0), (0.0, 1.0), I11)
    assert points_to((2.0, 0.0), (-1.0, 0.0), I11)
    assert not points_to((2.0, 0.0), (1.0, 0.0), I11)


def test_points_to_needs_upper_half_plane():
    with pytest.raises(ValueError):
        points_to((0.0, -1.0), (0.0, 1.0), I11)


finite = st.floats(-10, 10, allow_nan=False)


@settings(max_examples=300, deadline=None)
@given(finite, st.floats(1e-3, 10), finite, finite, st.floats(-5, 5), st.floats(0, 5), finite)
def test_points_to_translation_and_reflection_invariance(x1, x2, v1, v2, a, w, d):
    interval = Interval.bounded(a, a + w)
    base = points_to((x1, x2), (v1, v2), interval)
    # a shift that rounds moves the configuration to a different geometry
    if all((u + d) - d == u for u in (x1, interval.a, interval.b)):
        assert points_to((x1 + d, x2), (v1, v2), interval.shifted(d)) == base
    assert points_to((-x1, x2), (-v1, v2), interval.mirrored()) == base


@settings(max_examples=300, deadline=None)
@given(finite, st.floats(1e-3, 10), finite, finite)
def test_points_to_matches_ray_geometry(x1, x2, v1, v2):
    left = Interval.left(0.0)
    # exact axis hit, so ties at the interval end are decided without rounding
    expected = v2 < 0 and Fraction(x1) - Fraction(x2) * Fraction(v1) / Fraction(v2) <= 0
    if v1 == 0 and v2 == 0:
        expected = True
    assert points_to((x1, x2), (v1, v2), left) == expected


@settings(max_examples=300, deadline=None)
@given(finite, st.floats(1e-3, 10), finite, finite)
def test_h_nonnegative_when_pointing(x1, x2, v1, v2):
    left = Interval.left(0.0)
    if points_to((x1, x2), (v1, v2), left):
        assert pointing_h(x1, x2, v1, v2, left)["right"] >= 0


# --------------------------------------------------------------------------
# field pointing
# --------------------------------------------------------------------------

def test_field_points_to_diameter():
    xs, zs = default_pointing_grid(50)
    rep = check_field_pointing(unit, I11, xs, zs)
    assert rep.passed and rep.stats["samples"] == 2500


def test_field_on_axis_is_vertical():
    for z in (0.1, 1.0, 3.0):
        fx, fz = unit.planar_force(0.0, z)
        assert fx == 0.0 and fz < 0
        assert points_to((0.0, z), (fx, fz), I11)


def test_shrunk_interval_gives_violations_near_circle():
    xs, zs = default_pointing_grid(50)
    rep = check_field_pointing(unit, Interval.bounded(-0.5, 0.5), xs, zs)
    assert not rep.passed
    d = [unit.planar_distance(v["x"], v["z"]) for v in rep.violations]
    assert min(d) < 0.2


def test_gradient_sign_is_negative_control():
    xs, zs = default_pointing_grid(20)
    rep = check_field_pointing(unit, I11, xs, zs, sign=-1.0)
    assert rep.stats["violations"] == rep.stats["samples"]


def test_field_pointing_grid_must_be_upper():
    with pytest.raises(ValueError):
        check_field_pointing(unit, I11, [0.5], [0.0])


# --------------------------------------------------------------------------
# trajectory pointing
# --------------------------------------------------------------------------

def test_near_orbit_arc_points_and_lands(near_orbits):
    orb = near_orbits[0.05]
    sys = system_from_description(orb.system)
    tr = integrate_planar(sys, PlanarState(*orb.initial_state), Until(orb.period, "z-cross-down"))
    arc = pointing_arc(tr, I11)
    rep = check_trajectory_pointing(arc, I11, samples=2000)
    assert rep.passed
    assert rep.landing is not None and -1 <= rep.landing <= 1
    rev = check_trajectory_pointing(reversed_trace(arc), I11, require_premise=False)
    assert not rev.passed


def test_sampled_arcs_keep_pointing():
    arcs = upper_half_arcs(unit, I11, 20, np.random.default_rng(3))
    assert len(arcs) == 20
    for arc in arcs:
        rep = check_trajectory_pointing(arc, I11, samples=2000)
        assert rep.passed
        assert rep.min_h_increment >= -1e-9
        assert I11.contains(rep.landing)


def test_premise_violation_raises():
    tr = integrate_planar(unit, PlanarState(2.0, 0.0, 0.0, 0.6), Until(50.0, "z-cross-down"))
    with pytest.raises(PreconditionError):
        check_trajectory_pointing(tr, I11)


def test_arc_needs_pointing_sample():
    tr = integrate_planar(unit, PlanarState(3.0, 0.0, 0.3, 0.3), 0.5)
    with pytest.raises(PreconditionError):
        pointing_arc(tr, I11)


# --------------------------------------------------------------------------
# injectivity
# --------------------------------------------------------------------------

def test_vertical_segment_is_injective():
    pts = np.column_stack([np.zeros(10), np.linspace(0, 1, 10)])
    assert check_injective(pts).injective


def test_self_crossing_polyline_detected():
    pts = np.array([[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]])
    res = polyline_self_intersection(pts)
    assert not res.injective
    assert res.segments == (0, 2)
    assert_allclose(res.point, (1.0, 1.0))


def test_touching_polyline_detected():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.5, 0.0], [0.5, -1.0]])
    assert not polyline_self_intersection(pts).injective


def test_under_resolved_trace_rejected():
    t = np.array([0.0, 1.0, 2.0])
    y = np.array([[0.0, 0.0, 0, 0], [1.0, 1.0, 0, 0], [2.0, 0.0, 0, 0]])
    tr = OrbitTrace("planar", t, y, np.zeros(3))
    with pytest.raises(ResolutionError):
        check_injective(tr)


def test_essential_parts_are_injective(ring_eights, euler_eights):
    for fam in ring_eights + euler_eights:
        assert check_injective(fam.essential.trace).injective


# --------------------------------------------------------------------------
# Hill radius and return times
# --------------------------------------------------------------------------

@pytest.mark.parametrize("delta", [-0.25, -1.0, -3.0])
def test_hill_radius_kepler(delta):
    h = hill_radius(PointMassSystem(2.0), delta)
    assert_allclose(h.radius, 2.0 / -delta, rtol=1e-15)


@pytest.mark.parametrize("delta", [-0.5, -1.0])
def test_hill_radius_ring_oracle(delta):
    h = hill_radius(ring2pi, delta)
    assert_allclose(h.radius, HILL_RING_2PI[delta], rtol=1e-10)
    assert abs(ring2pi.planar_potential(h.radius, 0.0) - delta) <= 1e-10
    assert ring2pi.planar_potential(0.5 * h.radius, 0.0) < delta
    assert h.grid_sup <= h.radius * 1.01
    assert_allclose(h.coefficient, TWO_PI / (1 + h.radius) ** 3, rtol=1e-15)


@pytest.mark.parametrize("delta", [-0.5, -1.0, -2.0])
def test_hill_radius_euler_bound(delta):
    h = hill_radius(EulerSystem(1.0, 1.0), delta)
    assert h.radius <= 2.0 / -delta + 1.0
    assert_allclose(h.coefficient, 2.0 / (1 + h.radius) ** 3, rtol=1e-15)


def test_hill_radius_needs_negative_energy():
    with pytest.raises(UnboundedRegionError):
        hill_radius(unit, 0.0)


def test_return_bound_formula():
    for a in (0.01, 0.5, 1.0, 3.0):
        lam, t = return_time_bound(a)
        assert lam == 2 / min(1.0, a) + 1
        assert t == 2 * (1 + 2 / min(a, 1.0))


def test_return_bound_monotone_in_delta():
    bounds = [hill_radius(ring2pi, d, grid=0).return_bound for d in (-2.0, -1.0, -0.5, -0.25)]
    assert all(a <= b for a, b in zip(bounds, bounds[1:]))


def test_return_time_batch():
    rng = np.random.default_rng(11)
    launches = random_launches(ring2pi, -0.5, 20, rng)
    rep = check_return_time(ring2pi, launches, -0.5)
    assert rep.passed
    assert rep.stats["max_ratio"] < 1
    assert rep.stats["min_stiffness"] >= rep.stats["A"]


def test_slow_vertical_launch_returns_quickly():
    x0 = 2.0
    times = []
    for vz in (1e-2, 1e-4):
        tr = integrate_planar(ring2pi, PlanarState(x0, 0.0, 0.0, vz), Until(50.0, "z-cross-down"))
        times.append(tr.t[-1])
    # the return time tends to the half period pi / sqrt(stiffness) of small vertical oscillations
    assert times[1] <= times[0] * 1.01
    assert times[1] < hill_radius(ring2pi, -0.5, grid=0).return_bound


def test_return_time_rejects_high_energy():
    with pytest.raises(PreconditionError):
        check_return_time(ring2pi, [(3.0, 0.0, 5.0)], -0.5)
    with pytest.raises(PreconditionError):
        check_return_time(ring2pi, [(3.0, 0.1, -0.1)], -0.5)


# --------------------------------------------------------------------------
# comparison lemmas
# --------------------------------------------------------------------------

def test_harmonic_examples():
    assert_allclose(harmonic_first_zero(1.0), math.pi / 2)
    assert harmonic_first_zero(1.0) <= return_time_bound(1.0)[0] == 3.0
    assert_allclose(harmonic_first_zero(0.04), 7.853981633974483)
    assert return_time_bound(0.04)[0] == 51.0


def test_lemma_report():
    rep = scalar_ode_lemmas()
    assert rep.passed
    for row in rep.stats["rows"]:
        assert row["zero_cubic"] <= row["zero_numeric"]
        assert abs(row["zero_numeric"] - row["zero_exact"]) <= 1e-9 * row["zero_exact"]
