import json
import math
from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from ring_dynamics.dynamics import PlanarState, PointMassSystem, angular_momentum, integrate_planar
from ring_dynamics.errors import InvalidPathError, PreconditionError, SearchBracketError
from ring_dynamics.potential import RingSystem
from ring_dynamics.search import (EightSearch, PeriodicOrbit, SearchPathA, _branch_states,
                                  axis_crossings, closure_distance, distance_to_circle,
                                  find_far_orbit, find_spiral, hausdorff, make_path, near_launch,
                                  near_system, reintegrate, shoot_symmetric, solve_launch_speed,
                                  symmetry_defect, system_from_description, winding_sample)

# frozen pipeline results (regression anchors, recomputed by the searches below)
FAR_005_UNIT_SPEED = 0.15812624
EIGHT_0_LAUNCH = (2.6851704100, 0.2236768499)
SPIRAL_03_EPS = 0.23380783


# --------------------------------------------------------------------------
# shooting
# --------------------------------------------------------------------------

def test_shoot_kepler_circle_has_zero_residual():
    sys = PointMassSystem(1.0)
    x0 = 2.0
    res = shoot_symmetric(sys, x0, math.sqrt(1.0 / x0), "x")
    assert abs(res.residual) <= 1e-10
    assert_allclose(res.time, math.pi * math.sqrt(x0 ** 3), rtol=1e-10)
    res_z = shoot_symmetric(sys, x0, math.sqrt(1.0 / x0), "z")
    assert abs(res_z.residual) <= 1e-10
    assert_allclose(res_z.time, 0.5 * math.pi * math.sqrt(x0 ** 3), rtol=1e-10)


def test_shoot_near_residual_changes_sign():
    eps = 0.05
    sys = near_system(eps, 1 / (2 * math.pi))
    v0, _ = near_launch(eps)
    lo = shoot_symmetric(sys, 0.5, 0.97 * v0, "x").residual
    hi = shoot_symmetric(sys, 0.5, 1.03 * v0, "x").residual
    assert lo * hi < 0


def test_shoot_collision_is_reported_not_raised():
    res = shoot_symmetric(RingSystem(), 1.02, 1e-4, "x")
    assert res.collided and not res.valid
    assert math.isnan(res.residual)


def test_shoot_axis_validation():
    with pytest.raises(ValueError):
        shoot_symmetric(RingSystem(), 2.0, 0.5, "y")


def test_shoot_reversed_crossing_returns_perpendicular():
    # reversing the flow at the landing point brings the particle back to the launch
    sys = RingSystem()
    res = shoot_symmetric(sys, 2.0, 0.6, "x")
    x, z, vx, vz = res.state
    tr = integrate_planar(sys, PlanarState(x, 0.0, -vx, -vz), res.time)
    assert_allclose(tr.final, (2.0, 0.0, 0.0, -0.6), atol=1e-9)


def test_bracket_failure_carries_scan():
    sys = PointMassSystem(1.0)
    with pytest.raises(SearchBracketError) as info:
        solve_launch_speed(sys, 2.0, 5.0, "z", max_expand=2, t_max=50.0)
    assert info.value.scan


# --------------------------------------------------------------------------
# far orbits
# --------------------------------------------------------------------------

@pytest.mark.parametrize("mass", [1.0, 2.0])
def test_far_orbit_kepler_limit(mass):
    orb = find_far_orbit(0.0, mass=mass)
    assert_allclose(orb.period, 2 * math.pi * math.sqrt(8.0 / mass), rtol=1e-12)
    assert orb.closure_error <= 1e-8
    r = np.hypot(orb.trace.y[:, 0], orb.trace.y[:, 1])
    assert_allclose(r, 2.0, rtol=1e-9)


def test_far_orbit_properties(far_orbits):
    eps = 0.05
    orb = far_orbits[eps]
    tr = orb.trace
    assert orb.cls == "far"
    assert orb.closure_error <= 1e-8
    assert np.min(np.hypot(tr.y[:, 0], tr.y[:, 1])) >= 1.0 / eps
    crossings = axis_crossings(tr)
    assert len(crossings) == 2
    x0 = orb.initial_state[0]
    assert_allclose(sorted(c["x"] for c in crossings), [-x0, x0], rtol=1e-9)
    assert all(abs(c["vz"]) > 1e-3 for c in crossings)
    assert symmetry_defect(tr, orb.period, "x-axis") <= 1e-8
    assert symmetry_defect(tr, orb.period, "z-axis") <= 1e-8
    assert_allclose(orb.initial_state[3], FAR_005_UNIT_SPEED, atol=1e-8)


def test_far_orbit_period_rescaling(far_orbits):
    for eps, orb in far_orbits.items():
        assert_allclose(orb.period, orb.metadata["source_period"] / eps ** 1.5, rtol=1e-14)


def test_far_orbit_negative_eps_rejected():
    with pytest.raises(ValueError):
        find_far_orbit(-0.1)


def test_far_euler_orbit():
    orb = find_far_orbit(0.05, kind="euler")
    assert orb.cls == "euler-far"
    assert orb.closure_error <= 1e-8
    assert symmetry_defect(orb.trace, orb.period, "z-axis") <= 1e-8


# --------------------------------------------------------------------------
# near orbits
# --------------------------------------------------------------------------

def test_near_orbit_properties(near_orbits):
    for eps, orb in near_orbits.items():
        assert orb.cls == "near"
        assert orb.closure_error <= 1e-8
        sys = system_from_description(orb.system)
        d = distance_to_circle(orb.trace, sys)
        assert eps / 3 < d.min() and d.max() < eps
        xs = sorted(c["x"] for c in axis_crossings(orb.trace))
        assert len(xs) == 2
        assert 0 < xs[0] < 1 < xs[1]
        assert symmetry_defect(orb.trace, orb.period, "x-axis") <= 1e-8
        assert_allclose(orb.period, orb.metadata["source_period"] * eps, rtol=1e-14)


def test_near_orbit_approaches_wire_circle():
    # T / eps tends to the circular period 2 pi r / sqrt(2 lambda) of the wire limit at r = 1/2;
    # the deviation between successive halvings of eps shrinks and drops below 1 %
    ratios = [2 * near_launch(e)[1] for e in (0.0125, 0.00625, 0.003125, 0.0015625)]
    devs = [abs(b / a - 1) for a, b in zip(ratios, ratios[1:])]
    assert all(b < 0.6 * a for a, b in zip(devs, devs[1:]))
    assert devs[-1] < 0.01
    wire_period = 2 * math.pi * 0.5 / math.sqrt(2 / (2 * math.pi))
    assert abs(ratios[-1] / wire_period - 1) < 0.02


# --------------------------------------------------------------------------
# periodic-orbit records
# --------------------------------------------------------------------------

def test_periodic_orbit_round_trip_and_reintegration(far_orbits, near_orbits):
    for orb in (far_orbits[0.05], near_orbits[0.05]):
        d = json.loads(json.dumps(orb.to_dict()))
        back = PeriodicOrbit.from_dict(d)
        assert back.to_dict() == orb.to_dict()
        tr = reintegrate(back)
        assert closure_distance(tr.final, back.initial_state) <= orb.closure_error * (1 + 1e-6) + 1e-15


def test_reintegrate_unknown_layout():
    orb = PeriodicOrbit("far", {"type": "ring", "radius": 1.0, "mass": 1.0}, (2, 0, 0, 0.7), 1.0, 0.0,
                        layout="cubic")
    with pytest.raises(ValueError):
        reintegrate(orb)


# --------------------------------------------------------------------------
# figure eights
# --------------------------------------------------------------------------

def test_path_validation():
    with pytest.raises(InvalidPathError):
        SearchPathA(2.0, 0.3, 3.0, 0.9, -0.2, -0.9).validate()
    with pytest.raises(InvalidPathError):
        SearchPathA(3.0, 0.9, 2.0, 0.3, -0.2, -0.9).validate()
    with pytest.raises(InvalidPathError):
        SearchPathA(3.0, 0.3, 2.0, 0.9, -0.9, -0.2).validate()


def test_path_parametrization():
    p = SearchPathA(3.0, 0.2, 1.5, 1.7, -0.3, -0.5)
    assert p.point(0.0) == (3.0, 0.2)
    assert_allclose(p.point(0.5), (1.5, 0.2))
    assert_allclose(p.point(1.0), (1.5, 1.7))
    assert_allclose(p.point(0.75), (1.5, 0.95))


def test_bisection_halves_the_bracket():
    class Linear:
        def f(self, s, h):
            return s - 0.3141

    lo, hi, steps = EightSearch.bisect(Linear(), 0.0, 0.0, 1.0, 1e-6)
    assert steps == math.ceil(math.log2(1e-6 ** -1))
    assert lo <= 0.3141 <= hi and hi - lo <= 1e-6


def test_eight_path_endpoint_signs(ring_eights):
    fam = ring_eights[0]
    search = EightSearch(RingSystem(), fam.path)
    assert search.f(0.0, 0.0) < 0
    assert search.f(1.0, 0.0) > 0
    h = fam.essential.levels[0]["h"]
    assert search.f(0.0, h) < 0 <= search.f(1.0, h)


def test_eight_essential_conditions(ring_eights):
    for fam in ring_eights:
        e = fam.essential
        c = e.conditions()
        assert c["z0"] == 0.0 and c["vx0"] == 0.0
        assert c["x0_outside"] and c["interior_z_positive"]
        assert c["endpoint"] <= 1e-8
        assert fam.injective
        assert e.v0 > 0


def test_eight_regression_family_zero(ring_eights):
    e = ring_eights[0].essential
    assert_allclose((e.x0, e.v0), EIGHT_0_LAUNCH, atol=1e-8)


def test_eight_schedule_converges(ring_eights):
    levels = ring_eights[0].essential.levels
    hs = [lv["h"] for lv in levels]
    assert all(b < a for a, b in zip(hs, hs[1:]))
    assert levels[-1]["ic_change"] < 1e-10


def test_eight_assembly(ring_eights):
    for fam in ring_eights:
        e, asm = fam.essential, fam.assembly
        tau = e.tau
        # branches meet: branch 2 at tau equals the essential endpoint
        joint = _branch_states(e, np.array([tau, tau + 1e-12]))
        assert_allclose(joint[0, :2], joint[1, :2], atol=1e-8)
        assert asm.joint_mismatch <= 1e-7
        sys = e.system
        energy = [0.5 * (s[2] ** 2 + s[3] ** 2) + sys.planar_potential(s[0], s[1])
                  for s in asm.curve if math.hypot(s[0], s[1]) > 1e-9]
        assert np.ptp(energy) <= 1e-9 * abs(energy[0])
        assert asm.orbit.closure_error <= 1e-7
        assert asm.symmetry["x-axis"] <= 1e-7 and asm.symmetry["z-axis"] <= 1e-7
        assert asm.orbit.cls == "eight"
        # the assembled formula and the integrated launch agree over the full period
        integ = asm.orbit.trace.dense(asm.curve_t)
        assert np.max(np.abs(integ[:, :2] - asm.curve[:, :2])) <= 1e-6


def test_eight_families_are_distinct(ring_eights):
    curves = [fam.essential.trace.y[:, :2] for fam in ring_eights]
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            assert hausdorff(curves[i], curves[j]) > 1e-3


def test_eight_invalid_path_detected():
    sys = RingSystem()
    # both endpoints are far-type launches: no sign change along the path
    path = make_path(sys, 3.0, 0.45, 2.5, 0.5)
    from ring_dynamics.search import find_eight
    with pytest.raises(InvalidPathError):
        find_eight(sys, path)


# --------------------------------------------------------------------------
# spirals
# --------------------------------------------------------------------------

def test_spiral_requires_momentum():
    with pytest.raises(PreconditionError, match="K must be nonzero"):
        find_spiral(0.0)


def test_winding_vanishes_in_wire_limit():
    assert winding_sample(0.005, 0.3).theta < 1e-3
    a = winding_sample(0.02, 0.3).theta
    b = winding_sample(0.04, 0.3).theta
    assert 0 < a < b


def test_spiral_properties(spiral):
    s = spiral
    assert s.target == Fraction(1, 10)
    p, q = s.target.numerator, s.target.denominator
    assert abs(s.theta - p / q) <= 1e-10
    assert abs(s.theta - s.theta_quadrature) <= 1e-11
    assert s.closure_3d <= 1e-7
    assert s.momentum_drift <= 1e-10
    lo, hi = s.distance_range
    assert s.eps / 3 < lo and hi < s.eps
    assert_allclose(s.eps, SPIRAL_03_EPS, atol=1e-8)
    assert_allclose(angular_momentum(s.spatial)[0], 0.3, rtol=1e-12)
    assert_allclose(s.reduced.metadata["keff"], 0.3, rtol=1e-12)
    assert_allclose(s.period_3d, q * s.reduced.period, rtol=1e-15)
    scan = np.array([w.theta for w in s.scan])
    assert np.all(np.diff(scan) > 0)


def test_spiral_reduced_reintegrates(spiral):
    tr = reintegrate(spiral.reduced)
    assert closure_distance(tr.final, spiral.reduced.initial_state) <= 1e-8


def test_spiral_negative_control(spiral_offset):
    assert spiral_offset.closure_3d >= 1e-4
    assert abs(spiral_offset.theta - 0.1 - 1e-3) <= 1e-10


def test_spiral_negative_momentum_mirrors():
    s = find_spiral(-0.3, target=Fraction(1, 10))
    assert abs(-s.theta - 0.1) <= 1e-10
    assert_allclose(s.eps, SPIRAL_03_EPS, atol=1e-8)
    assert s.closure_3d <= 1e-7


def test_spiral_target_denominator_validated():
    with pytest.raises(ValueError):
        find_spiral(0.3, target=Fraction(1, 23), q_max=20)
