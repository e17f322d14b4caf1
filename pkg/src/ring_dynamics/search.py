"""Shooting searches for symmetric periodic orbits and their assembly.

All orbits are built in a frame where the relevant geometry is of order one
and then mapped to the unit circle with :func:`rescale_orbit`:

* far orbits: circle of radius eps, fixed mass, orbit near radius 2,
  scaled by 1/eps;
* near orbits: circle of radius 1/eps through the origin, fixed density,
  orbit at distance ~0.5 from the origin, scaled by eps;
* spiral orbits: the near construction in cylindrical coordinates with
  angular momentum K/eps;
* figure eights: bisection along an L-shaped path of launch data joining a
  far orbit to a near orbit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.spatial.distance import directed_hausdorff

from .dynamics import (IntegratorConfig, OrbitTrace, PlanarState, PointMassSystem,
                       ReducedState, SpatialState, Until, angular_momentum, gauss_increments,
                       integrate_planar, integrate_reduced, integrate_spatial, lift_to_3d,
                       rescale_factors, rescale_orbit, translate_trace)
from .errors import (AssemblyError, IntegrationTimeout, InvalidPathError,
                     PreconditionError, SearchBracketError)
from .potential import TWO_PI, EulerSystem, RingSystem
from .rational import rational_in_range
from .verify import check_injective, hill_radius

DEFAULT_NEAR_DENSITY = 1.0 / TWO_PI   # unit circle of mass 1
# spiral launch offset from the circle point, in translated units; keeps the
# orbit inside the (1/3, 1) annulus up to eps ~ 0.25 where the winding reaches 1/10
SPIRAL_LAUNCH = 0.35


# --------------------------------------------------------------------------
# records
# --------------------------------------------------------------------------

def describe_system(sys, convention: str | None = None) -> dict:
    if isinstance(sys, RingSystem):
        d = {"type": "ring", "radius": sys.radius, "mass": sys.mass, "density": sys.density,
             "center": list(sys.center)}
    elif isinstance(sys, EulerSystem):
        d = {"type": "euler", "separation": sys.separation, "mass": sys.mass}
    elif isinstance(sys, PointMassSystem):
        d = {"type": "point", "mass": sys.mass}
    else:
        raise TypeError(f"unknown system {type(sys).__name__}")
    if convention is not None:
        d["convention"] = convention
    return d


def system_from_description(d: dict):
    kind = d.get("type")
    if kind == "ring":
        return RingSystem(radius=d["radius"], mass=d["mass"], center=tuple(d.get("center", (0, 0, 0))))
    if kind == "euler":
        return EulerSystem(mass=d["mass"], separation=d["separation"])
    if kind == "point":
        return PointMassSystem(mass=d["mass"])
    raise ValueError(f"unknown system type {kind!r}")


@dataclass
class PeriodicOrbit:
    """A closed orbit: initial state, period and the measured closure error.

    ``layout`` names the state layout of ``initial_state`` (planar, reduced
    or spatial); ``trace`` holds one period and is not serialized.
    """

    cls: str
    system: dict
    initial_state: tuple[float, ...]
    period: float
    closure_error: float
    symmetries: tuple[str, ...] = ()
    metadata: dict = field(default_factory=dict)
    layout: str = "planar"
    trace: OrbitTrace | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {"class": self.cls, "system": self.system, "layout": self.layout,
                "initial_state": list(self.initial_state), "period": self.period,
                "closure_error": self.closure_error, "symmetries": list(self.symmetries),
                "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d: dict) -> "PeriodicOrbit":
        return cls(cls=d["class"], system=d["system"], initial_state=tuple(d["initial_state"]),
                   period=d["period"], closure_error=d["closure_error"],
                   symmetries=tuple(d.get("symmetries", ())), metadata=dict(d.get("metadata", {})),
                   layout=d.get("layout", "planar"))


def closure_distance(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def reintegrate(orbit: PeriodicOrbit, config: IntegratorConfig | None = None) -> OrbitTrace:
    """Integrate the stored initial state over the stored period."""
    sys = system_from_description(orbit.system)
    s = orbit.initial_state
    if orbit.layout == "planar":
        return integrate_planar(sys, PlanarState(*s), orbit.period, config)
    if orbit.layout == "spatial":
        return integrate_spatial(sys, SpatialState(*s), orbit.period, config)
    if orbit.layout == "reduced":
        keff = orbit.metadata["keff"]
        return integrate_reduced(sys, ReducedState(s[0], s[1], s[2], s[3], keff), orbit.period, config)
    raise ValueError(f"unknown layout {orbit.layout!r}")


def symmetry_defect(trace: OrbitTrace, period: float, mode: str, samples: int = 257) -> float:
    """Normalised mismatch of a planar periodic trace under a reflection symmetry.

    ``x-axis``: state(T - t) = (x, -z, -vx, vz)(t)
    ``z-axis``: state(T/2 - t) = (-x, z, vx, -vz)(t)
    ``z-axis-shift``: state(t + T/2) = (-x, z, -vx, vz)(t)
    """
    t0 = trace.t[0]
    if mode == "x-axis":
        ts = np.linspace(0.0, period, samples)
        a = trace.dense(t0 + ts)
        b = trace.dense(t0 + period - ts) * np.array([1.0, -1.0, -1.0, 1.0])
    elif mode == "z-axis":
        ts = np.linspace(0.0, 0.5 * period, samples)
        a = trace.dense(t0 + ts)
        b = trace.dense(t0 + 0.5 * period - ts) * np.array([-1.0, 1.0, 1.0, -1.0])
    elif mode == "z-axis-shift":
        ts = np.linspace(0.0, 0.5 * period, samples)
        a = trace.dense(t0 + ts)
        b = trace.dense(t0 + ts + 0.5 * period) * np.array([-1.0, 1.0, -1.0, 1.0])
    else:
        raise ValueError(f"unknown symmetry {mode!r}")
    pos = max(float(np.max(np.abs(a[:, :2]))), 1e-300)
    vel = max(float(np.max(np.abs(a[:, 2:]))), 1e-300)
    return max(float(np.max(np.abs(a[:, :2] - b[:, :2]))) / pos,
               float(np.max(np.abs(a[:, 2:] - b[:, 2:]))) / vel)


def axis_crossings(trace: OrbitTrace) -> list[dict]:
    """z = 0 crossings strictly inside the trace (plus the start if it lies on the axis)."""
    out = []
    if abs(trace.y[0, 1]) == 0.0:
        out.append({"t": float(trace.t[0]), "x": float(trace.y[0, 0]), "vz": float(trace.y[0, 3])})
    span = trace.t[-1] - trace.t[0]
    for e in trace.events:
        if e.kind in ("z-cross-up", "z-cross-down") and 1e-9 * span < e.t - trace.t[0] < (1 - 1e-9) * span:
            out.append({"t": e.t, "x": e.state[0], "vz": e.state[3]})
    return out


def _finalize(cls: str, sys, ic: Sequence[float], period: float, symmetries: Sequence[str],
              metadata: dict, config, convention: str) -> PeriodicOrbit:
    trace = integrate_planar(sys, PlanarState(*ic), period, config)
    closure = closure_distance(trace.final, ic)
    return PeriodicOrbit(cls=cls, system=describe_system(sys, convention),
                         initial_state=tuple(float(v) for v in ic), period=float(period),
                         closure_error=closure, symmetries=tuple(symmetries),
                         metadata=metadata, trace=trace)


# --------------------------------------------------------------------------
# shooting
# --------------------------------------------------------------------------

@dataclass
class ShootResult:
    residual: float
    time: float
    state: np.ndarray
    trace: OrbitTrace | None
    collided: bool = False
    anomaly: str | None = None

    @property
    def valid(self) -> bool:
        return not self.collided and self.anomaly is None


def _default_cap(sys, energy: float) -> float:
    if energy < 0:
        return 1.5 * hill_radius(sys, energy, grid=0).return_bound
    return 1e4


def shoot_symmetric(sys, x0: float, v0: float, axis: str = "x",
                    config: IntegratorConfig | None = None, t_max: float | None = None,
                    keff: float | None = None) -> ShootResult:
    """Launch from (x0, 0) with velocity (0, v0) and report the perpendicularity defect.

    ``axis="x"``: stop at the first descending z = 0 crossing, residual vx;
    zero residual gives a solution symmetric about the x-axis with period
    twice the crossing time.  ``axis="z"``: stop at the first x = 0
    crossing, residual vz; zero gives symmetry about both axes and period
    four times the crossing time.  With ``keff`` the reduced cylindrical
    system is shot instead (x0 is then the cylindrical radius).
    """
    if axis not in ("x", "z"):
        raise ValueError("axis must be 'x' or 'z'")
    event = "z-cross-down" if axis == "x" else "x-axis-perp"
    if keff is None:
        energy = 0.5 * v0 * v0 + sys.planar_potential(x0, 0.0)
    else:
        energy = 0.5 * v0 * v0 + 0.5 * keff ** 2 / x0 ** 2 + sys.meridian_potential(x0, 0.0)
    cap = t_max if t_max is not None else _default_cap(sys, energy)
    try:
        if keff is None:
            tr = integrate_planar(sys, PlanarState(x0, 0.0, 0.0, v0), Until(cap, event), config)
        else:
            tr = integrate_reduced(sys, ReducedState(x0, 0.0, 0.0, v0, keff), Until(cap, event), config)
    except IntegrationTimeout:
        return ShootResult(math.nan, cap, np.full(4, math.nan), None, anomaly="timeout")
    state = tr.final
    if tr.collided:
        return ShootResult(math.nan, float(tr.t[-1]), state, tr, collided=True)
    residual = state[2] if axis == "x" else state[3]
    return ShootResult(float(residual), float(tr.t[-1]), state, tr)


def solve_launch_speed(sys, x0: float, v_guess: float, axis: str,
                       config: IntegratorConfig | None = None, keff: float | None = None,
                       spread: float = 0.02, max_expand: int = 12,
                       t_max: float | None = None) -> tuple[float, ShootResult]:
    """Bracket the shooting residual around ``v_guess`` and solve it with Brent's method."""
    cache: dict[float, ShootResult] = {}

    def shoot(v):
        if v not in cache:
            cache[v] = shoot_symmetric(sys, x0, v, axis, config, t_max, keff)
        return cache[v]

    scan = []
    base = shoot(v_guess)
    scan.append((v_guess, base.residual))
    bracket = None
    for k in range(1, max_expand + 1):
        for v in (v_guess * (1 - spread * k), v_guess * (1 + spread * k)):
            if v <= 0:
                continue
            res = shoot(v)
            scan.append((v, res.residual))
        valid = sorted((v, r) for v, r in scan if math.isfinite(r))
        for (va, ra), (vb, rb) in zip(valid, valid[1:]):
            if ra == 0.0:
                return va, shoot(va)
            if ra * rb < 0:
                bracket = (va, vb)
                break
        if bracket:
            break
    if bracket is None:
        raise SearchBracketError(
            f"no sign change of the shooting residual near v={v_guess:.6g} (x0={x0:.6g}, axis={axis})",
            scan=sorted(scan))
    v = brentq(lambda q: shoot(q).residual, *bracket, xtol=1e-15 * bracket[1],
               rtol=4 * np.finfo(float).eps, maxiter=200)
    return v, shoot(v)


# --------------------------------------------------------------------------
# far orbits
# --------------------------------------------------------------------------

def _far_small_system(kind: str, eps: float, mass: float):
    if kind == "ring":
        return RingSystem(radius=eps, mass=mass)
    if kind == "euler":
        return EulerSystem(mass=mass, separation=eps)
    raise ValueError(f"unknown system kind {kind!r}")


def _total_mass(kind: str, mass: float) -> float:
    return 2.0 * mass if kind == "euler" else mass


def far_launch(eps: float, mass: float = 1.0, kind: str = "ring", x0: float = 2.0,
               config: IntegratorConfig | None = None) -> tuple[float, float]:
    """Launch speed and quarter time of the symmetric orbit through (x0, 0) around a source of size eps.

    Continues from the Kepler circle at eps = 0, halving the eps step when a
    bracket fails.
    """
    m_tot = _total_mass(kind, mass)
    guess = math.sqrt(m_tot / x0)
    if eps == 0:
        return guess, 0.5 * math.pi * math.sqrt(x0 ** 3 / m_tot)
    done, step = 0.0, eps
    quarter = None
    while done < eps:
        trial = min(eps, done + step)
        try:
            guess, res = solve_launch_speed(_far_small_system(kind, trial, mass), x0, guess, "z", config)
            done, quarter = trial, res.time
        except SearchBracketError:
            step *= 0.5
            if step < 1e-4 * eps:
                raise
    return guess, quarter


def find_far_orbit(eps: float, mass: float = 1.0, kind: str = "ring", x0: float = 2.0,
                   config: IntegratorConfig | None = None) -> PeriodicOrbit:
    """Symmetric orbit far from the unit source (or the Kepler circle when eps = 0).

    For eps > 0 the orbit is found for the source of size eps and mapped
    with r(t) = (1/eps) r_eps(eps^{3/2} t); it stays outside radius 1/eps.
    """
    if eps < 0:
        raise ValueError("eps must be >= 0")
    v0, quarter = far_launch(eps, mass, kind, x0, config)
    if eps == 0:
        sys = PointMassSystem(_total_mass(kind, mass))
        orbit = _finalize("far" if kind == "ring" else "euler-far", sys, (x0, 0.0, 0.0, v0),
                          4.0 * quarter, ("x-axis", "z-axis"),
                          {"eps": 0.0, "frame": "kepler", "source_period": 4.0 * quarter},
                          config, "fixed-mass")
        return orbit
    length, k = rescale_factors(1.0 / eps, 1.0)
    unit = _far_small_system(kind, 1.0, mass)
    ic = (x0 * length, 0.0, 0.0, v0 * length * k)
    period = 4.0 * quarter / k
    meta = {"eps": eps, "frame": "unit", "source_period": 4.0 * quarter,
            "source_launch": [x0, v0], "theta": None, "p": None, "q": None, "family": None}
    return _finalize("far" if kind == "ring" else "euler-far", unit, ic, period,
                     ("x-axis", "z-axis"), meta, config, "fixed-mass")


# --------------------------------------------------------------------------
# near orbits
# --------------------------------------------------------------------------

def near_system(eps: float, density: float) -> RingSystem:
    """Circle of radius 1/eps through the origin, center (-1/eps, 0, 0), fixed density.

    The mirror image of the configuration centered at (+1/eps, 0, 0); with
    this choice positive x lies outside the circle.
    """
    return RingSystem.from_density(density, 1.0 / eps, center=(-1.0 / eps, 0.0, 0.0))


def near_launch(eps: float, density: float = DEFAULT_NEAR_DENSITY, x_launch: float = 0.5,
                config: IntegratorConfig | None = None,
                v_guess: float | None = None) -> tuple[float, float]:
    """Launch speed and half period of the symmetric orbit around the origin
    for the translated circle; the initial guess is the circular speed
    sqrt(2 density) of the straight-wire limit."""
    if not 0 < eps:
        raise ValueError("eps must be positive")
    guess = math.sqrt(2.0 * density) if v_guess is None else v_guess
    v0, res = solve_launch_speed(near_system(eps, density), x_launch, guess, "x", config)
    return v0, res.time


def find_near_orbit(eps: float, density: float = DEFAULT_NEAR_DENSITY, x_launch: float = 0.5,
                    config: IntegratorConfig | None = None) -> PeriodicOrbit:
    """Symmetric orbit within distance eps of the unit circle (mass 2 pi density).

    Found around the origin for the translated circle of radius 1/eps, then
    mapped by s(t) = eps r_eps(t/eps) and shifted so the circle is centered
    at the origin; the orbit then encloses the circle point (1, 0, 0).
    """
    v0, half = near_launch(eps, density, x_launch, config)
    length, k = rescale_factors(eps, eps)
    unit = RingSystem.from_density(density, 1.0)
    ic = (1.0 + x_launch * length, 0.0, 0.0, v0 * length * k)
    period = 2.0 * half / k
    meta = {"eps": eps, "frame": "unit", "source_period": 2.0 * half,
            "source_launch": [x_launch, v0], "density": density,
            "theta": None, "p": None, "q": None, "family": None}
    return _finalize("near", unit, ic, period, ("x-axis",), meta, config, "fixed-density")


def distance_to_circle(trace: OrbitTrace, sys: RingSystem) -> np.ndarray:
    return np.array([sys.planar_distance(x, z) for x, z in trace.y[:, :2]])


# --------------------------------------------------------------------------
# figure eights
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchPathA:
    """L-shaped path of launch data (x, v): [x_near, x_far] x {v_far} then {x_near} x [v_far, v_near].

    Arc length is normalised to s in [0, 1] with the far endpoint at s = 0.
    """

    x_far: float
    v_far: float
    x_near: float
    v_near: float
    h_far: float
    h_near: float

    @property
    def horizontal(self) -> float:
        return self.x_far - self.x_near

    @property
    def vertical(self) -> float:
        return self.v_near - self.v_far

    def point(self, s: float) -> tuple[float, float]:
        d = s * (self.horizontal + self.vertical)
        if d <= self.horizontal:
            return self.x_far - d, self.v_far
        return self.x_near, min(self.v_near, self.v_far + (d - self.horizontal))

    @property
    def energy_bound(self) -> float:
        return self.h_far

    def validate(self, source_scale: float = 1.0):
        if not self.x_far > self.x_near > source_scale:
            raise InvalidPathError(
                f"need x_far > x_near > {source_scale:g}, got {self.x_far:g}, {self.x_near:g}")
        if not self.v_far < self.v_near:
            raise InvalidPathError(f"need v_far < v_near, got {self.v_far:g}, {self.v_near:g}")
        if not self.h_near < self.h_far < 0:
            raise InvalidPathError(
                f"need h_near < h_far < 0, got {self.h_near:g}, {self.h_far:g}")

    def to_dict(self) -> dict:
        return {"x_far": self.x_far, "v_far": self.v_far, "x_near": self.x_near,
                "v_near": self.v_near, "h_far": self.h_far, "h_near": self.h_near}


def make_path(sys, x_far: float, v_far: float, x_near: float, v_near: float) -> SearchPathA:
    h_far = 0.5 * v_far ** 2 + sys.planar_potential(x_far, 0.0)
    h_near = 0.5 * v_near ** 2 + sys.planar_potential(x_near, 0.0)
    return SearchPathA(x_far, v_far, x_near, v_near, h_far, h_near)


@dataclass
class Launch:
    """One integrated launch from the path: apex, landing (or collision) and dense trace."""

    s: float
    x0: float
    v0: float
    trace: OrbitTrace
    apex_t: float
    apex_z: float
    end_t: float
    end_x: float
    collided: bool

    def crossing_x(self, h: float) -> float:
        """x where the trajectory descends through height h (h = 0: landing point)."""
        if h <= 0.0:
            return self.end_x
        if h >= self.apex_z:
            raise InvalidPathError(f"launch s={self.s:.6g} never reaches height {h:.3g}")
        tc = brentq(lambda t: self.trace.dense(t)[1] - h, self.apex_t, self.end_t,
                    xtol=1e-15 * max(1.0, self.end_t), rtol=4 * np.finfo(float).eps)
        return float(self.trace.dense(tc)[0])


class EightSearch:
    """Bisection machinery for one path; launches are integrated once and cached."""

    def __init__(self, sys, path: SearchPathA, config: IntegratorConfig | None = None):
        self.sys = sys
        self.path = path
        self.config = config
        scale = sys.radius if isinstance(sys, RingSystem) else sys.separation
        path.validate(scale)
        self.bound = hill_radius(sys, path.energy_bound, grid=0).return_bound
        self.cache: dict[float, Launch] = {}
        self.integrations = 0

    def launch(self, s: float) -> Launch:
        if s in self.cache:
            return self.cache[s]
        x0, v0 = self.path.point(s)
        try:
            tr = integrate_planar(self.sys, PlanarState(x0, 0.0, 0.0, v0),
                                  Until(1.5 * self.bound, "z-cross-down"), self.config)
        except IntegrationTimeout as exc:
            raise InvalidPathError(f"launch s={s:.6g} did not return within 1.5 T") from exc
        self.integrations += 1
        apex = tr.events_of("vz-zero")
        if apex:
            apex_t, apex_z = apex[0].t, apex[0].state[1]
        else:
            i = int(np.argmax(tr.y[:, 1]))
            apex_t, apex_z = float(tr.t[i]), float(tr.y[i, 1])
        if tr.t[-1] > self.bound:
            raise InvalidPathError(f"launch s={s:.6g} returned after the bound T={self.bound:.6g}")
        rec = Launch(s, x0, v0, tr, apex_t, apex_z, float(tr.t[-1]), float(tr.final[0]), tr.collided)
        self.cache[s] = rec
        return rec

    def f(self, s: float, h: float) -> float:
        return self.launch(s).crossing_x(h)

    def min_apex(self, samples: int = 64) -> float:
        return min(self.launch(float(s)).apex_z for s in np.linspace(0.0, 1.0, samples))

    def bisect(self, h: float, lo: float, hi: float, width: float) -> tuple[float, float, int]:
        """Bisect f(., h) on [lo, hi] with f(lo) < 0 <= f(hi); zeros go to the near side."""
        steps = 0
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.f(mid, h) < 0:
                lo = mid
            else:
                hi = mid
            steps += 1
        return lo, hi, steps

    def bracket_near(self, h: float, center: float, radius: float) -> tuple[float, float]:
        """Smallest sign-changing bracket around ``center``, widening by 4 each try."""
        while True:
            lo, hi = max(0.0, center - radius), min(1.0, center + radius)
            if self.f(lo, h) < 0 <= self.f(hi, h):
                return lo, hi
            if lo == 0.0 and hi == 1.0:
                raise InvalidPathError("lost the sign change of f along the path")
            radius *= 4.0


@dataclass
class EightEssential:
    """Quarter of a figure eight: from (x0, 0) with velocity (0, v0) to the origin."""

    x0: float
    v0: float
    tau: float
    endpoint: tuple[float, float]
    trace: OrbitTrace
    s: float
    system: object
    levels: list[dict] = field(default_factory=list)
    path: SearchPathA | None = None
    integrations: int = 0

    @property
    def endpoint_distance(self) -> float:
        return math.hypot(*self.endpoint)

    def conditions(self, samples: int = 2001) -> dict:
        """The defining conditions of an essential part, checked on the dense trace."""
        ts = np.linspace(0.0, self.tau, samples)[1:-1]
        z = self.trace.dense(ts)[:, 1]
        first = self.trace.y[0]
        return {"z0": float(first[1]), "x0_outside": bool(first[0] > 1.0),
                "vx0": float(first[2]), "endpoint": self.endpoint_distance,
                "interior_z_positive": bool(np.all(z > 0))}


def default_schedule(xi_hat: float, levels: int = 60) -> list[float]:
    return [xi_hat / 2.0 ** k for k in range(1, levels + 1)]


def find_eight(sys, path: SearchPathA, schedule: Sequence[float] | None = None,
               config: IntegratorConfig | None = None, ic_tol: float = 1e-10,
               apex_samples: int = 64) -> EightEssential:
    """Essential part of a symmetric figure eight on ``path``.

    For each height h of the schedule the parameter s where the trajectory
    descends through z = h at x = 0 is bisected; the bracket for the next,
    lower line starts around the previous root.  The schedule stops when
    successive launch data differ by less than ``ic_tol``; a final bisection
    with h = 0 drives the landing point to the origin.
    """
    search = EightSearch(sys, path, config)
    far_x = search.f(0.0, 0.0)
    near_x = search.f(1.0, 0.0)
    if not far_x < 0:
        raise InvalidPathError(f"far endpoint lands at x={far_x:.6g}, expected < 0")
    if not near_x > 0:
        raise InvalidPathError(f"near endpoint lands at x={near_x:.6g}, expected > 0")
    xi_hat = 0.5 * search.min_apex(apex_samples)
    heights = list(schedule) if schedule is not None else default_schedule(xi_hat)
    if heights and heights[0] >= 2 * xi_hat:
        raise InvalidPathError("first height is not below the minimum apex along the path")

    levels = []
    lo, hi = 0.0, 1.0
    root = prev_root = None
    prev_ic = None
    for k, h in enumerate(heights):
        if search.f(0.0, h) >= 0 or search.f(1.0, h) < 0:
            raise InvalidPathError(f"no sign change of f at height {h:.3g}")
        if root is None:
            lo, hi, _ = search.bisect(h, 0.0, 1.0, 1e-6)
        else:
            delta = abs(root - prev_root) if prev_root is not None else hi - lo
            radius = max(2.0 * delta, 4.0 * (hi - lo), 1e-15)
            lo, hi = search.bracket_near(h, root, radius)
            lo, hi, _ = search.bisect(h, lo, hi, max(1e-3 * delta, 1e-15))
        prev_root, root = root, 0.5 * (lo + hi)
        ic = np.array(path.point(root))
        diff = None if prev_ic is None else float(np.max(np.abs(ic - prev_ic)))
        levels.append({"h": h, "s": root, "x0": float(ic[0]), "v0": float(ic[1]),
                       "ic_change": diff, "bracket": hi - lo})
        prev_ic = ic
        if diff is not None and diff < ic_tol:
            break

    # final descent onto the origin
    if root is None:
        lo, hi, _ = search.bisect(0.0, 0.0, 1.0, 0.0)
    else:
        lo, hi = search.bracket_near(0.0, root, max(4.0 * (hi - lo), 1e-15))
        lo, hi, _ = search.bisect(0.0, lo, hi, 0.0)
    best = min((search.launch(lo), search.launch(hi)), key=lambda l: abs(l.end_x))
    if best.collided:
        raise InvalidPathError("bisection converged onto a collision orbit")
    tr = best.trace
    return EightEssential(x0=best.x0, v0=best.v0, tau=best.end_t,
                          endpoint=(float(tr.final[0]), float(tr.final[1])), trace=tr,
                          s=best.s, system=sys, levels=levels, path=path,
                          integrations=search.integrations)


def _branch_states(e: EightEssential, t: np.ndarray) -> np.ndarray:
    """States of the four-branch reflected curve at times t in [0, 4 tau]."""
    tau = e.tau
    out = np.empty((len(t), 4))
    for i, ti in enumerate(t):
        if ti <= tau:
            out[i] = e.trace.dense(ti)
        elif ti <= 2 * tau:
            s = e.trace.dense(2 * tau - ti)
            out[i] = (-s[0], -s[1], s[2], s[3])
        elif ti <= 3 * tau:
            s = e.trace.dense(ti - 2 * tau)
            out[i] = (-s[0], s[1], -s[2], s[3])
        else:
            s = e.trace.dense(4 * tau - ti)
            out[i] = (s[0], -s[1], -s[2], s[3])
    return out


@dataclass
class EightAssembly:
    orbit: PeriodicOrbit
    curve_t: np.ndarray
    curve: np.ndarray
    joint_mismatch: float
    symmetry: dict


def assemble_eight(e: EightEssential, config: IntegratorConfig | None = None,
                   joint_tol: float = 1e-7, cls: str | None = None,
                   samples_per_branch: int = 400) -> EightAssembly:
    """Reflect the essential part into a closed eight of period 4 tau and check it.

    Branches: r(t); -r(2tau - t); (-x, z)(t - 2tau); (x, -z)(4tau - t).
    Joint continuity reduces to the essential endpoint sitting at the
    origin; closure is measured by integrating the launch for 4 tau.
    """
    tau = e.tau
    mismatch = float(np.max(np.abs(_branch_states(e, np.array([tau]))[0]
                                   - np.array([-1, -1, 1, 1]) * e.trace.dense(tau))))
    mismatch = max(mismatch, 2.0 * e.endpoint_distance)
    if mismatch > joint_tol:
        raise AssemblyError(f"joint mismatch {mismatch:.3e} exceeds {joint_tol:.1e}")
    t = np.linspace(0.0, 4 * tau, 4 * samples_per_branch + 1)
    curve = _branch_states(e, t)
    sys = e.system
    name = cls or ("euler-eight" if isinstance(sys, EulerSystem) else "eight")
    meta = {"tau": tau, "s": e.s, "endpoint_distance": e.endpoint_distance,
            "levels": len(e.levels), "family": None, "eps": None,
            "theta": None, "p": None, "q": None}
    orbit = _finalize(name, sys, (e.x0, 0.0, 0.0, e.v0), 4 * tau, ("x-axis", "z-axis"), meta,
                      config, "fixed-mass")
    sym = {"x-axis": symmetry_defect(orbit.trace, 4 * tau, "x-axis"),
           "z-axis": symmetry_defect(orbit.trace, 4 * tau, "z-axis-shift")}
    return EightAssembly(orbit=orbit, curve_t=t, curve=curve, joint_mismatch=mismatch, symmetry=sym)


@dataclass
class EightFamily:
    family: int
    path: SearchPathA
    essential: EightEssential
    assembly: EightAssembly
    far: PeriodicOrbit | None
    near: PeriodicOrbit | None
    injective: bool


def ring_eight_path(family: int = 0, mass: float = 1.0, eps_far: float = 0.1,
                    eps_near: float = 0.05, config: IntegratorConfig | None = None):
    """Path for family m: far orbit at eps_far/2^m, near orbit at eps_near/2^m.

    Smaller far eps lowers the far launch speed and pushes x_far out, smaller
    near eps moves x_near toward 1, so the paths of different families are
    disjoint and nested.
    """
    ef = eps_far / 2.0 ** family
    en = eps_near / 2.0 ** family
    far = find_far_orbit(ef, mass=mass, config=config)
    near = find_near_orbit(en, density=mass / TWO_PI, config=config)
    sys = RingSystem(1.0, mass)
    path = make_path(sys, far.initial_state[0], far.initial_state[3],
                     near.initial_state[0], near.initial_state[3])
    return sys, path, far, near


def euler_near_launch(eps: float, mass: float = 1.0) -> tuple[float, float]:
    """Launch (x, v) = (1 + eps, sqrt(M / eps)): a Kepler circle about the right center, rescaled."""
    return 1.0 + eps, math.sqrt(mass / eps)


def euler_near_energy(eps: float, mass: float = 1.0) -> float:
    return -(mass / (2 * eps)) * (1 + 2 * eps / (2 + eps))


def euler_eight_path(family: int = 0, mass: float = 1.0, eps_far: float = 0.1,
                     eps_near: float = 0.05, config: IntegratorConfig | None = None):
    ef = eps_far / 2.0 ** family
    en = eps_near / 2.0 ** family
    far = find_far_orbit(ef, mass=mass, kind="euler", config=config)
    sys = EulerSystem(mass, 1.0)
    xn, vn = euler_near_launch(en, mass)
    path = make_path(sys, far.initial_state[0], far.initial_state[3], xn, vn)
    return sys, path, far, None


def search_eight_family(family: int = 0, kind: str = "ring", mass: float = 1.0,
                        eps_far: float = 0.1, eps_near: float = 0.05,
                        config: IntegratorConfig | None = None,
                        schedule: Sequence[float] | None = None) -> EightFamily:
    builder = ring_eight_path if kind == "ring" else euler_eight_path
    sys, path, far, near = builder(family, mass, eps_far, eps_near, config)
    essential = find_eight(sys, path, schedule, config)
    inj = check_injective(essential.trace)
    assembly = assemble_eight(essential, config)
    assembly.orbit.metadata["family"] = family
    assembly.orbit.metadata["injective"] = inj.injective
    assembly.orbit.metadata["path"] = path.to_dict()
    return EightFamily(family, path, essential, assembly, far, near, inj.injective)


def hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


# --------------------------------------------------------------------------
# spiral orbits
# --------------------------------------------------------------------------

@dataclass
class WindingSample:
    eps: float
    v0: float
    half_time: float
    theta: float


def winding_sample(eps: float, K: float, density: float = DEFAULT_NEAR_DENSITY,
                   x_launch: float = SPIRAL_LAUNCH, v_guess: float | None = None,
                   config: IntegratorConfig | None = None) -> WindingSample:
    """Symmetric reduced orbit around the circle point for angular momentum K/eps.

    Theta = phi(tau) / 2 pi uses the reflection symmetry: phi advances by
    the same amount on both halves of the period.
    """
    sys = RingSystem.from_density(density, 1.0 / eps)
    keff = K / eps
    guess = math.sqrt(2.0 * density) if v_guess is None else v_guess
    v0, res = solve_launch_speed(sys, 1.0 / eps + x_launch, guess, "x", config, keff=keff)
    theta = 2.0 * res.trace.phi[-1] / TWO_PI
    return WindingSample(eps, v0, res.time, theta)


@dataclass
class SpiralOrbit:
    reduced: PeriodicOrbit
    theta: float
    theta_quadrature: float
    target: Fraction
    eps: float
    K: float
    period_3d: float
    closure_3d: float
    momentum_drift: float
    distance_range: tuple[float, float]
    lifted: OrbitTrace = field(repr=False)
    spatial: OrbitTrace = field(repr=False)
    scan: list[WindingSample] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = self.reduced.to_dict()
        d["class"] = "spiral"
        d["spatial_period"] = self.period_3d
        d["spatial_closure_error"] = self.closure_3d
        d["momentum_drift"] = self.momentum_drift
        d["distance_range"] = list(self.distance_range)
        return d


def winding_scan(K: float, eps_range: tuple[float, float] = (0.02, 0.24), points: int = 8,
                 density: float = DEFAULT_NEAR_DENSITY, x_launch: float = SPIRAL_LAUNCH,
                 config: IntegratorConfig | None = None) -> list[WindingSample]:
    """Continuation over a grid of eps, each solve seeded by the previous launch speed."""
    out = []
    guess = None
    for eps in np.linspace(eps_range[0], eps_range[1], points):
        w = winding_sample(float(eps), K, density, x_launch, guess, config)
        out.append(w)
        guess = w.v0
    return out


def find_spiral(K: float, eps_range: tuple[float, float] = (0.02, 0.24), q_max: int = 20,
                target: Fraction | str = "auto", density: float = DEFAULT_NEAR_DENSITY,
                x_launch: float = SPIRAL_LAUNCH, offset: float = 0.0, points: int = 8,
                config: IntegratorConfig | None = None) -> SpiralOrbit:
    """Spiral orbit with angular momentum K about the unit circle.

    The winding ratio Theta(eps) is tabulated on ``points`` values of eps;
    the simplest rational p/q with q <= q_max inside the attained range is
    chosen (or ``target``), eps is solved for Theta = p/q + offset, and the
    orbit is mapped by s(t) = eps r_eps(t/eps).  ``offset`` exists for
    negative controls.
    """
    if K == 0:
        raise PreconditionError("K must be nonzero: with zero angular momentum the azimuth is constant")
    sign = 1.0 if K > 0 else -1.0
    scan = winding_scan(K, eps_range, points, density, x_launch, config)
    thetas = np.array([sign * w.theta for w in scan])
    if not np.all(np.diff(thetas) > 0):
        raise SearchBracketError("winding ratio is not monotone over the eps grid",
                                 scan=[(w.eps, w.theta) for w in scan])
    if target == "auto":
        frac = rational_in_range(float(thetas[0]), float(thetas[-1]), q_max)
    else:
        frac = Fraction(target)
        if frac.denominator > q_max:
            raise ValueError(f"target {frac} has denominator above q_max={q_max}")
    goal = float(frac) + offset
    if not thetas[0] < goal < thetas[-1]:
        raise SearchBracketError(f"target {goal:.6g} outside attained range "
                                 f"({thetas[0]:.6g}, {thetas[-1]:.6g})",
                                 scan=[(w.eps, w.theta) for w in scan])
    i = int(np.searchsorted(thetas, goal))
    lo, hi = scan[i - 1], scan[i]
    seeds = {lo.eps: lo.v0, hi.eps: hi.v0}

    def g(eps):
        near = min(seeds, key=lambda e: abs(e - eps))
        w = winding_sample(eps, K, density, x_launch, seeds[near], config)
        seeds[eps] = w.v0
        return sign * w.theta - goal

    eps = brentq(g, lo.eps, hi.eps, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    w = winding_sample(eps, K, density, x_launch, seeds[min(seeds, key=lambda e: abs(e - eps))], config)

    # full reduced period in the translated frame, then the unit frame
    src = RingSystem.from_density(density, 1.0 / eps)
    keff = K / eps
    tau_src = 2.0 * w.half_time
    r0 = 1.0 / eps + x_launch
    full = integrate_reduced(src, ReducedState(r0, 0.0, 0.0, w.v0, keff), tau_src, config)
    theta = full.phi[-1] / TWO_PI
    theta_quad = float(np.sum(gauss_increments(full.sol, full.t, keff))) / TWO_PI

    length, k = rescale_factors(eps, eps)
    unit_sys = RingSystem.from_density(density, 1.0)
    unit_trace = rescale_orbit(full, length, eps)
    ic_red = tuple(float(v) for v in unit_trace.y[0])
    period = tau_src / k
    meta = {"theta": theta, "theta_quadrature": theta_quad, "p": frac.numerator,
            "q": frac.denominator, "eps": eps, "keff": unit_trace.keff, "K": K,
            "offset": offset, "family": None}
    reduced = PeriodicOrbit(cls="spiral", system=describe_system(unit_sys, "fixed-density"),
                            initial_state=ic_red, period=period,
                            closure_error=closure_distance(unit_trace.y[-1], unit_trace.y[0]),
                            symmetries=("x-axis",), metadata=meta, layout="reduced",
                            trace=unit_trace)
    lifted = lift_to_3d(unit_trace)
    q = frac.denominator
    s0 = SpatialState(*lifted.y[0])
    spatial = integrate_spatial(unit_sys, s0, q * period, config)
    closure = closure_distance(spatial.final, lifted.y[0])
    lz = angular_momentum(spatial)
    drift = float(np.max(np.abs(lz - lz[0])) / abs(lz[0]))
    dist = np.hypot(unit_trace.y[:, 0] - 1.0, unit_trace.y[:, 1])
    return SpiralOrbit(reduced=reduced, theta=theta, theta_quadrature=theta_quad, target=frac,
                       eps=eps, K=K, period_3d=q * period, closure_3d=closure,
                       momentum_drift=drift, distance_range=(float(dist.min()), float(dist.max())),
                       lifted=lifted, spatial=spatial, scan=scan)
