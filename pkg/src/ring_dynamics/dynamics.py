"""Event-detecting integration of the ring, Euler and reduced cylindrical systems.

Three state layouts are used:

* planar ``(x, z, vx, vz)``: motion in the vertical plane y = center_y
  (for :class:`EulerSystem` the second coordinate is the in-plane y);
* reduced ``(r, z, vr, vz)`` with a fixed angular momentum ``keff``, the
  azimuth ``phi`` being accumulated by quadrature afterwards;
* spatial ``(x, y, z, vx, vy, vz)``.

Integration is delegated to :func:`scipy.integrate.solve_ivp` with dense
output; event roots are located on the dense interpolant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import (CentrifugalSingularityError, IntegrationTimeout,
                     RepulsiveRegionError, SourceCollisionError)
from .potential import EulerSystem, RingSystem, ring_force, ring_potential

EVENT_KINDS = ("z-cross-up", "z-cross-down", "vz-zero", "x-axis-perp",
               "line-En-cross", "collision", "hill-exit")

COLUMNS = {
    "planar": ("x", "z", "vx", "vz"),
    "reduced": ("r", "z", "vr", "vz"),
    "spatial": ("x", "y", "z", "vx", "vy", "vz"),
}

# stand-in acceleration for trial stages that land inside the collision band;
# large enough that the step is rejected, small enough not to overflow
_BAND_PENALTY = 1e120


@dataclass(frozen=True)
class PointMassSystem:
    """Single fixed center at the origin (the eps = 0 limit of a shrinking circle)."""

    mass: float = 1.0
    collision_band: float = 1e-8

    @property
    def band(self) -> float:
        return self.collision_band

    def planar_potential(self, x: float, z: float) -> float:
        d = math.hypot(x, z)
        if d <= self.band:
            raise SourceCollisionError("point on source: fixed center")
        return -self.mass / d

    def planar_force(self, x: float, z: float) -> tuple[float, float]:
        d = math.hypot(x, z)
        if d <= self.band:
            raise SourceCollisionError("point on source: fixed center")
        c = -self.mass / d ** 3
        return c * x, c * z

    def planar_distance(self, x: float, z: float) -> float:
        return math.hypot(x, z)


def length_scale(sys) -> float:
    if isinstance(sys, RingSystem):
        return sys.radius
    if isinstance(sys, EulerSystem):
        return sys.separation
    return 1.0


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits.  ``collision_radius=None`` means 1e-6 of the system length scale."""

    rtol: float = 1e-11
    atol: float = 1e-12
    max_step: float = math.inf
    event_tol: float = 1e-12
    collision_radius: float | None = None
    method: str = "DOP853"

    def __post_init__(self):
        for name in ("rtol", "atol", "max_step", "event_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.collision_radius is not None and not self.collision_radius > 0:
            raise ValueError("collision_radius must be positive")
        if self.method not in ("DOP853", "RK45"):
            raise ValueError(f"unsupported method {self.method!r}")

    def collision_for(self, sys) -> float:
        if self.collision_radius is not None:
            return self.collision_radius
        return 1e-6 * length_scale(sys)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class PlanarState:
    x: float
    z: float
    vx: float
    vz: float
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.z, self.vx, self.vz], dtype=float)


@dataclass(frozen=True)
class ReducedState:
    r: float
    z: float
    vr: float
    vz: float
    keff: float
    phi: float = 0.0
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.r, self.z, self.vr, self.vz], dtype=float)


@dataclass(frozen=True)
class SpatialState:
    x: float
    y: float
    z: float
    vx: float
    vy: float
    vz: float
    t: float = 0.0

    def vector(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.vz], dtype=float)


@dataclass(frozen=True)
class Event:
    t: float
    kind: str
    state: tuple[float, ...]


@dataclass(frozen=True)
class Until:
    """Stop condition: a time cap, optionally ending earlier at the ``count``-th ``event``."""

    t_max: float
    event: str | None = None
    count: int = 1

    def __post_init__(self):
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.event is not None and self.event not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.event!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")


@dataclass
class OrbitTrace:
    """Time-ordered samples, the events met on the way and the energy record.

    ``sol`` is the dense interpolant (not serialized); ``phi`` is filled for
    reduced traces, ``keff`` for reduced and lifted ones.
    """

    kind: str
    t: np.ndarray
    y: np.ndarray
    energy: np.ndarray
    events: list[Event] = field(default_factory=list)
    status: str = "time"
    phi: np.ndarray | None = None
    keff: float | None = None
    sol: Callable | None = field(default=None, repr=False)
    system: object | None = field(default=None, repr=False)

    @property
    def columns(self) -> tuple[str, ...]:
        return COLUMNS[self.kind]

    @property
    def energy_drift(self) -> float:
        e0 = self.energy[0]
        scale = abs(e0) if e0 != 0 else 1.0
        return float(np.max(np.abs(self.energy - e0)) / scale)

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    @property
    def collided(self) -> bool:
        return self.status == "collision"

    def column(self, name: str) -> np.ndarray:
        return self.y[:, self.columns.index(name)]

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def dense(self, t) -> np.ndarray:
        """States at time(s) ``t``; shape (len(t), d) for arrays."""
        if self.sol is None:
            raise ValueError("trace carries no dense output")
        out = np.asarray(self.sol(t))
        return out.T if out.ndim == 2 else out


# --------------------------------------------------------------------------
# right-hand sides and energies
# --------------------------------------------------------------------------

def _planar_rhs(sys):
    force = sys.planar_force

    def rhs(_t, y):
        try:
            ax, az = force(y[0], y[1])
        except SourceCollisionError:
            ax = az = _BAND_PENALTY
        return np.array([y[2], y[3], ax, az])

    return rhs


def _reduced_rhs(sys: RingSystem, keff: float):
    k2 = keff * keff
    meridian = sys.meridian_force
    cz = sys.center[2]

    def rhs(_t, y):
        r = y[0]
        try:
            fr, fz = meridian(r, y[1] - cz) if r >= 0 else meridian(-r, y[1] - cz)
        except SourceCollisionError:
            fr = fz = _BAND_PENALTY
        return np.array([y[2], y[3], fr + k2 / r ** 3, fz])

    return rhs


def _spatial_rhs(sys: RingSystem):
    def rhs(_t, y):
        try:
            a = ring_force(sys, y[:3])
        except SourceCollisionError:
            a = np.full(3, _BAND_PENALTY)
        return np.concatenate([y[3:], a])

    return rhs


def planar_energy(sys, y) -> float:
    return 0.5 * (y[2] ** 2 + y[3] ** 2) + sys.planar_potential(y[0], y[1])


def reduced_energy(sys: RingSystem, keff: float, y) -> float:
    """Energy of the (r, z) subsystem: kinetic + keff^2/(2 r^2) + V."""
    return (0.5 * (y[2] ** 2 + y[3] ** 2) + 0.5 * keff * keff / y[0] ** 2
            + sys.meridian_potential(y[0], y[1] - sys.center[2]))


def spatial_energy(sys: RingSystem, y) -> float:
    return 0.5 * float(np.dot(y[3:], y[3:])) + ring_potential(sys, y[:3])


# --------------------------------------------------------------------------
# events
# --------------------------------------------------------------------------

def _make_event(fun, terminal, direction):
    fun.terminal = terminal
    fun.direction = direction
    return fun


def _event_functions(kind: str, sys, collision_radius: float, until: Until,
                     line_height: float | None, hill_radius: float | None,
                     keff: float | None):
    """Return [(name, event_fn)] for the layout ``kind``."""
    if kind == "spatial":
        iz, ivz, ix = 2, 5, 0
    else:
        iz, ivz, ix = 1, 3, 0

    def target(name):
        if until.event == name:
            return until.count
        return False

    specs = [
        ("z-cross-up", lambda t, y: y[iz], 1),
        ("z-cross-down", lambda t, y: y[iz], -1),
        ("vz-zero", lambda t, y: y[ivz], 0),
        ("x-axis-perp", lambda t, y: y[ix], 0),
    ]
    if line_height is not None:
        specs.append(("line-En-cross", lambda t, y: y[iz] - line_height, -1))
    if kind == "planar":
        dist = lambda t, y: sys.planar_distance(y[0], y[1]) - collision_radius
    elif kind == "reduced":
        cz = sys.center[2]
        dist = lambda t, y: math.hypot(y[0] - sys.radius, y[1] - cz) - collision_radius
    else:
        dist = lambda t, y: sys.distance_to_source(y[:3]) - collision_radius
    out = []
    for name, fun, direction in specs:
        out.append((name, _make_event(fun, target(name), direction)))
    out.append(("collision", _make_event(dist, True, -1)))
    if hill_radius is not None:
        if kind == "spatial":
            rad = lambda t, y: math.sqrt(y[0] ** 2 + y[1] ** 2 + y[2] ** 2) - hill_radius
        else:
            rad = lambda t, y: math.hypot(y[0], y[1]) - hill_radius
        out.append(("hill-exit", _make_event(rad, target("hill-exit"), 1)))
    if kind == "reduced":
        # r reaching zero is impossible for keff != 0 at finite energy
        out.append(("axis", _make_event(lambda t, y: y[0], True, -1)))
    return out


def _run(kind, sys, rhs, y0, t0, until, config, energy_fn, line_height=None,
         hill_radius=None, keff=None) -> OrbitTrace:
    config = config or DEFAULT_CONFIG
    coll = config.collision_for(sys)
    named = _event_functions(kind, sys, coll, until, line_height, hill_radius, keff)
    sol = solve_ivp(rhs, (t0, t0 + until.t_max), y0, method=config.method,
                    rtol=config.rtol, atol=config.atol, max_step=config.max_step,
                    dense_output=True, events=[f for _, f in named])
    t = sol.t
    y = sol.y.T
    events: list[Event] = []
    for (name, _), te, ye in zip(named, sol.t_events, sol.y_events):
        for ti, yi in zip(te, ye):
            events.append(Event(float(ti), name, tuple(float(v) for v in yi)))
    events.sort(key=lambda e: e.t)

    status = "time"
    if sol.status == 1:
        fired = {name for (name, _), te in zip(named, sol.t_events) if len(te)}
        if "axis" in fired and any(e.kind == "axis" for e in events if e.t == t[-1]):
            raise CentrifugalSingularityError("reduced trace reached r = 0")
        if any(e.kind == "collision" for e in events):
            status = "collision"
        else:
            status = "event"
    elif sol.status == -1:
        # step-size underflow only happens in the singular neighbourhood of the source
        status = "collision"
        events.append(Event(float(t[-1]), "collision", tuple(float(v) for v in y[-1])))
    events = [e for e in events if e.kind != "axis"]

    energy = np.array([energy_fn(row) for row in y])
    trace = OrbitTrace(kind=kind, t=t, y=y, energy=energy, events=events,
                       status=status, keff=keff, sol=sol.sol, system=sys)
    if until.event is not None and status == "time":
        raise IntegrationTimeout(
            f"no {until.event!r} event (count {until.count}) within t_max={until.t_max:g}",
        ) from None
    return trace


def integrate_planar(sys, s0: PlanarState, until: Until | float,
                     config: IntegratorConfig | None = None,
                     line_height: float | None = None,
                     hill_radius: float | None = None) -> OrbitTrace:
    """Integrate the planar equations of motion from ``s0``.

    Collision with the source ends the trace with status ``"collision"``;
    an event-based stop condition not met by ``t_max`` raises
    :class:`IntegrationTimeout`.
    """
    until = until if isinstance(until, Until) else Until(float(until))
    y0 = s0.vector()
    if sys.planar_distance(y0[0], y0[1]) <= sys.band:
        raise SourceCollisionError("initial state on the source")
    return _run("planar", sys, _planar_rhs(sys), y0, s0.t, until, config,
                lambda y: planar_energy(sys, y), line_height, hill_radius)


def _simpson_increments(sol, t: np.ndarray, keff: float, panels: int = 16) -> np.ndarray:
    """Per-step integrals of keff/r^2 by composite Simpson on the dense output."""
    if len(t) < 2:
        return np.zeros(0)
    frac = np.linspace(0.0, 1.0, 2 * panels + 1)
    w = np.ones(2 * panels + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    h = np.diff(t)
    nodes = (t[:-1, None] + h[:, None] * frac[None, :]).ravel()
    r = sol(nodes)[0].reshape(len(h), -1)
    return keff * (h / (6.0 * panels)) * ((w / r ** 2).sum(axis=1))


def gauss_increments(sol, t: np.ndarray, keff: float, order: int = 12) -> np.ndarray:
    """Per-step integrals of keff/r^2 by Gauss-Legendre on the dense output."""
    if len(t) < 2:
        return np.zeros(0)
    x, w = np.polynomial.legendre.leggauss(order)
    h = np.diff(t)
    nodes = (t[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    r = sol(nodes)[0].reshape(len(h), -1)
    return keff * 0.5 * h * ((w / r ** 2).sum(axis=1))


def integrate_reduced(sys: RingSystem, s0: ReducedState, until: Until | float,
                      config: IntegratorConfig | None = None,
                      line_height: float | None = None) -> OrbitTrace:
    """Integrate (r, z) under -grad(keff^2/(2 r^2) + V) and accumulate phi.

    ``phi`` is the running Simpson quadrature of keff/r^2 over the dense
    output, so the (r, z) subsystem stays autonomous.
    """
    until = until if isinstance(until, Until) else Until(float(until))
    if not s0.r > 0:
        raise CentrifugalSingularityError("reduced state needs r > 0")
    y0 = s0.vector()
    keff = float(s0.keff)
    trace = _run("reduced", sys, _reduced_rhs(sys, keff), y0, s0.t, until, config,
                 lambda y: reduced_energy(sys, keff, y), line_height, None, keff)
    if np.any(trace.y[:, 0] <= 0):
        raise CentrifugalSingularityError("reduced trace reached r <= 0")
    inc = _simpson_increments(trace.sol, trace.t, keff)
    trace.phi = s0.phi + np.concatenate([[0.0], np.cumsum(inc)])
    return trace


def integrate_spatial(sys: RingSystem, s0: SpatialState, until: Until | float,
                      config: IntegratorConfig | None = None) -> OrbitTrace:
    """Integrate the full three-dimensional equations of motion."""
    until = until if isinstance(until, Until) else Until(float(until))
    y0 = s0.vector()
    if sys.distance_to_source(y0[:3]) <= sys.band:
        raise SourceCollisionError("initial state on the source")
    return _run("spatial", sys, _spatial_rhs(sys), y0, s0.t, until, config,
                lambda y: spatial_energy(sys, y))


def angle_at(trace: OrbitTrace, t: float) -> float:
    """phi at an arbitrary time inside a reduced trace (Simpson on the partial step)."""
    if trace.phi is None:
        raise ValueError("not a reduced trace")
    i = int(np.searchsorted(trace.t, t, side="right")) - 1
    i = min(max(i, 0), len(trace.t) - 1)
    if t == trace.t[i]:
        return float(trace.phi[i])
    inc = _simpson_increments(trace.sol, np.array([trace.t[i], t]), trace.keff)
    return float(trace.phi[i] + inc[0])


def lift_to_3d(trace: OrbitTrace) -> OrbitTrace:
    """Map a reduced trace to (r cos phi, r sin phi, z) with matching velocities."""
    if trace.kind != "reduced" or trace.phi is None:
        raise ValueError("lift_to_3d needs a reduced trace with phi")
    r, z, vr, vz = trace.y.T
    phi = trace.phi
    c, s = np.cos(phi), np.sin(phi)
    w = trace.keff / r  # r * phi_dot
    sys = trace.system
    cx, cy = (sys.center[0], sys.center[1]) if sys is not None else (0.0, 0.0)
    y = np.column_stack([cx + r * c, cy + r * s, z,
                         vr * c - w * s, vr * s + w * c, vz])
    events = []
    for e in trace.events:
        ph = angle_at(trace, e.t)
        er, ez, evr, evz = e.state
        ew = trace.keff / er
        events.append(Event(e.t, e.kind, (
            cx + er * math.cos(ph), cy + er * math.sin(ph), ez,
            evr * math.cos(ph) - ew * math.sin(ph), evr * math.sin(ph) + ew * math.cos(ph), evz)))
    energy = trace.energy.copy()
    if sys is not None:
        energy = np.array([spatial_energy(sys, row) for row in y])
    return OrbitTrace(kind="spatial", t=trace.t.copy(), y=y, energy=energy, events=events,
                      status=trace.status, keff=trace.keff, system=sys)


def angular_momentum(trace: OrbitTrace) -> np.ndarray:
    """z-component of (position - axis) x velocity along a spatial trace."""
    if trace.kind != "spatial":
        raise ValueError("angular momentum needs a spatial trace")
    sys = trace.system
    cx, cy = (sys.center[0], sys.center[1]) if sys is not None else (0.0, 0.0)
    x, y = trace.y[:, 0] - cx, trace.y[:, 1] - cy
    return x * trace.y[:, 4] - y * trace.y[:, 3]


# --------------------------------------------------------------------------
# circular orbits in the horizontal plane
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CircularOrbit:
    radius: float
    speed: float
    period: float
    stable: bool
    hessian: tuple[float, float]  # second derivatives of the effective potential (rr, zz)


def _radial_force_derivative(sys: RingSystem, r: float) -> float:
    h = 1e-3 * min(r - sys.radius, r)
    f = lambda q: sys.meridian_force(q, 0.0)[0]
    return (-f(r + 2 * h) + 8 * f(r + h) - 8 * f(r - h) + f(r - 2 * h)) / (12 * h)


def _zz_stiffness(sys: RingSystem, r: float) -> float:
    # d F_z / d z at z = 0 from the closed form F_z = -(2M/pi) z E / (A B^2)
    from .potential import _ring_kernel
    a_big, b_big, _, e, _, _ = _ring_kernel(r, 0.0, sys.radius)
    return 2.0 * sys.mass * e / (math.pi * a_big * b_big * b_big)


def circular_orbit(sys: RingSystem, r: float) -> CircularOrbit:
    """Horizontal circular orbit of radius ``r`` about the axis, outside the circle.

    Stability is read off the Hessian of the effective potential
    keff^2/(2 r^2) + V at the equilibrium: the mixed term vanishes by the
    z -> -z symmetry, so both diagonal entries must be positive.
    """
    if not r > sys.radius:
        raise RepulsiveRegionError(
            f"no circular orbit at r={r:g} <= radius {sys.radius:g}: radial force is repulsive inside")
    fr, _ = sys.meridian_force(r, 0.0)
    speed = math.sqrt(-r * fr)
    v_rr = -_radial_force_derivative(sys, r)
    eff_rr = -3.0 * fr / r + v_rr
    eff_zz = _zz_stiffness(sys, r)
    return CircularOrbit(radius=r, speed=speed, period=2 * math.pi * r / speed,
                         stable=bool(eff_rr > 0 and eff_zz > 0), hessian=(eff_rr, eff_zz))


def stability_radius(sys: RingSystem, xtol: float = 1e-14) -> float:
    """Radius r0 beyond which horizontal circular orbits are stable."""
    g = lambda r: circular_orbit(sys, r).hessian[0]
    lo, hi = sys.radius * (1 + 1e-6), 2.0 * sys.radius
    if not (g(lo) < 0 < g(hi)):
        raise RuntimeError("stability transition not bracketed in (radius, 2 radius)")
    return brentq(g, lo, hi, xtol=xtol * sys.radius, rtol=4 * np.finfo(float).eps)


def circular_state(sys: RingSystem, r: float) -> SpatialState:
    """Spatial initial state of the horizontal circular orbit through (r, 0, 0) + center."""
    orb = circular_orbit(sys, r)
    cx, cy, cz = sys.center
    return SpatialState(cx + r, cy, cz, 0.0, orb.speed, 0.0)


# --------------------------------------------------------------------------
# rescaling and translating traces
# --------------------------------------------------------------------------

def rescale_factors(length_ratio: float, mass_ratio: float) -> tuple[float, float]:
    """(L, k) with s(t) = L r(k t) mapping a solution for (rho, M) to (L rho, mass_ratio M)."""
    if not (length_ratio > 0 and mass_ratio > 0):
        raise ValueError("ratios must be positive")
    return length_ratio, math.sqrt(mass_ratio / length_ratio ** 3)


def rescale_system(sys, length_ratio: float, mass_ratio: float):
    if isinstance(sys, RingSystem):
        return replace(sys, radius=sys.radius * length_ratio, mass=sys.mass * mass_ratio,
                       center=tuple(length_ratio * c for c in sys.center), collision_band=None)
    if isinstance(sys, EulerSystem):
        return replace(sys, separation=sys.separation * length_ratio,
                       mass=sys.mass * mass_ratio, collision_band=None)
    if isinstance(sys, PointMassSystem):
        return replace(sys, mass=sys.mass * mass_ratio)
    raise TypeError(f"cannot rescale {type(sys).__name__}")


def rescale_orbit(trace: OrbitTrace, length_ratio: float, mass_ratio: float) -> OrbitTrace:
    """Apply s(t) = L r(k t), k = sqrt(mass_ratio / L^3), to every sample and event.

    Positions scale by L, velocities by L k, times by 1/k, energies by
    mass_ratio / L.  The returned trace refers to the rescaled system.
    """
    L, k = rescale_factors(length_ratio, mass_ratio)
    d = trace.y.shape[1]
    half = d // 2
    factors = np.concatenate([np.full(half, L), np.full(d - half, L * k)])
    y = trace.y * factors
    events = [Event(e.t / k, e.kind, tuple(np.asarray(e.state) * factors)) for e in trace.events]
    sys = rescale_system(trace.system, L, mass_ratio) if trace.system is not None else None
    keff = None if trace.keff is None else trace.keff * L * L * k
    old_sol = trace.sol
    sol = None if old_sol is None else (lambda t, _s=old_sol: (np.asarray(_s(np.asarray(t) * k)).T * factors).T)
    return OrbitTrace(kind=trace.kind, t=trace.t / k, y=y, energy=trace.energy * mass_ratio / L,
                      events=events, status=trace.status, phi=trace.phi, keff=keff, sol=sol,
                      system=sys)


def translate_trace(trace: OrbitTrace, q: Sequence[float]) -> OrbitTrace:
    """Shift positions of a planar or spatial trace (and its system) by ``q``."""
    if trace.kind == "planar":
        shift = np.array([q[0], q[1], 0.0, 0.0])
        center_shift = (q[0], 0.0, q[1])
    elif trace.kind == "spatial":
        shift = np.array([q[0], q[1], q[2], 0.0, 0.0, 0.0])
        center_shift = tuple(q)
    else:
        raise ValueError("reduced traces are not translated")
    sys = trace.system
    if isinstance(sys, RingSystem):
        sys = replace(sys, center=tuple(c + s for c, s in zip(sys.center, center_shift)))
    elif sys is not None and any(center_shift):
        raise TypeError("only ring systems can be translated")
    events = [Event(e.t, e.kind, tuple(np.asarray(e.state) + shift)) for e in trace.events]
    old_sol = trace.sol
    sol = None if old_sol is None else (lambda t, _s=old_sol: (np.asarray(_s(t)).T + shift).T)
    return OrbitTrace(kind=trace.kind, t=trace.t.copy(), y=trace.y + shift, energy=trace.energy.copy(),
                      events=events, status=trace.status, phi=trace.phi, keff=trace.keff,
                      sol=sol, system=sys)


def ode_defect(trace: OrbitTrace, samples: int = 200, rtol: float = 1e-13,
               atol: float = 1e-14) -> float:
    """Largest one-step mismatch of the trace against the flow of its own system.

    For up to ``samples`` steps the trace's system is integrated from sample
    i to the time of sample i+1 at tight tolerance; each component's
    mismatch is scaled by that component's largest magnitude on the trace.
    """
    sys = trace.system
    if trace.kind == "planar":
        rhs = _planar_rhs(sys)
    elif trace.kind == "reduced":
        rhs = _reduced_rhs(sys, trace.keff)
    else:
        rhs = _spatial_rhs(sys)
    steps = len(trace.t) - 1
    idx = np.unique(np.linspace(0, steps - 1, min(samples, steps)).astype(int))
    scale = np.maximum(np.max(np.abs(trace.y), axis=0), 1e-300)
    worst = 0.0
    for i in idx:
        sol = solve_ivp(rhs, (trace.t[i], trace.t[i + 1]), trace.y[i], method="DOP853",
                        rtol=rtol, atol=atol)
        worst = max(worst, float(np.max(np.abs(sol.y[:, -1] - trace.y[i + 1]) / scale)))
    return worst
