"""Executable checks: interval pointing, injectivity, Hill radii and return times.

Every check returns a :class:`Report` whose ``to_dict`` form is the JSON
layout ``{check, pass, violations, stats}``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import (IntegratorConfig, OrbitTrace, PlanarState, PointMassSystem,
                       Until, integrate_planar, length_scale)
from .errors import (IntegrationTimeout, PreconditionError, ResolutionError,
                     UnboundedRegionError)
from .potential import EulerSystem, RingSystem, _ring_kernel


# --------------------------------------------------------------------------
# reports and parallel helpers
# --------------------------------------------------------------------------

@dataclass
class Report:
    check: str
    passed: bool
    violations: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"check": self.check, "pass": bool(self.passed),
                "violations": list(self.violations), "stats": dict(self.stats)}


def worker_count() -> int:
    """Worker processes for batch checks: CPU count capped by RING_DYNAMICS_THREADS."""
    n = os.cpu_count() or 1
    env = os.environ.get("RING_DYNAMICS_THREADS")
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            pass
    return n


def parallel_map(fn, items: Sequence) -> list:
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# pointing
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    """Closed interval on the horizontal axis: bounded, left-infinite or right-infinite."""

    kind: str
    a: float = -math.inf
    b: float = math.inf

    def __post_init__(self):
        if self.kind == "bounded":
            if not self.a <= self.b:
                raise ValueError("bounded interval needs a <= b")
        elif self.kind == "left":
            if not math.isinf(self.a) or math.isinf(self.b):
                raise ValueError("left-infinite interval is (-inf, b]")
        elif self.kind == "right":
            if math.isinf(self.a) or not math.isinf(self.b):
                raise ValueError("right-infinite interval is [a, inf)")
        else:
            raise ValueError(f"unknown interval kind {self.kind!r}")

    @classmethod
    def bounded(cls, a: float, b: float) -> "Interval":
        return cls("bounded", float(a), float(b))

    @classmethod
    def left(cls, b: float) -> "Interval":
        return cls("left", -math.inf, float(b))

    @classmethod
    def right(cls, a: float) -> "Interval":
        return cls("right", float(a), math.inf)

    def contains(self, x: float) -> bool:
        return self.a <= x <= self.b

    def shifted(self, d: float) -> "Interval":
        return Interval(self.kind, self.a + d, self.b + d)

    def mirrored(self) -> "Interval":
        kind = {"bounded": "bounded", "left": "right", "right": "left"}[self.kind]
        return Interval(kind, -self.b, -self.a)


def points_to(x: Sequence[float], v: Sequence[float], interval: Interval) -> bool:
    """Whether the ray from ``x`` (closed upper half-plane) along ``v`` meets ``interval``.

    Off the axis the ray needs v2 < 0 and its axis hit X satisfies
    a <= X <= b, tested without division as
    (x1 - a) v2 - x2 v1 <= 0 and (x1 - b) v2 - x2 v1 >= 0.
    """
    x1, x2 = float(x[0]), float(x[1])
    v1, v2 = float(v[0]), float(v[1])
    if x2 < 0:
        raise ValueError("points_to needs x in the closed upper half-plane")
    if v1 == 0.0 and v2 == 0.0:
        return True
    a, b = interval.a, interval.b
    if x2 == 0.0:
        if interval.contains(x1):
            return True
        if v2 != 0.0:
            return False
        return (v1 < 0 and x1 > b) or (v1 > 0 and x1 < a)
    if not v2 < 0:
        return False
    if not math.isinf(a) and _cross_sign(x1 - a, v2, x2, v1) > 0:
        return False
    if not math.isinf(b) and _cross_sign(x1 - b, v2, x2, v1) < 0:
        return False
    return True


def _cross_sign(p: float, q: float, r: float, s: float) -> int:
    """Sign of p q - r s; exact rationals when the float result is within rounding of zero."""
    d = p * q - r * s
    if abs(d) > 4 * np.finfo(float).eps * (abs(p * q) + abs(r * s)):
        return 1 if d > 0 else -1
    e = Fraction(p) * Fraction(q) - Fraction(r) * Fraction(s)
    return (e > 0) - (e < 0)


def pointing_h(x, z, vx, vz, interval: Interval) -> dict[str, np.ndarray]:
    """Angular functions that stay nondecreasing along arcs pointing to ``interval``.

    For a right end b: h = (x - b) vz - z vx (the interval (-inf, b] moved to
    (-inf, 0]); for a left end a: h = (a - x) vz + z vx (mirror image).
    """
    out = {}
    if not math.isinf(interval.b):
        out["right"] = (np.asarray(x) - interval.b) * vz - np.asarray(z) * vx
    if not math.isinf(interval.a):
        out["left"] = (interval.a - np.asarray(x)) * vz + np.asarray(z) * vx
    return out


@dataclass
class PointingReport:
    flags: np.ndarray
    h: dict
    first_violation: tuple | None
    landing: float | None = None
    landing_ok: bool | None = None
    h_monotone: bool = True
    min_h_increment: float = 0.0

    @property
    def passed(self) -> bool:
        return (bool(np.all(self.flags)) and self.h_monotone
                and (self.landing_ok is None or self.landing_ok))

    def to_report(self, check: str) -> Report:
        viol = []
        if self.first_violation is not None:
            viol.append({"t": self.first_violation[0], "state": list(self.first_violation[1])})
        if not self.h_monotone:
            viol.append({"h_decrease": self.min_h_increment})
        if self.landing_ok is False:
            viol.append({"landing": self.landing})
        return Report(check, self.passed, viol,
                      {"samples": int(len(self.flags)), "pointing": int(np.sum(self.flags)),
                       "min_h_increment": self.min_h_increment, "landing": self.landing})


def _planar_field(sys, x, z):
    if isinstance(sys, RingSystem):
        return sys.planar_force(x, z)
    return sys.planar_force(x, z)


def check_field_pointing(sys, interval: Interval, xs: Sequence[float], zs: Sequence[float],
                         sign: float = 1.0) -> Report:
    """Test the acceleration field (``sign=+1``) on the grid ``xs`` x ``zs`` (z > 0).

    ``sign=-1`` tests grad V instead of the attraction -grad V and serves as
    a negative control: it points away from the axis.
    """
    violations = []
    count = 0
    for z in zs:
        if not z > 0:
            raise ValueError("grid must lie in the open upper half-plane")
        for x in xs:
            fx, fz = _planar_field(sys, float(x), float(z))
            fx, fz = sign * fx, sign * fz
            count += 1
            if (fx == 0.0 and fz == 0.0) or not points_to((x, z), (fx, fz), interval):
                violations.append({"x": float(x), "z": float(z), "fx": fx, "fz": fz})
    return Report("field-pointing", not violations, violations,
                  {"samples": count, "violations": len(violations),
                   "interval": [interval.a, interval.b]})


def default_pointing_grid(n: int = 50, half_width: float = 5.0, height: float = 5.0):
    """Cell-centred grid on (-half_width, half_width) x (0, height)."""
    xs = -half_width + (np.arange(n) + 0.5) * (2 * half_width / n)
    zs = (np.arange(n) + 0.5) * (height / n)
    return xs, zs


def check_trajectory_pointing(trace: OrbitTrace, interval: Interval, rtol: float = 1e-9,
                              require_premise: bool = True,
                              samples: int | None = None) -> PointingReport:
    """Pointing at every sample, monotone h-functions and landing inside the interval.

    The trace must be planar and stay in the closed upper half-plane.  With
    ``samples`` the dense output is evaluated on that many equally spaced
    times instead of the integrator steps.
    """
    if trace.kind != "planar":
        raise ValueError("trajectory pointing needs a planar trace")
    ts = trace.t
    ys = trace.y
    if samples is not None and trace.sol is not None:
        ts = np.linspace(trace.t[0], trace.t[-1], samples)
        ys = trace.dense(ts)
        ys[0], ys[-1] = trace.y[0], trace.y[-1]
    x, z, vx, vz = ys.T
    if np.any(z < -1e-12 * max(1.0, float(np.max(np.abs(z))))):
        raise ValueError("trace leaves the closed upper half-plane")
    zc = np.maximum(z, 0.0)
    if require_premise and not points_to((x[0], zc[0]), (vx[0], vz[0]), interval):
        raise PreconditionError("initial sample does not point to the interval")
    flags = np.array([points_to((a, b), (c, d), interval) for a, b, c, d in zip(x, zc, vx, vz)])
    first = None
    if not np.all(flags):
        i = int(np.argmin(flags))
        first = (float(ts[i]), tuple(float(q) for q in ys[i]))
    hs = pointing_h(x, zc, vx, vz, interval)
    monotone = True
    min_inc = math.inf
    for series in hs.values():
        if len(series) < 2:
            continue
        inc = np.diff(series)
        scale = max(float(np.max(np.abs(series))), 1e-300)
        min_inc = min(min_inc, float(np.min(inc)) / scale)
        if np.min(inc) < -rtol * scale:
            monotone = False
    landing = landing_ok = None
    if abs(z[-1]) <= 1e-10 * max(1.0, float(np.max(np.abs(z)))) and len(z) > 1:
        landing = float(x[-1])
        landing_ok = interval.contains(landing)
    return PointingReport(flags=flags, h=hs, first_violation=first, landing=landing,
                          landing_ok=landing_ok, h_monotone=monotone,
                          min_h_increment=0.0 if min_inc is math.inf else min_inc)


def pointing_arc(trace: OrbitTrace, interval: Interval) -> OrbitTrace:
    """Sub-trace from the first sample that points to ``interval`` to the end."""
    x, z, vx, vz = trace.y.T
    for i in range(len(x)):
        if points_to((x[i], max(z[i], 0.0)), (vx[i], vz[i]), interval):
            break
    else:
        raise PreconditionError("no sample of the trace points to the interval")
    return _subtrace(trace, i)


def _subtrace(trace: OrbitTrace, start: int) -> OrbitTrace:
    return OrbitTrace(kind=trace.kind, t=trace.t[start:], y=trace.y[start:],
                      energy=trace.energy[start:],
                      events=[e for e in trace.events if e.t >= trace.t[start]],
                      status=trace.status, sol=trace.sol, system=trace.system)


def reversed_trace(trace: OrbitTrace) -> OrbitTrace:
    """Time-reversed planar trace: samples in reverse order with velocities negated."""
    y = trace.y[::-1].copy()
    y[:, 2:] *= -1.0
    t = trace.t[-1] - trace.t[::-1]
    return OrbitTrace(kind=trace.kind, t=t, y=y, energy=trace.energy[::-1].copy(),
                      status=trace.status, system=trace.system)


def upper_half_arcs(sys, interval: Interval, n: int, rng: np.random.Generator,
                    config: IntegratorConfig | None = None,
                    max_tries: int | None = None) -> list[OrbitTrace]:
    """Sampled arcs in the upper half-plane that point to a bounded ``interval``.

    Each launch leaves the axis upward from a point right of the interval
    with negative energy and runs until it returns to z = 0; the arc starts
    at its first sample pointing to the interval.  Launches that never
    point to it, collide or fail to return are skipped.
    """
    if interval.kind != "bounded":
        raise ValueError("upper_half_arcs needs a bounded interval")
    scale = length_scale(sys)
    max_tries = max_tries if max_tries is not None else 20 * n
    arcs: list[OrbitTrace] = []
    for _ in range(max_tries):
        if len(arcs) == n:
            break
        x0 = float(rng.uniform(interval.b + 0.05 * scale, interval.b + 2.0 * scale))
        v_pot = sys.planar_potential(x0, 0.0)
        speed = math.sqrt(-2.0 * v_pot * float(rng.uniform(0.05, 0.95)))
        ang = float(rng.uniform(0.05, math.pi - 0.05))
        try:
            tr = integrate_planar(sys, PlanarState(x0, 0.0, speed * math.cos(ang), speed * math.sin(ang)),
                                  Until(1e3 * max(scale, 1.0), "z-cross-down"), config)
        except IntegrationTimeout:
            continue
        if tr.collided:
            continue
        try:
            arcs.append(pointing_arc(tr, interval))
        except PreconditionError:
            continue
    return arcs


# --------------------------------------------------------------------------
# injectivity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class InjectivityResult:
    injective: bool
    segments: tuple[int, int] | None = None
    point: tuple[float, float] | None = None
    vertices: int = 0


def _turning_angles(pts: np.ndarray) -> np.ndarray:
    d = np.diff(pts, axis=0)
    a = np.arctan2(d[:, 1], d[:, 0])
    turn = np.abs(np.angle(np.exp(1j * np.diff(a))))
    return turn


def refine_polyline(trace: OrbitTrace, max_turn: float = 0.05, max_rounds: int = 30) -> np.ndarray:
    """Sample times of ``trace`` refined until consecutive segments turn by < max_turn."""
    t = np.asarray(trace.t, dtype=float)
    pts = trace.y[:, :2]
    for _ in range(max_rounds):
        turn = _turning_angles(pts)
        bad = np.nonzero(turn >= max_turn)[0]
        if len(bad) == 0:
            return pts
        if trace.sol is None:
            raise ResolutionError(
                f"turning angle {turn.max():.3g} rad exceeds {max_turn} and the trace has no dense output")
        split = np.unique(np.concatenate([bad, bad + 1]))
        mids = 0.5 * (t[split] + t[split + 1])
        t = np.sort(np.concatenate([t, mids]))
        pts = trace.dense(t)[:, :2]
    raise ResolutionError(f"polyline still under-resolved after {max_rounds} refinements")


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def _on_segment(p, q, r) -> bool:
    return (min(p[0], q[0]) <= r[0] <= max(p[0], q[0])
            and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]))


def _segments_intersect(p1, p2, p3, p4) -> bool:
    d1 = _orient(p3, p4, p1)
    d2 = _orient(p3, p4, p2)
    d3 = _orient(p1, p2, p3)
    d4 = _orient(p1, p2, p4)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and _on_segment(p3, p4, p1):
        return True
    if d2 == 0 and _on_segment(p3, p4, p2):
        return True
    if d3 == 0 and _on_segment(p1, p2, p3):
        return True
    if d4 == 0 and _on_segment(p1, p2, p4):
        return True
    return False


def _intersection_point(p1, p2, p3, p4):
    d = (p2[0] - p1[0]) * (p4[1] - p3[1]) - (p2[1] - p1[1]) * (p4[0] - p3[0])
    if d == 0:
        return (float(p3[0]), float(p3[1]))
    s = ((p3[0] - p1[0]) * (p4[1] - p3[1]) - (p3[1] - p1[1]) * (p4[0] - p3[0])) / d
    return (float(p1[0] + s * (p2[0] - p1[0])), float(p1[1] + s * (p2[1] - p1[1])))


def polyline_self_intersection(pts: np.ndarray) -> InjectivityResult:
    """Sweep over segments ordered by their left end; non-adjacent pairs that overlap
    in x are tested exactly.  Returns the first crossing pair found."""
    pts = np.asarray(pts, dtype=float)
    n = len(pts) - 1
    if n < 2:
        return InjectivityResult(True, vertices=len(pts))
    lo = np.minimum(pts[:-1, 0], pts[1:, 0])
    hi = np.maximum(pts[:-1, 0], pts[1:, 0])
    order = np.argsort(lo, kind="stable")
    active: list[int] = []
    found = None
    for i in order:
        active = [j for j in active if hi[j] >= lo[i]]
        for j in active:
            if abs(i - j) <= 1:
                continue
            a, b = (i, j) if i < j else (j, i)
            if _segments_intersect(pts[a], pts[a + 1], pts[b], pts[b + 1]):
                if found is None or (a, b) < found:
                    found = (a, b)
        active.append(i)
    if found is None:
        return InjectivityResult(True, vertices=len(pts))
    a, b = found
    return InjectivityResult(False, (int(a), int(b)),
                             _intersection_point(pts[a], pts[a + 1], pts[b], pts[b + 1]),
                             vertices=len(pts))


def check_injective(trace_or_points, max_turn: float = 0.05) -> InjectivityResult:
    """Sweep-line self-intersection test on a curvature-refined polyline."""
    if isinstance(trace_or_points, OrbitTrace):
        pts = refine_polyline(trace_or_points, max_turn)
    else:
        pts = np.asarray(trace_or_points, dtype=float)
    return polyline_self_intersection(pts)


# --------------------------------------------------------------------------
# Hill radius and return times
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HillData:
    delta: float
    radius: float
    coefficient: float
    lam: float
    return_bound: float
    grid_sup: float

    def to_dict(self) -> dict:
        return {"delta": self.delta, "R_delta": self.radius, "A": self.coefficient,
                "Lambda_A": self.lam, "T_delta": self.return_bound, "grid_sup": self.grid_sup}


def return_time_bound(a_coef: float) -> tuple[float, float]:
    """(Lambda_A, T) with Lambda_A = 2/min(1, A) + 1 and T = 2 Lambda_A."""
    lam = 2.0 / min(1.0, a_coef) + 1.0
    return lam, 2.0 * lam


def _center(sys) -> tuple[float, float]:
    if isinstance(sys, RingSystem):
        return sys.center[0], sys.center[2]
    return 0.0, 0.0


def _axis_potential(sys, x: float) -> float:
    cx, cz = _center(sys)
    return sys.planar_potential(cx + x, cz)


def hill_radius(sys, delta: float, grid: int = 200) -> HillData:
    """Radius of the sub-level set {V <= delta} and the return-time constants.

    The radius is the root of V(x, 0) = delta beyond the source on the
    positive axis, confirmed by a polar grid sweep of the sub-level set.
    Distances are measured from the system center.
    """
    if not delta < 0:
        raise UnboundedRegionError(f"sub-level set is unbounded for delta={delta:g} >= 0")
    if isinstance(sys, PointMassSystem):
        radius = sys.mass / -delta
        ell = 0.0
        a_coef = sys.mass / (1.0 + radius) ** 3
    else:
        ell = length_scale(sys)
        lo = ell * (1.0 + 1e-6)
        hi = 2.0 * ell
        while _axis_potential(sys, hi) <= delta:
            hi *= 2.0
        if _axis_potential(sys, lo) > delta:
            raise RuntimeError("sub-level set does not reach beyond the source")
        radius = brentq(lambda x: _axis_potential(sys, x) - delta, lo, hi,
                        xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
        mult = 2.0 if isinstance(sys, EulerSystem) else 1.0
        a_coef = mult * sys.mass / (ell + radius) ** 3
    lam, bound = return_time_bound(a_coef)
    # polar sweep of the quarter plane (both systems are symmetric in each axis)
    rr = np.linspace(0.0, 1.5 * radius, grid + 1)[1:]
    th = np.linspace(0.0, 0.5 * math.pi, grid + 1)
    sup = 0.0
    cx, cz = _center(sys)
    for c, s in zip(np.cos(th), np.sin(th)):
        for r in rr[::-1]:
            x, z = r * c, r * s
            if math.hypot(abs(x) - ell, z) < 1e-6 * max(ell, 1.0):
                continue
            if sys.planar_potential(cx + x, cz + z) <= delta:
                sup = max(sup, r)
                break
    return HillData(delta=float(delta), radius=float(radius), coefficient=float(a_coef),
                    lam=lam, return_bound=bound, grid_sup=float(sup))


def vertical_stiffness(sys, x: float, z: float) -> float:
    """-F_z / z, i.e. the integral of density / distance^3 over the source (finite at z = 0)."""
    if isinstance(sys, RingSystem):
        r = abs(x - sys.center[0])
        a_big, b_big, _, e, _, _ = _ring_kernel(r, z - sys.center[2], sys.radius)
        return 2.0 * sys.mass * e / (math.pi * a_big * b_big * b_big)
    if isinstance(sys, EulerSystem):
        rho = sys.separation
        return sys.mass / math.hypot(x - rho, z) ** 3 + sys.mass / math.hypot(x + rho, z) ** 3
    return sys.mass / math.hypot(x, z) ** 3


def random_launches(sys, delta: float, n: int, rng: np.random.Generator,
                    hill: HillData | None = None) -> list[tuple[float, float, float]]:
    """Launches (x0, vx, vz) on the axis with vz > 0 and energy uniformly in [V(x0), delta]."""
    hill = hill or hill_radius(sys, delta)
    ell = length_scale(sys) if not isinstance(sys, PointMassSystem) else 0.0
    out = []
    while len(out) < n:
        x0 = float(rng.uniform(-hill.radius, hill.radius))
        if ell > 0 and abs(abs(x0) - ell) < 1e-2 * ell:
            continue
        if isinstance(sys, PointMassSystem) and abs(x0) < 1e-2:
            continue
        v_pot = sys.planar_potential(x0, 0.0)
        if v_pot >= delta:
            continue
        energy = float(rng.uniform(v_pot, delta))
        speed = math.sqrt(2.0 * (energy - v_pot))
        ang = float(rng.uniform(0.05, math.pi - 0.05))
        out.append((x0, speed * math.cos(ang), speed * math.sin(ang)))
    return out


def _return_one(args):
    sys, launch, bound, config = args
    x0, vx, vz = launch
    try:
        tr = integrate_planar(sys, PlanarState(x0, 0.0, vx, vz),
                              Until(1.5 * bound, "z-cross-down"), config)
    except IntegrationTimeout:
        return {"launch": list(launch), "time": None, "collided": False, "min_stiffness": None}
    samples = tr.y[:: max(1, len(tr.y) // 50)]
    stiff = min(vertical_stiffness(sys, row[0], row[1]) for row in samples)
    return {"launch": list(launch), "time": float(tr.t[-1]), "collided": tr.collided,
            "min_stiffness": stiff}


def check_return_time(sys, launches: Iterable[tuple[float, float, float]], delta: float,
                      config: IntegratorConfig | None = None) -> Report:
    """Every launch from the axis (energy <= delta < 0, vz > 0) returns to z = 0 or
    collides within the bound T_delta; the vertical stiffness stays above A."""
    hill = hill_radius(sys, delta)
    launches = list(launches)
    for x0, vx, vz in launches:
        if not vz > 0:
            raise PreconditionError("launch needs vz > 0")
        if 0.5 * (vx * vx + vz * vz) + sys.planar_potential(x0, 0.0) > delta + 1e-12 * abs(delta):
            raise PreconditionError(f"launch at x0={x0:g} exceeds the energy cap")
    results = parallel_map(_return_one, [(sys, l, hill.return_bound, config) for l in launches])
    violations = []
    ratios = []
    min_stiff = math.inf
    for res in results:
        if res["time"] is None or res["time"] > hill.return_bound:
            violations.append(res)
            continue
        ratios.append(res["time"] / hill.return_bound)
        min_stiff = min(min_stiff, res["min_stiffness"])
        if res["min_stiffness"] < hill.coefficient * (1 - 1e-12):
            violations.append({**res, "reason": "stiffness below A"})
    stats = {"delta": delta, "launches": len(launches), **hill.to_dict(),
             "max_ratio": max(ratios) if ratios else None,
             "collisions": sum(1 for r in results if r["collided"]),
             "min_stiffness": min_stiff if ratios else None}
    return Report("return-time", not violations, violations, stats)


# --------------------------------------------------------------------------
# comparison lemmas for z'' <= -A z
# --------------------------------------------------------------------------

def harmonic_first_zero(a_coef: float) -> float:
    return 0.5 * math.pi / math.sqrt(a_coef)


def _first_zero(rhs, y0, t_max: float, index: int, direction: int) -> float:
    ev = lambda t, y: y[index]
    ev.terminal = True
    ev.direction = direction
    sol = solve_ivp(rhs, (0.0, t_max), y0, method="DOP853", rtol=1e-12, atol=1e-14, events=ev)
    if not len(sol.t_events[0]):
        return math.inf
    return float(sol.t_events[0][0])


def scalar_ode_lemmas(a_values: Sequence[float] = (0.01, 0.04, 0.1, 0.5, 1.0, 4.0, 10.0, 100.0),
                      z0: float = 1.0, vz0: float = 1.0) -> Report:
    """Harmonic comparison z'' = -A z: closed-form zero times against Lambda_A,
    numerical confirmation, and the cubic-stiffened system reaching zero no later."""
    rows, violations = [], []
    for a in a_values:
        lam, _ = return_time_bound(a)
        exact = harmonic_first_zero(a)
        harm = lambda t, y, a=a: [y[1], -a * y[0]]
        cubic = lambda t, y, a=a: [y[1], -a * y[0] - y[0] ** 3]
        t_h = _first_zero(harm, [z0, 0.0], 4 * lam, 0, -1)
        t_c = _first_zero(cubic, [z0, 0.0], 4 * lam, 0, -1)
        t_turn = _first_zero(harm, [0.0, vz0], 4 * lam, 1, -1)
        row = {"A": a, "Lambda_A": lam, "zero_exact": exact, "zero_numeric": t_h,
               "zero_cubic": t_c, "turn_numeric": t_turn}
        rows.append(row)
        ok = (exact <= lam and abs(t_h - exact) <= 1e-9 * exact and t_c <= t_h + 1e-12
              and abs(t_turn - exact) <= 1e-9 * exact)
        if not ok:
            violations.append(row)
    return Report("lemmas", not violations, violations, {"rows": rows})
