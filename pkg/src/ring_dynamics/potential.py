"""Gravitational field of a fixed homogeneous circle and its comparison fields.

Units have G = 1.  The circle lies in a horizontal plane through ``center``
with its axis parallel to z.  Closed forms use the arithmetic-geometric mean:
with ``A``/``B`` the largest/smallest distance from the field point to the
circle inside the meridian plane,

    V = -M / AGM(A, B)

and the force follows from the complete elliptic integrals K and E computed
by the same AGM sweep.  ``B`` is also the Euclidean distance to the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import SingularPointError, SourceCollisionError

TWO_PI = 2.0 * math.pi

#: declared limit constant of the rescaled force near the wire; measured value is compared against it
DECLARED_WIRE_CONSTANT = 64.0

_AGM_RTOL = 1e-15
_AGM_MAX_ITER = 64


# --------------------------------------------------------------------------
# Elliptic integrals by AGM
# --------------------------------------------------------------------------

def agm(a: float, b: float) -> float:
    """Arithmetic-geometric mean of two non-negative numbers."""
    if a < 0 or b < 0:
        raise ValueError("agm needs non-negative arguments")
    if a == 0 or b == 0:
        return 0.0
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def ellipk(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter ``m = k**2``."""
    if not 0.0 <= m < 1.0:
        raise ValueError("ellipk needs 0 <= m < 1")
    return math.pi / (2.0 * agm(1.0, math.sqrt(1.0 - m)))


def ellipke(m: float) -> tuple[float, float]:
    """K(m) and E(m) from a single AGM sweep.

    E = K (1 - sum_{n>=0} 2**(n-1) c_n**2) with c_0**2 = m and
    c_{n+1} = c_n**2 / (4 a_{n+1}), which avoids the a_n - b_n cancellation.
    """
    if not 0.0 <= m < 1.0:
        raise ValueError("ellipke needs 0 <= m < 1")
    a, b = 1.0, math.sqrt(1.0 - m)
    c2 = m
    s = 0.5 * c2
    weight = 0.5
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        a = a_next
        c2 = c2 * c2 / (16.0 * a * a)
        weight *= 2.0
        s += weight * c2
    k = math.pi / (a + b)
    return k, k * (1.0 - s)


def _ring_kernel(r: float, z: float, rho: float):
    """AGM sweep specialised to the ring geometry.

    Returns ``(A, B, K, E, S, T)`` where ``S = (1 - E/K) / r`` is accumulated
    directly and ``T = S - 2 rho / A**2`` is its O(r) tail, so the radial
    force keeps relative accuracy near the axis.
    """
    zz = z * z
    a_big2 = (r + rho) ** 2 + zz
    b_big2 = (r - rho) ** 2 + zz
    a_big = math.sqrt(a_big2)
    b_big = math.sqrt(b_big2)
    a, b = 1.0, b_big / a_big
    d = 4.0 * rho / a_big2          # c_0**2 / r
    tail = 0.0
    weight = 0.5
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        a = a_next
        d = r * d * d / (16.0 * a * a)
        weight *= 2.0
        tail += weight * d
    s = 2.0 * rho / a_big2 + tail
    k = math.pi / (a + b)
    e = k * (1.0 - r * s)
    return a_big, b_big, k, e, s, tail


# --------------------------------------------------------------------------
# Systems
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RingSystem:
    """Homogeneous circle of given radius and mass.

    The linear density is derived (``density = mass / (2 pi radius)``) and
    never stored separately; use :meth:`from_density` for the fixed-density
    convention.
    """

    radius: float = 1.0
    mass: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    collision_band: float | None = None

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != 3:
            raise ValueError("center must be a 3-vector")

    @classmethod
    def from_density(cls, density: float, radius: float, center=(0.0, 0.0, 0.0)):
        return cls(radius=radius, mass=TWO_PI * radius * density, center=center)

    @property
    def density(self) -> float:
        return self.mass / (TWO_PI * self.radius)

    @property
    def band(self) -> float:
        return 1e-8 * self.radius if self.collision_band is None else self.collision_band

    # -- meridian-plane primitives (r = distance from axis, z = height) -----

    def _check(self, b_big: float):
        if b_big <= self.band:
            raise SourceCollisionError(
                f"point on source: distance to circle {b_big:.3e} <= {self.band:.3e}")

    def meridian_potential(self, r: float, z: float) -> float:
        a_big, b_big, k, _, _, _ = _ring_kernel(r, z, self.radius)
        self._check(b_big)
        return -2.0 * self.mass * k / (math.pi * a_big)

    def meridian_force(self, r: float, z: float) -> tuple[float, float]:
        """Acceleration (F_r, F_z) at cylindrical radius ``r >= 0``."""
        rho = self.radius
        a_big, b_big, k, e, s, tail = _ring_kernel(r, z, rho)
        self._check(b_big)
        pref = self.mass / (math.pi * a_big)
        b2 = b_big * b_big
        if r < 0.5 * rho:
            # the O(1) parts of the two terms below cancel exactly; expanded form
            a2 = a_big * a_big
            lead = 2.0 * r * (3.0 * rho * rho - 2.0 * rho * r - r * r - z * z) / (a2 * b2)
            f_r = pref * k * (lead - tail - 2.0 * (rho - r) * r * s / b2)
        else:
            f_r = pref * (2.0 * (rho - r) * e / b2 - k * s)
        f_z = -2.0 * pref * z * e / (b_big * b_big)
        return f_r, f_z

    def distance_to_source(self, p: Sequence[float]) -> float:
        r, z = self._cylindrical(p)
        return math.hypot(r - self.radius, z)

    def _cylindrical(self, p):
        dx = p[0] - self.center[0]
        dy = p[1] - self.center[1]
        return math.hypot(dx, dy), p[2] - self.center[2]

    # -- vertical plane y = center_y -------------------------------------------

    def planar_potential(self, x: float, z: float) -> float:
        return self.meridian_potential(abs(x - self.center[0]), z - self.center[2])

    def planar_force(self, x: float, z: float) -> tuple[float, float]:
        dx = x - self.center[0]
        f_r, f_z = self.meridian_force(abs(dx), z - self.center[2])
        return (f_r if dx >= 0 else -f_r), f_z

    def planar_distance(self, x: float, z: float) -> float:
        return math.hypot(abs(x - self.center[0]) - self.radius, z - self.center[2])


@dataclass(frozen=True)
class EulerSystem:
    """Two equal fixed masses at (+separation, 0) and (-separation, 0)."""

    mass: float = 1.0
    separation: float = 1.0
    collision_band: float | None = None

    def __post_init__(self):
        if not self.mass > 0 or not self.separation > 0:
            raise ValueError("mass and separation must be positive")

    @property
    def band(self) -> float:
        return 1e-8 * self.separation if self.collision_band is None else self.collision_band

    def _distances(self, x, y):
        d_plus = math.hypot(x - self.separation, y)
        d_minus = math.hypot(x + self.separation, y)
        if min(d_plus, d_minus) <= self.band:
            raise SourceCollisionError("point on source: fixed center")
        return d_plus, d_minus

    def planar_potential(self, x: float, y: float) -> float:
        d_plus, d_minus = self._distances(x, y)
        return -self.mass / d_plus - self.mass / d_minus

    def planar_force(self, x: float, y: float) -> tuple[float, float]:
        d_plus, d_minus = self._distances(x, y)
        cp = self.mass / d_plus ** 3
        cm = self.mass / d_minus ** 3
        rho = self.separation
        # cp - cm without cancellation near x = 0: d_minus - d_plus = 4 rho x / (d_plus + d_minus)
        gap = 4.0 * rho * x / (d_plus + d_minus)
        diff = (self.mass * gap * (d_minus ** 2 + d_minus * d_plus + d_plus ** 2)
                / (d_plus ** 3 * d_minus ** 3))
        return (-(cp + cm) * x + rho * diff, -(cp + cm) * y)

    def planar_distance(self, x: float, y: float) -> float:
        return min(math.hypot(x - self.separation, y), math.hypot(x + self.separation, y))


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FieldSample:
    """Potential and acceleration at a point, with a proximity warning."""

    position: tuple[float, ...]
    potential: float
    force: tuple[float, ...]
    distance_to_source: float
    near_source: bool = False


def ring_potential(sys: RingSystem, p: Sequence[float]) -> float:
    """Potential of the circle at the 3-vector ``p``."""
    r, z = sys._cylindrical(p)
    return sys.meridian_potential(r, z)


def ring_force(sys: RingSystem, p: Sequence[float]) -> np.ndarray:
    """Acceleration ``-grad V`` at the 3-vector ``p``."""
    dx = p[0] - sys.center[0]
    dy = p[1] - sys.center[1]
    r = math.hypot(dx, dy)
    f_r, f_z = sys.meridian_force(r, p[2] - sys.center[2])
    if r == 0.0:
        return np.array([0.0, 0.0, f_z])
    return np.array([f_r * dx / r, f_r * dy / r, f_z])


def evaluate(sys: RingSystem, p: Sequence[float], warn_factor: float = 100.0) -> FieldSample:
    """Potential and force together; flags points within ``warn_factor`` bands."""
    dist = sys.distance_to_source(p)
    return FieldSample(
        position=tuple(float(c) for c in p),
        potential=ring_potential(sys, p),
        force=tuple(ring_force(sys, p)),
        distance_to_source=dist,
        near_source=dist <= warn_factor * sys.band,
    )


def quadrature_nodes(sys: RingSystem, p, nodes: int | None = None) -> int:
    """Default node count: 2**16, escalated to 2**20 close to the circle."""
    if nodes is not None:
        return int(nodes)
    return 2 ** 20 if sys.distance_to_source(p) < 1e-3 * sys.radius else 2 ** 16


def quadrature_potential(sys: RingSystem, p, nodes: int | None = None,
                         signed_radius: float | None = None) -> float:
    """Periodic trapezoid rule for ``-lambda * integral du / |p - u|``.

    ``signed_radius`` lets the oracle be evaluated with a negative radius
    parameter (the circle traversed from the opposite side).
    """
    n = quadrature_nodes(sys, p, nodes)
    rho = sys.radius if signed_radius is None else signed_radius
    theta = TWO_PI * np.arange(n) / n
    c = sys.center
    d = np.sqrt((p[0] - c[0] - rho * np.cos(theta)) ** 2
                + (p[1] - c[1] - rho * np.sin(theta)) ** 2
                + (p[2] - c[2]) ** 2)
    return float(-sys.mass * np.mean(1.0 / d))


def quadrature_force(sys: RingSystem, p, nodes: int | None = None) -> np.ndarray:
    """Periodic trapezoid rule for the attraction ``-lambda * integral (p-u)/|p-u|^3 du``."""
    n = quadrature_nodes(sys, p, nodes)
    theta = TWO_PI * np.arange(n) / n
    c = sys.center
    rel = np.stack([p[0] - c[0] - sys.radius * np.cos(theta),
                    p[1] - c[1] - sys.radius * np.sin(theta),
                    np.full(n, p[2] - c[2])])
    inv3 = np.sum(rel * rel, axis=0) ** -1.5
    return -sys.mass * np.mean(rel * inv3, axis=1)


@dataclass(frozen=True)
class ScaleResidual:
    potential: float
    gradient: float

    @property
    def worst(self) -> float:
        return max(self.potential, self.gradient)


def _rel(a, b) -> float:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    scale = max(np.max(np.abs(b)), np.finfo(float).tiny)
    return float(np.max(np.abs(a - b)) / scale)


def scale_system(sys: RingSystem, c: float) -> RingSystem:
    """Dilate the circle (radius and center) by ``c > 0`` about the origin."""
    if not c > 0:
        raise ValueError("scale factor must be positive")
    return replace(sys, radius=c * sys.radius, center=tuple(c * x for x in sys.center),
                   collision_band=None if sys.collision_band is None else c * sys.collision_band)


def scale_check(sys: RingSystem, p: Sequence[float], c: float) -> ScaleResidual:
    """Relative residuals of V(cp, c rho) = V(p, rho)/c and grad V(cp, c rho) = grad V(p, rho)/c^2."""
    big = scale_system(sys, c)
    cp = [c * x for x in p]
    return ScaleResidual(
        potential=_rel(ring_potential(big, cp), ring_potential(sys, p) / c),
        gradient=_rel(ring_force(big, cp), ring_force(sys, p) / c ** 2),
    )


def mass_scale_check(sys: RingSystem, p: Sequence[float], c: float) -> ScaleResidual:
    """Relative residuals of V(p, rho, cM) = c V(p, rho, M) and the gradient analogue."""
    heavy = replace(sys, mass=c * sys.mass)
    return ScaleResidual(
        potential=_rel(ring_potential(heavy, p), c * ring_potential(sys, p)),
        gradient=_rel(ring_force(heavy, p), c * ring_force(sys, p)),
    )


def translate(sys: RingSystem, q: Sequence[float]) -> RingSystem:
    """Same circle with its center moved by ``q``; W(s) = V(s - q)."""
    return replace(sys, center=tuple(c + float(d) for c, d in zip(sys.center, q)))


def translated_near_system(eps: float, density: float) -> RingSystem:
    """Circle of radius 1/eps through the origin, centered at (1/eps, 0, 0), fixed density."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    return RingSystem.from_density(density, 1.0 / eps, center=(1.0 / eps, 0.0, 0.0))


def wire_force(density: float, p: Sequence[float]) -> np.ndarray:
    """The printed eps -> 0 limit of grad W: ``64 * density * p / |p|^2``.

    This is the declared value only; :func:`measure_wire_constant` measures
    the actual limit numerically.
    """
    x, z = float(p[0]), float(p[1])
    rr = x * x + z * z
    if rr == 0.0:
        raise SingularPointError("wire field is singular at the origin")
    return DECLARED_WIRE_CONSTANT * density * np.array([x, z]) / rr


def translated_gradient(eps: float, density: float, p: Sequence[float]) -> np.ndarray:
    """grad W(p; eps) in the xz-plane for the translated fixed-density circle."""
    sys = translated_near_system(eps, density)
    fx, fz = sys.planar_force(float(p[0]), float(p[1]))
    return -np.array([fx, fz])


@dataclass(frozen=True)
class WireLimit:
    """Numerical limit of grad W(p; eps) . p / density as eps -> 0."""

    point: tuple[float, float]
    epsilons: tuple[float, ...]
    raw: tuple[float, ...]
    tangential: tuple[float, ...]
    richardson: tuple[tuple[float, ...], ...]
    constant: float
    declared: float = DECLARED_WIRE_CONSTANT

    @property
    def agrees(self) -> bool:
        return abs(self.constant - self.declared) <= 5e-4 * abs(self.declared)

    def summary(self) -> str:
        verdict = "agrees with" if self.agrees else "DISAGREES with"
        return (f"measured limit constant {self.constant:#.4g} (x density) "
                f"{verdict} declared {self.declared:g}")


def measure_wire_constant(p: Sequence[float] = (0.6, 0.8), density: float = 1.0,
                          epsilons: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5)) -> WireLimit:
    """Richardson-extrapolate the radial coefficient of grad W over a geometric eps ladder.

    Assumes the leading corrections are integer powers of eps; the ladder
    must share a constant ratio.
    """
    eps = np.asarray(epsilons, dtype=float)
    ratios = eps[:-1] / eps[1:]
    if len(eps) < 2 or not np.allclose(ratios, ratios[0]):
        raise ValueError("epsilons must form a geometric sequence")
    q = float(ratios[0])
    pv = np.asarray(p, dtype=float)
    unit = pv / np.linalg.norm(pv)
    perp = np.array([-unit[1], unit[0]])
    raw, tang = [], []
    for e in eps:
        g = translated_gradient(float(e), density, pv)
        raw.append(float(g @ pv) / density)
        tang.append(float(g @ perp) * float(np.linalg.norm(pv)) / density)
    table = [tuple(raw)]
    order = 1
    while len(table[-1]) > 1:
        prev = table[-1]
        f = q ** order
        table.append(tuple((f * prev[i + 1] - prev[i]) / (f - 1.0) for i in range(len(prev) - 1)))
        order += 1
    return WireLimit(point=(float(pv[0]), float(pv[1])), epsilons=tuple(eps.tolist()),
                     raw=tuple(raw), tangential=tuple(tang), richardson=tuple(table),
                     constant=table[-1][0])


def euler_potential(sys: EulerSystem, p: Sequence[float]) -> float:
    return sys.planar_potential(float(p[0]), float(p[1]))


def euler_force(sys: EulerSystem, p: Sequence[float]) -> np.ndarray:
    return np.array(sys.planar_force(float(p[0]), float(p[1])))


def kepler_deviation(p: Sequence[float], eps: float, mass: float = 1.0) -> float:
    """|V(p, eps) + M/|p|| for a circle of radius |eps| (point mass at eps = 0)."""
    norm = math.sqrt(sum(float(c) ** 2 for c in p))
    if eps == 0.0:
        return 0.0
    return abs(ring_potential(RingSystem(radius=abs(eps), mass=mass), p) + mass / norm)


def perturbation_residual(p: Sequence[float], eps: float, mass: float = 1.0) -> float:
    """|V(p, eps) + M/|p|| / eps^2; stays bounded as eps -> 0 on compacts."""
    if eps == 0.0:
        return 0.0
    return kepler_deviation(p, eps, mass) / (eps * eps)
