"""Periodic orbits of a particle attracted by a fixed homogeneous circle."""

from .dynamics import (IntegratorConfig, OrbitTrace, PlanarState, ReducedState, SpatialState,
                       Until, circular_orbit, integrate_planar, integrate_reduced,
                       integrate_spatial, lift_to_3d, rescale_orbit, stability_radius)
from .errors import (PreconditionError, RingDynamicsError, SearchBracketError,
                     SourceCollisionError)
from .potential import (EulerSystem, RingSystem, euler_force, euler_potential,
                        measure_wire_constant, perturbation_residual, ring_force,
                        ring_potential, scale_check, translate, wire_force)
from .search import (PeriodicOrbit, SpiralOrbit, assemble_eight, find_eight, find_far_orbit,
                     find_near_orbit, find_spiral, search_eight_family)
from .verify import (Interval, check_field_pointing, check_injective, check_return_time,
                     check_trajectory_pointing, hill_radius, points_to, scalar_ode_lemmas)

__all__ = [
    "IntegratorConfig", "OrbitTrace", "PlanarState", "ReducedState", "SpatialState", "Until",
    "circular_orbit", "integrate_planar", "integrate_reduced", "integrate_spatial",
    "lift_to_3d", "rescale_orbit", "stability_radius",
    "PreconditionError", "RingDynamicsError", "SearchBracketError", "SourceCollisionError",
    "EulerSystem", "RingSystem", "euler_force", "euler_potential", "measure_wire_constant",
    "perturbation_residual", "ring_force", "ring_potential", "scale_check", "translate",
    "wire_force",
    "PeriodicOrbit", "SpiralOrbit", "assemble_eight", "find_eight", "find_far_orbit",
    "find_near_orbit", "find_spiral", "search_eight_family",
    "Interval", "check_field_pointing", "check_injective", "check_return_time",
    "check_trajectory_pointing", "hill_radius", "points_to", "scalar_ode_lemmas",
]
