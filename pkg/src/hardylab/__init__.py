"""Numerical laboratory for sharp Hardy, Rellich and Hardy-Rellich inequalities."""

from .constants import (
    coulomb_lower_bound,
    hardy_boundary_constant,
    hardy_interior_constant,
    hardy_rellich_constant,
    hardy_rellich_epsilon_tradeoff,
    maximize_hardy_quadratic,
    maximize_rellich_quartic,
    multipolar_bounds,
    multipolar_constant,
    rellich_constant,
    rellich_critical_points,
)
from .geometry import DomainSpec, PoleSet, PotentialSpec, distance_to_boundary, pole_separation, potential_eval

__version__ = "0.1.0"
