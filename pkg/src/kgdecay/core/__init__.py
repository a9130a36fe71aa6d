"""Measurement substrate: grids, weighted norms, Bessel functions, fits and operator norms."""

from .bessel import bessel_j
from .fitting import DecayFit, fit_power_law
from .grid import (KgState, RadialGrid, RadialProfile, gaussian_profile, gaussian_state, make_grid,
                   support_radius)
from .linop import LinOp, identity, norm_upper_bound, operator_norm_weighted, power_norm
from .norms import EnergyWeight, WeightSpec, energy_norm, weighted_norm

__all__ = [
    "bessel_j", "DecayFit", "fit_power_law", "KgState", "RadialGrid", "RadialProfile",
    "gaussian_profile", "gaussian_state", "make_grid", "support_radius", "LinOp", "identity",
    "operator_norm_weighted", "power_norm", "norm_upper_bound", "EnergyWeight", "WeightSpec", "energy_norm", "weighted_norm",
]
