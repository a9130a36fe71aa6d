"""Weighted-decay lab for the 3D Klein-Gordon equation with a radial potential.

Everything lives on the s-wave reduction u = r*psi on a uniform grid of (0, r_max)
with Dirichlet ends.  Submodules:

* ``core``: grids, weighted norms, Bessel functions, power-law fits, operator norms
* ``free_kg``: free propagator (spectral and kernel), free resolvent scans
* ``schrodinger``: H = -Lap - V, bound states, regular-case detectors, perturbed resolvent
* ``kg_dynamics``: perturbed generator, Riesz projectors, weighted decay measurements
* ``born_scattering``: Duhamel and Born splitting, W and N operators, Cook scattering
* ``estimates``: resolvent inequalities, Lavine identity, oscillatory-integral lemma
* ``cli``: the ``kgdecay`` experiment runner
"""

from .core import (EnergyWeight, KgState, RadialGrid, RadialProfile, WeightSpec, fit_power_law, gaussian_state,
                   make_grid)
from .free_kg import FreePropagator, ModelParams
from .kg_dynamics import KgGenerator, riesz_projectors
from .schrodinger import PotentialSpec, assemble_h

__version__ = "0.1.0"

__all__ = [
    "EnergyWeight", "KgState", "RadialGrid", "RadialProfile", "WeightSpec", "fit_power_law", "gaussian_state",
    "make_grid", "FreePropagator", "ModelParams", "KgGenerator", "riesz_projectors", "PotentialSpec", "assemble_h",
]
