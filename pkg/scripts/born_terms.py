"""Born splitting of the continuous part and the step-size dependence of its quadrature.

    python3 scripts/born_terms.py --dtau 0.025
"""

import argparse
import warnings

import numpy as np

from kgdecay import FreePropagator, KgGenerator, ModelParams, PotentialSpec, assemble_h, gaussian_state, make_grid
from kgdecay.born_scattering import born_decompose
from kgdecay.kg_dynamics import riesz_projectors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dtau", type=float, default=0.05)
    ap.add_argument("--sigma", type=float, default=3.0)
    args = ap.parse_args()

    g = make_grid(120.0, 2399)
    gen = KgGenerator(assemble_h(PotentialSpec("square_well", 4.0, 1.0), g), ModelParams(1.0))
    proj = riesz_projectors(gen)
    t = np.arange(10.0, 81.0, 2.0)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dec = born_decompose(gen, proj, gaussian_state(g, 2.0), t, args.sigma, args.dtau, (10.0, 80.0),
                             FreePropagator(g, gen.params))
    for w in caught:
        print(f"warning: {w.message}")
    print(f"Simpson error estimate {dec.quadrature_error:.2e}")
    for name in ("psi1", "psi2", "psi3"):
        print(f"{name}: slope {dec.fits[name].slope:.4f}, norm at t=80 {dec.norms[name][-1]:.3e}")


if __name__ == "__main__":
    main()
