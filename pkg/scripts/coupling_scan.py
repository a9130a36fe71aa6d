"""Scan the square-well coupling and list zero-energy resonances and bound-state counts.

    python3 scripts/coupling_scan.py --lo 0.5 --hi 25 --count 200
"""

import argparse

import numpy as np

from kgdecay import PotentialSpec, assemble_h, make_grid
from kgdecay.schrodinger import coupling_scan, negative_spectrum


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--lo", type=float, default=0.5)
    ap.add_argument("--hi", type=float, default=25.0)
    ap.add_argument("--count", type=int, default=200)
    args = ap.parse_args()

    g = make_grid(60.0, 1199)
    unit = PotentialSpec("square_well", 1.0, 1.0)
    scan = coupling_scan(unit, g, np.linspace(args.lo, args.hi, args.count))
    exact = [((2 * j + 1) * np.pi / 2) ** 2 for j in range(10)]
    for s, o in zip(scan.resonances_shooting, scan.resonances_operator):
        ref = min(exact, key=lambda e: abs(e - s))
        print(f"resonance at V0 = {s:.5f} (shooting), {o:.5f} (operator); ((2j+1) pi/2)^2 = {ref:.5f}")
    for V0 in np.linspace(args.lo, args.hi, 6):
        n = negative_spectrum(assemble_h(unit.scaled(V0), g), 10.0).count
        print(f"V0 = {V0:7.3f}: {n} bound state(s)")


if __name__ == "__main__":
    main()
