"""Table of fitted high-energy exponents of the free resolvent between weighted Sobolev spaces.

    python3 scripts/resolvent_exponents.py
"""

import numpy as np

from kgdecay import make_grid
from kgdecay.estimates import a1_allowed_l, a1_exponent, verify_a1


def main():
    g = make_grid(20.0, 3999)
    sweep = np.geomspace(10.0, 60.0, 8)
    print(" k   l   fitted   expected")
    for k in (0, 1, 2):
        for l in a1_allowed_l(k):
            s = 1 if l < 0 else 0
            fit, _, _ = verify_a1(g, k, l, s, k + 1.0, sweep)
            print(f"{k:2d} {l:3d}  {fit.slope:7.3f}  {a1_exponent(k, l):7.3f}")


if __name__ == "__main__":
    main()
