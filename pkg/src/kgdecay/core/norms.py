"""Weighted Sobolev norms H^s_sigma and energy norms F_sigma.

Both weight types expose the same small protocol (apply, inverse and their
adjoints on raw arrays) so that operator norms can be measured between any
pair of them.  Adjoints are taken in the plain Euclidean pairing of nodal
values; the 4*pi*h measure cancels in every norm ratio.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidConfigError
from .grid import KgState, RadialGrid, RadialProfile

ALLOWED_ORDERS = (-1, 0, 1, 2)


@dataclass(frozen=True)
class WeightSpec:
    """H^s_sigma: norm of <r>^sigma <grad>^s u.

    Order 2 is only needed for the l=2 case of the free-resolvent bounds.
    """

    s: int
    sigma: float

    blocks = 1

    def __post_init__(self):
        if self.s not in ALLOWED_ORDERS:
            raise InvalidConfigError(f"Sobolev order must be one of {ALLOWED_ORDERS}, got {self.s}")

    def apply(self, grid: RadialGrid, x):
        return _col(grid.japanese(self.sigma), x) * grid.bessel_potential(x, self.s)

    def apply_inverse(self, grid: RadialGrid, y):
        return grid.bessel_potential(_col(grid.japanese(-self.sigma), y) * y, -self.s)

    def apply_adjoint(self, grid: RadialGrid, y):
        return grid.bessel_potential(_col(grid.japanese(self.sigma), y) * y, self.s)

    def apply_inverse_adjoint(self, grid: RadialGrid, x):
        return _col(grid.japanese(-self.sigma), x) * grid.bessel_potential(x, -self.s)


@dataclass(frozen=True)
class EnergyWeight:
    """F_sigma = H^1_sigma (+) H^0_sigma acting on stacked (psi, pi) vectors.

    The energy norm itself is the sum of the two component norms; operator
    norms use the equivalent Hilbert direct-sum norm.
    """

    sigma: float

    blocks = 2

    def _split(self, grid, x):
        return x[: grid.n], x[grid.n :]

    def _parts(self):
        return WeightSpec(1, self.sigma), WeightSpec(0, self.sigma)

    def apply(self, grid, x):
        a, b = self._split(grid, x)
        p, q = self._parts()
        return np.concatenate([p.apply(grid, a), q.apply(grid, b)])

    def apply_inverse(self, grid, y):
        a, b = self._split(grid, y)
        p, q = self._parts()
        return np.concatenate([p.apply_inverse(grid, a), q.apply_inverse(grid, b)])

    def apply_adjoint(self, grid, y):
        a, b = self._split(grid, y)
        p, q = self._parts()
        return np.concatenate([p.apply_adjoint(grid, a), q.apply_adjoint(grid, b)])

    def apply_inverse_adjoint(self, grid, x):
        a, b = self._split(grid, x)
        p, q = self._parts()
        return np.concatenate([p.apply_inverse_adjoint(grid, a), q.apply_inverse_adjoint(grid, b)])


def _col(w, x):
    return w[:, None] if np.ndim(x) == 2 else w


def weighted_norm(p: RadialProfile | np.ndarray, w: WeightSpec, grid: RadialGrid | None = None) -> float:
    """||<r>^sigma <grad>^s psi|| in L^2(R^3)."""
    if isinstance(p, RadialProfile):
        grid, values = p.grid, p.values
    else:
        values = np.asarray(p)
    return grid.l2norm(w.apply(grid, values))


def energy_norm(state: KgState, sigma: float) -> float:
    """||psi||_{H^1_sigma} + ||pi||_{H^0_sigma}."""
    return weighted_norm(state.u, WeightSpec(1, sigma)) + weighted_norm(state.v, WeightSpec(0, sigma))


def energy_norm_arrays(grid: RadialGrid, u: np.ndarray, v: np.ndarray, sigma: float) -> float:
    return grid.l2norm(WeightSpec(1, sigma).apply(grid, u)) + grid.l2norm(WeightSpec(0, sigma).apply(grid, v))
